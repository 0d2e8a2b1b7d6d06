"""The reduced complex equation

    f'' + (s/2)(alpha + i beta) f' + (c0^2/4) exp(-alpha s^2/2) f = 0

for the three initial conditions attached to the components of the frame,
together with the derived real variables z = |f|^2, y + i h = conj(f) f',
the Riccati form of the stereographic projection, and the reconstruction of
the trihedron from f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _ode
from .errors import EnergyDrift, OutOfRange, ZeroCrossing
from .model import DEFAULT_TOLERANCES, ModelParams, ToleranceConfig, curvature, torsion
from .quadrature import cumulative_gauss, gauss_panels, panel_edges

ENERGY_DRIFT_TOL = 1e-9
RICCATI_BLOWUP = 1e8
Z_THRESHOLD = 1e-6
# f' and (y, h) decay like exp(-alpha s^2/4); the integrators carry the
# envelope-scaled variables g = exp(alpha s^2/4) f' and exp(alpha s^2/4)(y, h),
# which stay bounded, so one absolute tolerance serves every component.


def initial_conditions(c0: float, ic_index: int):
    """(f(0), f'(0), E0) for the frame component ``ic_index`` in {1, 2, 3}."""
    if ic_index == 1:
        return 1.0 + 0j, 0j, c0 * c0 / 8.0
    if ic_index == 2:
        return 1.0 + 0j, c0 / 2.0 + 0j, c0 * c0 / 4.0
    if ic_index == 3:
        return 1.0 + 0j, 0.5j * c0, c0 * c0 / 4.0
    raise ValueError(f"ic_index must be 1, 2 or 3, got {ic_index!r}")


def energy(params: ModelParams, s, f, fp):
    """E(s) = (exp(alpha s^2/2)|f'|^2 + (c0^2/4)|f|^2) / 2."""
    s = np.asarray(s, dtype=float)
    weighted = np.abs(fp) * np.exp(params.alpha * s * s / 4.0)
    return 0.5 * (weighted**2 + params.c0**2 / 4.0 * np.abs(f) ** 2)


@dataclass(frozen=True)
class ZYH:
    z: float
    y: float
    h: float


class ComplexTrajectory:
    """Solution f of the reduced equation for one initial condition.

    ``s``, ``f`` and ``fp`` hold the requested grid; ``at(s)`` evaluates the
    dense output anywhere on the integrated side.
    """

    def __init__(self, params, ic_index, s, f, fp, E0, trajectory, direction=1, max_energy_drift=0.0):
        self.params = params
        self.ic_index = ic_index
        self.s = np.asarray(s, dtype=float)
        self.f = np.asarray(f, dtype=complex)
        self.fp = np.asarray(fp, dtype=complex)
        self.E0 = float(E0)
        self.direction = direction
        self.max_energy_drift = max_energy_drift
        self._trajectory = trajectory
        self.s_max = abs(trajectory.ts[-1]) if trajectory is not None else float(np.max(np.abs(self.s)))

    @property
    def samples(self):
        return list(zip(self.s, self.f, self.fp))

    def at(self, s):
        """(f, f') at ``s`` from the dense interpolant."""
        s_arr = np.asarray(s, dtype=float)
        if np.any(self.direction * s_arr < -1e-14) or np.any(np.abs(s_arr) > self.s_max * (1 + 1e-14)):
            raise OutOfRange(f"s outside the integrated interval of length {self.s_max:g}")
        if self._trajectory is None:
            return np.ones_like(s_arr, dtype=complex), np.zeros_like(s_arr, dtype=complex)
        u = self._trajectory(s_arr)
        env = np.exp(-self.params.alpha * s_arr * s_arr / 4.0)
        return u[0] + 1j * u[1], env * (u[2] + 1j * u[3])

    def scaled_zyh(self, s):
        """(z, Y, H) with Y + iH = exp(alpha s^2/4) conj(f) f', free of underflow."""
        s_arr = np.asarray(s, dtype=float)
        if self._trajectory is None:
            return np.ones_like(s_arr), np.zeros_like(s_arr), np.zeros_like(s_arr)
        self.at(s_arr)  # range check
        u = self._trajectory(s_arr)
        f = u[0] + 1j * u[1]
        w = np.conj(f) * (u[2] + 1j * u[3])
        return np.abs(f) ** 2, w.real, w.imag

    def zyh_arrays(self, s):
        f, fp = self.at(s)
        w = np.conj(f) * fp
        return np.abs(f) ** 2, w.real, w.imag


def _f_rhs(params: ModelParams):
    # State (f, g) with g = exp(alpha s^2/4) f':
    # f' = e g, g' = -i beta (s/2) g - (c0^2/4) e f, e = exp(-alpha s^2/4).
    c0sq4 = params.c0**2 / 4.0
    alpha, beta = params.alpha, params.beta

    def fun(s, u):
        fr, fi, gr, gi = u
        hb = beta * s / 2.0
        e = math.exp(-alpha * s * s / 4.0)
        return np.array([e * gr, e * gi, hb * gi - c0sq4 * e * fr, -hb * gr - c0sq4 * e * fi])

    return fun


def solve_f(
    params: ModelParams,
    ic_index: int,
    s_max: float = 40.0,
    tol: ToleranceConfig = DEFAULT_TOLERANCES,
    grid: Optional[Sequence[float]] = None,
    *,
    direction: int = 1,
    energy_tol: float = ENERGY_DRIFT_TOL,
) -> ComplexTrajectory:
    """Integrate the f-equation from 0 to ``direction * s_max``.

    The energy E(s) is checked against E0 after every accepted step.

    Raises
    ------
    StepSizeUnderflow, EnergyDrift
    """
    if not s_max > 0:
        raise ValueError("s_max must be positive")
    f0, fp0, E0 = initial_conditions(params.c0, ic_index)
    if grid is None:
        grid = direction * np.linspace(0.0, s_max, int(round(s_max / 0.05)) + 1)
    grid = np.asarray(grid, dtype=float)
    if np.any(direction * grid < 0) or np.any(np.abs(grid) > s_max * (1 + 1e-14)):
        raise OutOfRange("grid must lie between 0 and direction*s_max")

    if params.is_constant:
        ones = np.ones_like(grid, dtype=complex)
        traj = None
        return ComplexTrajectory(params, ic_index, grid, ones, 0 * ones, 0.0, traj, direction)

    c0sq4 = params.c0**2 / 4.0
    worst = [0.0]

    def monitor(s, u):
        e = 0.5 * (u[2] ** 2 + u[3] ** 2 + c0sq4 * (u[0] ** 2 + u[1] ** 2))
        d = abs(e - E0) / E0
        if d > worst[0]:
            worst[0] = d
        if d > energy_tol:
            raise EnergyDrift(f"relative energy drift {d:.3e} at s={s:.6g}")

    y0 = [f0.real, f0.imag, fp0.real, fp0.imag]
    traj = _ode.integrate(_f_rhs(params), 0.0, y0, direction * s_max, tol, monitor=monitor)
    u = traj(grid).reshape(4, -1)
    f = u[0] + 1j * u[1]
    fp = np.exp(-params.alpha * grid * grid / 4.0) * (u[2] + 1j * u[3])
    if np.ndim(grid) and grid.size and grid[0] == 0.0:
        f[0], fp[0] = f0, fp0
    return ComplexTrajectory(params, ic_index, grid, f, fp, E0, traj, direction, worst[0])


def zyh_of(traj: ComplexTrajectory, s: float) -> ZYH:
    z, y, h = traj.zyh_arrays(float(s))
    return ZYH(float(z), float(y), float(h))


class ZYHPath:
    """Direct integration of the real (z, y, h) system."""

    def __init__(self, params, s, values, E0, trajectory):
        self.params = params
        self.s = np.asarray(s)
        self.z, self.y, self.h = np.asarray(values).reshape(3, -1)
        self.E0 = E0
        self._trajectory = trajectory

    def __iter__(self):
        for s, z, y, h in zip(self.s, self.z, self.y, self.h):
            yield float(s), ZYH(float(z), float(y), float(h))

    def __len__(self):
        return len(self.s)

    def at(self, s):
        if self._trajectory is None:
            s = np.asarray(s, dtype=float)
            return np.ones_like(s), np.zeros_like(s), np.zeros_like(s)
        s = np.asarray(s, dtype=float)
        z, Y, H = self._trajectory(s)
        env = np.exp(-self.params.alpha * s * s / 4.0)
        return z, env * Y, env * H


def solve_zyh_direct(
    params: ModelParams,
    ic: ZYH,
    E0: float,
    s_max: float = 40.0,
    tol: ToleranceConfig = DEFAULT_TOLERANCES,
    grid: Optional[Sequence[float]] = None,
) -> ZYHPath:
    """Integrate z' = 2y, y' = beta s h/2 - alpha s y/2 + e^{-alpha s^2/2}(2E0 - c0^2 z/2),
    h' = -beta s y/2 - alpha s h/2 from s = 0.
    """
    if grid is None:
        grid = np.linspace(0.0, s_max, int(round(s_max / 0.05)) + 1)
    grid = np.asarray(grid, dtype=float)
    if params.is_constant:
        vals = np.array([np.full_like(grid, ic.z), np.full_like(grid, ic.y), np.full_like(grid, ic.h)])
        return ZYHPath(params, grid, vals, E0, None)
    alpha, beta, c0sq2 = params.alpha, params.beta, params.c0**2 / 2.0

    # Carried as (z, Y, H) = (z, e^{alpha s^2/4} y, e^{alpha s^2/4} h).
    def fun(s, u):
        z, Y, H = u
        hb = beta * s / 2.0
        e = math.exp(-alpha * s * s / 4.0)
        return np.array([2.0 * e * Y, hb * H + e * (2.0 * E0 - c0sq2 * z), -hb * Y])

    traj = _ode.integrate(fun, 0.0, [ic.z, ic.y, ic.h], s_max, tol)
    path = ZYHPath(params, grid, np.zeros((3, grid.size)), E0, traj)
    path.z, path.y, path.h = path.at(grid)
    return path


@dataclass
class RiccatiPath:
    """Stereographic coordinate eta on [0, s_end]; ``blowup_at`` marks a halt."""

    s: np.ndarray
    eta: np.ndarray
    blowup_at: Optional[float]
    _trajectory: object = None

    @property
    def s_end(self) -> float:
        return float(self._trajectory.ts[-1])

    def at(self, s):
        u = self._trajectory(np.asarray(s, dtype=float))
        return u[0] + 1j * u[1]

    def __iter__(self):
        return iter(zip(self.s, self.eta))


def riccati_solve(
    params: ModelParams,
    eta0: complex,
    s_max: float = 40.0,
    tol: ToleranceConfig = DEFAULT_TOLERANCES,
    grid: Optional[Sequence[float]] = None,
) -> RiccatiPath:
    """eta' + i tau eta + (c/2)(eta^2 + 1) = 0 from eta(0) = eta0.

    Integration stops cleanly once |eta| exceeds 1e8; that point is reported
    in ``blowup_at`` and the grid is truncated there.
    """
    c0, alpha, beta = params.c0, params.alpha, params.beta

    def fun(s, u):
        eta = complex(u[0], u[1])
        c = c0 * math.exp(-alpha * s * s / 4.0)
        d = -1j * (beta * s / 2.0) * eta - 0.5 * c * (eta * eta + 1.0)
        return np.array([d.real, d.imag])

    def monitor(s, u):
        return math.hypot(u[0], u[1]) > RICCATI_BLOWUP

    eta0 = complex(eta0)
    traj = _ode.integrate(fun, 0.0, [eta0.real, eta0.imag], s_max, tol, monitor=monitor)
    blowup = float(traj.ts[-1]) if traj.halted else None
    if grid is None:
        grid = np.linspace(0.0, s_max, int(round(s_max / 0.05)) + 1)
    grid = np.asarray(grid, dtype=float)
    grid = grid[grid <= traj.ts[-1]]
    u = traj(grid).reshape(2, -1)
    return RiccatiPath(grid, u[0] + 1j * u[1], blowup, traj)


def eta_initial(ic_index: int) -> complex:
    """(n_j + i b_j)/(1 + m_j) at s = 0 for the identity frame."""
    return {1: 0j, 2: 1 + 0j, 3: 1j}[ic_index]


def frame_row_from_eta(eta):
    """Inverse stereographic projection: (m, n, b) from eta."""
    eta = np.asarray(eta, dtype=complex)
    q = 1.0 + np.abs(eta) ** 2
    return (1.0 - np.abs(eta) ** 2) / q, 2.0 * eta.real / q, 2.0 * eta.imag / q


def reconstruct_frame_row(traj: ComplexTrajectory, s):
    """(m_j, n_j, b_j) at ``s`` from f_j and f_j'.

    j = 1: m = 2|f|^2 - 1, n + i b = (4/c0) e^{alpha s^2/4} conj(f) f';
    j = 2, 3: m = |f|^2 - 1, n + i b = (2/c0) e^{alpha s^2/4} conj(f) f'.
    """
    p = traj.params
    if not p.c0 > 0:
        raise ValueError("reconstruction needs c0 > 0")
    f, fp = traj.at(s)
    s = np.asarray(s, dtype=float)
    if traj.ic_index == 1:
        k_m, k_n = 2.0, 4.0 / p.c0
    else:
        k_m, k_n = 1.0, 2.0 / p.c0
    m = k_m * np.abs(f) ** 2 - 1.0
    w = k_n * np.exp(p.alpha * s * s / 4.0) * np.conj(f) * fp
    return m, w.real, w.imag


def reconstruct_profile_states(trajs, s):
    """9 x N frame states assembled from the three trajectories."""
    rows = [reconstruct_frame_row(t, s) for t in sorted(trajs, key=lambda t: t.ic_index)]
    m = np.array([r[0] for r in rows])
    n = np.array([r[1] for r in rows])
    b = np.array([r[2] for r in rows])
    return np.concatenate([m, n, b], axis=0)


def phase_of_f(traj: ComplexTrajectory, s_star: float, s: float, z_threshold: float = Z_THRESHOLD) -> float:
    """theta(s) - theta(s_star) = int h/z for the polar form f = sqrt(z) e^{i theta}.

    Raises
    ------
    ZeroCrossing
        If z drops below ``z_threshold`` on the interval.
    """
    if s == s_star:
        return 0.0
    lo, hi = sorted((s_star, s))
    width = min(0.25, 2.0 / max(1.0, abs(traj.params.beta) * hi))
    edges = panel_edges(lo, hi, width)
    probe = np.linspace(lo, hi, 20 * (len(edges) - 1) + 1)
    if np.min(traj.zyh_arrays(probe)[0]) < z_threshold:
        raise ZeroCrossing(f"|f|^2 < {z_threshold:g} on [{lo:g}, {hi:g}]")

    def integrand(x):
        z, _, h = traj.zyh_arrays(x)
        return h / z

    val = gauss_panels(integrand, edges)
    return val if s >= s_star else -val


def unwrapped_arg(traj: ComplexTrajectory, s_values) -> np.ndarray:
    """Continuous branch of arg f along increasing ``s_values``."""
    f, _ = traj.at(np.asarray(s_values, dtype=float))
    return np.unwrap(np.angle(f))


__all__ = [
    "ComplexTrajectory",
    "ZYH",
    "ZYHPath",
    "RiccatiPath",
    "energy",
    "initial_conditions",
    "solve_f",
    "zyh_of",
    "solve_zyh_direct",
    "riccati_solve",
    "eta_initial",
    "frame_row_from_eta",
    "reconstruct_frame_row",
    "reconstruct_profile_states",
    "phase_of_f",
    "unwrapped_arg",
    "cumulative_gauss",
    "curvature",
    "torsion",
]
