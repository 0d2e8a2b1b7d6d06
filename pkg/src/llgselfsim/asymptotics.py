"""Asymptotic constants of the profile and checks of its expansion at infinity.

For each component j the reduced variables behave, for large s, like

    z -> z_inf,
    y ~ b exp(-alpha s^2/4) sin(phi) - (2 alpha gamma / s) exp(-alpha s^2/2),
    h ~ b exp(-alpha s^2/4) cos(phi) - (2 beta gamma / s) exp(-alpha s^2/2),

with gamma = 2 E0 - c0^2 z_inf / 2, b^2 = (2 E0 - c0^2 z_inf / 4) z_inf and
phi(s) = a + beta int_{s0^2/4}^{s^2/4} sqrt(1 + c0^2 exp(-2 alpha x) / x) dx.
The limit vector follows from A_1 = 2 z_1 - 1 and A_j = z_j - 1 (j = 2, 3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from .complex_ode import ComplexTrajectory, solve_f
from .errors import DegenerateAmplitude, NotConverged
from .model import DEFAULT_TOLERANCES, ModelParams, ToleranceConfig, curvature
from .quadrature import cumulative_gauss, gauss_panels
from .specfun import SQRT_PI, complex_loggamma

TWO_PI = 2.0 * math.pi
S_DEFAULT = 40.0
WINDOW_FRACTION = 0.75
WINDOW_POINTS = 1024
DEGENERATE_AMPLITUDE = 1e-10
NOISE_FLOOR = 1e-8
_FIXED_POINT_TOL = 1e-14
_FIXED_POINT_MAX = 100


@dataclass(frozen=True)
class AsymptoticConstants:
    """Limits of (z, y, h) for one component; ``a_phase`` is None when b ~ 0."""

    z_inf: float
    gamma: float
    b_amp: float
    a_phase: Optional[float]
    E0: float
    s0: float
    ic_index: int = 1


@dataclass(frozen=True)
class FrameAsymptotics:
    """A+, B+ and the phase offsets a_j of the three frame components."""

    A_plus: np.ndarray
    B_plus: np.ndarray
    a_offsets: np.ndarray
    constants: Tuple[AsymptoticConstants, ...] = field(default=(), compare=False)

    def __post_init__(self):
        for name in ("A_plus", "B_plus", "a_offsets"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def B_sin(self) -> np.ndarray:
        return self.B_plus * np.sin(self.a_offsets)

    @property
    def B_cos(self) -> np.ndarray:
        return self.B_plus * np.cos(self.a_offsets)

    def orthogonality(self) -> np.ndarray:
        """(A.Bsin, A.Bcos, Bsin.Bcos), all zero for a consistent fit."""
        bs, bc = self.B_sin, self.B_cos
        return np.array([self.A_plus @ bs, self.A_plus @ bc, bs @ bc])


def circular_distance(a, b):
    """Smallest angle between ``a`` and ``b`` on the circle."""
    d = np.mod(np.asarray(a) - np.asarray(b), TWO_PI)
    return np.minimum(d, TWO_PI - d)


def _phase_integrand(params: ModelParams):
    c0sq, alpha = params.c0**2, params.alpha
    return lambda x: np.sqrt(1.0 + c0sq * np.exp(-2.0 * alpha * x) / x)


def phase_phi(params: ModelParams, s: float) -> float:
    """beta int_{s0^2/4}^{s^2/4} sqrt(1 + c0^2 e^{-2 alpha x}/x) dx (no offset)."""
    s0 = params.s0
    if s < s0:
        raise ValueError(f"phase_phi needs s >= s0 = {s0:g}")
    if s == s0:
        return 0.0
    c0sq, alpha = params.c0**2, params.alpha

    # sqrt(1 + g) = 1 + g / (sqrt(1 + g) + 1): the constant part is integrated
    # exactly, quad only sees the small remainder.
    def excess(x):
        g = c0sq * math.exp(-2.0 * alpha * x) / x
        return g / (math.sqrt(1.0 + g) + 1.0)

    a, b = s0 * s0 / 4.0, s * s / 4.0
    val, _ = integrate.quad(excess, a, b, epsabs=1e-14, epsrel=1e-13, limit=500)
    return params.beta * ((b - a) + val)


def phase_phi_many(params: ModelParams, s) -> np.ndarray:
    """Vectorised ``phase_phi`` on an increasing grid, by cumulative Gauss panels."""
    s = np.asarray(s, dtype=float)
    x = s * s / 4.0
    edges = np.concatenate([[params.s0**2 / 4.0], x])
    if np.any(np.diff(edges) < 0):
        raise ValueError("phase_phi_many needs an increasing grid starting at or above s0")
    # Split each gap into panels of width <= 2 in x; the integrand is smooth.
    fine = [edges[0]]
    for lo, hi in zip(edges[:-1], edges[1:]):
        n = max(1, int(math.ceil((hi - lo) / 2.0)))
        fine.extend(np.linspace(lo, hi, n + 1)[1:])
    fine = np.array(fine)
    cum = cumulative_gauss(_phase_integrand(params), fine)
    idx = np.searchsorted(fine, x)
    return params.beta * cum[idx]


def _window(s_lo: float, s_hi: float, n: int = WINDOW_POINTS) -> np.ndarray:
    # Uniform in s^2: equal weight per oscillation of the exp(i s^2/4) carrier.
    return np.sqrt(np.linspace(s_lo * s_lo, s_hi * s_hi, n))


def _taper(n: int) -> np.ndarray:
    # Hann weights: a smooth window leaks far less of the residual oscillation
    # into the average than a flat one.
    w = np.sin(np.pi * (np.arange(n) + 0.5) / n) ** 2
    return w / w.sum()


def _zinf_pointwise(params: ModelParams, E0: float, s, z, y, h) -> np.ndarray:
    """Fixed point of the corrected relation z_inf = z + R(s; z_inf) at each s.

    R collects the terms obtained by repeated integration by parts of
    z' = 2 Re(y + ih) against w' = -(s/2)(alpha + i beta) w + e^{-alpha s^2/2} G:
    the 1/s, E1 and E2 terms are exact for constant G, the 1/s^3 term is the
    next boundary term and the 1/s^4 term the feedback of G - gamma.
    """
    alpha, beta, c0sq = params.alpha, params.beta, params.c0**2
    s = np.asarray(s, dtype=float)
    x = alpha * s * s / 2.0
    e1 = 2.0 * alpha * special.exp1(x) if alpha > 0 else np.zeros_like(s)
    e2 = 4.0 * (beta * beta - alpha * alpha) * special.expn(2, x) / (s * s)
    e4 = -4.0 * c0sq * (beta * beta - alpha * alpha) ** 2 * np.exp(-alpha * s * s) / s**4
    base = z + 4.0 / s * (alpha * y + beta * h) - 8.0 / s**3 * ((alpha * alpha - beta * beta) * y + 2 * alpha * beta * h)
    k = e1 + e2 + e4
    zi = np.array(z, dtype=float)
    for _ in range(_FIXED_POINT_MAX):
        gamma = 2.0 * E0 - c0sq / 2.0 * zi
        new = base + k * gamma
        if np.max(np.abs(new - zi)) <= _FIXED_POINT_TOL * max(1.0, np.max(np.abs(new))):
            return new
        zi = new
    raise NotConverged("z_inf fixed point did not settle in 100 iterations")


def estimate_z_inf(traj: ComplexTrajectory, S: float = S_DEFAULT, window_fraction: float = WINDOW_FRACTION) -> float:
    """z_inf from the corrected fixed-point relation, averaged over [f S, S].

    The remaining error of the pointwise relation oscillates with the carrier
    exp(i s^2/4); averaging uniformly in s^2 cancels it to high order.

    Raises
    ------
    NotConverged
    """
    p = traj.params
    if p.is_constant:
        return 1.0
    s0 = p.s0
    if S < s0:
        raise ValueError(f"S = {S:g} is below s0 = {s0:g}")
    if S > traj.s_max * (1 + 1e-12):
        raise ValueError("S beyond the integrated range")
    s = _window(max(s0, window_fraction * S), S)
    z, y, h = traj.zyh_arrays(s)
    return float(_taper(s.size) @ _zinf_pointwise(p, traj.E0, s, z, y, h))


def default_window(params: ModelParams, s_max: float) -> Tuple[float, float]:
    return max(params.s0, WINDOW_FRACTION * s_max), s_max


def fit_constants(
    traj: ComplexTrajectory,
    S_window: Optional[Tuple[float, float]] = None,
    *,
    z_inf: Optional[float] = None,
) -> AsymptoticConstants:
    """z_inf, gamma, b and the phase offset a for one trajectory.

    a is the circular mean over the window of atan2(Y, H) - phase_phi(s), with
    Y + iH = exp(alpha s^2/4)(y + ih) corrected by the known gamma terms.
    A vanishing amplitude leaves ``a_phase`` as None (use
    ``require_phase`` to turn that into DegenerateAmplitude).
    """
    p = traj.params
    lo, hi = S_window if S_window is not None else default_window(p, traj.s_max)
    if lo < p.s0 - 1e-12 or hi > traj.s_max * (1 + 1e-12) or hi <= lo:
        raise ValueError(f"window [{lo:g}, {hi:g}] must lie in [s0, s_max]")
    E0 = traj.E0
    c0sq = p.c0**2
    if z_inf is None:
        z_inf = estimate_z_inf(traj, hi, lo / hi)
    gamma = 2.0 * E0 - c0sq / 2.0 * z_inf
    b_sq = (2.0 * E0 - c0sq / 4.0 * z_inf) * z_inf
    b_amp = math.sqrt(max(b_sq, 0.0))
    a_phase = None
    if b_amp >= DEGENERATE_AMPLITUDE:
        s = _window(lo, hi)
        _, Y, H = traj.scaled_zyh(s)
        env = np.exp(-p.alpha * s * s / 4.0)
        Yc = Y + 2.0 * p.alpha * gamma / s * env
        Hc = H + 2.0 * p.beta * gamma / s * env
        v = np.arctan2(Yc, Hc) - phase_phi_many(p, s)
        a_phase = float(np.mod(np.angle(_taper(s.size) @ np.exp(1j * v)), TWO_PI))
    return AsymptoticConstants(float(z_inf), gamma, b_amp, a_phase, E0, p.s0, traj.ic_index)


def require_phase(consts: AsymptoticConstants) -> float:
    if consts.a_phase is None:
        raise DegenerateAmplitude(f"amplitude {consts.b_amp:.3e} too small to define a phase")
    return consts.a_phase


def _a_from_z(ic_index: int, z_inf: float) -> float:
    return 2.0 * z_inf - 1.0 if ic_index == 1 else z_inf - 1.0


def frame_trajectories(params: ModelParams, s_max: float = S_DEFAULT, tols: ToleranceConfig = DEFAULT_TOLERANCES, direction: int = 1):
    grid = np.array([0.0])
    return tuple(solve_f(params, j, s_max, tols, grid, direction=direction) for j in (1, 2, 3))


def frame_asymptotics(
    params: ModelParams,
    tols: ToleranceConfig = DEFAULT_TOLERANCES,
    S: float = S_DEFAULT,
    trajectories: Optional[Sequence[ComplexTrajectory]] = None,
) -> FrameAsymptotics:
    """A+, B+ and offsets from the three f-trajectories integrated to ``S``.

    Components with a degenerate amplitude get offset NaN.
    """
    if params.is_constant:
        return FrameAsymptotics(np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 1.0]), np.full(3, np.nan))
    S = max(S, params.s0 / WINDOW_FRACTION)
    if trajectories is None:
        trajectories = frame_trajectories(params, S, tols)
    consts = tuple(fit_constants(t, default_window(params, S)) for t in trajectories)
    A = np.array([_a_from_z(c.ic_index, c.z_inf) for c in consts])
    B = np.sqrt(np.clip(1.0 - A * A, 0.0, None))
    a = np.array([np.nan if c.a_phase is None else c.a_phase for c in consts])
    return FrameAsymptotics(A, B, a, consts)


def expansion(params: ModelParams, fa: FrameAsymptotics, s, *, m_offset: bool = False):
    """Leading terms of (m, n, b) at large s, each of shape (3, len(s)).

    With ``m_offset`` the first entry is m - A+ itself, formed without the
    cancellation of subtracting A+ afterwards.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    alpha, beta, c0 = params.alpha, params.beta, params.c0
    phi = fa.a_offsets[:, None] + phase_phi_many(params, s)[None, :]
    env = np.exp(-alpha * s * s / 4.0)[None, :]
    A = fa.A_plus[:, None]
    B = fa.B_plus[:, None]
    dm = -(2.0 * c0 / s) * B * env * (alpha * np.sin(phi) + beta * np.cos(phi)) - (2.0 * c0**2 / s**2) * A * env**2
    m = dm if m_offset else A + dm
    n = B * np.sin(phi) + (2.0 * c0 / s) * alpha * A * env
    b = B * np.cos(phi) + (2.0 * c0 / s) * beta * A * env
    return m, n, b


@dataclass(frozen=True)
class ExpansionReport:
    """Weighted sup residuals of the expansion over dyadic subwindows.

    ``m_sups[k]`` is sup |m - expansion| s^3 e^{alpha s^2/4} on window k
    (per row, max over components); ``n_sups``/``b_sups`` use s^2.  ``method``
    says how m - A+ was formed ("direct" or "tail").
    """

    windows: Tuple[Tuple[float, float], ...]
    m_sups: Tuple[float, ...]
    n_sups: Tuple[float, ...]
    b_sups: Tuple[float, ...]
    method: str

    @property
    def m_ratio(self) -> float:
        sups = np.array(self.m_sups)
        return float(sups.max() / sups.min())

    @property
    def bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.m_sups)) and self.m_ratio < 2.0)


def dyadic_windows(lo: float, hi: float, base: float) -> list:
    """Consecutive windows [base 2^{k/2}, base 2^{(k+1)/2}] clipped to [lo, hi]."""
    out = []
    k = 0
    while True:
        a, b = base * 2 ** (k / 2), base * 2 ** ((k + 1) / 2)
        if a >= hi:
            break
        a, b = max(a, lo), min(b, hi)
        if b - a > 1e-9:
            out.append((a, b))
        k += 1
    return out


def _tail_m_minus_a(profile, params: ModelParams, fa: FrameAsymptotics, s):
    """m(s) - A+ = -int_s^{s_end} c n dsigma + (m - A+)(s_end), expansion used at s_end.

    Keeps relative precision where m - A+ is far below rounding of m itself.
    """
    s_end = profile.s_max
    edges = np.unique(np.concatenate([np.arange(s[0], s_end, 0.05), [s_end], s]))

    def integrand(x):
        return curvature(params, x) * profile.state(x)[3:6]

    # Cumulative integral from s_end downwards, evaluated at the grid points.
    rev = edges[::-1]
    parts = []
    for row in range(3):
        parts.append(cumulative_gauss(lambda x: integrand(x)[row], rev))
    cum = np.array(parts)[:, ::-1]  # int_{s_end}^{edge} c n, per row
    idx = np.searchsorted(edges, s)
    tail_at_end = expansion(params, fa, [s_end], m_offset=True)[0][:, 0]
    return cum[:, idx] + tail_at_end[:, None]


def verify_expansion(
    profile,
    fa: FrameAsymptotics,
    consts=None,
    s_range: Optional[Tuple[float, float]] = None,
    points: int = 400,
) -> ExpansionReport:
    """Weighted residuals of the large-s expansion of (m, n, b) on dyadic windows.

    The profile must extend past the range; for alpha > 0 the tail integral of
    c n is used whenever the contribution from beyond the profile end is
    negligible at the right edge of the range.
    """
    params = profile.params
    s0 = params.s0
    lo, hi = s_range if s_range is not None else (s0, 3.0 * s0)
    if lo < s0 - 1e-12 or hi > profile.s_max:
        raise ValueError("s_range must lie in [s0, s_max]")
    alpha = params.alpha
    use_tail = alpha > 0 and alpha * (profile.s_max**2 - hi**2) / 4.0 > 40.0
    windows = dyadic_windows(lo, hi, s0)
    m_sups, n_sups, b_sups = [], [], []
    for a, b in windows:
        s = np.linspace(a, b, points)
        st = profile.state(s)
        dm_exp, n_exp, b_exp = expansion(params, fa, s, m_offset=True)
        if use_tail:
            res_m = _tail_m_minus_a(profile, params, fa, s) - dm_exp
        else:
            res_m = (st[0:3] - fa.A_plus[:, None]) - dm_exp
        w = np.exp(alpha * s * s / 4.0)
        m_sups.append(float(np.max(np.abs(res_m) * s**3 * w)))
        # n and b are only known to absolute accuracy; skip points where the
        # expected remainder e^{-alpha s^2/4}/s^2 sits below that floor.
        ok = 1.0 / (w * s * s) > NOISE_FLOOR
        if np.any(ok):
            n_sups.append(float(np.max((np.abs(st[3:6] - n_exp) * s**2 * w)[:, ok])))
            b_sups.append(float(np.max((np.abs(st[6:9] - b_exp) * s**2 * w)[:, ok])))
        else:
            n_sups.append(math.nan)
            b_sups.append(math.nan)
    return ExpansionReport(tuple(windows), tuple(m_sups), tuple(n_sups), tuple(b_sups), "tail" if use_tail else "direct")


def closed_form_alpha0(c0: float) -> np.ndarray:
    """A+ at alpha = 0 from the complex Gamma expressions.

    A1 = exp(-pi c0^2/2) and, with x = c0^2/4,
    A2,3 = 1 - (e^{-pi c0^2/4}/(8 pi)) sinh(pi c0^2/2)
           |c0 Gamma(i x) +- 2 e^{+-i pi/4} Gamma(1/2 + i x)|^2.
    Evaluated with log-Gamma so large c0 neither overflows nor underflows.
    """
    if c0 < 0:
        raise ValueError("c0 must be nonnegative")
    if c0 == 0:
        return np.array([1.0, 0.0, 0.0])
    x = c0 * c0 / 4.0
    # Scale both Gammas by e^{pi x / 2} ~ 1/|Gamma|; the prefactor becomes
    # e^{-pi c0^2/4} sinh(pi c0^2/2) e^{-pi x} = (1 - e^{-pi c0^2}) / 2.
    shift = math.pi * x / 2.0
    g1 = np.exp(complex_loggamma(1j * x) + shift)
    g2 = np.exp(complex_loggamma(0.5 + 1j * x) + shift)
    pre = -math.expm1(-math.pi * c0 * c0) / 2.0 / (8.0 * math.pi)
    w = np.exp(1j * math.pi / 4.0)
    A1 = math.exp(-math.pi * c0 * c0 / 2.0)
    A2 = 1.0 - pre * abs(c0 * g1 + 2.0 * w * g2) ** 2
    A3 = 1.0 - pre * abs(c0 * g1 - 2.0 * np.conj(w) * g2) ** 2
    return np.array([A1, A2, A3])


def closed_form_alpha1(c0: float):
    """(A+, B+, offsets) at alpha = 1, where the profile is explicit."""
    if c0 < 0:
        raise ValueError("c0 must be nonnegative")
    ang = c0 * SQRT_PI
    sn, cs = math.sin(ang), math.cos(ang)
    A = np.array([cs, sn, 0.0])
    B = np.array([abs(sn), abs(cs), 1.0])
    a = np.array([1.5 * math.pi if sn >= 0 else 0.5 * math.pi, 0.5 * math.pi if cs >= 0 else 1.5 * math.pi, 0.0])
    return A, B, a


__all__ = [
    "AsymptoticConstants",
    "FrameAsymptotics",
    "ExpansionReport",
    "circular_distance",
    "phase_phi",
    "phase_phi_many",
    "estimate_z_inf",
    "fit_constants",
    "require_phase",
    "frame_trajectories",
    "frame_asymptotics",
    "expansion",
    "dyadic_windows",
    "verify_expansion",
    "closed_form_alpha0",
    "closed_form_alpha1",
    "gauss_panels",
]
