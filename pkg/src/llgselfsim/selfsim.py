"""The self-similar solution m(s, t) = m(s / sqrt(t)) built from the profile.

Covers the L^p distance to the jump datum, the total energy, the filament
function u = c exp(i int tau) and finite-difference residuals of the LLG
equation and of the damped nonlocal Schroedinger equation satisfied by u.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from .asymptotics import FrameAsymptotics, expansion, frame_asymptotics, verify_expansion
from .errors import InfiniteEnergy, OutOfRange, TailNotNegligible
from .frenet import Profile, integrate_profile, local_states, second_derivative_m
from .model import DEFAULT_TOLERANCES, ModelParams, ToleranceConfig, curvature
from .quadrature import gauss_panels, panel_edges, split_at_sign_changes
from .scattering import LimitVector, limit_vector

TAIL_FRACTION = 0.01
# The weighted expansion remainder measured on the profile is inflated by this
# factor before it is used as the constant of the tail majorant.
TAIL_SAFETY = 2.0


@dataclass(frozen=True)
class FilamentValue:
    u: complex
    s: float
    t: float


@dataclass(frozen=True)
class SelfSimilarField:
    """Profile (with parity extension) and its limit vectors."""

    params: ModelParams
    profile: Profile
    limit: LimitVector
    asymptotics: Optional[FrameAsymptotics] = None

    @cached_property
    def tail_constant(self) -> float:
        """Constant of the O(e^{-alpha s^2/4}/s^3) remainder, read off the profile."""
        if self.asymptotics is None:
            return 0.0
        return TAIL_SAFETY * max(verify_expansion(self.profile, self.asymptotics).m_sups)


def profile_length(params: ModelParams) -> float:
    """Profile length: past the [s0, 3 s0] window where the remainder is measured."""
    return min(200.0, 3.0 * params.s0 + 12.0)


def build_field(
    params: ModelParams,
    s_max: Optional[float] = None,
    tols: ToleranceConfig = DEFAULT_TOLERANCES,
) -> SelfSimilarField:
    s_max = profile_length(params) if s_max is None else s_max
    profile = integrate_profile(params, s_max, tols)
    lv = limit_vector(params.c0, params.alpha, tols)
    fa = None if params.is_constant else frame_asymptotics(params, tols)
    return SelfSimilarField(params, profile, lv, fa)


def eval_m(field: SelfSimilarField, s, t: float) -> np.ndarray:
    """m(s, t) = m(s / sqrt(t)); shape (3,) or (3, N).

    Raises
    ------
    OutOfRange
        If |s| / sqrt(t) exceeds the profile length.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    eta = np.asarray(s, dtype=float) / math.sqrt(t)
    return field.profile.state_any(eta)[0:3]


def jump_datum(field: SelfSimilarField, s) -> np.ndarray:
    """A+ for s > 0 and A- for s < 0, shape (3, N)."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    return np.where(s[None, :] >= 0, field.limit.A_plus[:, None], field.limit.A_minus[:, None])


def total_energy(params: ModelParams, t: float) -> float:
    """E(t) = (1/2) int_R c(s, t)^2 ds = c0^2 sqrt(pi / (2 alpha t)).

    Raises
    ------
    InfiniteEnergy
        For alpha = 0, where the integral diverges.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if params.alpha == 0:
        raise InfiniteEnergy("the total energy is infinite without damping")
    return params.c0**2 * math.sqrt(math.pi / (2.0 * params.alpha * t))


def curvature_st(params: ModelParams, s, t: float):
    """c(s, t) = (c0 / sqrt(t)) exp(-alpha s^2 / (4 t))."""
    s = np.asarray(s, dtype=float)
    return params.c0 / math.sqrt(t) * np.exp(-params.alpha * s * s / (4.0 * t))


def torsion_st(params: ModelParams, s, t: float):
    """tau(s, t) = tau(s / sqrt(t)) / sqrt(t) = beta s / (2 t)."""
    return params.beta * np.asarray(s, dtype=float) / (2.0 * t)


def total_energy_quadrature(params: ModelParams, t: float) -> float:
    """(1/2) int_R c(s, t)^2 ds by Gauss panels over +-40 Gaussian widths."""
    if params.alpha == 0:
        raise InfiniteEnergy("the total energy is infinite without damping")
    width = math.sqrt(2.0 * t / params.alpha)
    edges = panel_edges(-40.0 * width, 40.0 * width, width / 2.0)
    return 0.5 * gauss_panels(lambda s: curvature_st(params, s, t) ** 2, edges)


# -- L^p distance ---------------------------------------------------------


def _tail_bound(field: SelfSimilarField, L: float, p: float) -> float:
    """Majorant of int_L^inf |m_j - A_j|^p, the same for every component.

    Minkowski's inequality applied to the three terms of the expansion
    remainder (first order, second order, O(e^{-alpha s^2/4}/s^3)).
    """
    prm = field.params
    alpha, beta, c0 = prm.alpha, prm.beta, prm.c0
    if c0 == 0:
        return 0.0

    def norm(func):
        val, _ = integrate.quad(func, L, np.inf, limit=200)
        return val ** (1.0 / p)

    if alpha == 0 and p <= 1.0:
        return math.inf
    t1 = 2.0 * math.sqrt(2.0) * c0 * (alpha + beta) * norm(lambda s: np.exp(-alpha * s * s * p / 4.0) / s**p)
    t2 = 2.0 * c0**2 * norm(lambda s: np.exp(-alpha * s * s * p / 2.0) / s ** (2 * p))
    t3 = field.tail_constant * norm(lambda s: np.exp(-alpha * s * s * p / 4.0) / s ** (3 * p))
    return (t1 + t2 + t3) ** p


def _reduced_integrals(field: SelfSimilarField, p: float) -> np.ndarray:
    """int_0^L |m_j(eta) - A_j+|^p d eta for j = 1, 2, 3."""
    prof = field.profile
    A = field.limit.A_plus
    edges = panel_edges(0.0, prof.s_max, 0.1)
    out = np.empty(3)
    for j in range(3):
        def diff(x, j=j):
            return prof.state(x)[j] - A[j]

        e = edges if _is_even(p) else split_at_sign_changes(diff, edges)
        out[j] = gauss_panels(lambda x: np.abs(diff(x)) ** p, e)
    return out


def _is_even(p: float) -> bool:
    return float(p).is_integer() and int(p) % 2 == 0


def lp_distance(field: SelfSimilarField, t: float, p: float) -> float:
    """|| m(., t) - A+ chi_{s>0} - A- chi_{s<0} ||_{L^p}, summed over components.

    Uses the reduced form sum_j (2 sqrt(t) int_0^inf |m_j - A_j+|^p)^{1/p};
    the part beyond the profile end is bounded with the expansion remainder.

    Raises
    ------
    TailNotNegligible
        If that bound exceeds 1% of the computed part (always for p = 1 at
        alpha = 0, where the integral diverges).
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if p < 1:
        raise ValueError("p must be at least 1")
    if field.params.is_constant:
        return 0.0
    finite = _reduced_integrals(field, p)
    tail = _tail_bound(field, field.profile.s_max, p)
    if not tail <= TAIL_FRACTION * finite.min():
        raise TailNotNegligible(f"tail bound {tail:.3e} exceeds {TAIL_FRACTION:.0%} of the integral {finite.min():.3e}")
    return float(np.sum((2.0 * math.sqrt(t) * finite) ** (1.0 / p)))


def lp_distance_physical(field: SelfSimilarField, t: float, p: float) -> float:
    """Same norm computed in physical s on both half-lines, without parity.

    Serves as an independent check of ``lp_distance``: the integrand is
    eval_m(s, t) - jump_datum(s) on [-X, 0] and [0, X], X = sqrt(t) L.
    """
    if field.params.is_constant:
        return 0.0
    X = math.sqrt(t) * field.profile.s_max * (1 - 1e-12)
    # A panel width unrelated to the reduced form keeps the two quadratures independent.
    edges_pos = panel_edges(0.0, X, 0.0625 * math.sqrt(t))
    out = 0.0
    tail = _tail_bound(field, field.profile.s_max, p) * math.sqrt(t)
    for j in range(3):
        def integrand(s, j=j):
            return np.abs(eval_m(field, s, t)[j] - jump_datum(field, s)[j]) ** p

        # Points exactly at 0 belong to the s > 0 branch; the negative side
        # is integrated over [-X, -0] with mirrored panels.
        def diff(s, j=j):
            return eval_m(field, s, t)[j] - jump_datum(field, s)[j]

        right_edges, left_edges = edges_pos, -edges_pos[::-1]
        if not _is_even(p):
            right_edges = split_at_sign_changes(diff, right_edges)
            left_edges = split_at_sign_changes(diff, left_edges)
        right = gauss_panels(integrand, right_edges)
        left = gauss_panels(integrand, left_edges)
        out += (left + right + 2.0 * tail) ** (1.0 / p)
    return float(out)


# -- PDE residuals -----------------------------------------------------------


def _stencil_m(field: SelfSimilarField, s: float, t: float, ds: float, dt: float):
    """m at the five stencil points around (s, t) from one smooth local solve."""
    prm = field.params
    rt = math.sqrt(t)
    eta_c = s / rt
    base = field.profile.state_any(eta_c)
    targets = np.array([
        eta_c,
        (s - ds) / rt,
        (s + ds) / rt,
        s / math.sqrt(t - dt),
        s / math.sqrt(t + dt),
    ])
    st = local_states(prm, eta_c, base, targets)
    return st[:, 0:3]


def llg_pde_residual(
    field: SelfSimilarField,
    grid: Tuple[Sequence[float], Sequence[float]],
    ds: float,
    dt: float,
) -> float:
    """max | m_t - beta m x m_ss + alpha m x (m x m_ss) | with central differences.

    Stencil values come from a fixed-step local solve anchored at the stencil
    centre, so they are smooth in (s, t) and the differences show their
    second-order truncation error rather than interpolation noise.
    """
    prm = field.params
    if prm.is_constant:
        return 0.0
    s_pts, t_pts = grid
    worst = 0.0
    for t in t_pts:
        if not t - dt > 0:
            raise OutOfRange("t - dt must stay positive")
        for s in s_pts:
            if abs(s) + ds > field.profile.s_max * math.sqrt(t - dt):
                raise OutOfRange("stencil leaves the profile")
            m0, mm, mp, tm, tp = _stencil_m(field, s, t, ds, dt)
            m_ss = (mp - 2.0 * m0 + mm) / (ds * ds)
            m_t = (tp - tm) / (2.0 * dt)
            x = np.cross(m0, m_ss)
            r = m_t - prm.beta * x + prm.alpha * np.cross(m0, x)
            worst = max(worst, float(np.linalg.norm(r)))
    return worst


def llg_pde_residual_analytic(field: SelfSimilarField, grid) -> float:
    """Same residual with m_t = -(eta/(2t)) c(eta) n(eta) and m_ss = m''(eta)/t."""
    prm = field.params
    if prm.is_constant:
        return 0.0
    s_pts, t_pts = grid
    worst = 0.0
    for t in t_pts:
        eta = np.asarray(s_pts, dtype=float) / math.sqrt(t)
        st = field.profile.state_any(eta).T
        m, n = st[:, 0:3], st[:, 3:6]
        m_t = -(eta / (2.0 * t))[:, None] * curvature(prm, eta)[:, None] * n
        m_ss = second_derivative_m(prm, eta, st) / t
        x = np.cross(m, m_ss)
        r = m_t - prm.beta * x + prm.alpha * np.cross(m, x)
        worst = max(worst, float(np.max(np.linalg.norm(r, axis=1))))
    return worst


def filament(params: ModelParams, s: float, t: float) -> FilamentValue:
    """u(s, t) = (c0 / sqrt(t)) exp((-alpha + i beta) s^2 / (4 t))."""
    if not t > 0:
        raise ValueError("t must be positive")
    u = params.c0 / math.sqrt(t) * cmath.exp(complex(-params.alpha, params.beta) * s * s / (4.0 * t))
    return FilamentValue(u, float(s), float(t))


def filament_hasimoto(params: ModelParams, s: float, t: float) -> FilamentValue:
    """u = c(s, t) exp(i int_0^s tau(sigma, t) dsigma), the integral by Gauss panels."""
    if not t > 0:
        raise ValueError("t must be positive")
    phase = gauss_panels(lambda x: torsion_st(params, x, t), [0.0, float(s)]) if s != 0 else 0.0
    u = float(curvature_st(params, s, t)) * cmath.exp(1j * phase)
    return FilamentValue(u, float(s), float(t))


def _u_grid(params: ModelParams, s, t):
    s = np.asarray(s, dtype=float)
    return params.c0 / math.sqrt(t) * np.exp(complex(-params.alpha, params.beta) * s * s / (4.0 * t))


def schrodinger_residual(
    params: ModelParams,
    grid: Tuple[Sequence[float], Sequence[float]],
    ds: float,
    dt: float,
) -> float:
    """max | i u_t + (beta - i alpha) u_ss + (u/2)(beta |u|^2 + 2 alpha N - beta c0^2 / t) |.

    u_t, u_s and u_ss are central differences; the nonlocal term
    N(s) = int_0^s Im(conj(u) u_s) is a cumulative trapezoid sum on the
    ds-grid from 0.  Grid points in s must be multiples of ds.
    """
    s_pts, t_pts = grid
    s_pts = np.asarray(s_pts, dtype=float)
    k = np.rint(s_pts / ds).astype(int)
    if np.any(np.abs(k * ds - s_pts) > 1e-9 * ds):
        raise ValueError("s points must lie on the ds-grid")
    alpha, beta, c0 = params.alpha, params.beta, params.c0
    kmax = int(np.max(np.abs(k))) + 1
    worst = 0.0
    for t in t_pts:
        if not t - dt > 0:
            raise ValueError("t - dt must stay positive")
        nodes = np.arange(-1, kmax + 2) * ds  # includes a ghost node at -ds
        u = _u_grid(params, nodes, t)
        u_s = (u[2:] - u[:-2]) / (2.0 * ds)  # at nodes[1:-1] = 0, ds, ...
        im = np.imag(np.conj(u[1:-1]) * u_s)
        N = integrate.cumulative_trapezoid(im, dx=ds, initial=0.0)
        for sign in (1.0, -1.0):
            idx = np.abs(k)
            ss = sign * idx * ds
            uc = _u_grid(params, ss, t)
            u_ss = (_u_grid(params, ss + ds, t) - 2.0 * uc + _u_grid(params, ss - ds, t)) / (ds * ds)
            u_t = (_u_grid(params, ss, t + dt) - _u_grid(params, ss, t - dt)) / (2.0 * dt)
            # Im(conj(u) u_s) is odd in s, so its integral from 0 is even.
            nonlocal_term = N[idx]
            r = 1j * u_t + complex(beta, -alpha) * u_ss + uc / 2.0 * (
                beta * np.abs(uc) ** 2 + 2.0 * alpha * nonlocal_term - beta * c0 * c0 / t
            )
            worst = max(worst, float(np.max(np.abs(r))))
    return worst


def weak_delta_limit(params: ModelParams) -> complex:
    """2 c0 sqrt(pi (alpha + i beta)), principal root (positive imaginary part)."""
    return 2.0 * params.c0 * cmath.sqrt(math.pi * complex(params.alpha, params.beta))


def weak_delta_pairing(params: ModelParams, t: float, test: Optional[Callable] = None) -> complex:
    """int u(s, t) phi(s) ds for a test function (default exp(-s^2))."""
    phi = test if test is not None else (lambda s: np.exp(-s * s))
    L = 12.0
    edges = panel_edges(-L, L, min(0.05, math.sqrt(t) / 2.0))
    re = gauss_panels(lambda s: np.real(_u_grid(params, s, t)) * phi(s), edges)
    im = gauss_panels(lambda s: np.imag(_u_grid(params, s, t)) * phi(s), edges)
    return complex(re, im)


__all__ = [
    "FilamentValue",
    "SelfSimilarField",
    "profile_length",
    "build_field",
    "eval_m",
    "jump_datum",
    "total_energy",
    "total_energy_quadrature",
    "curvature_st",
    "torsion_st",
    "lp_distance",
    "lp_distance_physical",
    "llg_pde_residual",
    "llg_pde_residual_analytic",
    "filament",
    "filament_hasimoto",
    "schrodinger_residual",
    "weak_delta_limit",
    "weak_delta_pairing",
    "expansion",
]
