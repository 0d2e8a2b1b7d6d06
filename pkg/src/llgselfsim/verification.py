"""Invariant suites shared by ``llgselfsim verify`` and the test-suite.

Each suite returns a list of :class:`Check` records; a check passes when its
measured value is finite and does not exceed its threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence

import numpy as np

from .asymptotics import (
    _taper,
    _window,
    circular_distance,
    closed_form_alpha0,
    closed_form_alpha1,
    default_window,
    frame_asymptotics,
    frame_trajectories,
    verify_expansion,
)
from .complex_ode import (
    eta_initial,
    frame_row_from_eta,
    initial_conditions,
    reconstruct_profile_states,
    riccati_solve,
    solve_f,
    solve_zyh_direct,
    ZYH,
)
from .errors import TailNotNegligible
from .frenet import PARITY, geometric_residual, integrate_profile
from .model import DEFAULT_TOLERANCES, ModelParams, ToleranceConfig
from .scattering import (
    check_alpha_continuity,
    check_small_c0_bounds,
    check_zinf_c0_bound,
    limit_vector,
    limit_vector_minus_integrated,
)
from .selfsim import (
    build_field,
    eval_m,
    llg_pde_residual,
    lp_distance,
    lp_distance_physical,
    profile_length,
    schrodinger_residual,
)

ENERGY_GRID_C0 = (0.2, 0.8, 2.0, 6.0)
ENERGY_GRID_ALPHA = (0.0, 0.01, 0.4, 0.9, 1.0)
DUALPATH_PARAMS = (0.8, 0.4)
EXPANSION_CASES = ((0.8, 0.0), (0.8, 0.4), (0.8, 1.0))
LP_POWERS = (1.5, 2.0, 4.0)
LP_TIMES = tuple(np.logspace(-4.0, 0.0, 5))
PDE_GRID = ((-2.0, -1.0, -0.5, 0.1, 0.5, 1.0, 2.0), (1.0, 1.5, 2.0))
# The Schroedinger stencil needs s on the ds-grid.
SCHRODINGER_GRID = ((0.0, 0.25, 0.5, 1.0, 1.5, 2.0), (1.0, 1.5, 2.0))
CONTINUITY_ALPHAS = (0.025, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95, 0.975)


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    value: float
    threshold: float

    @property
    def passed(self) -> bool:
        return math.isfinite(self.value) and self.value <= self.threshold

    @property
    def margin(self) -> float:
        return self.threshold - self.value


def frame_rows_from_zyh(params: ModelParams, ic_index: int, s, z, y, h):
    """(m_j, n_j, b_j) from reduced variables, the map used for f as well."""
    s = np.asarray(s, dtype=float)
    k_m, k_n = (2.0, 4.0 / params.c0) if ic_index == 1 else (1.0, 2.0 / params.c0)
    w = k_n * np.exp(params.alpha * s * s / 4.0)
    return k_m * z - 1.0, w * y, w * h


def measured_amplitude_sq(traj, gamma: float) -> float:
    """Hann-weighted mean of Yc^2 + Hc^2 over the fit window: the data's b^2."""
    p = traj.params
    lo, hi = default_window(p, traj.s_max)
    s = _window(lo, hi)
    _, Y, H = traj.scaled_zyh(s)
    env = np.exp(-p.alpha * s * s / 4.0)
    Yc = Y + 2.0 * p.alpha * gamma / s * env
    Hc = H + 2.0 * p.beta * gamma / s * env
    w = _taper(s.size)
    return float(w @ (Yc * Yc + Hc * Hc))


# -- suites -------------------------------------------------------------------


def suite_energy(tols: ToleranceConfig = DEFAULT_TOLERANCES) -> List[Check]:
    out = []
    for c0 in ENERGY_GRID_C0:
        for alpha in ENERGY_GRID_ALPHA:
            p = ModelParams(c0, alpha)
            drift = max(solve_f(p, j, 40.0, tols, [0.0], energy_tol=math.inf).max_energy_drift for j in (1, 2, 3))
            out.append(Check("energy", f"drift c0={c0:g} alpha={alpha:g}", drift, 1e-9))
    return out


def suite_frames(tols: ToleranceConfig = DEFAULT_TOLERANCES) -> List[Check]:
    out = []
    for c0, alpha in ((0.8, 0.0), (0.8, 0.4), (2.0, 0.9), (6.0, 0.01)):
        prof = integrate_profile(ModelParams(c0, alpha), 40.0, tols)
        out.append(Check("frames", f"orthonormality c0={c0:g} alpha={alpha:g}", prof.max_drift, tols.frame_drift_tol))
        out.append(Check("frames", f"profile equation c0={c0:g} alpha={alpha:g}", geometric_residual(prof), 1e-8))
    return out


def suite_dualpath(tols: ToleranceConfig = DEFAULT_TOLERANCES) -> List[Check]:
    """Frenet, f-reconstruction, direct (z, y, h) and Riccati on [0, 20]."""
    p = ModelParams(*DUALPATH_PARAMS)
    s = np.linspace(0.0, 20.0, 401)
    frenet = integrate_profile(p, 20.0, tols).state(s)
    trajs = [solve_f(p, j, 20.0, tols, [0.0]) for j in (1, 2, 3)]
    recon = reconstruct_profile_states(trajs, s)
    direct = np.empty_like(recon)
    ricc_err = 0.0
    for j in (1, 2, 3):
        f0, fp0, E0 = initial_conditions(p.c0, j)
        w = np.conj(f0) * fp0
        path = solve_zyh_direct(p, ZYH(abs(f0) ** 2, w.real, w.imag), E0, 20.0, tols, s)
        m, n, b = frame_rows_from_zyh(p, j, s, path.z, path.y, path.h)
        direct[j - 1], direct[j + 2], direct[j + 5] = m, n, b
        rp = riccati_solve(p, eta_initial(j), 20.0, tols, s)
        # Near a blow-up the projection is ill-conditioned; compare where
        # |eta| stays moderate.
        ok = np.abs(rp.eta) < 1e3
        rm, rn, rb = frame_row_from_eta(rp.eta[ok])
        ref = frenet[[j - 1, j + 2, j + 5]][:, : rp.eta.size][:, ok]
        ricc_err = max(ricc_err, float(np.max(np.abs(np.array([rm, rn, rb]) - ref))))
    pairs = (("frenet-f", frenet, recon), ("frenet-zyh", frenet, direct), ("f-zyh", recon, direct))
    out = [Check("dualpath", name, float(np.max(np.abs(a - b))), 1e-8) for name, a, b in pairs]
    out.append(Check("dualpath", "frenet-riccati", ricc_err, 1e-8))
    return out


def suite_asymptotics(tols: ToleranceConfig = DEFAULT_TOLERANCES) -> List[Check]:
    out = []
    for c0, alpha in EXPANSION_CASES:
        p = ModelParams(c0, alpha)
        prof = integrate_profile(p, profile_length(p), tols)
        rep = verify_expansion(prof, frame_asymptotics(p, tols))
        out.append(Check("asymptotics", f"expansion ratio c0={c0:g} alpha={alpha:g}", rep.m_ratio, 2.0))
    for c0, alpha in ((0.8, 0.4), (2.0, 0.9), (0.5, 0.1)):
        p = ModelParams(c0, alpha)
        trajs = frame_trajectories(p, 40.0, tols)
        fa = frame_asymptotics(p, tols, 40.0, trajs)
        tag = f"c0={c0:g} alpha={alpha:g}"
        out.append(Check("asymptotics", f"orthogonality {tag}", float(np.max(np.abs(fa.orthogonality()))), 1e-6))
        out.append(Check("asymptotics", f"|A+|-1 {tag}", abs(float(np.linalg.norm(fa.A_plus)) - 1.0), 1e-8))
        for cst, traj in zip(fa.constants, trajs):
            j = cst.ic_index
            A = fa.A_plus[j - 1]
            k = 16.0 if j == 1 else 4.0
            b_sq_rel = (1.0 - A * A) * c0 * c0 / k
            measured = measured_amplitude_sq(traj, cst.gamma)
            out.append(Check("asymptotics", f"b{j}^2 data {tag}", abs(measured - b_sq_rel), 1e-8))
            g_rel = -(c0 * c0 / 4.0) * A if j == 1 else -(c0 * c0 / 2.0) * A
            out.append(Check("asymptotics", f"gamma{j} {tag}", abs(cst.gamma - g_rel), 1e-8))
    return out


def suite_closedform(tols: ToleranceConfig = DEFAULT_TOLERANCES) -> List[Check]:
    out = []
    for c0 in (0.5, 0.8, 2.0):
        p = ModelParams(c0, 1.0)
        prof = integrate_profile(p, 40.0, tols)
        exact = integrate_profile(p, 40.0, output_grid=prof.s, use_closed_form=True)
        out.append(Check("closedform", f"alpha=1 profile c0={c0:g}", float(np.max(np.abs(prof.states - exact.states))), 1e-9))
        fa = frame_asymptotics(p, tols)
        A, B, a = closed_form_alpha1(c0)
        out.append(Check("closedform", f"alpha=1 A+ c0={c0:g}", float(np.max(np.abs(fa.A_plus - A))), 1e-8))
        out.append(Check("closedform", f"alpha=1 B+ c0={c0:g}", float(np.max(np.abs(fa.B_plus - B))), 1e-8))
        out.append(Check("closedform", f"alpha=1 offsets c0={c0:g}", float(np.max(circular_distance(fa.a_offsets, a))), 1e-8))
    for c0 in (0.25, 0.5, 1.0):
        A = closed_form_alpha0(c0)
        fa = frame_asymptotics(ModelParams(c0, 0.0), tols)
        out.append(Check("closedform", f"alpha=0 A+ c0={c0:g}", float(np.max(np.abs(fa.A_plus - A))), 1e-6))
        out.append(Check("closedform", f"alpha=0 |A+|-1 c0={c0:g}", abs(float(np.linalg.norm(A)) - 1.0), 1e-10))
    return out


def suite_bounds(tols: ToleranceConfig = DEFAULT_TOLERANCES) -> List[Check]:
    out = []
    for alpha in (0.25, 0.5, 0.75, 1.0):
        for row in check_small_c0_bounds(alpha, (0.02, 0.05, 0.1), tols):
            # Reported as value = -margin so that passing means margin >= 0.
            out.append(Check("bounds", f"small-c0 alpha={alpha:g} c0={row.c0:g}", -min(row.margins), 0.0))
    for alpha in (0.4, 1.0):
        for c0 in (0.1, 0.5):
            for j in (1, 2, 3):
                rep = check_zinf_c0_bound(alpha, c0, j, tols)
                out.append(Check("bounds", f"z_inf alpha={alpha:g} c0={c0:g} j={j}", -rep.margin, 0.0))
    for rep in check_alpha_continuity(0.8, CONTINUITY_ALPHAS, tols):
        out.append(Check("bounds", f"continuity {rep.regime} max growth", max(rep.growth), 2.0))
    return out


def lp_slopes(field, powers: Sequence[float] = LP_POWERS, times: Sequence[float] = LP_TIMES) -> Dict[float, float]:
    """Least-squares log-log slope of lp_distance against t for each power."""
    logt = np.log(times)
    out = {}
    for p in powers:
        d = [lp_distance(field, t, p) for t in times]
        out[p] = float(np.polyfit(logt, np.log(d), 1)[0])
    return out


def suite_lp_rate(tols: ToleranceConfig = DEFAULT_TOLERANCES) -> List[Check]:
    field = build_field(ModelParams(0.8, 0.4), tols=tols)
    out = [Check("lp-rate", f"slope p={p:g}", abs(k - 1.0 / (2.0 * p)), 0.05) for p, k in lp_slopes(field).items()]
    for t in (1e-2, 1.0):
        red, phys = lp_distance(field, t, 2.0), lp_distance_physical(field, t, 2.0)
        out.append(Check("lp-rate", f"reduced vs physical t={t:g}", abs(red - phys) / red, 1e-8))
    field0 = build_field(ModelParams(0.8, 0.0), tols=tols)
    try:
        lp_distance(field0, 1.0, 1.0)
        rejected = False
    except TailNotNegligible:
        rejected = True
    out.append(Check("lp-rate", "p=1 rejected at alpha=0", 0.0 if rejected else 1.0, 0.0))
    return out


def suite_pde_residual(tols: ToleranceConfig = DEFAULT_TOLERANCES) -> List[Check]:
    p = ModelParams(0.8, 0.4)
    field = build_field(p, tols=tols)
    llg = [llg_pde_residual(field, PDE_GRID, h, h) for h in (1e-3, 5e-4)]
    sch = [schrodinger_residual(p, SCHRODINGER_GRID, h, h) for h in (1e-3, 5e-4)]
    out = []
    for name, (r1, r2) in (("llg", llg), ("schrodinger", sch)):
        out.append(Check("pde-residual", f"{name} residual", r1, 1e-4))
        # Second order: halving the steps divides the residual by about 4.
        out.append(Check("pde-residual", f"{name} |ratio-4|", abs(r1 / r2 - 4.0), 1.0))
    return out


def suite_symmetry(tols: ToleranceConfig = DEFAULT_TOLERANCES) -> List[Check]:
    out = []
    for c0, alpha in ((0.8, 0.4), (2.0, 0.0)):
        p = ModelParams(c0, alpha)
        s = np.linspace(0.0, 20.0, 401)
        pos = integrate_profile(p, 20.0, tols).state(s)
        neg = integrate_profile(p, 20.0, tols, direction=-1).state(-s)
        tag = f"c0={c0:g} alpha={alpha:g}"
        out.append(Check("symmetry", f"parity {tag}", float(np.max(np.abs(neg - PARITY[:, None] * pos))), 1e-9))
        if alpha > 0:
            A_minus = limit_vector_minus_integrated(c0, alpha, tols)
            lv = limit_vector(c0, alpha, tols)
            out.append(Check("symmetry", f"A- reflection {tag}", float(np.max(np.abs(A_minus - lv.A_minus))), 1e-8))
    field = build_field(ModelParams(0.8, 0.4), tols=tols)
    m0 = eval_m(field, 0.0, 0.7)
    out.append(Check("symmetry", "m(0,t)=(1,0,0)", float(np.max(np.abs(m0 - [1.0, 0.0, 0.0]))), 1e-12))
    s = np.linspace(-3.0, 3.0, 13)
    scale = float(np.max(np.abs(eval_m(field, s, 0.5) - eval_m(field, 2.0 * s, 2.0))))
    out.append(Check("symmetry", "scaling m(s,t)=m(2s,4t)", scale, 1e-10))
    return out


SUITES: Dict[str, Callable[[ToleranceConfig], List[Check]]] = {
    "energy": suite_energy,
    "frames": suite_frames,
    "dualpath": suite_dualpath,
    "asymptotics": suite_asymptotics,
    "closedform": suite_closedform,
    "bounds": suite_bounds,
    "lp-rate": suite_lp_rate,
    "pde-residual": suite_pde_residual,
    "symmetry": suite_symmetry,
}


def run_suite(name: str, tols: ToleranceConfig = DEFAULT_TOLERANCES) -> List[Check]:
    """Checks of one named suite, or of every suite for ``"all"``."""
    if name == "all":
        return [c for key in SUITES for c in SUITES[key](tols)]
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}")
    return SUITES[name](tols)
