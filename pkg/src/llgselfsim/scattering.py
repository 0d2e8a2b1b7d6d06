"""The map (c0, alpha) -> A+/- : limit vectors, angles, sweeps and inverse solves.

Also hosts numerical checks of the small-c0 inequalities, the alpha-continuity
rates near both endpoints, the jump criterion and the z_inf bound in c0.
"""

from __future__ import annotations

import json
import math
import os
import threading
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from . import asymptotics
from .asymptotics import closed_form_alpha0, closed_form_alpha1, estimate_z_inf, frame_asymptotics
from .complex_ode import initial_conditions, solve_f
from .errors import LLGError, NoRoot
from .model import DEFAULT_TOLERANCES, ModelParams, ToleranceConfig

SCAN_POINTS = 512
BISECTION_TOL = 1e-8
JUMP_TOL = 1e-8
# Integration length for alpha >= SHORT_ALPHA is cut where exp(-alpha S^2/4)
# drops below exp(-ENVELOPE_EXPONENT); the corrections are negligible there.
SHORT_ALPHA = 0.1
ENVELOPE_EXPONENT = 40.0
SELF_INTERSECTION_GUESS = (2.1749, 6.6263)


@dataclass(frozen=True)
class LimitVector:
    """A+ and A- = (A1, -A2, -A3); theta is the angle between A+ and -A-."""

    A_plus: np.ndarray
    A_minus: np.ndarray
    theta: float
    method: str = "integrated"

    def __post_init__(self):
        for name in ("A_plus", "A_minus"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class SweepRow:
    c0: float
    alpha: float
    A_plus: Tuple[float, float, float]
    theta: float
    method: str
    error: str = ""


def angle_from_a1(a1: float) -> float:
    """theta in [0, pi] with cos(theta) = 1 - 2 a1^2, i.e. sin(theta/2) = |a1|."""
    return 2.0 * math.asin(min(1.0, abs(a1)))


def reflect(a_plus) -> np.ndarray:
    a = np.asarray(a_plus, dtype=float)
    return np.array([a[0], -a[1], -a[2]])


def integration_length(params: ModelParams) -> float:
    """Integration length used for the limit vector at these parameters."""
    s_min = params.s0 / asymptotics.WINDOW_FRACTION
    if params.alpha >= SHORT_ALPHA:
        return max(params.s0 + 2.0, math.sqrt(4.0 * ENVELOPE_EXPONENT / params.alpha))
    return max(asymptotics.S_DEFAULT, s_min)


def _window_for(params: ModelParams, S: float):
    return max(params.s0, min(asymptotics.WINDOW_FRACTION * S, S - 2.0)), S


def _limit_a_plus(params: ModelParams, tols: ToleranceConfig, components=(1, 2, 3)) -> np.ndarray:
    """Requested components of A+ by integration (others NaN)."""
    S = integration_length(params)
    lo, hi = _window_for(params, S)
    out = np.full(3, np.nan)
    for j in components:
        traj = solve_f(params, j, S, tols, [0.0])
        z = estimate_z_inf(traj, hi, lo / hi)
        out[j - 1] = 2.0 * z - 1.0 if j == 1 else z - 1.0
    return out


def limit_vector(
    c0: float,
    alpha: float,
    tols: ToleranceConfig = DEFAULT_TOLERANCES,
    *,
    force_integrate: bool = False,
) -> LimitVector:
    """A+, A- and theta at (c0, alpha).

    The endpoints alpha = 0 and alpha = 1 use the closed forms unless
    ``force_integrate`` is set.
    """
    params = ModelParams(c0, alpha)
    if params.is_constant:
        e1 = np.array([1.0, 0.0, 0.0])
        return LimitVector(e1, e1, 0.0, "closed_form")
    if not force_integrate and alpha == 0.0:
        A, method = closed_form_alpha0(c0), "closed_form"
    elif not force_integrate and alpha == 1.0:
        A, method = closed_form_alpha1(c0)[0], "closed_form"
    else:
        A, method = _limit_a_plus(params, tols), "integrated"
    return LimitVector(A, reflect(A), angle_from_a1(A[0]), method)


def theta_of(c0: float, alpha: float, tols: ToleranceConfig = DEFAULT_TOLERANCES) -> float:
    """theta(c0, alpha); needs only the first component, so one trajectory."""
    params = ModelParams(c0, alpha)
    if params.is_constant:
        return 0.0
    if alpha == 0.0:
        return angle_from_a1(math.exp(-math.pi * c0 * c0 / 2.0))
    if alpha == 1.0:
        return angle_from_a1(math.cos(c0 * math.sqrt(math.pi)))
    return angle_from_a1(_limit_a_plus(params, tols, (1,))[0])


def limit_vector_minus_integrated(c0: float, alpha: float, tols: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """A- from integration towards s = -infinity, independent of the reflection rule.

    g(s) = f(-s) solves the same equation with g'(0) = -f'(0); the z_inf
    relation is applied to g on the positive axis, i.e. with y -> -y, h -> -h.
    """
    params = ModelParams(c0, alpha)
    S = integration_length(params)
    lo, hi = _window_for(params, S)
    out = np.empty(3)
    for j in (1, 2, 3):
        traj = solve_f(params, j, S, tols, [0.0], direction=-1)
        z = estimate_z_inf(_Mirrored(traj), hi, lo / hi)
        out[j - 1] = 2.0 * z - 1.0 if j == 1 else z - 1.0
    return out


class _Mirrored:
    """View of a negative-s trajectory as g(s) = f(-s) on s > 0."""

    def __init__(self, traj):
        self._t = traj
        self.params = traj.params
        self.E0 = traj.E0
        self.s_max = traj.s_max
        self.ic_index = traj.ic_index

    def zyh_arrays(self, s):
        s = np.asarray(s, dtype=float)
        z, y, h = self._t.zyh_arrays(-s)
        return z, -y, -h


# -- cache and parallel map -------------------------------------------------


class LimitCache:
    """Thread-safe memo of limit vectors keyed by (c0, alpha, tolerances, forced).

    ``save``/``load`` persist it as JSON so sweeps can reuse earlier runs.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._data = {}

    @staticmethod
    def key(c0, alpha, tols: ToleranceConfig, forced=False):
        return (float(c0), float(alpha), tols.abs_tol, tols.rel_tol, tols.max_step, bool(forced))

    def get_or_compute(self, c0, alpha, tols=DEFAULT_TOLERANCES, forced=False) -> LimitVector:
        k = self.key(c0, alpha, tols, forced)
        with self._lock:
            hit = self._data.get(k)
        if hit is not None:
            return hit
        value = limit_vector(c0, alpha, tols, force_integrate=forced)
        with self._lock:
            return self._data.setdefault(k, value)

    def __len__(self):
        with self._lock:
            return len(self._data)

    def save(self, path) -> None:
        with self._lock:
            items = sorted(self._data.items())
        rows = [{"key": list(k), "A_plus": v.A_plus.tolist(), "method": v.method} for k, v in items]
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(rows, fh, indent=1)

    def load(self, path) -> None:
        with open(path, encoding="utf-8") as fh:
            rows = json.load(fh)
        with self._lock:
            for r in rows:
                A = np.array(r["A_plus"])
                self._data[tuple(r["key"])] = LimitVector(A, reflect(A), angle_from_a1(A[0]), r["method"])


DEFAULT_CACHE = LimitCache()


def thread_count() -> int:
    """Worker count from LLG_THREADS, defaulting to the number of CPUs."""
    raw = os.environ.get("LLG_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"LLG_THREADS must be an integer, got {raw!r}") from None
        if n < 1:
            raise ValueError("LLG_THREADS must be at least 1")
        return n
    return os.cpu_count() or 1


def parallel_map(func: Callable, items: Iterable, workers: Optional[int] = None) -> list:
    """``[func(x) for x in items]`` in input order, on worker processes if more than one."""
    items = list(items)
    workers = thread_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(func, items))


def _sweep_row(task) -> SweepRow:
    c0, alpha, tols, forced = task
    try:
        lv = limit_vector(c0, alpha, tols, force_integrate=forced)
    except (LLGError, ValueError, ArithmeticError) as exc:
        nan = float("nan")
        return SweepRow(c0, alpha, (nan, nan, nan), nan, "integrated", f"{type(exc).__name__}: {exc}")
    return SweepRow(c0, alpha, tuple(float(v) for v in lv.A_plus), lv.theta, lv.method)


def sweep(
    alpha: float,
    c0_grid: Sequence[float],
    tols: ToleranceConfig = DEFAULT_TOLERANCES,
    *,
    force_integrate: bool = False,
    cache: Optional[LimitCache] = DEFAULT_CACHE,
    workers: Optional[int] = None,
) -> List[SweepRow]:
    """Limit vectors along a sorted c0 grid; row failures are recorded, not raised."""
    grid = [float(c) for c in c0_grid]
    if any(c < 0 for c in grid) or any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("c0 grid must be sorted and nonnegative")
    return sweep_tasks([(c, float(alpha)) for c in grid], tols, force_integrate=force_integrate, cache=cache, workers=workers)


def sweep_tasks(pairs, tols=DEFAULT_TOLERANCES, *, force_integrate=False, cache=DEFAULT_CACHE, workers=None) -> List[SweepRow]:
    """Rows for arbitrary (c0, alpha) pairs, in the given order."""
    rows: List[Optional[SweepRow]] = [None] * len(pairs)
    todo = []
    for i, (c0, a) in enumerate(pairs):
        hit = None
        if cache is not None:
            with cache._lock:
                hit = cache._data.get(cache.key(c0, a, tols, force_integrate))
        if hit is not None:
            rows[i] = SweepRow(c0, a, tuple(float(v) for v in hit.A_plus), hit.theta, hit.method)
        else:
            todo.append(i)
    results = parallel_map(_sweep_row, [(pairs[i][0], pairs[i][1], tols, force_integrate) for i in todo], workers)
    for i, row in zip(todo, results):
        rows[i] = row
        if cache is not None and not row.error:
            A = np.array(row.A_plus)
            with cache._lock:
                cache._data.setdefault(cache.key(row.c0, row.alpha, tols, force_integrate), LimitVector(A, reflect(A), row.theta, row.method))
    return rows


# -- inverse problem ------------------------------------------------------------


def _theta_task(task):
    c0, alpha, tols = task
    return theta_of(c0, alpha, tols)


def solve_c0_for_angle(
    alpha: float,
    theta_target: float,
    c0_search: Tuple[float, float] = (0.0, 10.0),
    tols: ToleranceConfig = DEFAULT_TOLERANCES,
    *,
    scan_points: int = SCAN_POINTS,
    xtol: float = BISECTION_TOL,
    workers: Optional[int] = None,
) -> List[float]:
    """All c0 in ``c0_search`` with theta(c0, alpha) = theta_target.

    Sign changes of theta - theta_target on a uniform scan are refined by
    bisection; a scan without brackets is retried once at double density.

    Raises
    ------
    NoRoot
    """
    if not 0.0 < theta_target < math.pi:
        raise ValueError("theta_target must lie in (0, pi)")
    lo, hi = c0_search
    if not 0.0 <= lo < hi:
        raise ValueError("search interval must be increasing and nonnegative")
    if alpha == 0.0:
        # theta is strictly decreasing in c0 here; the closed form inverts it.
        c = math.sqrt(-2.0 * math.log(math.sin(theta_target / 2.0)) / math.pi)
        if lo <= c <= hi:
            return [c]
        raise NoRoot(f"no c0 in [{lo:g}, {hi:g}] reaches theta = {theta_target:g} at alpha = 0")
    if alpha == 1.0:
        # |cos(c0 sqrt(pi))| = sin(theta/2): two lattices c0 sqrt(pi) = k pi -+ x.
        x, rp = math.acos(math.sin(theta_target / 2.0)), math.sqrt(math.pi)
        k_hi = int(math.floor((hi * rp + x) / math.pi)) + 1
        cand = sorted({(k * math.pi + sgn * x) / rp for k in range(k_hi + 1) for sgn in (-1.0, 1.0)})
        roots = [c for c in cand if lo <= c <= hi]
        if roots:
            return roots
        raise NoRoot(f"no c0 in [{lo:g}, {hi:g}] reaches theta = {theta_target:g} at alpha = 1")

    def g(c):
        return theta_of(c, alpha, tols) - theta_target

    for points in (scan_points, 2 * scan_points):
        grid = np.linspace(lo, hi, points)
        vals = np.array(parallel_map(_theta_task, [(float(c), alpha, tols) for c in grid], workers)) - theta_target
        # theta(0) = 0 only flags the constant solution; the limit c0 -> 0+ is pi.
        vals[grid == 0.0] = math.pi - theta_target
        roots = []
        for i in range(points - 1):
            a, b, fa, fb = grid[i], grid[i + 1], vals[i], vals[i + 1]
            if fa == 0.0:
                roots.append(float(a))
            elif fa * fb < 0.0:
                roots.append(float(optimize.bisect(g, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)))
        if vals[-1] == 0.0:
            roots.append(float(grid[-1]))
        if roots:
            return roots
    raise NoRoot(f"no sign change of theta - {theta_target:g} in [{lo:g}, {hi:g}] at alpha = {alpha:g}")


def find_self_intersection(alpha: float, guess: Tuple[float, float] = SELF_INTERSECTION_GUESS, tols: ToleranceConfig = DEFAULT_TOLERANCES):
    """Pair ca < cb with A+(ca) = A+(cb) near ``guess`` (curve self-crossing on S^2).

    Solves A2(ca) = A2(cb), A3(ca) = A3(cb) with scipy's hybrid Powell
    method; since both vectors are unit and A1 enters only through theta,
    the first components agree up to sign, which is checked.
    """

    def resid(x):
        pa = _limit_a_plus(ModelParams(float(x[0]), alpha), tols, (2, 3))
        pb = _limit_a_plus(ModelParams(float(x[1]), alpha), tols, (2, 3))
        return [pa[1] - pb[1], pa[2] - pb[2]]

    sol = optimize.root(resid, np.asarray(guess, dtype=float), method="hybr", options={"xtol": 1e-10, "eps": 1e-6})
    if not sol.success:
        raise NoRoot(f"self-intersection solve failed: {sol.message}")
    ca, cb = sorted(float(v) for v in sol.x)
    if abs(ca - cb) < 1e-6:
        raise NoRoot("self-intersection solve collapsed onto a single point")
    return ca, cb


# -- verification helpers ----------------------------------------------------


@dataclass(frozen=True)
class BoundRow:
    alpha: float
    c0: float
    deviations: Tuple[float, float, float]
    bounds: Tuple[float, float, float]

    @property
    def margins(self) -> Tuple[float, float, float]:
        return tuple(b - d for b, d in zip(self.bounds, self.deviations))

    @property
    def ok(self) -> bool:
        return min(self.margins) >= -1e-8


def small_c0_bounds(alpha: float, c0: float) -> Tuple[float, float, float]:
    """Right-hand sides of the three small-c0 inequalities."""
    k = c0 * c0 * math.pi
    b1 = k / alpha * (1.0 + k / (8.0 * alpha))
    out = [b1]
    for sign in (1.0, -1.0):
        r = c0 * math.sqrt(math.pi * (1.0 + sign * alpha)) / math.sqrt(2.0)
        out.append(k / 4.0 + k / (alpha * math.sqrt(2.0)) * (1.0 + k / 8.0 + r / 2.0) + (k / (2.0 * math.sqrt(2.0) * alpha)) ** 2)
    return tuple(out)


def check_small_c0_bounds(alpha: float, c0_grid: Sequence[float], tols: ToleranceConfig = DEFAULT_TOLERANCES) -> List[BoundRow]:
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    rows = []
    for c0 in c0_grid:
        A = limit_vector(c0, alpha, tols).A_plus
        dev = (
            abs(A[0] - 1.0),
            abs(A[1] - c0 * math.sqrt(math.pi * (1.0 + alpha)) / math.sqrt(2.0)),
            abs(A[2] - c0 * math.sqrt(math.pi * (1.0 - alpha)) / math.sqrt(2.0)),
        )
        rows.append(BoundRow(alpha, float(c0), dev, small_c0_bounds(alpha, c0)))
    return rows


@dataclass(frozen=True)
class ContinuityReport:
    """Rate ratios |A+(alpha) - A+(endpoint)| / rate(alpha) on a grid.

    ``growth`` holds ratio[k+1]/ratio[k] between consecutive grid points
    ordered towards the endpoint.
    """

    c0: float
    regime: str
    alphas: Tuple[float, ...]
    ratios: Tuple[float, ...]

    @property
    def sup_ratio(self) -> float:
        return max(self.ratios)

    @property
    def growth(self) -> Tuple[float, ...]:
        r = self.ratios
        return tuple(b / a for a, b in zip(r, r[1:]))

    @property
    def bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.ratios))) and all(g < 2.0 for g in self.growth)


def check_alpha_continuity(c0: float, alpha_grid: Sequence[float], tols: ToleranceConfig = DEFAULT_TOLERANCES) -> List[ContinuityReport]:
    """Ratio suites near alpha = 0 (alpha <= 1/2) and alpha = 1 (alpha >= 1/2).

    Each regime is ordered towards its endpoint, so ``growth`` tracks the
    ratio as alpha approaches 0 or 1.
    """
    grid = sorted(float(a) for a in alpha_grid)
    if any(not 0.0 < a < 1.0 for a in grid):
        raise ValueError("alpha grid must lie in (0, 1)")
    A0 = closed_form_alpha0(c0)
    A1 = closed_form_alpha1(c0)[0]
    reports = []
    near0 = sorted((a for a in grid if a <= 0.5), reverse=True)
    near1 = [a for a in grid if a >= 0.5]
    if near0:
        r = [np.linalg.norm(limit_vector(c0, a, tols).A_plus - A0) / (math.sqrt(a) * abs(math.log(a))) for a in near0]
        reports.append(ContinuityReport(c0, "alpha->0", tuple(near0), tuple(float(x) for x in r)))
    if near1:
        r = [np.linalg.norm(limit_vector(c0, a, tols).A_plus - A1) / math.sqrt(1.0 - a) for a in near1]
        reports.append(ContinuityReport(c0, "alpha->1", tuple(near1), tuple(float(x) for x in r)))
    return reports


def check_jump(c0: float, alpha: float, tols: ToleranceConfig = DEFAULT_TOLERANCES) -> bool:
    """True iff A+ != A-, i.e. |A1+| < 1 - 1e-8."""
    if not c0 > 0:
        raise ValueError("c0 must be positive")
    return abs(limit_vector(c0, alpha, tols).A_plus[0]) < 1.0 - JUMP_TOL


@dataclass(frozen=True)
class ZinfBoundReport:
    alpha: float
    c0: float
    ic_index: int
    z_inf: float
    reference: float
    deviation: float
    bound: float

    @property
    def margin(self) -> float:
        return self.bound - self.deviation

    @property
    def ok(self) -> bool:
        return self.margin >= -1e-8


def zinf_reference(alpha: float, c0: float, ic_index: int) -> float:
    """|f(0) + f'(0) sqrt(pi)/sqrt(alpha + i beta)|^2 evaluated directly."""
    beta = math.sqrt(max(0.0, 1.0 - alpha * alpha))
    f0, fp0, _ = initial_conditions(c0, ic_index)
    return abs(f0 + fp0 * math.sqrt(math.pi) / np.sqrt(complex(alpha, beta))) ** 2


def check_zinf_c0_bound(alpha: float, c0: float, ic_index: int, tols: ToleranceConfig = DEFAULT_TOLERANCES) -> ZinfBoundReport:
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    params = ModelParams(c0, alpha)
    A = _limit_a_plus(params, tols, (ic_index,))[ic_index - 1]
    z = (A + 1.0) / 2.0 if ic_index == 1 else A + 1.0
    _, _, E0 = initial_conditions(c0, ic_index)
    ref = zinf_reference(alpha, c0, ic_index)
    k = math.sqrt(2.0 * E0) * c0 * math.pi / alpha
    bound = k * math.sqrt(ref) + (k / 2.0) ** 2
    return ZinfBoundReport(alpha, c0, ic_index, z, ref, abs(z - ref), bound)


__all__ = [
    "LimitVector",
    "SweepRow",
    "LimitCache",
    "DEFAULT_CACHE",
    "BoundRow",
    "ContinuityReport",
    "ZinfBoundReport",
    "angle_from_a1",
    "reflect",
    "integration_length",
    "limit_vector",
    "limit_vector_minus_integrated",
    "theta_of",
    "thread_count",
    "parallel_map",
    "sweep",
    "sweep_tasks",
    "solve_c0_for_angle",
    "find_self_intersection",
    "small_c0_bounds",
    "check_small_c0_bounds",
    "check_alpha_continuity",
    "check_jump",
    "zinf_reference",
    "check_zinf_c0_bound",
    "frame_asymptotics",
]
