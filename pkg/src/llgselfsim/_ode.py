"""Stepping driver around scipy's DOP853 with per-step invariant monitors."""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np
from scipy.integrate import DOP853, OdeSolution

from .errors import StepSizeUnderflow
from .model import ToleranceConfig


class Trajectory:
    """Dense solution of one integration run, evaluable anywhere inside it."""

    def __init__(self, ts, solution: OdeSolution, halted: bool = False):
        self.halted = halted
        self.ts = np.asarray(ts)
        self.solution = solution
        self.s_lo = float(min(self.ts[0], self.ts[-1]))
        self.s_hi = float(max(self.ts[0], self.ts[-1]))

    def __call__(self, s):
        return self.solution(s)

    @property
    def n_steps(self) -> int:
        return len(self.ts) - 1


def integrate(
    fun: Callable,
    s_start: float,
    y0,
    s_end: float,
    tol: ToleranceConfig,
    atol=None,
    monitor: Optional[Callable[[float, np.ndarray], None]] = None,
) -> Trajectory:
    """Integrate ``y' = fun(s, y)`` from ``s_start`` to ``s_end``.

    ``monitor(s, y)`` runs after every accepted step; it may raise to abort,
    or return True to stop cleanly at that step (``Trajectory.halted``).
    ``atol`` overrides ``tol.abs_tol`` (scalar or per component).
    """
    y0 = np.asarray(y0, dtype=float)
    if s_end == s_start:
        raise ValueError("empty integration interval")
    solver = DOP853(
        fun,
        s_start,
        y0,
        s_end,
        rtol=tol.rel_tol,
        atol=tol.abs_tol if atol is None else atol,
        max_step=tol.max_step,
    )
    ts = [s_start]
    interpolants = []
    if monitor is not None and monitor(s_start, y0):
        raise ValueError("monitor rejected the initial state")
    halted = False
    while solver.status == "running":
        # An exactly zero error estimate gives 0/0 inside scipy; the step is
        # then rejected and retried smaller, which is harmless.
        with np.errstate(invalid="ignore"):
            message = solver.step()
        if solver.status == "failed":
            raise StepSizeUnderflow(f"at s={solver.t:.6g}: {message}")
        ts.append(solver.t)
        interpolants.append(solver.dense_output())
        if monitor is not None and monitor(solver.t, solver.y):
            halted = True
            break
    return Trajectory(ts, OdeSolution(ts, interpolants), halted)
