"""Parameterisation of the self-similar family and the Serret-Frenet data.

The family is indexed by the curvature scale ``c0 >= 0`` and the Gilbert
damping ``alpha`` in [0, 1]; the gyromagnetic weight ``beta`` is always
recomputed as ``sqrt(1 - alpha**2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ModelParams:
    """Curvature scale and damping of one member of the family.

    ``beta`` is derived and cannot be passed in.
    """

    c0: float
    alpha: float
    beta: float = field(init=False)

    def __post_init__(self):
        c0 = float(self.c0)
        alpha = float(self.alpha)
        if not math.isfinite(c0) or c0 < 0:
            raise ValueError(f"c0 must be finite and >= 0, got {self.c0!r}")
        if not math.isfinite(alpha) or not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        object.__setattr__(self, "c0", c0)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", math.sqrt(max(0.0, 1.0 - alpha * alpha)))

    @property
    def is_constant(self) -> bool:
        """True for c0 = 0, where the profile is the constant (1, 0, 0)."""
        return self.c0 == 0.0

    @property
    def s0(self) -> float:
        """Start of the asymptotic regime, 4 sqrt(8 + c0^2)."""
        return 4.0 * math.sqrt(8.0 + self.c0**2)


@dataclass(frozen=True)
class ToleranceConfig:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    max_step: float = 1.0
    frame_drift_tol: float = 1e-9

    def __post_init__(self):
        for name in ("abs_tol", "rel_tol", "max_step", "frame_drift_tol"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")
        if self.frame_drift_tol < self.abs_tol:
            raise ValueError("frame_drift_tol must be >= abs_tol")


DEFAULT_TOLERANCES = ToleranceConfig()


@dataclass(frozen=True)
class Frame:
    """Orthonormal trihedron: tangent ``m``, normal ``n``, binormal ``b``."""

    m: np.ndarray
    n: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        for name in ("m", "n", "b"):
            vec = np.array(getattr(self, name), dtype=float).reshape(3)
            vec.setflags(write=False)
            object.__setattr__(self, name, vec)

    @classmethod
    def from_state(cls, state) -> "Frame":
        state = np.asarray(state, dtype=float)
        return cls(state[0:3], state[3:6], state[6:9])

    def as_state(self) -> np.ndarray:
        return np.concatenate([self.m, self.n, self.b])

    def as_matrix(self) -> np.ndarray:
        """3x3 matrix with columns m, n, b."""
        return np.column_stack([self.m, self.n, self.b])

    def drift(self) -> float:
        """Largest violation of orthonormality and right-handedness."""
        return frame_drift(self.as_state())

    def check(self, tol: float) -> bool:
        return self.drift() <= tol


def frame_drift(state) -> float:
    """Max of | |m|^2-1 |, |m.n|, ..., |det[m n b] - 1| for a 9-vector state."""
    m, n, b = state[0:3], state[3:6], state[6:9]
    gram = (
        m @ m - 1.0,
        n @ n - 1.0,
        b @ b - 1.0,
        m @ n,
        m @ b,
        n @ b,
    )
    det = m[0] * (n[1] * b[2] - n[2] * b[1]) - m[1] * (n[0] * b[2] - n[2] * b[0]) + m[2] * (
        n[0] * b[1] - n[1] * b[0]
    )
    return float(max(max(abs(g) for g in gram), abs(det - 1.0)))


def curvature(params: ModelParams, s):
    """c(s) = c0 exp(-alpha s^2 / 4); accepts scalars or arrays."""
    return params.c0 * np.exp(-params.alpha * np.square(s) / 4.0)


def curvature_prime(params: ModelParams, s):
    return -0.5 * params.alpha * np.asarray(s) * curvature(params, s)


def torsion(params: ModelParams, s):
    """tau(s) = beta s / 2."""
    return params.beta * np.asarray(s, dtype=float) / 2.0


def initial_frame() -> Frame:
    return Frame(np.eye(3)[0], np.eye(3)[1], np.eye(3)[2])
