"""Composite Gauss-Legendre rules on explicit panels."""

from __future__ import annotations

import numpy as np
from scipy import optimize

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(20)


def panel_edges(a: float, b: float, width: float) -> np.ndarray:
    n = max(1, int(np.ceil(abs(b - a) / width)))
    return np.linspace(a, b, n + 1)


def gauss_panels(func, edges) -> float:
    """Sum of 20-point Gauss-Legendre rules over consecutive panels.

    ``func`` must accept a 1-D array of abscissae.
    """
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1], edges[1:]
    half = (hi - lo) / 2.0
    mid = (hi + lo) / 2.0
    x = (mid[:, None] + half[:, None] * _NODES[None, :]).ravel()
    vals = np.asarray(func(x)).reshape(len(lo), -1)
    return float(np.sum(half * (vals @ _WEIGHTS)))


def cumulative_gauss(func, edges) -> np.ndarray:
    """Running integrals from edges[0] to each edge."""
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1], edges[1:]
    half = (hi - lo) / 2.0
    mid = (hi + lo) / 2.0
    x = (mid[:, None] + half[:, None] * _NODES[None, :]).ravel()
    vals = np.asarray(func(x)).reshape(len(lo), -1)
    return np.concatenate([[0.0], np.cumsum(half * (vals @ _WEIGHTS))])


def split_at_sign_changes(g, edges, samples: int = 16) -> np.ndarray:
    """``edges`` with the zeros of ``g`` inserted, so |g|^p has no kink inside a panel.

    Zeros are bracketed on ``samples`` uniform points per panel and refined
    with Brent's method; ``g`` must accept scalars and 1-D arrays.
    """
    edges = np.asarray(edges, dtype=float)
    x = np.concatenate([np.linspace(a, b, samples, endpoint=False) for a, b in zip(edges[:-1], edges[1:])] + [edges[-1:]])
    v = np.asarray(g(x), dtype=float)
    idx = np.nonzero(v[:-1] * v[1:] < 0)[0]
    roots = [optimize.brentq(lambda y: float(g(np.array([y]))[0]), x[i], x[i + 1], xtol=1e-14) for i in idx]
    return np.unique(np.concatenate([edges, roots]))
