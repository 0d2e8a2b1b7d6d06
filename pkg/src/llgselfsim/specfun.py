"""Special functions used by the closed-form limit vectors.

``erf_nn`` is the non-normalised error function

    Erf(s) = int_0^s exp(-sigma^2 / 4) dsigma = sqrt(pi) * erf(s / 2),

and ``erfc_nn`` its complement with total mass sqrt(pi).  ``complex_gamma``
is a Lanczos approximation (g = 7, nine coefficients) with reflection for
Re z < 1/2.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
from scipy import special

from .errors import PoleError

SQRT_PI = math.sqrt(math.pi)

# Above this point the complement is taken from the erfc kernel directly.
LARGE_S = 6.0


def erf_nn(s):
    """Non-normalised error function, odd and increasing to sqrt(pi)."""
    return SQRT_PI * special.erf(np.asarray(s, dtype=float) / 2.0)


def erfc_nn(s):
    """int_s^inf exp(-sigma^2/4) dsigma without cancellation for large s."""
    s = np.asarray(s, dtype=float)
    # erfc is evaluated from its own continued-fraction/rational kernel, so the
    # large-s branch never forms sqrt(pi) - Erf(s).
    out = np.where(
        s > LARGE_S,
        SQRT_PI * special.erfc(s / 2.0),
        SQRT_PI - erf_nn(s),
    )
    return out if out.ndim else float(out)


def erfc_nn_series(s: float, terms: int = 6) -> float:
    """Asymptotic series e^{-s^2/4} (2/s - 4/s^3 + 24/s^5 - ...) for large s.

    Term k is (-1)^k 2^{k+1} (2k-1)!! / s^{2k+1}; truncated at ``terms``.
    """
    total = 0.0
    coef = 2.0
    for k in range(terms):
        total += coef / s ** (2 * k + 1)
        coef *= -2.0 * (2 * k + 1)
    return math.exp(-s * s / 4.0) * total


_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def complex_gamma(z) -> complex:
    """Gamma(z) for complex z, relative accuracy ~1e-13 off the poles."""
    z = complex(z)
    if z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real):
        raise PoleError(f"Gamma has a pole at {z.real:g}")
    if z.real < 0.5:
        return math.pi / (cmath.sin(math.pi * z) * complex_gamma(1.0 - z))
    z -= 1.0
    acc = _LANCZOS_COEF[0]
    for k in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[k] / (z + k)
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * cmath.exp(-t) * acc


def _log_sin_pi(z: complex) -> complex:
    # log sin(pi z) written to stay finite for large |Im z|.
    if z.imag >= 0.0:
        return -1j * math.pi * z + cmath.log((cmath.exp(2j * math.pi * z) - 1.0) / 2j)
    return 1j * math.pi * z + cmath.log((1.0 - cmath.exp(-2j * math.pi * z)) / 2j)


def complex_loggamma(z) -> complex:
    """A logarithm of Gamma(z), i.e. exp(complex_loggamma(z)) == Gamma(z).

    Same Lanczos rule as ``complex_gamma`` but assembled in log form, so it
    stays finite where Gamma itself under- or overflows (large |Im z|).  The
    branch of the imaginary part is not the principal log-gamma branch.
    """
    z = complex(z)
    if z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real):
        raise PoleError(f"Gamma has a pole at {z.real:g}")
    if z.real < 0.5:
        return math.log(math.pi) - _log_sin_pi(z) - complex_loggamma(1.0 - z)
    z -= 1.0
    acc = _LANCZOS_COEF[0]
    for k in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[k] / (z + k)
    t = z + _LANCZOS_G + 0.5
    return 0.5 * math.log(2.0 * math.pi) + (z + 0.5) * cmath.log(t) - t + cmath.log(acc)
