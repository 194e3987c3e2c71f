"""Special functions used by the verification layer.

Only what the package needs: a real log-Gamma via the Lanczos approximation
(g = 7, 9 coefficients, relative error well below 1e-12 on the real line away
from the poles) and the sphere surface area derived from it.
"""

from __future__ import annotations

import math

from .errors import InputError

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


def lgamma(x: float) -> float:
    """log |Gamma(x)| for real x, poles at 0, -1, -2, ... raise InputError."""
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        raise InputError(f"lgamma argument must be finite, got {x}")
    if x <= 0.0 and x == math.floor(x):
        raise InputError(f"lgamma pole at non-positive integer {x}")
    if x < 0.5:
        # reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return math.log(abs(math.pi / math.sin(math.pi * x))) - lgamma(1.0 - x)
    z = x - 1.0
    acc = _LANCZOS_COEF[0]
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return 0.5 * math.log(2.0 * math.pi) + (z + 0.5) * math.log(t) - t + math.log(acc)


def gamma_sign(x: float) -> int:
    """Sign of Gamma(x) for real non-pole x."""
    if x > 0:
        return 1
    # between consecutive negative integers the sign alternates
    k = math.floor(x)
    return 1 if (int(k) % 2 == 0) else -1


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere S^(d-1) in R^d."""
    if d < 1:
        raise InputError(f"sphere dimension must be >= 1, got {d}")
    return 2.0 * math.pi ** (d / 2.0) / math.exp(lgamma(d / 2.0))
