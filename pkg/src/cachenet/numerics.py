"""Special-function kernel shared by all closed-form coverage expressions.

Provides Gauss-Chebyshev quadrature rules, the restricted Gauss
hypergeometric family ``S^k(z) = 2F1(k - 2/a, k + m; k + 1 - 2/a; -z)``
that shows up in interference Laplace transforms over path-loss laws with
exponent ``a > 2``, the Gamma-product prefactors ``Delta``/``Lambda`` of its
large-argument growth, and the logarithmic helper ``F_y`` used by the
``a = 2`` branch.

All functions are pure and accept scalars or numpy arrays (broadcast
elementwise).  Out-of-domain arguments raise ``ValueError``; a series that
fails to converge raises ``ConvergenceError``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.special as sps

__all__ = [
    "ConvergenceError",
    "QuadratureRule",
    "gauss_chebyshev_nodes",
    "chebyshev_integrate",
    "hyp_S",
    "cap_delta",
    "cap_lambda",
    "F_y",
    "F_y_prime",
    "erfc",
    "erfcx",
]

# Series convergence policy: stop once a term falls below _RTOL of the
# partial sum; anything needing more than _MAX_TERMS terms is an error.
_RTOL = 1e-14
_MAX_TERMS = 100_000
# Above this argument the Pfaff-mapped series gets slow, so switch to the
# 1/z connection formula (fast and cancellation-free there).
_Z_SWITCH = 10.0


class ConvergenceError(ArithmeticError):
    """A series expansion did not converge within the term budget."""


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss-Chebyshev abscissae for approximating integrals over (-1, 1).

    ``nodes[k] = cos((2k+1) pi / (2 order))`` for k = 0..order-1, strictly
    decreasing.  ``weights`` holds sqrt(1 - nodes**2); the constant
    ``pi / order`` factor is folded in by callers (see
    :func:`chebyshev_integrate`).
    """

    order: int
    nodes: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=None)
def gauss_chebyshev_nodes(order: int) -> QuadratureRule:
    """Return the Chebyshev rule of the given order (>= 1)."""
    if not isinstance(order, (int, np.integer)) or order < 1:
        raise ValueError(f"quadrature order must be a positive integer, got {order!r}")
    k = np.arange(1, order + 1)
    nodes = np.cos((2 * k - 1) * np.pi / (2 * order))
    weights = np.sqrt(1.0 - nodes**2)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(int(order), nodes, weights)


def chebyshev_integrate(rule: QuadratureRule, values: np.ndarray) -> float:
    """Approximate integral of g over (-1, 1) from samples g(rule.nodes)."""
    return float(np.pi / rule.order * np.sum(np.asarray(values) * rule.weights))


def _series_2f1_one(b: float, c: float, w: np.ndarray) -> np.ndarray:
    """2F1(1, b; c; w) for 0 <= w < 1 by direct summation.

    With a unit first parameter the terms are (b)_n / (c)_n * w**n, all
    positive here (b, c > 0), so the running sum is cancellation-free.
    """
    total = np.ones_like(w)
    term = np.ones_like(w)
    for n in range(_MAX_TERMS):
        term = term * ((b + n) / (c + n)) * w
        total = total + term
        if np.all(term <= _RTOL * total):
            return total
    raise ConvergenceError(
        f"2F1(1,{b};{c};w) series exceeded {_MAX_TERMS} terms (max w={np.max(w):.6g})"
    )


def _series_2f1(a: float, b: float, c: float, x: np.ndarray) -> np.ndarray:
    """2F1(a, b; c; x) by direct Taylor summation, |x| small."""
    total = np.ones_like(x)
    term = np.ones_like(x)
    for n in range(_MAX_TERMS):
        term = term * ((a + n) * (b + n)) / ((c + n) * (n + 1)) * x
        total = total + term
        if np.all(np.abs(term) <= _RTOL * np.abs(total)):
            return total
    raise ConvergenceError(f"2F1({a},{b};{c};x) series exceeded {_MAX_TERMS} terms")


def hyp_S(k: int, alpha: float, Np: int, z) -> float | np.ndarray:
    """Evaluate S^k(z) = 2F1(k - 2/alpha, k + Np; k + 1 - 2/alpha; -z), z >= 0.

    Two regimes keep the evaluation fast and stable on the whole ray:

    * z <= 10: Pfaff map -z -> w = z/(1+z) in [0, 1).  Because the first
      transformed parameter is exactly 1, the series reduces to
      (1+z)**(-k-Np) * sum (k+Np)_n / (k+1-2/alpha)_n * w**n with positive
      terms only.
    * z > 10: the 1/z connection formula.  One of the two inner series
      collapses to 1 (its parameter is exactly 0), leaving
      G(c)G(b-a)/G(b) * z**(2/alpha - k) plus an O(z**(-k-Np)) correction
      series in -1/z.
    """
    if k not in (0, 1):
        raise ValueError(f"k must be 0 or 1, got {k!r}")
    if not alpha > 2:
        raise ValueError(f"hyp_S requires a path-loss exponent > 2, got {alpha}")
    if Np < 1 or int(Np) != Np:
        raise ValueError(f"fading order must be a positive integer, got {Np!r}")
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 0) or np.any(np.isnan(z_arr)):
        raise ValueError("hyp_S argument must be nonnegative")

    a = k - 2.0 / alpha
    b = float(k + Np)
    c = k + 1.0 - 2.0 / alpha
    if c <= 0 and c == int(c):
        raise ValueError(f"denominator parameter c={c} is a non-positive integer")

    out = np.empty_like(z_arr)
    small = z_arr <= _Z_SWITCH
    if np.any(small):
        zs = z_arr[small]
        w = zs / (1.0 + zs)
        out[small] = (1.0 + zs) ** (-b) * _series_2f1_one(b, c, w)
    if np.any(~small):
        zl = z_arr[~small]
        g = math.gamma
        # First connection term: its inner series has parameter a-c+1 = 0.
        lead = g(c) * g(b - a) / g(b) * zl ** (-a)
        coef = g(c) * g(a - b) / (g(a) * g(c - b))
        corr = coef * zl ** (-b) * _series_2f1(b, b - c + 1.0, b - a + 1.0, -1.0 / zl)
        out[~small] = lead + corr
    return float(out) if np.isscalar(z) or np.ndim(z) == 0 else out


def cap_delta(alpha: float, Np: int, z) -> float | np.ndarray:
    """Gamma-product power law G(1-2/a) G(Np+2/a) / G(Np) * z**(2/a), z >= 0.

    This is the large-argument growth rate of S^0 and the interference
    functional of a caching-independent field (integration from zero
    distance instead of the serving distance).
    """
    if not alpha > 2:
        raise ValueError(f"cap_delta requires a path-loss exponent > 2, got {alpha}")
    if Np < 1 or int(Np) != Np:
        raise ValueError(f"fading order must be a positive integer, got {Np!r}")
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 0):
        raise ValueError("cap_delta argument must be nonnegative")
    coef = math.gamma(1.0 - 2.0 / alpha) * math.gamma(Np + 2.0 / alpha) / math.gamma(Np)
    out = coef * z_arr ** (2.0 / alpha)
    return float(out) if np.ndim(z) == 0 else out


def cap_lambda(alpha: float, Np: int, z) -> float | np.ndarray:
    """Derivative of :func:`cap_delta` in z: (2/a) * coef * z**(2/a - 1), z > 0."""
    if not alpha > 2:
        raise ValueError(f"cap_lambda requires a path-loss exponent > 2, got {alpha}")
    if Np < 1 or int(Np) != Np:
        raise ValueError(f"fading order must be a positive integer, got {Np!r}")
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr <= 0):
        raise ValueError("cap_lambda argument must be positive (exponent 2/a - 1 < 0)")
    coef = (
        (2.0 / alpha)
        * math.gamma(1.0 - 2.0 / alpha)
        * math.gamma(Np + 2.0 / alpha)
        / math.gamma(Np)
    )
    out = coef * z_arr ** (2.0 / alpha - 1.0)
    return float(out) if np.ndim(z) == 0 else out


def F_y(y, Np: int) -> float | np.ndarray:
    """Closed antiderivative kernel of the a = 2 interference integral.

    F_y(y) = Np*ln(1 + 1/y) - 1/(y (1+y)**(Np-1))
             - sum_{m=1}^{Np-1} Np / ((1+y)**(Np-m) (Np-m)),   y > 0.

    Equals -integral_y^inf (1+t)**(-Np) / t**2 dt, so it is negative,
    increasing, and vanishes as y -> inf.  Evaluated through logs so that
    extreme arguments neither overflow nor underflow.
    """
    if Np < 1 or int(Np) != Np:
        raise ValueError(f"fading order must be a positive integer, got {Np!r}")
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr <= 0):
        raise ValueError("F_y argument must be positive")
    log_y = np.log(y_arr)
    log_1p = np.log1p(y_arr)
    out = Np * np.log1p(1.0 / y_arr) - np.exp(-log_y - (Np - 1) * log_1p)
    for m in range(1, Np):
        out = out - (Np / (Np - m)) * np.exp(-(Np - m) * log_1p)
    return float(out) if np.ndim(y) == 0 else out


def F_y_prime(y, Np: int) -> float | np.ndarray:
    """d F_y / dy, which collapses to (1+y)**(-Np) / y**2."""
    if Np < 1 or int(Np) != Np:
        raise ValueError(f"fading order must be a positive integer, got {Np!r}")
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr <= 0):
        raise ValueError("F_y_prime argument must be positive")
    out = np.exp(-Np * np.log1p(y_arr) - 2.0 * np.log(y_arr))
    return float(out) if np.ndim(y) == 0 else out


def erfc(x) -> float | np.ndarray:
    """Complementary error function."""
    out = sps.erfc(x)
    return float(out) if np.ndim(x) == 0 else out


def erfcx(x) -> float | np.ndarray:
    """Scaled complementary error function exp(x**2) * erfc(x).

    Needed wherever erfc underflows while the paired Gaussian factor
    overflows (closed-form coverage with near-negligible noise).
    """
    out = sps.erfcx(x)
    return float(out) if np.ndim(x) == 0 else out
