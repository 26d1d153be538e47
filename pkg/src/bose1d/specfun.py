"""Real-argument special functions for the correlated-pair factor.

Only what the pair factor ``U(-nu/2, 1/2, x**2/2)`` needs is provided: the
Gamma function, Kummer's ``M`` and Tricomi's ``U`` at ``b = 1/2`` together
with its ``z``-derivative, for ``a`` in ``(-1/2, 0]`` and ``z >= 0``.

``U`` is evaluated from the Kummer-series connection formula at small ``z``.
For larger ``z`` that formula cancels catastrophically (``M`` grows like
``e**z`` while ``U`` grows like a power), so there we use the Laplace
integral of the Kummer-transformed function,

    U(a, 1/2, z) = z**(-a) * E[(1 + S/z)**(-a)],
    U'(a, 1/2, z) = -a * z**(-a-1) * E[(1 + S/z)**(-a-1)],

with ``S ~ Gamma(a + 1/2)``, computed by generalized Gauss-Laguerre
quadrature.  Both branches are accurate to a few ulp at the switch point.
"""
import math
from functools import lru_cache

import numpy as np
from scipy.special import roots_genlaguerre

from .errors import ConvergenceError, DomainError, PoleError

#: Below this ``z`` the connection formula is used, above it the quadrature.
Z_SWITCH = 4.0

_LAGUERRE_NODES = 40
_SQRT_PI = math.sqrt(math.pi)


def gamma_real(x):
    """Gamma function of a real argument.

    Raises :class:`PoleError` at ``0, -1, -2, ...``; values beyond the
    float range (``x > 171.6`` or ``|x| < 5.6e-309``) come back as signed
    infinities.
    """
    x = float(x)
    if x <= 0 and x == math.floor(x):
        raise PoleError(f"Gamma has a pole at x={x}")
    try:
        return math.gamma(x)
    except OverflowError:
        return math.copysign(math.inf, x)


def _rgamma(x):
    """1/Gamma(x), zero at the poles."""
    if x <= 0 and x == math.floor(x):
        return 0.0
    try:
        return 1.0 / math.gamma(x)
    except OverflowError:
        # 1/Gamma(x) = x + O(x**2) next to the pole at 0
        return x if abs(x) < 1.0 else 0.0


def kummer_m(a, b, z, max_terms=10000, rtol=1e-16):
    """Kummer's confluent hypergeometric function ``M(a, b, z)``.

    Direct Taylor series, stopped once every term is below ``rtol`` times
    the partial sum.  ``z`` may be an array; the result has its shape.
    """
    if b <= 0 and b == math.floor(b):
        raise PoleError(f"M(a, b, z) is undefined for b={b}")
    z = np.asarray(z, dtype=float)
    total = np.ones_like(z)
    term = np.ones_like(z)
    for n in range(max_terms):
        term = term * ((a + n) / ((b + n) * (n + 1))) * z
        total = total + term
        if np.all(np.abs(term) <= rtol * np.abs(total)):
            return total if total.ndim else float(total)
    raise ConvergenceError(
        f"Kummer series M({a}, {b}, z) did not converge in {max_terms} terms"
    )


@lru_cache(maxsize=64)
def _laguerre_rule(a):
    # probability weights of S ~ Gamma(a + 1/2)
    nodes, weights = roots_genlaguerre(_LAGUERRE_NODES, a - 0.5)
    return nodes, weights / weights.sum()


def _check(a, z):
    if not -0.5 <= a <= 0.0:
        raise DomainError(f"a={a} outside [-1/2, 0]")
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(np.isnan(z)):
        raise DomainError("u_half requires z >= 0")
    return z


def _u_series(a, z):
    c1 = _SQRT_PI * _rgamma(a + 0.5)
    c2 = 2.0 * _SQRT_PI * _rgamma(a)
    out = c1 * kummer_m(a, 0.5, z)
    if c2:
        out = out - c2 * np.sqrt(z) * kummer_m(a + 0.5, 1.5, z)
    return out


def _du_series(a, z):
    # -a * U(a+1, 3/2, z) from its own connection formula
    c1 = -2.0 * _SQRT_PI * _rgamma(a + 0.5)
    c2 = _SQRT_PI * _rgamma(a + 1.0)
    with np.errstate(divide="ignore"):
        u = c2 * kummer_m(a + 0.5, 0.5, z) / np.sqrt(z)
    if c1:
        u = u + c1 * kummer_m(a + 1.0, 1.5, z)
    return -a * u


def _u_quad(a, z, derivative):
    eps = a + 0.5
    if eps < 1e-12:
        # S ~ Gamma(eps) has mean eps and E[S**2] = O(eps): first order is exact to ~eps/z**2
        u = z ** (-a) * (1.0 - a * eps / z)
        du = -a * z ** (-a - 1.0) * (1.0 + (-a - 1.0) * eps / z) if derivative else None
        return u, du
    nodes, weights = _laguerre_rule(a)
    t = 1.0 + nodes / z[..., None]
    p = t ** (-a)
    u = z ** (-a) * (p @ weights)
    if not derivative:
        return u, None
    du = -a * z ** (-a - 1.0) * ((p / t) @ weights)
    return u, du


def u_half_with_dz(a, z):
    """Return ``(U(a, 1/2, z), dU/dz)`` sharing the work of both."""
    z = _check(a, z)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    if a == 0.0:
        u, du = np.ones_like(z), np.zeros_like(z)
    elif a == -0.5:
        u = np.sqrt(z)
        with np.errstate(divide="ignore"):
            du = 0.5 / u
    else:
        u = np.empty_like(z)
        du = np.empty_like(z)
        small = z <= Z_SWITCH
        if small.any():
            zs = z[small]
            u[small] = _u_series(a, zs)
            du[small] = _du_series(a, zs)
        big = ~small
        if big.any():
            u[big], du[big] = _u_quad(a, z[big], True)
    if scalar:
        return float(u[0]), float(du[0])
    return u, du


def u_half(a, z):
    """Tricomi's ``U(a, 1/2, z)`` for ``a`` in ``[-1/2, 0]``, ``z >= 0``.

    ``U(0, 1/2, z) = 1`` and ``U(-1/2, 1/2, z) = sqrt(z)`` are returned in
    closed form.  At ``z = 0`` the value is ``sqrt(pi)/Gamma(a + 1/2)``.
    """
    z = _check(a, z)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    if a == 0.0:
        u = np.ones_like(z)
    elif a == -0.5:
        u = np.sqrt(z)
    else:
        u = np.empty_like(z)
        small = z <= Z_SWITCH
        if small.any():
            u[small] = _u_series(a, z[small])
        if (~small).any():
            u[~small] = _u_quad(a, z[~small], False)[0]
    return float(u[0]) if scalar else u


def u_half_dz(a, z):
    """``dU(a, 1/2, z)/dz = -a U(a+1, 3/2, z)``; infinite at ``z = 0`` unless ``a = 0``."""
    return u_half_with_dz(a, z)[1]
