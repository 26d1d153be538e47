"""Contact-interaction matching: ``nu(g)`` for the CPWF and ``k(g, L)`` for
the cosine Jastrow factor.

The Tonks-Girardeau limit is written ``g = math.inf`` (:data:`TONKS`); it maps
exactly to ``nu = 1`` and ``k = pi/L``.
"""
import math
import sys

from scipy.optimize import brentq

from .errors import DomainError
from .specfun import gamma_real

TONKS = math.inf

_NU_MAX = 1.0 - 1e-12
_RTOL = 4 * sys.float_info.epsilon


def is_tonks(g):
    return g == math.inf


def g_from_nu(nu):
    """Coupling ``g = -2**1.5 Gamma((1-nu)/2) / Gamma(-nu/2)`` for ``nu`` in [0, 1)."""
    if not 0.0 <= nu < 1.0:
        raise DomainError(f"nu={nu} outside [0, 1)")
    if nu == 0.0:
        return 0.0
    return -2.0 ** 1.5 * gamma_real(0.5 * (1.0 - nu)) / gamma_real(-0.5 * nu)


def nu_from_g(g):
    """Invert :func:`g_from_nu`; ``g = inf`` returns exactly 1."""
    if math.isnan(g) or g < 0:
        raise DomainError(f"g={g} must be >= 0")
    if is_tonks(g):
        return 1.0
    if g == 0:
        return 0.0
    if g >= g_from_nu(_NU_MAX):
        return _NU_MAX
    return brentq(lambda nu: g_from_nu(nu) - g, 0.0, _NU_MAX,
                  xtol=1e-300, rtol=_RTOL, maxiter=500)


def k_from_g(g, L):
    """Wave number of the cosine pair factor ``cos(k(|x| - L/2))``.

    Solves ``k tan(kL/2) = g`` on ``[0, pi/L)``.  The factor's log-slope at
    contact is then ``g`` rather than the ``g/2`` of the CPWF pair factor;
    the cosine form is variational in ``L`` and used as such.
    """
    if L <= 0 or math.isnan(L):
        raise DomainError(f"L={L} must be > 0")
    if math.isnan(g) or g < 0:
        raise DomainError(f"g={g} must be >= 0")
    kmax = math.pi / L
    if is_tonks(g):
        return kmax
    if g == 0:
        return 0.0
    hi = kmax * (1.0 - 1e-15)
    if hi * math.tan(0.5 * hi * L) <= g:
        return hi
    return brentq(lambda k: k * math.tan(0.5 * k * L) - g, 0.0, hi,
                  xtol=1e-300, rtol=_RTOL, maxiter=500)
