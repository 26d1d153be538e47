"""Bijl-Jastrow trial functions: log-amplitude, drift and local energy.

Three families share one product form
``psi = prod_i phi(x_i) * prod_{i<j} f(|x_i - x_j|)``:

* :class:`CpwfHarmonic` -- Gaussian ``exp(-beta x**2/2)`` times the
  correlated pair factor ``f(r) = U(-nu/2, 1/2, r**2/2)``;
* :class:`CosineJastrow` -- the same Gaussian times ``cos(k(r - L/2))`` for
  ``r < L`` and a constant beyond;
* :class:`CpwfLattice` -- a sum of Gaussians ``sum_j f_j exp(-beta (x-x_j)**2)``
  centred on the wells, times the correlated pair factor.

All evaluations take positions of shape ``(..., N)``.  The contact
interaction never appears in the local energy: it is carried by the cusp
``2 f'(0+) = g f(0)`` of the pair factor.
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from . import interaction
from .errors import CoincidenceError, DomainError, IncompatibleError, OutOfBoxError
from .model import well_centers
from .specfun import gamma_real, u_half_with_dz

#: Cutoff length of the cosine factor when none is given.
DEFAULT_CUTOFF = 4.0

#: Coincidence threshold for drift and local energy.
COINCIDENCE = 1e-12

_TABLE_STEP = 1.0 / 512.0
_TABLE_RMAX = 32.0


class Family(str, Enum):
    CPWF = "cpwf"
    COSINE = "cosine"
    CPWF_LATTICE = "cpwf-lattice"


# -- pair factors ---------------------------------------------------------

class _CpwfPair:
    """``f(r) = U(a, 1/2, r**2/2)`` with ``a = -nu/2``.

    Returns ``(log f, p1, p2)`` with ``p1 = (log f)'`` and
    ``p2 = (log f)'' = 2a + r p1 - p1**2``; the last identity is the
    confluent ODE, so local energies stay consistent with it exactly.
    For ``0 < nu < 1`` values for ``r <= 32`` come from a quintic Hermite
    table of exact values and derivatives (spacing 1/512).
    """

    def __init__(self, nu, tabulate=True):
        if not 0.0 <= nu <= 1.0:
            raise DomainError(f"nu={nu} outside [0, 1]")
        self.nu = nu
        self.a = -0.5 * nu
        self.exact = nu in (0.0, 1.0)
        self._table = None
        self._r_direct = 0.0
        if not self.exact:
            a = self.a
            self._log_f0 = math.log(math.sqrt(math.pi) / gamma_real(a + 0.5))
            self._p1_0 = -math.sqrt(2.0) * gamma_real(a + 0.5) / gamma_real(a)
            # near nu = 1, log f bends on the scale 1/p1(0); once that
            # approaches the table step, contact distances are evaluated directly
            if self._p1_0 * _TABLE_STEP > 1.0 / 32.0:
                self._r_direct = 64.0 * _TABLE_STEP
            if tabulate:
                r = np.arange(0.0, _TABLE_RMAX + 0.5 * _TABLE_STEP, _TABLE_STEP)
                lf, p1, p2 = self._direct(r)
                self._table = (lf, p1, p2, p1 + r * p2 - 2.0 * p1 * p2)

    def _direct(self, r):
        r = np.asarray(r, dtype=float)
        zero = r == 0.0
        rs = np.where(zero, 1.0, r)
        u, du = u_half_with_dz(self.a, 0.5 * rs * rs)
        lf = np.log(u)
        p1 = rs * du / u
        lf = np.where(zero, self._log_f0, lf)
        p1 = np.where(zero, self._p1_0, p1)
        p2 = 2.0 * self.a + r * p1 - p1 * p1
        return lf, p1, p2

    def _hermite(self, r, with_derivative):
        # quintic Hermite on (log f, p1, p2) and, for the derivative, on
        # (p1, p2, p3) with p3 = p2' = p1 + r p2 - 2 p1 p2 from the ODE
        lf_t, p1_t, p2_t, p3_t = self._table
        h = _TABLE_STEP
        s = r * (1.0 / h)
        k = np.minimum(s.astype(np.intp), len(lf_t) - 2)
        t = s - k
        t2 = t * t
        t3 = t2 * t
        b3 = t3 * (10.0 + t * (-15.0 + 6.0 * t))
        b0 = 1.0 - b3
        b1 = (t + t3 * (-6.0 + t * (8.0 - 3.0 * t))) * h
        b2 = 0.5 * t2 * (1.0 + t * (-3.0 + t * (3.0 - t))) * h * h
        b4 = t3 * (-4.0 + t * (7.0 - 3.0 * t)) * h
        b5 = 0.5 * t3 * (1.0 + t * (-2.0 + t)) * h * h
        k1 = k + 1
        lf = (b0 * lf_t[k] + b1 * p1_t[k] + b2 * p2_t[k]
              + b3 * lf_t[k1] + b4 * p1_t[k1] + b5 * p2_t[k1])
        if not with_derivative:
            return lf, None
        p1 = (b0 * p1_t[k] + b1 * p2_t[k] + b2 * p3_t[k]
              + b3 * p1_t[k1] + b4 * p2_t[k1] + b5 * p3_t[k1])
        return lf, p1

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        if self.nu == 0.0:
            z = np.zeros_like(r)
            return z, z.copy(), z.copy()
        if self.nu == 1.0:
            with np.errstate(divide="ignore"):
                inv = 1.0 / r
                return np.log(r) - 0.5 * math.log(2.0), inv, -inv * inv
        if self._table is None:
            return self._direct(r)
        lf, p1 = self._blend(r, True)
        p2 = 2.0 * self.a + r * p1 - p1 * p1
        return lf, p1, p2

    def _blend(self, r, with_derivative):
        """Table inside ``[r_direct, 32]``, direct evaluation outside."""
        off = (r > _TABLE_RMAX) | (r < self._r_direct)
        if not off.any():
            return self._hermite(r, with_derivative)
        lf = np.empty_like(r)
        p1 = np.empty_like(r) if with_derivative else None
        on = ~off
        lf[on], p = self._hermite(r[on], with_derivative)
        d = self._direct(r[off])
        lf[off] = d[0]
        if with_derivative:
            p1[on] = p
            p1[off] = d[1]
        return lf, p1

    def log_value(self, r):
        r = np.asarray(r, dtype=float)
        if self.nu == 0.0:
            return np.zeros_like(r)
        if self.nu == 1.0:
            with np.errstate(divide="ignore"):
                return np.log(r) - 0.5 * math.log(2.0)
        if self._table is None:
            return self._direct(r)[0]
        return self._blend(r, False)[0]


@lru_cache(maxsize=32)
def cpwf_pair(nu, tabulate=True):
    return _CpwfPair(nu, tabulate)


class _CosinePair:
    """``cos(k(r - L/2))`` for ``r < L``, held at ``cos(kL/2)`` beyond."""

    def __init__(self, k, L):
        self.k = k
        self.L = L
        self._log_tail = math.log(math.cos(0.5 * k * L)) if k * L < math.pi else -math.inf

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        short = r < self.L
        theta = self.k * (np.minimum(r, self.L) - 0.5 * self.L)
        tan = np.tan(theta)
        with np.errstate(divide="ignore"):
            lf = np.where(short, np.log(np.cos(theta)), self._log_tail)
        p1 = np.where(short, -self.k * tan, 0.0)
        p2 = np.where(short, -self.k * self.k * (1.0 + tan * tan), 0.0)
        return lf, p1, p2

    def log_value(self, r):
        return self.evaluate(r)[0]


@lru_cache(maxsize=32)
def cosine_pair(k, L):
    return _CosinePair(k, L)


# -- trial specifications ---------------------------------------------------

def _gaussian_spp(beta, x):
    return -0.5 * beta * x * x, -beta * x, np.full_like(x, -beta)


@dataclass(frozen=True)
class CpwfHarmonic:
    nu: float
    beta: float = 1.0
    family = Family.CPWF

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"beta={self.beta} must be > 0")
        if not 0.0 <= self.nu <= 1.0:
            raise DomainError(f"nu={self.nu} outside [0, 1]")

    def spp(self, x):
        return _gaussian_spp(self.beta, x)

    def spp_log(self, x):
        return -0.5 * self.beta * x * x

    @property
    def pair(self):
        return cpwf_pair(self.nu)


@dataclass(frozen=True)
class CosineJastrow:
    k: float
    L: float
    beta: float = 1.0
    family = Family.COSINE

    def __post_init__(self):
        if not (self.beta > 0 and self.L > 0):
            raise DomainError("beta and L must be > 0")
        if not 0.0 <= self.k * self.L <= math.pi * (1 + 1e-15):
            raise DomainError(f"k={self.k} outside [0, pi/L]")

    def spp(self, x):
        return _gaussian_spp(self.beta, x)

    def spp_log(self, x):
        return -0.5 * self.beta * x * x

    @property
    def pair(self):
        return cosine_pair(self.k, self.L)


@dataclass(frozen=True)
class CpwfLattice:
    centers: tuple
    nu: float
    beta: float
    weights: tuple = field(default=None)
    family = Family.CPWF_LATTICE

    def __post_init__(self):
        object.__setattr__(self, "centers", tuple(float(c) for c in self.centers))
        w = self.weights
        w = (1.0,) * len(self.centers) if w is None else tuple(float(v) for v in w)
        if len(w) != len(self.centers) or not self.centers:
            raise DomainError("need one positive weight per well centre")
        if min(w) <= 0 or not self.beta > 0:
            raise DomainError("weights and beta must be > 0")
        object.__setattr__(self, "weights", w)

    def _exponents(self, x):
        c = np.asarray(self.centers)
        d = x[..., None] - c
        return d, np.log(np.asarray(self.weights)) - self.beta * d * d

    def spp(self, x):
        d, e = self._exponents(x)
        m = e.max(-1, keepdims=True)
        w = np.exp(e - m)
        tot = w.sum(-1)
        w /= tot[..., None]
        logphi = m[..., 0] + np.log(tot)
        d1 = -2.0 * self.beta * (w * d).sum(-1)
        curv = (w * (4.0 * self.beta ** 2 * d * d)).sum(-1) - 2.0 * self.beta
        return logphi, d1, curv - d1 * d1

    def spp_log(self, x):
        _, e = self._exponents(x)
        m = e.max(-1, keepdims=True)
        return m[..., 0] + np.log(np.exp(e - m).sum(-1))

    @property
    def pair(self):
        return cpwf_pair(self.nu)


# -- evaluation -------------------------------------------------------------

@lru_cache(maxsize=128)
def pair_indices(n):
    i, j = np.triu_indices(n, 1)
    return i, j


def evaluate(trial, x, trap=None):
    """Batched ``(log psi, drift, local energy)`` for positions ``x`` of shape (M, N).

    The local energy is ``None`` when no trap is given.  No validity checks
    are made here; the samplers keep configurations inside the box and
    free of exact coincidences.
    """
    m, n = x.shape
    logpsi_i, drift, lap = trial.spp(x)
    logpsi = logpsi_i.sum(-1)
    if n > 1:
        i, j = pair_indices(n)
        dx = x[:, i] - x[:, j]
        lf, p1, p2 = trial.pair.evaluate(np.abs(dx))
        logpsi = logpsi + lf.sum(-1)
        sp1 = np.where(dx < 0, -p1, p1)
        grid = np.zeros((m, n, n))
        grid[:, i, j] = sp1
        grid[:, j, i] = -sp1
        drift = drift + grid.sum(2)
        grid[:, i, j] = p2
        grid[:, j, i] = p2
        lap = lap + grid.sum(2)
    if trap is None:
        return logpsi, drift, None
    kinetic = -0.5 * (lap + drift * drift).sum(-1)
    return logpsi, drift, trap.potential(x).sum(-1) + kinetic


def _as_config(config, trap=None):
    x = np.asarray(config, dtype=float)
    if x.ndim not in (1, 2) or x.shape[-1] < 1:
        raise DomainError("a configuration is a non-empty sequence of positions")
    if trap is not None and not np.all(trap.inside(x)):
        raise OutOfBoxError(f"configuration leaves the box |x| <= {trap.half_width}")
    return x


def _check_separated(x):
    n = x.shape[-1]
    if n > 1:
        i, j = pair_indices(n)
        if np.any(np.abs(x[..., i] - x[..., j]) < COINCIDENCE):
            raise CoincidenceError("coincident particles: |x_i - x_j| < 1e-12")


def log_psi(trial, config, trap=None):
    """``log |psi_T|`` of one configuration (or an (M, N) batch)."""
    x = _as_config(config, trap)
    out = evaluate(trial, np.atleast_2d(x))[0]
    return float(out[0]) if x.ndim == 1 else out


def drift(trial, config):
    """Gradient of ``log psi_T`` with respect to each position."""
    x = _as_config(config)
    _check_separated(x)
    out = evaluate(trial, np.atleast_2d(x))[1]
    return out[0] if x.ndim == 1 else out


def local_energy(trial, config, trap):
    """``(H psi_T)/psi_T`` away from coincidences."""
    x = _as_config(config, trap)
    _check_separated(x)
    out = evaluate(trial, np.atleast_2d(x), trap)[2]
    return float(out[0]) if x.ndim == 1 else out


def separate_coincident(x, eps=COINCIDENCE):
    """Nudge exactly coincident particles apart by ``eps`` (in place)."""
    n = x.shape[-1]
    if n < 2:
        return x
    i, j = pair_indices(n)
    hit = x[..., i] == x[..., j]
    while hit.any():
        rows, cols = np.nonzero(np.atleast_2d(hit))
        xs = np.atleast_2d(x)
        xs[rows, j[cols]] += eps
        hit = x[..., i] == x[..., j]
    return x


def build_trial(family, trap, g, beta=None, L=None):
    """Parameter-free trial function for ``trap`` at coupling ``g``.

    Defaults: ``beta = 1`` in the harmonic trap; ``beta = sqrt(V0)``, unit
    weights and the potential minima as centres in a lattice; ``L`` =
    :data:`DEFAULT_CUTOFF` for the cosine factor.
    """
    family = Family(family)
    lattice = trap.kind == "lattice"
    if lattice != (family is Family.CPWF_LATTICE):
        raise IncompatibleError(f"family {family.value!r} does not fit a {trap.kind} trap")
    if family is Family.CPWF:
        return CpwfHarmonic(nu=interaction.nu_from_g(g), beta=1.0 if beta is None else beta)
    if family is Family.COSINE:
        L = DEFAULT_CUTOFF if L is None else L
        return CosineJastrow(k=interaction.k_from_g(g, L), L=L,
                             beta=1.0 if beta is None else beta)
    return CpwfLattice(centers=tuple(well_centers(trap)), nu=interaction.nu_from_g(g),
                       beta=math.sqrt(trap.v0) if beta is None else beta)
