"""Deterministic reference values for checking the samplers.

* the exact two-body energy in the harmonic trap, ``nu(g) + 1``;
* the single-particle ground energy from a finite-difference
  Hamiltonian, found by Sturm-sequence bisection and Richardson-refined;
* the trial-function energy ``<psi|H|psi>/<psi|psi>`` for two or three
  particles by midpoint quadrature on a product grid.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError
from .interaction import nu_from_g
from .trial import evaluate

FD_TOL = 1e-4
QUAD_TOL = 1e-3


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise DomainError("grid needs x_min < x_max")
        if self.n_points < 100:
            raise DomainError("grid needs at least 100 points")

    @property
    def spacing(self):
        return (self.x_max - self.x_min) / self.n_points


def busch_energy_two_body(g):
    """Ground energy of two atoms in the harmonic trap: ``nu + 1/2`` relative
    motion plus ``1/2`` for the centre of mass."""
    return nu_from_g(g) + 1.0


def _count_below(diag, off2, lam):
    """Number of eigenvalues below ``lam`` (negative pivots of ``T - lam``)."""
    count = 0
    q = 1.0
    sub = 0.0
    for d in diag:
        q = d - lam - sub / q
        if q == 0.0:
            q = -1e-300
        if q < 0.0:
            count += 1
        sub = off2
    return count


def lowest_eigenvalue(diag, off):
    """Smallest eigenvalue of a symmetric tridiagonal matrix with constant
    off-diagonal ``off``, by bisection to machine precision."""
    diag = [float(d) for d in diag]
    r = 2.0 * abs(off)
    lo, hi = min(diag) - r, max(diag) + r
    off2 = off * off
    while hi - lo > 4.0 * np.finfo(float).eps * max(abs(lo), abs(hi), 1.0):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if _count_below(diag, off2, mid) >= 1:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _domain(trap, grid):
    lo, hi = grid.x_min, grid.x_max
    hw = getattr(trap, "half_width", None)
    if hw is not None:
        if lo > -hw or hi < hw:
            raise DomainError(f"grid [{lo}, {hi}] does not cover the box |x| <= {hw}")
        lo, hi = -hw, hw
    return lo, hi


def _fd_energy(trap, lo, hi, n):
    h = (hi - lo) / (n + 1)
    x = lo + h * np.arange(1, n + 1)
    diag = 1.0 / (h * h) + trap.potential(x)
    return lowest_eigenvalue(diag, -0.5 / (h * h))


def default_fd_grid(trap):
    hw = getattr(trap, "half_width", None)
    if hw is not None:
        return GridSpec(-hw, hw, 2000)
    return GridSpec(-8.0, 8.0, 4000)


def fd_ground_energy(trap, grid=None, tol=FD_TOL):
    """Lowest single-particle energy of ``-1/2 d^2/dx^2 + V`` with Dirichlet walls.

    ``grid.n_points`` interior points, then a second solve at half the
    spacing; the Richardson combination ``(4 E_fine - E_coarse)/3`` is
    returned.  :class:`ConvergenceError` if it differs from the fine-grid
    value by more than ``tol``.
    """
    grid = grid or default_fd_grid(trap)
    lo, hi = _domain(trap, grid)
    n = grid.n_points
    coarse = _fd_energy(trap, lo, hi, n)
    fine = _fd_energy(trap, lo, hi, 2 * n + 1)
    refined = (4.0 * fine - coarse) / 3.0
    if abs(refined - fine) > tol:
        raise ConvergenceError(
            f"finite-difference energies {coarse} and {fine} disagree beyond {tol}")
    return refined


def _quad_once(trial, trap, n, lo, h, m, chunk=1 << 18):
    offsets = (np.arange(n) + 1.0) / (n + 1.0)
    axis = np.arange(m, dtype=float)
    total = np.prod([m] * n)
    num = den = 0.0
    logs = []
    # log psi peaks well inside the grid; a first pass finds a common scale
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        cells = np.stack(np.unravel_index(idx, (m,) * n), axis=1)
        x = lo + (axis[cells] + offsets) * h
        lp, _, el = evaluate(trial, x, trap)
        logs.append((lp, el))
    top = max(float(lp.max()) for lp, _ in logs)
    for lp, el in logs:
        w = np.exp(2.0 * (lp - top))
        num += float(np.dot(w, el))
        den += float(w.sum())
    return num / den


def quad_energy_cpwf(trial, trap, n, grid=None, tol=QUAD_TOL):
    """``<psi_T|H|psi_T> / <psi_T|psi_T>`` for ``n`` in {2, 3} harmonic particles.

    Midpoint rule on an ``n``-dimensional product grid.  Each axis is
    offset by a different fraction of the spacing so no evaluation point
    lies on a coincidence line.  The grid is then refined by a factor
    3/2 and :class:`ConvergenceError` raised if the two values differ by
    more than ``tol``; the finer value is returned.
    """
    if n not in (2, 3):
        raise DomainError("quadrature is provided for N = 2 or 3 only")
    if trap.kind != "harmonic":
        raise DomainError("quadrature reference needs the harmonic trap")
    grid = grid or GridSpec(-6.0, 6.0, 200 if n == 2 else 100)
    lo = grid.x_min
    m = grid.n_points
    coarse = _quad_once(trial, trap, n, lo, grid.spacing, m)
    m2 = (3 * m) // 2
    fine = _quad_once(trial, trap, n, lo, (grid.x_max - lo) / m2, m2)
    if abs(fine - coarse) > tol:
        raise ConvergenceError(f"quadrature energies {coarse} and {fine} disagree beyond {tol}")
    return fine


def quad_density_two_body(trial, edges, m=600, extent=6.0, nodes=8):
    """Bin-averaged one-body density of a two-particle trial state.

    Gauss-Legendre nodes inside every bin for ``x1`` and an offset midpoint
    rule over ``[-extent, extent]`` for ``x2``; normalised over the bins
    like a histogram.
    """
    edges = np.asarray(edges, dtype=float)
    t, wt = np.polynomial.legendre.leggauss(nodes)
    half = 0.5 * np.diff(edges)
    mid = edges[:-1] + half
    x1 = (mid[:, None] + half[:, None] * t).ravel()
    h = 2.0 * extent / m
    x2 = -extent + (np.arange(m) + 1.0 / 3.0) * h
    xx = np.stack(np.broadcast_arrays(x1[:, None], x2[None, :]), axis=-1).reshape(-1, 2)
    lp = evaluate(trial, xx)[0].reshape(len(x1), m)
    marginal = np.exp(2.0 * (lp - lp.max())).sum(1)
    per_bin = (marginal.reshape(len(mid), nodes) * wt).sum(1) * half
    return per_bin / (per_bin.sum() * np.diff(edges))
