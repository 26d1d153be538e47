"""Importance-sampled diffusion Monte Carlo.

Each step moves every walker by drift plus Gaussian diffusion, then
accepts or rejects the move with the drift-corrected Metropolis ratio so
that ``|psi_T|**2`` stays stationary at finite timestep.  Walkers carry
weights that are updated with the average of the old and new local
energies, and branched by stochastic rounding.  The reference energy is
steered toward the best running estimate with damping time ``10 tau``.

All random numbers come from a single generator, so a run is reproducible
bit for bit from its seed.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SamplerAbort
from .stats import EnergyEstimate, block_error
from .trial import CpwfLattice, evaluate
from .vmc import VmcParams, run_vmc

_MIN_POPULATION = 10
_MAX_GROWTH = 100
_SPLIT = 2.0
_KILL = 1.0 / 3.0


@dataclass(frozen=True)
class DmcParams:
    tau: float = 0.005
    target_population: int = 1000
    n_equil_blocks: int = 20
    n_blocks: int = 50
    steps_per_block: int = 100
    seed: int = 0
    tau_list: tuple = ()
    sample_stride: int = 0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be > 0")
        if self.target_population < 100:
            raise ValueError("target_population must be >= 100")
        if self.n_blocks < 2 or self.steps_per_block < 1 or self.n_equil_blocks < 0:
            raise ValueError("need n_blocks >= 2, steps_per_block >= 1, n_equil_blocks >= 0")
        if any(not t > 0 for t in self.tau_list):
            raise ValueError("every tau in tau_list must be > 0")

    @classmethod
    def for_trap(cls, trap, **kwargs):
        """Defaults with the timestep suited to ``trap``."""
        kwargs.setdefault("tau", 0.001 if trap.kind == "lattice" else 0.005)
        return cls(**kwargs)


@dataclass
class WalkerEnsemble:
    """Weighted walkers with cached log-amplitude, drift and local energy."""
    x: np.ndarray
    weights: np.ndarray
    e_trial: float
    target: float
    e_best: float
    logpsi: np.ndarray = None
    drift: np.ndarray = None
    e_local: np.ndarray = None

    @classmethod
    def from_configs(cls, trial, trap, configs, e_trial, target=None):
        x = np.array(configs, dtype=float)
        lp, dr, el = evaluate(trial, x, trap)
        return cls(x=x, weights=np.ones(len(x)), e_trial=e_trial,
                   target=float(len(x) if target is None else target), e_best=e_trial,
                   logpsi=lp, drift=dr, e_local=el)

    @property
    def population(self):
        return len(self.x)

    @property
    def total_weight(self):
        return float(self.weights.sum())


def dmc_step(ensemble, trial, trap, tau, rng):
    """Advance ``ensemble`` by one timestep; returns ``(ensemble, n_accepted)``.

    Only moves and reweights; :func:`branch` and :func:`control_population`
    complete a full step.
    """
    x, d = ensemble.x, ensemble.drift
    m = len(x)
    step = tau * d + math.sqrt(tau) * rng.standard_normal(x.shape)
    y = x + step
    u = rng.random(m)
    ok = np.all(trap.inside(y), axis=1)
    lp, dy, ey = evaluate(trial, y, trap)
    # log of G(x <- y) / G(y <- x) for the drifted Gaussian kernel
    back = x - y - tau * dy
    log_green = (np.einsum("ij,ij->i", step - tau * d, step - tau * d)
                 - np.einsum("ij,ij->i", back, back)) / (2.0 * tau)
    with np.errstate(invalid="ignore", over="ignore"):
        log_ratio = 2.0 * (lp - ensemble.logpsi) + log_green
        acc = ok & np.isfinite(ey) & (np.log(u) < log_ratio)
    e_old = ensemble.e_local
    x = np.where(acc[:, None], y, x)
    lp = np.where(acc, lp, ensemble.logpsi)
    d = np.where(acc[:, None], dy, d)
    e_new = np.where(acc, ey, e_old)

    w = ensemble.weights * np.exp(-tau * (0.5 * (e_old + e_new) - ensemble.e_trial))
    nxt = WalkerEnsemble(x=x, weights=w, e_trial=ensemble.e_trial, target=ensemble.target,
                         e_best=ensemble.e_best, logpsi=lp, drift=d, e_local=e_new)
    return nxt, int(acc.sum())


def branch(ensemble, rng):
    """Stochastic-rounding split/kill; expected total weight is unchanged."""
    w = ensemble.weights
    r = rng.random(len(w))
    copies = np.ones(len(w), dtype=np.intp)
    new_w = w.copy()
    big = w > _SPLIT
    copies[big] = np.floor(w[big]).astype(np.intp) + (r[big] < w[big] - np.floor(w[big]))
    small = w < _KILL
    copies[small] = r[small] < w[small]
    new_w[big | small] = 1.0
    idx = np.repeat(np.arange(len(w)), copies)
    ensemble.x = ensemble.x[idx]
    ensemble.weights = new_w[idx]
    ensemble.logpsi = ensemble.logpsi[idx]
    ensemble.drift = ensemble.drift[idx]
    ensemble.e_local = ensemble.e_local[idx]
    return ensemble


def control_population(ensemble, tau):
    total = ensemble.total_weight
    if not total > 0:
        raise SamplerAbort("DMC total weight vanished", {"total_weight": total})
    ensemble.e_trial = ensemble.e_best - math.log(total / ensemble.target) / (10.0 * tau)
    return ensemble


@dataclass
class DmcResult:
    estimate: EnergyEstimate
    block_means: np.ndarray
    population: np.ndarray
    e_trial: np.ndarray
    ensemble: WalkerEnsemble
    histograms: list = field(default_factory=list)
    tau: float = math.nan


def _diagnostics(ensemble, step, populations):
    return {"step": step, "population": ensemble.population,
            "total_weight": ensemble.total_weight, "e_trial": ensemble.e_trial,
            "recent_population": [int(p) for p in populations[-20:]]}


def initial_ensemble(trial, trap, n, params, workers=1):
    """Walkers drawn from a short VMC run, one walker per VMC chain."""
    vp = VmcParams(n_walkers=params.target_population, n_equil_steps=100, n_steps=20,
                   n_blocks=2, seed=params.seed)
    vmc = run_vmc(trial, trap, n, vp, workers=workers)
    return WalkerEnsemble.from_configs(trial, trap, vmc.configs, vmc.estimate.mean)


def run_dmc(trial, trap, n, params, ensemble=None, histograms=(), workers=1):
    """Mixed-estimator ground-state energy for ``n`` particles.

    ``ensemble`` defaults to walkers sampled from ``|psi_T|**2`` by VMC.
    ``histograms`` are accumulated with the walker weights every
    ``params.sample_stride`` production steps (mixed distribution).
    """
    if trap.kind == "harmonic" and isinstance(trial, CpwfLattice):
        raise ValueError("a lattice trial needs a lattice trap")
    tau = params.tau
    rng = np.random.default_rng(params.seed)
    if ensemble is None:
        ensemble = initial_ensemble(trial, trap, n, params, workers)
    ensemble.target = float(params.target_population)
    hists = [h.empty_like() for h in histograms]

    populations, e_trials, blocks = [], [], []
    accepted = proposed = 0
    e_sum = w_sum = 0.0
    total_blocks = params.n_equil_blocks + params.n_blocks
    step = 0
    for b in range(total_blocks):
        production = b >= params.n_equil_blocks
        if b == params.n_equil_blocks:
            e_sum = w_sum = 0.0
        be = bw = 0.0
        for s in range(params.steps_per_block):
            ensemble, acc = dmc_step(ensemble, trial, trap, tau, rng)
            step += 1
            w = ensemble.weights
            we = float(np.dot(w, ensemble.e_local))
            ws = float(w.sum())
            be += we
            bw += ws
            e_sum += we
            w_sum += ws
            if production:
                accepted += acc
                proposed += len(w)
                if params.sample_stride and s % params.sample_stride == 0:
                    for h in hists:
                        h.accumulate(ensemble.x, w)
            ensemble = branch(ensemble, rng)
            populations.append(ensemble.population)
            if not (_MIN_POPULATION <= ensemble.population <= _MAX_GROWTH * ensemble.target):
                raise SamplerAbort("DMC population out of control",
                                   _diagnostics(ensemble, step, populations))
            if w_sum > 0:
                ensemble.e_best = e_sum / w_sum
            control_population(ensemble, tau)
            e_trials.append(ensemble.e_trial)
        if production:
            blocks.append(be / bw)

    blocks = np.array(blocks)
    estimate = EnergyEstimate(mean=float(e_sum / w_sum), stderr=block_error(blocks),
                              n_blocks=params.n_blocks,
                              acceptance=accepted / proposed if proposed else 1.0,
                              n_samples=proposed)
    return DmcResult(estimate=estimate, block_means=blocks,
                     population=np.array(populations), e_trial=np.array(e_trials),
                     ensemble=ensemble, histograms=hists, tau=tau)


def timestep_extrapolate(points):
    """Weighted least-squares fit ``E(tau) = E0 + c tau``; returns E0.

    ``points`` is a sequence of ``(tau, EnergyEstimate)``.  Weights are
    ``1/stderr**2``; if any error bar is zero all points count equally.
    """
    taus = np.array([float(t) for t, _ in points])
    if len(taus) < 2 or np.ptp(taus) == 0:
        raise ValueError("timestep extrapolation needs at least two distinct tau values")
    e = np.array([p.mean for _, p in points])
    s = np.array([p.stderr for _, p in points])
    w = np.ones_like(s) if np.any(s <= 0) or not np.all(np.isfinite(s)) else 1.0 / s ** 2
    a = np.column_stack([np.ones_like(taus), taus])
    cov = np.linalg.inv(a.T @ (w[:, None] * a))
    coef = cov @ (a.T @ (w * e))
    if np.all(s > 0) and np.all(np.isfinite(s)):
        err = math.sqrt(cov[0, 0])
    else:
        # equal weights: propagate the given errors through the fit
        lin = cov @ (a.T * w)
        err = float(math.sqrt(np.sum((lin[0] * np.nan_to_num(s)) ** 2)))
    return EnergyEstimate(mean=float(coef[0]), stderr=err,
                          n_blocks=sum(p.n_blocks for _, p in points))
