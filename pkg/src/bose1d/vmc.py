"""Metropolis sampling of ``|psi_T|**2`` and variational energies.

Every walker is an independent Markov chain with its own random stream
derived from ``(seed, walker index)``, so results do not depend on how
walkers are split across worker processes.  One step is a sweep of
single-particle moves ``x_i -> x_i + uniform(-delta, delta)``.  In
multi-well traps a fraction of the moves instead shifts the particle by
one lattice spacing, which is symmetric and lets chains change well
occupations that the barrier would otherwise freeze.
"""
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import SamplerAbort
from .observables import merge_all
from .stats import EnergyEstimate, block_error, combine_shifted
from .trial import CpwfLattice, build_trial, evaluate, separate_coincident

_ADAPT_EVERY = 10
_CHUNK = 64
_MAX_DISCARD = 1e-6


@dataclass(frozen=True)
class VmcParams:
    n_walkers: int = 200
    n_equil_steps: int = 200
    n_steps: int = 1000
    step_size: float = 1.0
    n_blocks: int = 50
    seed: int = 0
    sample_stride: int = 0
    hop_fraction: float = 0.1

    def __post_init__(self):
        if self.n_walkers < 1 or self.n_steps < 1 or self.n_equil_steps < 0:
            raise ValueError("n_walkers and n_steps must be >= 1, n_equil_steps >= 0")
        if self.n_blocks < 2 or self.n_steps % self.n_blocks:
            raise ValueError("n_blocks must be >= 2 and divide n_steps")
        if not self.step_size > 0:
            raise ValueError("step_size must be > 0")
        if not 0 <= self.hop_fraction < 1:
            raise ValueError("hop_fraction must lie in [0, 1)")


@dataclass
class VmcResult:
    estimate: EnergyEstimate
    configs: np.ndarray
    block_means: np.ndarray
    samples: np.ndarray = None
    histograms: list = field(default_factory=list)
    step_sizes: np.ndarray = None


def walker_rng(seed, index):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def initial_configs(trial, trap, n, rngs):
    """Starting positions, one row per generator."""
    rows = []
    for rng in rngs:
        if trap.kind == "lattice":
            c = np.asarray(trial.centers) if isinstance(trial, CpwfLattice) else np.zeros(1)
            x = rng.choice(c, size=n) + rng.normal(0.0, 0.1, size=n)
            x = np.clip(x, -0.99 * trap.half_width, 0.99 * trap.half_width)
        else:
            x = rng.normal(0.0, max(1.0, math.sqrt(n) / 2.0) / math.sqrt(trial.beta), size=n)
        rows.append(x)
    return separate_coincident(np.array(rows))


class _Chains:
    """A group of walkers advanced together, vectorised over walkers."""

    def __init__(self, trial, trap, n, params, walker_ids):
        self.trial, self.trap, self.n, self.params = trial, trap, n, params
        self.rngs = [walker_rng(params.seed, w) for w in walker_ids]
        self.x = initial_configs(trial, trap, n, self.rngs)
        m = len(walker_ids)
        self.step = np.full(m, params.step_size)
        self.hop = 0.0
        if isinstance(trial, CpwfLattice) and len(trial.centers) > 1:
            self.hop = params.hop_fraction
            self.spacing = trial.centers[1] - trial.centers[0]
        self._buffer = None
        self._used = _CHUNK
        self.spp = trial.spp_log(self.x)
        self.pairlog = np.zeros((m, n, n))
        i, j = np.triu_indices(n, 1)
        if n > 1:
            v = trial.pair.log_value(np.abs(self.x[:, i] - self.x[:, j]))
            self.pairlog[:, i, j] = v
            self.pairlog[:, j, i] = v
        self.others = [np.array([k for k in range(n) if k != q]) for q in range(n)]

    def _randoms(self):
        if self._used == _CHUNK:
            # per-walker streams: three uniforms per particle per sweep
            self._buffer = np.stack([r.random((_CHUNK, 3, self.n)) for r in self.rngs], axis=1)
            self._used = 0
        u = self._buffer[self._used]
        self._used += 1
        return u

    def sweep(self):
        """One sweep of single-particle moves; returns accepted counts per walker."""
        u = self._randoms()
        x = self.x
        accepted = np.zeros(len(x))
        for q in range(self.n):
            old = x[:, q]
            new = old + self.step * (2.0 * u[:, 0, q] - 1.0)
            if self.hop:
                hop = u[:, 2, q] < self.hop
                direction = np.where(u[:, 2, q] < 0.5 * self.hop, -1.0, 1.0)
                new = np.where(hop, old + direction * self.spacing, new)
            inside = self.trap.inside(new)
            new = np.where(inside, new, old)
            spp_new = self.trial.spp_log(new)
            dlog = spp_new - self.spp[:, q]
            if self.n > 1:
                o = self.others[q]
                xo = x[:, o]
                same = (xo == new[:, None]).any(1)
                new = np.where(same & inside, new + 1e-12, new)
                pl_new = self.trial.pair.log_value(np.abs(new[:, None] - xo))
                dlog = dlog + (pl_new - self.pairlog[:, q, o]).sum(1)
            with np.errstate(invalid="ignore"):
                acc = inside & (np.log(u[:, 1, q]) < 2.0 * dlog)
            if acc.any():
                x[acc, q] = new[acc]
                self.spp[acc, q] = spp_new[acc]
                if self.n > 1:
                    rows = np.nonzero(acc)[0]
                    self.pairlog[rows[:, None], q, o] = pl_new[acc]
                    self.pairlog[rows[:, None], o, q] = pl_new[acc]
            accepted += acc
        return accepted

    def adapt(self, acc_fraction):
        factor = np.clip(acc_fraction / 0.5, 0.5, 2.0)
        self.step = self.step * factor
        if self.trap.kind == "lattice":
            self.step = np.minimum(self.step, 2.0 * self.trap.half_width)


def _run_group(trial, trap, n, params, walker_ids, keep_samples, histograms):
    chains = _Chains(trial, trap, n, params, walker_ids)
    m = len(walker_ids)
    acc_window = np.zeros(m)
    for s in range(params.n_equil_steps):
        acc_window += chains.sweep()
        if (s + 1) % _ADAPT_EVERY == 0:
            chains.adapt(acc_window / (_ADAPT_EVERY * n))
            acc_window[:] = 0.0

    nb = params.n_blocks
    per_block = params.n_steps // nb
    shift = None
    s1 = np.zeros((nb, m))
    s2 = np.zeros((nb, m))
    count = np.zeros((nb, m))
    discarded = 0
    accepted = 0.0
    samples = []
    for s in range(params.n_steps):
        accepted += chains.sweep().sum()
        e = evaluate(trial, chains.x, trap)[2]
        ok = np.isfinite(e)
        discarded += int((~ok).sum())
        if shift is None:
            shift = np.where(ok, e, 0.0)
        d = np.where(ok, e - shift, 0.0)
        b = s // per_block
        s1[b] += d
        s2[b] += d * d
        count[b] += ok
        if params.sample_stride and s % params.sample_stride == 0:
            if keep_samples:
                samples.append(chains.x.copy())
            for h in histograms:
                h.accumulate(chains.x)
    return {
        "shift": shift, "s1": s1, "s2": s2, "count": count,
        "discarded": discarded, "accepted": accepted,
        "configs": chains.x, "step": chains.step,
        "samples": np.stack(samples) if samples else None,
        "histograms": histograms,
    }


def _split(ids, parts):
    parts = max(1, min(parts, len(ids)))
    return [list(c) for c in np.array_split(np.asarray(ids), parts)]


def run_vmc(trial, trap, n, params, workers=1, keep_samples=False, histograms=()):
    """Variational energy of ``trial`` for ``n`` particles in ``trap``.

    ``histograms`` are accumulated every ``params.sample_stride`` sweeps
    (weight 1 per configuration); with ``keep_samples`` the raw sampled
    configurations are returned as an array ``(n_records, n_walkers, n)``.
    """
    if trap.kind == "harmonic" and isinstance(trial, CpwfLattice):
        raise ValueError("a lattice trial needs a lattice trap")
    ids = list(range(params.n_walkers))
    groups = _split(ids, workers)
    hist_copies = [[h.empty_like() for h in histograms] for _ in groups]
    if len(groups) == 1:
        parts = [_run_group(trial, trap, n, params, groups[0], keep_samples, hist_copies[0])]
    else:
        with ProcessPoolExecutor(max_workers=len(groups)) as pool:
            futures = [pool.submit(_run_group, trial, trap, n, params, g, keep_samples, hs)
                       for g, hs in zip(groups, hist_copies)]
            parts = [f.result() for f in futures]

    shift = np.concatenate([p["shift"] for p in parts])
    s1 = np.concatenate([p["s1"] for p in parts], axis=1)
    s2 = np.concatenate([p["s2"] for p in parts], axis=1)
    count = np.concatenate([p["count"] for p in parts], axis=1)
    discarded = sum(p["discarded"] for p in parts)
    total = params.n_steps * params.n_walkers
    if discarded > _MAX_DISCARD * total or discarded == total:
        raise SamplerAbort("non-finite local energies in VMC",
                           {"discarded": discarded, "samples": total})
    blocks = np.array([combine_shifted(shift, s1[b], s2[b], count[b])[0]
                       for b in range(params.n_blocks)])
    mean, var = combine_shifted(np.tile(shift, params.n_blocks), s1.ravel(),
                                s2.ravel(), count.ravel())
    acceptance = sum(p["accepted"] for p in parts) / (total * n)
    estimate = EnergyEstimate(mean=mean, stderr=block_error(blocks),
                              n_blocks=params.n_blocks, acceptance=float(acceptance),
                              variance=var, n_samples=int(count.sum()),
                              n_discarded=discarded)
    samples = None
    if keep_samples and params.sample_stride:
        samples = np.concatenate([p["samples"] for p in parts], axis=1)
    merged = [merge_all([p["histograms"][k] for p in parts]) for k in range(len(histograms))]
    return VmcResult(estimate=estimate, configs=np.concatenate([p["configs"] for p in parts]),
                     block_means=blocks, samples=samples, histograms=merged,
                     step_sizes=np.concatenate([p["step"] for p in parts]))


def optimize_beta(family, trap, g, beta_grid, n, params, L=None, workers=1):
    """Grid search for the Gaussian width minimising the VMC energy.

    Every grid point reuses ``params.seed`` (common random numbers); ties go
    to the smaller ``beta``.  Returns ``(beta_star, estimate, table)`` with
    ``table`` listing ``(beta, estimate)`` for the whole grid.
    """
    grid = sorted(float(b) for b in beta_grid)
    if not grid or grid[0] <= 0:
        raise ValueError("beta grid must be non-empty and positive")
    table = []
    for beta in grid:
        trial = build_trial(family, trap, g, beta=beta, L=L)
        table.append((beta, run_vmc(trial, trap, n, params, workers=workers).estimate))
    best = table[0]
    for entry in table[1:]:
        if entry[1].mean < best[1].mean:
            best = entry
    return best[0], best[1], table
