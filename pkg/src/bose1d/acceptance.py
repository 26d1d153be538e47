"""End-to-end acceptance checks at their stated tolerances.

Runs are cached in a :class:`Runs` object so systems shared between
checks are only simulated once.  ``python -m bose1d selftest --full``
and ``tests/test_acceptance.py`` both drive these functions.
"""
import math
import time
from dataclasses import dataclass, field

from .dmc import DmcParams, run_dmc, timestep_extrapolate
from .model import HarmonicTrap, e_tg, preset, well_centers
from .observables import density_histogram, extrapolated_estimate, pair_histogram, peaks_per_well
from .oracle import busch_energy_two_body, fd_ground_energy
from .selftest import CHECKS, Check, run_check
from .trial import CpwfHarmonic, build_trial
from .vmc import VmcParams, optimize_beta, run_vmc

#: Floor on the comparison tolerance where a zero-variance estimate meets
#: an independently computed exact value (rounding, not statistics).
EXACT_FLOOR = 1e-9

HARMONIC = HarmonicTrap()
DOUBLE_WELL = preset("double-well")

_VMC = VmcParams(n_walkers=200, n_equil_steps=200, n_steps=1000, n_blocks=50, seed=11)
_DMC_HARMONIC = DmcParams(tau=0.005, target_population=1000, n_equil_blocks=5,
                          n_blocks=50, steps_per_block=400, seed=12)
_DMC_MANY = DmcParams(tau=0.005, target_population=500, n_equil_blocks=5,
                      n_blocks=20, steps_per_block=400, seed=13)
# densities: tau = 0.002 keeps the acceptance above 0.99 at a lower cost;
# both streams hold ~1e7 positions so 2 mixed - VMC is not dominated by either
_DMC_DENSITY = DmcParams(tau=0.002, target_population=1000, n_equil_blocks=5,
                         n_blocks=100, steps_per_block=250, seed=15, sample_stride=10)
_VMC_DENSITY = VmcParams(n_walkers=1000, n_equil_steps=200, n_steps=10000, n_blocks=50,
                         seed=16, sample_stride=4)


def _within(value, target, sigma, floor=0.0):
    return abs(value - target) <= 3.0 * sigma + floor


@dataclass
class Runs:
    """Memoised simulations; ``pairs`` maps a system label to its (VMC, DMC) estimates."""
    cache: dict = field(default_factory=dict)
    pairs: dict = field(default_factory=dict)

    def _get(self, key, fn):
        if key not in self.cache:
            self.cache[key] = fn()
        return self.cache[key]

    def vmc(self, trap_name, n, g, beta=None, params=_VMC):
        trap = HARMONIC if trap_name == "harmonic" else preset(trap_name)
        fam = "cpwf" if trap.kind == "harmonic" else "cpwf-lattice"
        return self._get(("vmc", trap_name, n, g, beta, params), lambda: run_vmc(
            build_trial(fam, trap, g, beta=beta), trap, n, params).estimate)

    def dmc(self, trap_name, n, g, params, beta=None):
        trap = HARMONIC if trap_name == "harmonic" else preset(trap_name)
        fam = "cpwf" if trap.kind == "harmonic" else "cpwf-lattice"
        return self._get(("dmc", trap_name, n, g, beta, params), lambda: run_dmc(
            build_trial(fam, trap, g, beta=beta), trap, n, params).estimate)

    def compare(self, label, trap_name, n, g, dmc_params, beta=None):
        v = self.vmc(trap_name, n, g, beta)
        d = self.dmc(trap_name, n, g, dmc_params, beta)
        self.pairs[label] = (v, d)
        return v, d

    def densities(self, g):
        """VMC, mixed and extrapolated one- and two-body histograms, double well, N=4."""
        def make():
            trial = build_trial("cpwf-lattice", DOUBLE_WELL, g)
            hv = [density_histogram(DOUBLE_WELL), pair_histogram(DOUBLE_WELL)]
            v = run_vmc(trial, DOUBLE_WELL, 4, _VMC_DENSITY, histograms=hv)
            d = run_dmc(trial, DOUBLE_WELL, 4, _DMC_DENSITY,
                        histograms=[density_histogram(DOUBLE_WELL), pair_histogram(DOUBLE_WELL)])
            self.pairs[f"double well N=4 g={g:g}"] = (v.estimate, d.estimate)
            out = {}
            for k, name in enumerate(("density", "pair")):
                out[name] = {"vmc": v.histograms[k].normalize(),
                             "mixed": d.histograms[k].normalize(),
                             "extrapolated": extrapolated_estimate(d.histograms[k],
                                                                   v.histograms[k])}
            return out
        return self._get(("density", g), make)


def two_body_exactness(runs):
    lines, ok = [], True
    for g in (0.5, 2.0921, 10.0):
        exact = busch_energy_two_body(g)
        # a deliberately imperfect guide (beta = 0.9) so DMC has work to do
        v, d = runs.compare(f"harmonic N=2 g={g:g} beta=0.9", "harmonic", 2, g,
                            _DMC_HARMONIC, beta=0.9)
        ve = runs.vmc("harmonic", 2, g)
        good = (_within(d.mean, exact, d.stderr) and d.stderr <= 0.005
                and _within(ve.mean, exact, ve.stderr, EXACT_FLOOR))
        ok &= good
        lines.append(f"g={g:g}: exact {exact:.6f}, DMC {d.mean:.6f}+-{d.stderr:.6f}, "
                     f"VMC {ve.mean:.9f}+-{ve.stderr:.1e}")
    return ok, "; ".join(lines)


def exact_limits(runs):
    params = VmcParams(n_walkers=40, n_equil_steps=50, n_steps=100, n_blocks=10, seed=21)
    worst_var, worst_dev = 0.0, 0.0
    for n in (1, 2, 3, 5, 10, 20, 35, 50):
        for nu, exact in ((0.0, 0.5 * n), (1.0, e_tg(n))):
            est = run_vmc(CpwfHarmonic(nu), HARMONIC, n, params).estimate
            worst_var = max(worst_var, est.variance)
            worst_dev = max(worst_dev, abs(est.mean - exact) / exact)
    ok = worst_var <= 1e-18 and worst_dev <= EXACT_FLOOR
    return ok, f"N up to 50: max variance {worst_var:.1e}, max relative deviation {worst_dev:.1e}"


def crossover_agreement(runs):
    lines, ok = [], True
    for g in (1.0, 5.0, 20.0):
        v, d = runs.compare(f"harmonic N=10 g={g:g}", "harmonic", 10, g, _DMC_MANY)
        rel = abs(v.mean - d.mean) / d.mean
        ok &= rel <= 0.03
        lines.append(f"g={g:g}: {100 * rel:.2f}%")
    return ok, "relative VMC-DMC gap " + ", ".join(lines)


def _monotone_points(runs):
    out = []
    for inv_g in (0.05, 0.2, 1.0, 5.0):
        v, d = runs.compare(f"harmonic N=5 g={1 / inv_g:g}", "harmonic", 5, 1 / inv_g, _DMC_MANY)
        out.append((inv_g, d.mean / e_tg(5)))
    return out


def variational_ordering(runs):
    grid = (0.7, 0.8, 0.9, 1.0)
    params = VmcParams(n_walkers=200, n_equil_steps=200, n_steps=500, n_blocks=50, seed=31)
    beta, est, table = optimize_beta("cpwf", HARMONIC, 5.0, grid, 10, params)
    # make sure every system in the suite has been compared at least once
    two_body_exactness(runs)
    crossover_agreement(runs)
    _monotone_points(runs)
    lattice_single_particle(runs)
    for g in (2.0, 5.0, 20.0):
        runs.densities(g)
    bad = [label for label, (v, d) in runs.pairs.items()
           if v.mean + 3 * v.stderr < d.mean - 3 * d.stderr]
    ok = not bad and beta < 1.0
    scan = ", ".join(f"{b:g}:{e.mean:.3f}" for b, e in table)
    return ok, (f"{len(runs.pairs)} systems, violations {bad or 'none'}; "
                f"beta* = {beta:g} (scan {scan})")


def monotone_crossover(runs):
    pts = _monotone_points(runs)
    ratios = [r for _, r in pts]
    ok = all(a > b for a, b in zip(ratios, ratios[1:])) and max(ratios) <= 1.0
    return ok, "E/E_TG at 1/g = " + ", ".join(f"{x:g}: {r:.4f}" for x, r in pts)


def lattice_single_particle(runs):
    lines, ok = [], True
    for name in ("double-well", "triple-well"):
        trap = preset(name)
        exact = fd_ground_energy(trap)
        pts = []
        for tau in (0.001, 0.004):
            p = DmcParams(tau=tau, target_population=1000, n_equil_blocks=5, n_blocks=20,
                          steps_per_block=max(100, int(0.5 / tau)), seed=41)
            pts.append((tau, runs.dmc(name, 1, 0.0, p)))
        e0 = timestep_extrapolate(pts)
        rel = abs(e0.mean - exact) / exact
        ok &= rel <= 0.005
        lines.append(f"{name}: DMC {e0.mean:.5f}+-{e0.stderr:.5f} vs FD {exact:.5f} "
                     f"({100 * rel:.3f}%)")
        runs.pairs[f"{name} N=1"] = (runs.vmc(name, 1, 0.0), e0)
    return ok, "; ".join(lines)


def onsite_maxima(runs):
    centers = well_centers(DOUBLE_WELL)
    strong = peaks_per_well(runs.densities(20.0)["density"]["extrapolated"], centers)
    weak = peaks_per_well(runs.densities(2.0)["density"]["extrapolated"], centers)
    ok = strong == [2] * len(centers) and weak == [1] * len(centers)
    return ok, f"maxima per well: g=20 {strong}, g=2 {weak}"


def pair_depletion(runs):
    band = {g: {k: h.band_mean(0.1) for k, h in runs.densities(g)["pair"].items()}
            for g in (2.0, 5.0)}
    ratio = {k: band[5.0][k] / band[2.0][k] for k in band[2.0]}
    ok = ratio["extrapolated"] <= 0.5
    return ok, ("diagonal-band ratio g=5/g=2: extrapolated {extrapolated:.3f} "
                "(mixed {mixed:.3f}, VMC {vmc:.3f})".format(**ratio))


def property_suites(runs):
    results = [run_check(name, fn) for name, fn in CHECKS.items()]
    failed = [c.name for c in results if not c.passed]
    return not failed, f"{len(results)} suites, failed: {failed or 'none'}"


def large_n_smoke(runs):
    n, g = 50, 5.0
    vp = VmcParams(n_walkers=100, n_equil_steps=100, n_steps=200, n_blocks=10, seed=51)
    dp = DmcParams(tau=0.005, target_population=200, n_equil_blocks=4, n_blocks=10,
                   steps_per_block=50, seed=52)
    trial = build_trial("cpwf", HARMONIC, g)
    v = run_vmc(trial, HARMONIC, n, vp).estimate
    d = run_dmc(trial, HARMONIC, n, dp).estimate
    ratio = d.mean / e_tg(n)
    ok = (math.isfinite(v.mean) and math.isfinite(d.mean)
          and v.mean + 3 * v.stderr >= d.mean - 3 * d.stderr and 0.5 < ratio <= 1.0)
    return ok, f"N=50 g=5: VMC {v.mean:.2f}+-{v.stderr:.2f}, DMC {d.mean:.2f}+-{d.stderr:.2f}, E/E_TG {ratio:.4f}"


CRITERIA = [
    ("1 two-body exactness", two_body_exactness),
    ("2 exact limits", exact_limits),
    ("3 crossover agreement N=10", crossover_agreement),
    ("4 variational ordering", variational_ordering),
    ("5 monotone crossover N=5", monotone_crossover),
    ("6 lattice single particle", lattice_single_particle),
    ("7 on-site density maxima", onsite_maxima),
    ("8 pair-correlation depletion", pair_depletion),
    ("9 property suites", property_suites),
    ("10 large-N smoke run", large_n_smoke),
]


def run_criterion(name, fn, runs):
    t = time.perf_counter()
    ok, detail = fn(runs)
    return Check(name, bool(ok), detail, time.perf_counter() - t)


def run_all(report=print, runs=None):
    runs = runs or Runs()
    out = []
    for name, fn in CRITERIA:
        c = run_criterion(name, fn, runs)
        report(c.line())
        out.append(c)
    return out
