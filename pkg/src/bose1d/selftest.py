"""Invariant checks that run without a test framework.

Each check returns a :class:`Check`; :func:`run_checks` runs them all and
reports one line per check.
"""
import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import interaction, specfun
from .model import HarmonicTrap, preset
from .observables import Histogram1D, Histogram2D, density_histogram, pair_histogram
from .trial import CpwfHarmonic, build_trial, cpwf_pair, cosine_pair
from .vmc import VmcParams, run_vmc


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: {self.detail} ({self.seconds:.1f}s)"


def check_specfun():
    # Gamma reflection, Kummer transformation and dU/dz against central differences
    worst = 0.0
    for x in np.linspace(0.05, 0.95, 19):
        lhs = specfun.gamma_real(x) * specfun.gamma_real(1 - x)
        worst = max(worst, abs(lhs * math.sin(math.pi * x) / math.pi - 1))
    for a in (-0.45, -0.25, -0.05):
        for z in (0.3, 2.0, 5.0):
            lhs = specfun.kummer_m(a, 0.5, z)
            rhs = math.exp(z) * specfun.kummer_m(0.5 - a, 0.5, -z)
            worst = max(worst, abs(lhs / rhs - 1))
    deriv = 0.0
    for a in (-0.45, -0.25, -0.05):
        for z in (0.2, 1.0, 3.9, 4.1, 10.0, 40.0):
            h = 1e-5 * max(1.0, z)
            fd = (specfun.u_half(a, z + h) - specfun.u_half(a, z - h)) / (2 * h)
            deriv = max(deriv, abs(fd - specfun.u_half_dz(a, z)) / max(1.0, abs(fd)))
    ok = worst < 1e-12 and deriv < 1e-7
    return ok, f"identities {worst:.1e}, derivative {deriv:.1e}"


def check_cusp():
    worst = 0.0
    h = 1e-5
    for g in (0.1, 1.0, 2.0921, 10.0, 50.0):
        f = cpwf_pair(interaction.nu_from_g(g))
        lf = f.log_value(np.array([0.0, h, 2 * h]))
        # one-sided slopes at h and 2h, Richardson-extrapolated to 0+;
        # 2 f'(0+) = g f(0)  <=>  (log f)'(0+) = g/2
        slope = 2 * (lf[1] - lf[0]) / h - (lf[2] - lf[0]) / (2 * h)
        worst = max(worst, abs(2 * slope - g) / max(g, 1.0))
        # the cosine factor is matched by k tan(kL/2) = g
        L = 4.0
        c = cosine_pair(interaction.k_from_g(g, L), L)
        lc = c.log_value(np.array([0.0, h, 2 * h]))
        slope = 2 * (lc[1] - lc[0]) / h - (lc[2] - lc[0]) / (2 * h)
        worst = max(worst, abs(slope - g) / max(g, 1.0))
    return worst < 1e-4, f"max relative cusp error {worst:.1e}"


def check_interaction():
    worst = 0.0
    for g in np.geomspace(1e-3, 1e3, 25):
        worst = max(worst, abs(interaction.g_from_nu(interaction.nu_from_g(g)) / g - 1))
    exact = interaction.nu_from_g(math.inf) == 1.0 and interaction.nu_from_g(0.0) == 0.0
    return exact and worst < 1e-8, f"max relative round-trip error {worst:.1e}"


def check_histograms():
    rng = np.random.default_rng(7)
    trap = preset("double-well")
    x = rng.uniform(-2.5, 2.5, size=(2000, 4))
    d = density_histogram(trap).accumulate(x).normalize()
    p = pair_histogram(trap).accumulate(x)
    norm = max(abs(d.integral() - 1), abs(p.normalize().integral() - 1))
    mirror = np.array_equal(p.weights, p.weights.T)
    # a parity-symmetric sample stream gives a parity-symmetric histogram
    sym = Histogram1D(-3, 3, 60).accumulate(np.concatenate([x, -x]))
    parity = np.array_equal(sym.weights, sym.weights[::-1])
    h2 = Histogram2D(-5, 5, 10).accumulate([[-1.0, 1.0]])
    cells = sorted(zip(*np.nonzero(h2.weights)))
    pair_ok = [tuple(map(int, c)) for c in cells] == [(4, 6), (6, 4)]
    ok = norm < 1e-9 and mirror and parity and pair_ok
    return ok, f"normalisation {norm:.1e}, exchange {mirror}, parity {parity}"


def check_detailed_balance():
    """One free particle in the trap: sampled positions follow exp(-x^2)/sqrt(pi)."""
    h = Histogram1D(-5, 5, 50)
    params = VmcParams(n_walkers=100, n_equil_steps=100, n_steps=10000, n_blocks=50,
                       step_size=2.0, sample_stride=10, seed=2024)
    r = run_vmc(CpwfHarmonic(0.0), HarmonicTrap(), 1, params, histograms=[h])
    counts = r.histograms[0].weights
    e = r.histograms[0].edges[0]
    prob = np.diff(stats.norm.cdf(e, scale=math.sqrt(0.5)))
    prob /= prob.sum()
    pvalue = stats.chisquare(counts, prob * counts.sum()).pvalue
    return pvalue > 0.01, f"chi2 p-value {pvalue:.3f} from {int(counts.sum())} samples"


def check_seed_determinism():
    trap = HarmonicTrap()
    trial = build_trial("cpwf", trap, 3.0, beta=0.9)
    params = VmcParams(n_walkers=20, n_equil_steps=20, n_steps=100, n_blocks=10, seed=99)
    a = run_vmc(trial, trap, 4, params).estimate.mean
    b = run_vmc(trial, trap, 4, params).estimate.mean
    return a == b, f"repeat runs give {a!r} and {b!r}"


CHECKS = {
    "special functions": check_specfun,
    "cusp condition": check_cusp,
    "interaction round trip": check_interaction,
    "histogram invariants": check_histograms,
    "VMC detailed balance": check_detailed_balance,
    "seed determinism": check_seed_determinism,
}


def run_check(name, fn):
    t = time.perf_counter()
    ok, detail = fn()
    return Check(name, bool(ok), detail, time.perf_counter() - t)


def run_checks(report=print):
    results = []
    for name, fn in CHECKS.items():
        c = run_check(name, fn)
        report(c.line())
        results.append(c)
    return results
