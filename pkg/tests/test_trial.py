import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from bose1d.errors import CoincidenceError, DomainError, IncompatibleError, OutOfBoxError
from bose1d.interaction import nu_from_g
from bose1d.model import HarmonicTrap, preset
from bose1d.trial import (CosineJastrow, CpwfHarmonic, CpwfLattice, Family, build_trial, drift,
                          evaluate, local_energy, log_psi, separate_coincident)

from conftest import separated

HO = HarmonicTrap()
DW, TW = preset("double-well"), preset("triple-well")


def configs(n_min=1, n_max=6, bound=2.4):
    return st.lists(st.floats(-bound, bound), min_size=n_min, max_size=n_max).filter(separated)


def trials():
    """(trial, trap, box half-width) over all three families."""
    return st.sampled_from([
        (CpwfHarmonic(nu_from_g(2.0921)), HO, 3.0),
        (CpwfHarmonic(nu_from_g(0.3), beta=0.8), HO, 3.0),
        (CpwfHarmonic(nu_from_g(25.0), beta=1.2), HO, 3.0),
        (build_trial("cosine", HO, 1.5, L=3.0), HO, 3.0),
        (build_trial("cpwf-lattice", DW, 5.0), DW, 2.4),
        (build_trial("cpwf-lattice", TW, 20.0), TW, 3.4),
    ])


def fd_drift_and_energy(trial, trap, x, h=1e-4):
    x = np.asarray(x, dtype=float)
    n = len(x)
    d, lap = np.empty(n), np.empty(n)
    f0 = log_psi(trial, x)
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        fp, fm = log_psi(trial, x + e), log_psi(trial, x - e)
        d[i] = (fp - fm) / (2 * h)
        lap[i] = (fp - 2 * f0 + fm) / h ** 2
    el = float(trap.potential(x).sum()) - 0.5 * float((lap + d * d).sum())
    return d, el


# -- examples -----------------------------------------------------------------

@given(st.lists(st.floats(-4, 4), min_size=1, max_size=8))
def test_log_psi_free(x):
    assert log_psi(CpwfHarmonic(0.0), x) == pytest.approx(-0.5 * sum(v * v for v in x), abs=1e-12)


def test_log_psi_tonks_pair():
    assert log_psi(CpwfHarmonic(1.0), [-1.0, 1.0]) == pytest.approx(-1 + math.log(2 / math.sqrt(2)), rel=1e-15)


def test_log_psi_lattice_example():
    t = build_trial("cpwf-lattice", DW, 0.0)
    want = 2 * math.log(1 + math.exp(-4 * math.sqrt(40)))
    assert log_psi(t, [-1.0, 1.0]) == pytest.approx(want, abs=1e-15)


def test_drift_examples():
    assert drift(CpwfHarmonic(0.0), [0.7]) == pytest.approx([-0.7])
    assert drift(CpwfHarmonic(1.0), [-1.0, 1.0]) == pytest.approx([0.5, -0.5], rel=1e-15)


def test_local_energy_examples():
    cfg = [-0.3, 0.9]
    t = CpwfHarmonic(0.5)
    fd = fd_drift_and_energy(t, HO, cfg)[1]
    assert local_energy(t, cfg, HO) == pytest.approx(fd, abs=1e-5)


@given(configs(1, 12, 5.0))
def test_exact_limits(x):
    n = len(x)
    assert local_energy(CpwfHarmonic(0.0), x, HO) == pytest.approx(0.5 * n, abs=1e-10)
    assert local_energy(CpwfHarmonic(1.0), x, HO) == pytest.approx(0.5 * n * n, abs=1e-10 * n * n)


def test_exact_limit_variance_is_zero(rng):
    x = rng.normal(size=(2000, 10))
    for nu, exact in ((0.0, 5.0), (1.0, 50.0)):
        e = evaluate(CpwfHarmonic(nu), x, HO)[2]
        assert np.var(e) <= 1e-10 and abs(e.mean() - exact) < 1e-10


def test_two_body_local_energy_constant(rng):
    nu = nu_from_g(2.0921)
    x = rng.normal(size=(500, 2))
    e = evaluate(CpwfHarmonic(nu), x, HO)[2]
    assert np.abs(e - (nu + 1)).max() < 1e-6


def test_build_trial_defaults():
    t = build_trial("cpwf", HO, 0.0)
    assert (t.beta, t.nu) == (1.0, 0.0)
    t = build_trial(Family.CPWF_LATTICE, DW, 0.0)
    assert t.centers == (-1.0, 1.0) and t.weights == (1.0, 1.0) and t.nu == 0.0
    assert t.beta == pytest.approx(6.3246, abs=1e-4)
    t = build_trial("cosine", HO, 1.0, L=2.0)
    assert t.k == pytest.approx(0.8603, abs=1e-4)
    assert build_trial("cosine", HO, 1.0).L == 4.0
    assert build_trial("cpwf", HO, math.inf).nu == 1.0


@pytest.mark.parametrize("family, trap", [("cpwf", DW), ("cosine", TW), ("cpwf-lattice", HO)])
def test_build_trial_incompatible(family, trap):
    with pytest.raises(IncompatibleError):
        build_trial(family, trap, 1.0)


def test_invalid_parameters():
    with pytest.raises(DomainError):
        CpwfHarmonic(0.5, beta=0.0)
    with pytest.raises(DomainError):
        CpwfHarmonic(1.5)
    with pytest.raises(DomainError):
        CosineJastrow(k=2.0, L=2.0)
    with pytest.raises(DomainError):
        CpwfLattice(centers=(-1, 1), nu=0.0, beta=1.0, weights=(1.0,))
    with pytest.raises(ValueError):
        build_trial("gaussian", HO, 1.0)


def test_errors_on_bad_configs():
    t = build_trial("cpwf-lattice", DW, 2.0)
    with pytest.raises(OutOfBoxError):
        log_psi(t, [0.0, 2.6], DW)
    with pytest.raises(OutOfBoxError):
        local_energy(t, [0.0, -2.6], DW)
    with pytest.raises(CoincidenceError):
        drift(t, [0.3, 0.3])
    with pytest.raises(CoincidenceError):
        local_energy(CpwfHarmonic(0.5), [0.1, 0.1 + 1e-13], HO)


def test_tonks_coincidence_is_minus_infinity():
    assert log_psi(CpwfHarmonic(1.0), [0.2, 0.2]) == -math.inf


# -- properties ---------------------------------------------------------------

@given(trials(), configs(2, 6), st.randoms(use_true_random=False))
def test_permutation_invariance(tt, x, r):
    trial, _, _ = tt
    y = list(x)
    r.shuffle(y)
    assert log_psi(trial, y) == pytest.approx(log_psi(trial, x), rel=1e-13, abs=1e-13)


@given(trials(), configs(1, 6))
def test_parity(tt, x):
    trial, _, _ = tt
    assert log_psi(trial, [-v for v in x]) == pytest.approx(log_psi(trial, x), rel=1e-13, abs=1e-13)


@given(trials(), st.data())
def test_drift_and_energy_match_finite_differences(tt, data):
    trial, trap, hw = tt
    x = data.draw(configs(1, 5, hw).filter(lambda c: separated(c, 0.05)))
    if isinstance(trial, CosineJastrow):
        r = np.abs(np.subtract.outer(x, x))
        assume(np.all(np.abs(r - trial.L) > 1e-2))
    d_fd, e_fd = fd_drift_and_energy(trial, trap, x)
    assert drift(trial, x) == pytest.approx(d_fd, abs=1e-5)
    e = local_energy(trial, x, trap)
    assert e == pytest.approx(e_fd, abs=1e-5 * max(1.0, abs(e)))


@pytest.mark.parametrize("g", [0.5, 2.0921, 12.0])
@pytest.mark.parametrize("trap", [HO, DW])
def test_cusp_with_spectators(g, trap):
    """Derivative jump of psi across x_12 = 0 with two spectators held fixed."""
    fam = "cpwf" if trap is HO else "cpwf-lattice"
    t = build_trial(fam, trap, g)
    h = 1e-6
    spect = [0.9, -1.3]
    c = 0.2

    def psi(r):
        return math.exp(log_psi(t, [c + r / 2, c - r / 2] + spect))

    # psi in the relative coordinate: the other coordinates are smooth in r,
    # so the jump of d psi/dr across 0 only comes from the pair factor
    right = (psi(2 * h) - psi(h)) / h
    left = (psi(-h) - psi(-2 * h)) / h
    jump = right - left
    assert jump == pytest.approx(g * psi(1.5 * h), rel=1e-4)


def test_separate_coincident():
    x = np.array([[0.5, 0.5, 0.5], [0.1, 0.2, 0.3]])
    y = separate_coincident(x.copy())
    assert np.all(np.abs(y[0, [0, 0, 1]] - y[0, [1, 2, 2]]) > 0)
    assert np.array_equal(y[1], x[1])
