import math

import numpy as np
import pytest

from bose1d.errors import SamplerAbort
from bose1d.model import HarmonicTrap, preset
from bose1d.oracle import busch_energy_two_body, fd_ground_energy
from bose1d.stats import EnergyEstimate
from bose1d.trial import CpwfHarmonic, build_trial
from bose1d.dmc import (DmcParams, WalkerEnsemble, branch, control_population, dmc_step,
                        run_dmc, timestep_extrapolate)
from bose1d.vmc import VmcParams, run_vmc

HO = HarmonicTrap()
DW = preset("double-well")
G = 2.0921
EXACT = busch_energy_two_body(G)


def n2(tau, seed, pop=500, blocks=30, steps=None, beta=0.9):
    steps = steps or max(20, int(2.0 / tau))
    p = DmcParams(tau=tau, target_population=pop, n_equil_blocks=3, n_blocks=blocks,
                  steps_per_block=steps, seed=seed)
    return run_dmc(build_trial("cpwf", HO, G, beta=beta), HO, 2, p)


def test_params_validation():
    with pytest.raises(ValueError):
        DmcParams(tau=0.0)
    with pytest.raises(ValueError):
        DmcParams(target_population=50)
    with pytest.raises(ValueError):
        DmcParams(tau_list=(0.01, -0.1))
    assert DmcParams.for_trap(DW).tau == 0.001
    assert DmcParams.for_trap(HO).tau == 0.005


@pytest.mark.parametrize("nu, n", [(0.0, 4), (1.0, 3)])
def test_exact_trial_weights_are_one(nu, n):
    rng = np.random.default_rng(0)
    exact = 0.5 * n if nu == 0 else 0.5 * n * n
    x = rng.normal(size=(200, n))
    ens = WalkerEnsemble.from_configs(CpwfHarmonic(nu), HO, x, e_trial=exact)
    for _ in range(20):
        ens, _ = dmc_step(ens, CpwfHarmonic(nu), HO, 0.01, rng)
        assert np.abs(ens.weights - 1.0).max() < 1e-12


def test_exact_trial_fixed_point():
    trial = CpwfHarmonic(1.0)
    p = DmcParams(tau=0.005, target_population=200, n_equil_blocks=2, n_blocks=5,
                  steps_per_block=50, seed=1)
    d = run_dmc(trial, HO, 5, p)
    v = run_vmc(trial, HO, 5, VmcParams(n_walkers=50, n_steps=100, n_blocks=10, seed=1)).estimate
    assert d.estimate.mean == pytest.approx(12.5, abs=1e-10)
    assert abs(d.estimate.mean - v.mean) <= 1e-10
    assert np.all(d.population == 200)


def test_weight_uses_average_local_energy():
    rng = np.random.default_rng(3)
    trial = build_trial("cpwf", HO, 1.0, beta=0.8)
    ens = WalkerEnsemble.from_configs(trial, HO, rng.normal(size=(50, 2)), e_trial=1.3)
    e_old = ens.e_local.copy()
    new, _ = dmc_step(ens, trial, HO, 0.01, rng)
    want = np.exp(-0.01 * (0.5 * (e_old + new.e_local) - 1.3))
    assert new.weights == pytest.approx(want, rel=1e-14)


def test_branch_preserves_expected_weight():
    rng = np.random.default_rng(4)
    w = np.array([0.1, 0.25, 0.5, 1.0, 1.9, 2.5, 4.2])
    totals = []
    for _ in range(4000):
        ens = WalkerEnsemble(x=np.zeros((7, 1)), weights=w.copy(), e_trial=0.0, target=7.0,
                             e_best=0.0, logpsi=np.zeros(7), drift=np.zeros((7, 1)),
                             e_local=np.zeros(7))
        totals.append(branch(ens, rng).total_weight)
    assert np.mean(totals) == pytest.approx(w.sum(), rel=0.01)
    # weights inside [1/3, 2] are left alone, everything else is reset to 1
    ens = branch(WalkerEnsemble(x=np.zeros((3, 1)), weights=np.array([0.5, 1.5, 3.0]),
                                e_trial=0.0, target=3.0, e_best=0.0, logpsi=np.zeros(3),
                                drift=np.zeros((3, 1)), e_local=np.zeros(3)), rng)
    assert sorted(ens.weights) == [0.5, 1.0, 1.0, 1.0, 1.5]


def test_population_control_formula():
    ens = WalkerEnsemble(x=np.zeros((4, 1)), weights=np.full(4, 2.0), e_trial=0.0, target=4.0,
                         e_best=1.5, logpsi=np.zeros(4), drift=np.zeros((4, 1)), e_local=np.zeros(4))
    control_population(ens, 0.01)
    assert ens.e_trial == pytest.approx(1.5 - math.log(2.0) / 0.1)


def test_two_body_oracle():
    d = n2(0.01, seed=21, pop=500, blocks=30, steps=200)
    est = d.estimate
    assert abs(est.mean - EXACT) <= 3 * est.stderr
    assert est.stderr <= 0.005
    assert est.acceptance > 0.99
    # total weight stays near the target
    assert 0.5 * 500 <= d.population.min() and d.population.max() <= 2.0 * 500


def test_population_doubling():
    a = n2(0.01, seed=22, pop=400, blocks=20, steps=200).estimate
    b = n2(0.01, seed=23, pop=800, blocks=20, steps=200).estimate
    assert abs(a.mean - b.mean) <= 3 * math.hypot(a.stderr, b.stderr)


def test_timestep_bias_grows_with_tau():
    small = n2(0.01, seed=24, pop=1000, blocks=20, steps=200, beta=0.6).estimate
    large = n2(0.8, seed=25, pop=1000, blocks=40, steps=20, beta=0.6).estimate
    assert abs(small.mean - EXACT) <= abs(large.mean - EXACT)


def test_extrapolation_on_oracle_system():
    # the linear regime of the bias is resolvable at these timesteps
    pts = [(tau, n2(tau, seed=26, pop=2000, blocks=50, steps=int(4 / tau), beta=0.6).estimate)
           for tau in (0.1, 0.2)]
    e0 = timestep_extrapolate(pts)
    assert abs(e0.mean - EXACT) < min(abs(p.mean - EXACT) for _, p in pts)


def test_timestep_extrapolate_examples():
    same = [(0.01, EnergyEstimate(2.0, 0.1, 10)), (0.02, EnergyEstimate(2.0, 0.1, 10))]
    assert timestep_extrapolate(same).mean == pytest.approx(2.0, abs=1e-14)
    lin = [(t, EnergyEstimate(1.5 + 0.3 * t, 0.0, 10)) for t in (0.01, 0.005, 0.0025)]
    assert timestep_extrapolate(lin).mean == pytest.approx(1.5, abs=1e-14)
    assert timestep_extrapolate(lin).stderr == 0.0
    with pytest.raises(ValueError):
        timestep_extrapolate(same[:1])
    with pytest.raises(ValueError):
        timestep_extrapolate([same[0], same[0]])


def test_timestep_extrapolate_error_propagation():
    pts = [(0.0, EnergyEstimate(1.0, 0.1, 10)), (1.0, EnergyEstimate(2.0, 0.1, 10))]
    e0 = timestep_extrapolate(pts)
    assert e0.mean == pytest.approx(1.0) and e0.stderr == pytest.approx(0.1)


def test_lattice_single_particle():
    exact = fd_ground_energy(DW)
    p = DmcParams(tau=0.002, target_population=500, n_equil_blocks=3, n_blocks=20,
                  steps_per_block=250, seed=31)
    d = run_dmc(build_trial("cpwf-lattice", DW, 0.0), DW, 1, p)
    assert abs(d.estimate.mean - exact) <= 3 * d.estimate.stderr + 0.005 * exact
    assert np.all(np.abs(d.ensemble.x) <= DW.half_width)


def test_seed_determinism():
    a = n2(0.02, seed=40, pop=100, blocks=4, steps=20).estimate
    b = n2(0.02, seed=40, pop=100, blocks=4, steps=20).estimate
    assert a.mean == b.mean and a.stderr == b.stderr


def test_population_collapse_aborts():
    # walkers far out in the trap with a reference energy far below the ground state
    p = DmcParams(tau=0.05, target_population=100, n_equil_blocks=0, n_blocks=2,
                  steps_per_block=50, seed=2)
    with pytest.raises(SamplerAbort) as err:
        run_dmc(build_trial("cpwf", HO, 1.0, beta=0.3), HO, 1, p,
                ensemble=WalkerEnsemble.from_configs(build_trial("cpwf", HO, 1.0, beta=0.3), HO,
                                                     np.full((100, 1), 40.0), e_trial=-200.0))
    assert {"step", "population", "e_trial"} <= set(err.value.diagnostics)
