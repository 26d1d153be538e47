import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from bose1d.errors import DomainError, OutOfBoxError, ResonanceError
from bose1d.model import (PRESETS, ZETA_HALF, HarmonicTrap, LatticeTrap, e_tg, g1d_from_3d,
                          potential_eval, preset, well_centers)
from scipy.optimize import minimize_scalar

DW, TW = preset("double-well"), preset("triple-well")


def test_potential_examples():
    assert potential_eval(HarmonicTrap(), 2.0) == 2.0
    assert potential_eval(DW, 1.0) == pytest.approx(0.0, abs=1e-28)
    assert potential_eval(TW, 0.0) == 0.0
    assert potential_eval(TW, 1.0) == pytest.approx(40.0, rel=1e-15)


def test_hard_wall():
    assert potential_eval(DW, 2.5) == pytest.approx(20.0)
    with pytest.raises(OutOfBoxError):
        potential_eval(DW, 2.5000001)
    with pytest.raises(OutOfBoxError):
        potential_eval(TW, np.array([0.0, -3.6]))


def test_preset_fields():
    assert (DW.v0, DW.phi, DW.half_width) == (40.0, math.pi / 2, 2.5)
    assert (TW.v0, TW.phi, TW.half_width) == (40.0, 0.0, 3.5)
    assert preset("double-well", v0=10.0).v0 == 10.0
    with pytest.raises(DomainError):
        preset("quadruple-well")
    with pytest.raises(DomainError):
        preset("harmonic", v0=3.0)
    with pytest.raises(DomainError):
        LatticeTrap(v0=0.0)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_even(name):
    trap = PRESETS[name]
    hw = getattr(trap, "half_width", 6.0)
    x = np.linspace(-hw, hw, 4001)
    assert potential_eval(trap, x) == pytest.approx(potential_eval(trap, -x), rel=0, abs=1e-12)


@given(st.floats(-3.5, 3.5))
def test_lattice_range(x):
    v = potential_eval(TW, x)
    assert 0.0 <= v <= 40.0


def test_well_centers_presets():
    assert well_centers(DW) == [-1.0, 1.0]
    assert well_centers(TW) == [-2.0, 0.0, 2.0]
    with pytest.raises(DomainError):
        well_centers(HarmonicTrap())


@given(st.floats(1.0, 60.0), st.floats(-1.5, 1.5), st.floats(0.7, 6.0))
def test_well_centers_are_minima(v0, phi, hw):
    trap = LatticeTrap(v0=v0, phi=phi, half_width=hw)
    # the grid oracle cannot resolve a minimum sitting on the wall
    assume(all(hw - abs(c) > 1e-2 for c in well_centers(trap)))
    x = np.linspace(-hw, hw, 20001)
    v = trap.potential(x)
    interior = np.nonzero((v[1:-1] < v[:-2]) & (v[1:-1] <= v[2:]))[0] + 1
    found = []
    for k in interior:
        r = minimize_scalar(trap.potential, bracket=(x[k - 1], x[k], x[k + 1]))
        if abs(r.x) < hw:
            found.append(r.x)
    assert well_centers(trap) == pytest.approx(sorted(found), abs=1e-6)


def test_e_tg():
    assert [e_tg(n) for n in (1, 2, 5)] == [0.5, 2.0, 12.5]
    for n in range(2, 51):
        assert e_tg(n) - e_tg(n - 1) == n - 0.5
    with pytest.raises(DomainError):
        e_tg(0)


def test_zeta_constant():
    assert ZETA_HALF == pytest.approx(-float(mp.zeta(0.5)), rel=1e-15)


def test_g1d_examples():
    assert g1d_from_3d(0.0) == 0.0
    assert g1d_from_3d(0.1) == pytest.approx(0.2230, abs=5e-5)
    assert g1d_from_3d(0.1) == pytest.approx(0.2 / (1 - ZETA_HALF * 0.1 / math.sqrt(2)), rel=1e-15)
    with pytest.raises(ResonanceError):
        g1d_from_3d(math.sqrt(2) / ZETA_HALF)
    with pytest.raises(DomainError):
        g1d_from_3d(0.1, a_perp=0.0)


def test_g1d_diverges_at_resonance():
    a_res = math.sqrt(2) / ZETA_HALF
    assert a_res == pytest.approx(0.9684, abs=1e-4)
    assert g1d_from_3d(a_res * (1 - 1e-6)) > 1e5
    assert g1d_from_3d(a_res * (1 + 1e-6)) < -1e5
