import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from bose1d.stats import EnergyEstimate, block_error, combine_shifted


def test_block_error_matches_definition():
    b = [1.0, 2.0, 4.0, 7.0]
    assert block_error(b) == pytest.approx(np.std(b, ddof=1) / 2)
    assert math.isnan(block_error([3.0]))


@given(st.lists(arrays(float, st.integers(1, 30), elements=st.floats(-1e3, 1e3)),
                min_size=1, max_size=6), st.floats(-1e3, 1e3))
def test_combine_shifted_matches_numpy(streams, offset):
    shift = [s[0] + offset for s in streams]
    s1 = [float(np.sum(s - c)) for s, c in zip(streams, shift)]
    s2 = [float(np.sum((s - c) ** 2)) for s, c in zip(streams, shift)]
    count = [len(s) for s in streams]
    mean, var = combine_shifted(shift, s1, s2, count)
    allv = np.concatenate(streams)
    assert mean == pytest.approx(allv.mean(), abs=1e-9 * (1 + abs(allv).max()))
    if allv.size > 1:
        assert var == pytest.approx(np.var(allv, ddof=1), rel=1e-7, abs=1e-7 * (1 + abs(offset)) ** 2)


def test_combine_shifted_keeps_tiny_spread():
    rng = np.random.default_rng(1)
    e = 1e6 + 1e-9 * rng.normal(size=1000)
    mean, var = combine_shifted([e[0]], [np.sum(e - e[0])], [np.sum((e - e[0]) ** 2)], [1000])
    assert var == pytest.approx(np.var(e, ddof=1), rel=1e-3)


def test_empty_streams():
    mean, var = combine_shifted([0.0], [0.0], [0.0], [0])
    assert math.isnan(mean) and math.isnan(var)


def test_estimate_as_dict():
    d = EnergyEstimate(1.5, 0.01, 50, 0.6).as_dict()
    assert d["mean"] == 1.5 and d["n_blocks"] == 50 and d["acceptance"] == 0.6
