import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solicit import geometric_engine as ge
from solicit import poisson_engine as pe
from solicit.response_law import Geometric

from conftest import GEO_HALF_V1, TIGHT


def camp(p, v, **kw):
    return ge.GeometricPoissonCampaign(p, v, **kw)


def test_stored_complement_is_exact():
    for p in (0.5, 1 / 512, 2**-10, 0.3, 1.0):
        c = camp(p, 1.0)
        assert c.p + c.q == 1.0
    with pytest.raises(ValueError):
        camp(0.0, 1.0)
    with pytest.raises(ValueError):
        camp(0.5, -1.0)


def test_pgf_examples():
    c = camp(0.5, 1.0)
    assert ge.pgf_T(c, 0.0) == 0.0
    _, residual = c.despair_probs()
    assert ge.pgf_T(c, 1.0) == pytest.approx(1 - residual, abs=1e-15)
    assert ge.pgf_T(c.__class__(0.5, 1.0, policy=TIGHT), 0.5) == pytest.approx(GEO_HALF_V1["G_half"], abs=1e-15)
    assert ge.pgf_T(c, 0.5) == pytest.approx(0.390095, abs=1e-6)


def test_yield_examples():
    assert ge.expected_yield_geo(camp(0.5, 0.0)) == 0.0
    for v in (0.0, 1.0, 7.5, 1000.0):
        assert ge.expected_yield_geo(camp(1.0, v)) == pytest.approx(v, rel=1e-15)
    assert ge.expected_yield_geo(camp(0.5, 1.0, policy=TIGHT)) == pytest.approx(GEO_HALF_V1["E_Y"], abs=1e-14)
    assert ge.expected_yield_geo(camp(0.5, 1.0)) == pytest.approx(0.609905, abs=1e-6)


def test_effort_examples():
    assert ge.expected_effort_geo(camp(0.5, 0.0)) == 0.0
    assert ge.expected_effort_geo(camp(1.0, 3.0)) == pytest.approx(3.0, rel=1e-15)
    assert ge.expected_effort_geo(camp(0.5, 1.0, policy=TIGHT)) == pytest.approx(GEO_HALF_V1["E_M"], abs=1e-14)
    assert ge.expected_effort_geo(camp(0.5, 1.0)) == pytest.approx(1.219810, abs=2e-6)  # quoted as 0.609905 / 0.5 with 0.609905 truncated, not rounded


@pytest.mark.parametrize("p", [0.5, 1 / 512])
@pytest.mark.parametrize("v", [1.0, 1000.0])
def test_cross_path(p, v):
    c = camp(p, v)
    ey, em = ge.expected_yield_geo(c), ge.expected_effort_geo(c)
    assert abs(ey - pe.expected_yield(Geometric(p), v)) <= 1e-10
    assert abs(em - pe.expected_effort(Geometric(p), v)) <= 1e-10
    assert abs(em * p - ey) <= 1e-12


@pytest.mark.parametrize("p", [0.5, 1 / 512])
@pytest.mark.parametrize("v", [1.0, 100.0, 1000.0])
def test_functional_equation(p, v):
    c = camp(p, v)
    inner = c.with_v(c.q * v)
    a = math.exp(-p * v)
    for z in (0.2, 0.5, 0.9, 1.0):
        assert abs(ge.pgf_T(c, z) / z - a - (1 - a) * ge.pgf_T(inner, z)) < 1e-10


def test_series_self_terminates_well_below_cap():
    probs, residual = camp(1 / 512, 1000.0).despair_probs()
    assert len(probs) < 10_000
    assert residual <= 1e-12


def test_pgf_at_one_tends_to_one_as_alpha_shrinks():
    gaps = [1 - ge.pgf_T(camp(0.5, 50.0, policy=pe.TruncationPolicy(alpha=a)), 1.0) for a in (1e-3, 1e-6, 1e-12)]
    assert gaps[0] >= gaps[1] >= gaps[2]
    assert gaps[2] <= 1e-12


@given(st.floats(1e-3, 1.0), st.floats(0.0, 500.0), st.lists(st.floats(0.0, 1.0), min_size=2, max_size=8))
@settings(max_examples=50, deadline=None)
def test_pgf_nondecreasing_in_z(p, v, zs):
    c = camp(p, v)
    vals = [ge.pgf_T(c, z) for z in sorted(zs)]
    assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))
    assert all(0.0 <= x <= 1.0 for x in vals)


@given(st.floats(1e-3, 1.0), st.floats(0.0, 500.0))
@settings(max_examples=50, deadline=None)
def test_effort_times_p_is_yield(p, v):
    c = camp(p, v)
    assert ge.expected_effort_geo(c) * p == pytest.approx(ge.expected_yield_geo(c), abs=1e-12 * max(1.0, v))
