import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solicit import finite_prior as fp
from solicit import poisson_engine as pe
from solicit.errors import TruncationError
from solicit.response_law import Geometric, Mixture, Table

from conftest import GEO_HALF_V1, LAWS, TIGHT, as_vector

E1 = math.exp(-1.0)


def one(k):
    return np.ones_like(np.asarray(k), dtype=float)


def ident(k):
    return np.asarray(k, dtype=float)


# -- lambda_seq / despair_law -------------------------------------------------

def test_lambda_seq_examples(geo_half):
    lam = pe.lambda_seq(geo_half, 1.0, 2)
    np.testing.assert_allclose(lam, [1 - math.exp(-0.5), 1 - math.exp(-0.25)], rtol=1e-15)
    assert lam[0] == pytest.approx(0.3934693, abs=1e-7)
    assert lam[1] == pytest.approx(0.2211992, abs=1e-7)
    for law in LAWS:
        assert np.all(pe.lambda_seq(law, 0.0, 5) == 0.0)
    np.testing.assert_allclose(pe.lambda_seq(Table((1.0,)), 1.0, 3), [1 - E1, 0, 0], rtol=1e-15)


def test_despair_law_examples(geo_half):
    for law in LAWS:
        d = pe.despair_law(law, 0.0)
        assert d.probs[0] == 1.0 and d.residual == 0.0
    d = pe.despair_law(Table((1.0,)), 1.0)
    np.testing.assert_allclose(d.probs[:2], [E1, 1 - E1], rtol=1e-15)
    assert d.residual == 0.0
    d = pe.despair_law(geo_half, 1.0)
    np.testing.assert_allclose(d.probs[:3], GEO_HALF_V1["P_T"], rtol=1e-14)


def test_despair_law_invariants():
    for law in LAWS:
        for v in (0.1, 1.0, 10.0, 1000.0):
            d = pe.despair_law(law, v)
            assert np.all(d.probs >= 0)
            assert math.fsum(d.probs) + d.residual == pytest.approx(1.0, abs=1e-12)
            assert d.residual <= pe.DEFAULT_POLICY.alpha


def test_truncation_failure_on_heavy_engagement():
    # pi_n never decays fast enough within the cap: lambda products stay large
    heavy = Table(tuple([0.01] * 50), 0.5)
    with pytest.raises(TruncationError):
        pe.despair_law(heavy, 1e6, pe.TruncationPolicy(alpha=1e-12, hard_cap=40))


def test_policy_validation():
    with pytest.raises(ValueError):
        pe.TruncationPolicy(alpha=0.0)
    with pytest.raises(ValueError):
        pe.TruncationPolicy(hard_cap=0)
    p = pe.TruncationPolicy(1e-9, 500)
    assert pe.TruncationPolicy.from_dict(p.to_dict()) == p


# -- expectations --------------------------------------------------------------

def test_expect_f_T_examples(geo_half):
    for law in LAWS:
        d = pe.despair_law(law, 2.0)
        assert pe.expect_f_T(law, 2.0, one) == pytest.approx(1 - d.residual, abs=1e-15)
    assert pe.expect_f_T(geo_half, 1.0, ident, TIGHT) == pytest.approx(GEO_HALF_V1["E_T"], abs=1e-14)
    ind2 = lambda k: (np.asarray(k) == 2).astype(float)
    assert pe.expect_f_T(Table((1.0,)), 1.0, ind2) == pytest.approx(1 - E1, abs=1e-15)


def test_expect_f_T_bound(geo_half):
    val, bound = pe.expect_f_T(geo_half, 1000.0, ident, return_bound=True)
    assert 0 <= bound <= 1e-12 * 1e4
    assert val > 1


def test_expected_despair_examples(geo_half):
    assert pe.expected_despair(geo_half, 0.0) == 1.0
    assert pe.expected_despair(Table((1.0,)), 1.0) == pytest.approx(2 - E1, abs=1e-15)
    assert pe.expected_despair(geo_half, 1.0, TIGHT) == pytest.approx(GEO_HALF_V1["E_T"], abs=1e-14)
    assert pe.expected_despair(geo_half, 1.0) == pytest.approx(1.49138, abs=1e-5)


def test_expected_despair_matches_identity_expectation():
    for law in LAWS:
        for v in (0.1, 1.0, 10.0, 1000.0):
            assert abs(pe.expected_despair(law, v) - pe.expect_f_T(law, v, ident)) <= 1e-12


def test_expected_yield_and_effort_examples(geo_half):
    assert pe.expected_yield(geo_half, 0.0) == 0.0
    assert pe.expected_yield(Table((1.0,)), 2.0) == pytest.approx(2.0, abs=1e-14)
    assert pe.expected_yield(geo_half, 1.0, TIGHT) == pytest.approx(GEO_HALF_V1["E_Y"], abs=1e-14)
    assert pe.expected_effort(geo_half, 0.0) == 0.0
    assert pe.expected_effort(Table((1.0,)), 1.0) == pytest.approx(1.0, abs=1e-14)
    assert pe.expected_effort(geo_half, 1.0, TIGHT) == pytest.approx(GEO_HALF_V1["E_M"], abs=1e-14)


def test_yield_variance_examples(geo_half):
    assert pe.yield_variance(geo_half, 0.0) == 0.0
    assert pe.yield_variance(Table((1.0,)), 1.0) == pytest.approx(1.0, abs=1e-13)
    assert pe.yield_variance(geo_half, 1.0) > 0


@pytest.mark.parametrize("law", [Geometric(0.5), Table((0.3, 0.2, 0.1)), Mixture(0.2, 0.3, 0.5, 0.4), Table((0.2, 0.0, 0.3), 0.5)])
@pytest.mark.parametrize("v", [0.5, 2.0])
def test_moments_match_poisson_mixture_of_fixed_pools(law, v):
    # independent oracle: mix the exact fixed-pool chain over Poisson weights
    mixed = fp.prior_stats(law, fp.Poisson(v), tail=1e-15)
    assert pe.expected_despair(law, v) == pytest.approx(mixed.e_T, abs=1e-10)
    assert pe.expected_yield(law, v) == pytest.approx(mixed.e_Y, abs=1e-10)
    assert pe.expected_effort(law, v) == pytest.approx(mixed.e_M, abs=1e-10)
    assert pe.yield_variance(law, v) == pytest.approx(mixed.var_Y, abs=1e-9)


# -- yield law -----------------------------------------------------------------

def test_yield_law_examples(geo_half):
    for law in LAWS[:4]:
        yl = pe.yield_law(law, 1.5, 10)
        assert yl.probs[0] == pytest.approx(math.exp(-law.mass_at(1) * 1.5), rel=1e-14)
    yl = pe.yield_law(Table((1.0,)), 1.0, 5)
    assert yl.probs[1] == pytest.approx(E1, abs=1e-15)
    yl = pe.yield_law(geo_half, 1.0, 30)
    assert abs(yl.mean - pe.expected_yield(geo_half, 1.0)) < 1e-6
    assert abs(yl.variance - pe.yield_variance(geo_half, 1.0)) < 1e-6
    assert yl.lost_mass >= 0
    assert math.fsum(yl.probs) + yl.lost_mass == pytest.approx(1.0, abs=1e-12)


# -- mixture recursion ---------------------------------------------------------

def test_mixture_recursion_examples(geo_half):
    d = pe.despair_law(geo_half, 1.0)
    assert pe.expect_via_mixture_recursion(geo_half, 1.0, one) == pytest.approx(1 - d.residual, abs=1e-13)
    assert pe.expect_via_mixture_recursion(geo_half, 1.0, ident) == pytest.approx(pe.expected_despair(geo_half, 1.0), abs=1e-12)
    assert pe.expect_via_mixture_recursion(Table((1.0,)), 1.0, ident) == pytest.approx(2 - E1, abs=1e-14)


def test_mixture_recursion_agrees_with_series():
    for law in (Geometric(0.5), Geometric(1 / 512), Table((0.3, 0.2, 0.1)), Mixture(0.2, 0.3, 0.5, 0.4)):
        fs = [one, ident, as_vector(law.cdf_array), as_vector(law.truncated_mean_array)]
        for v in (0.1, 1.0, 10.0, 1000.0):
            for f in fs:
                assert abs(pe.expect_f_T(law, v, f) - pe.expect_via_mixture_recursion(law, v, f)) <= 1e-10


def test_weighted_responses_reduce_to_yield():
    for law in LAWS:
        assert pe.expected_weighted_responses(law, 3.0, one) == pytest.approx(pe.expected_yield(law, 3.0), abs=1e-12)


def test_campaign_stats_bundle(geo_half):
    cs = pe.campaign_stats(geo_half, 1.0, TIGHT, y_max=20)
    assert cs.e_T == pytest.approx(GEO_HALF_V1["E_T"], abs=1e-14)
    assert cs.law_Y is not None and cs.law_Y.probs[0] == pytest.approx(GEO_HALF_V1["P_T"][0])
    d = cs.to_dict()
    assert set(d) >= {"law_T", "e_T", "e_Y", "var_Y", "e_M"}


# -- properties ----------------------------------------------------------------

@given(st.floats(1e-3, 1.0), st.lists(st.floats(0.0, 2000.0), min_size=2, max_size=6))
@settings(max_examples=40, deadline=None)
def test_yield_nondecreasing_in_v(p, vs):
    vs = sorted(vs)
    ys = [pe.expected_yield(Geometric(p), v) for v in vs]
    assert all(b >= a - 1e-12 * max(1.0, a) for a, b in zip(ys, ys[1:]))


@given(st.floats(0.0, 50.0))
@settings(max_examples=30, deadline=None)
def test_despair_mass_sums_to_one(v):
    for law in (Geometric(0.3), Table((0.3, 0.2, 0.1)), Mixture(0.2, 0.3, 0.5, 0.4)):
        d = pe.despair_law(law, v)
        assert math.fsum(d.probs) + d.residual == pytest.approx(1.0, abs=1e-12)
        assert pe.expected_despair(law, v) >= 1.0
        assert pe.yield_variance(law, v) >= 0.0
