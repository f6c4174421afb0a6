import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tests import oracles
from v2vquality.analytic import (
    ceil_snap,
    erlang_distance_cdf,
    expected_hops,
    hop_delay_us,
    hop_success_prob,
    link_margin_db,
    multihop_delay_us,
    path_connectivity,
    poisson_count_prob,
    poisson_tails,
    assess_link,
)
from v2vquality.params import RadioParams, ScenarioParams, ServiceProfile

# Frozen from tests/oracles.py at 50 significant digits.
POISSON_PMF_50_50 = 0.056325006325190825412
MARGIN_1M = 41.389700043360188048
MARGIN_100M = -0.41029995663981195214
HOP_SUCCESS_100M = 0.46729950403798915015
HOP_DELAY_100M = 106.99775961229191898
MULTIHOP_DELAY_R50 = 1516.0388525241291923
ERLANG_10_10 = 0.54207028552814779169
CONNECTIVITY_RHO01_R100 = 0.0021905643406893699119
DEFAULT_P = 0.55223500537433184362
DEFAULT_Q = 0.738216531374062692


def perfect_radio(**kw):
    # enormous transmit power: every slot succeeds
    return RadioParams(tx_power_dbm=1e6, **kw)


# --- Poisson vehicle count ------------------------------------------------

def test_poisson_empty_road():
    assert poisson_count_prob(0, 10.0, 0.1) == pytest.approx(math.exp(-1), rel=1e-15)


def test_poisson_mean_one():
    assert poisson_count_prob(1, 10.0, 0.1) == pytest.approx(math.exp(-1), rel=1e-15)


def test_poisson_against_high_precision():
    assert poisson_count_prob(50, 1000.0, 0.05) == pytest.approx(POISSON_PMF_50_50, rel=1e-12)


@pytest.mark.parametrize("lam", [0.5, 5.0, 50.0, 250.0])
def test_poisson_sums_to_one(lam):
    upper = int(lam + 20 * math.sqrt(lam)) + 1
    total = math.fsum(poisson_count_prob(n, 1000.0, lam / 1000.0) for n in range(upper + 1))
    assert total == pytest.approx(1.0, abs=1e-9)


def test_poisson_large_n_no_overflow():
    p = poisson_count_prob(2000, 1000.0, 2.0)
    assert 0.0 < p < 1.0


# --- link margin and hop success -------------------------------------------

def test_margin_values(radio):
    assert link_margin_db(1.0, radio) == pytest.approx(MARGIN_1M, abs=1e-12)
    assert link_margin_db(100.0, radio) == pytest.approx(MARGIN_100M, abs=1e-12)


def test_margin_slope_per_decade(radio):
    assert link_margin_db(37.0, radio) - link_margin_db(370.0, radio) == pytest.approx(20.9, abs=1e-12)


def test_hop_success_half_at_zero_margin(radio):
    r0 = 10 ** (MARGIN_1M / 20.9)
    assert link_margin_db(r0, radio) == pytest.approx(0.0, abs=1e-12)
    assert hop_success_prob(r0, radio) == pytest.approx(0.5, abs=1e-12)


def test_hop_success_limits():
    assert hop_success_prob(1.0, RadioParams(tx_power_dbm=1e4)) == 1.0
    assert hop_success_prob(1.0, RadioParams(tx_power_dbm=-1e4)) == 0.0


def test_hop_success_oracle(radio):
    assert hop_success_prob(100.0, radio) == pytest.approx(HOP_SUCCESS_100M, abs=1e-15)


@given(st.floats(0.1, 1e4), st.floats(0.0, 30.0), st.floats(-30, 60))
def test_hop_success_monotone(r, extra_db, tx):
    radio = RadioParams(tx_power_dbm=tx)
    p = hop_success_prob(r, radio)
    assert 0.0 <= p <= 1.0
    assert hop_success_prob(r * 1.5, radio) <= p
    assert hop_success_prob(r, RadioParams(tx_power_dbm=tx + extra_db)) >= p


@given(st.floats(1.0, 500.0))
def test_hop_success_strictly_drops_over_a_decade(r):
    radio = RadioParams()
    assert hop_success_prob(10 * r, radio) < hop_success_prob(r, radio)


# --- hop and multi-hop delay ----------------------------------------------

def test_hop_delay_perfect_channel():
    assert hop_delay_us(50.0, perfect_radio(), 50.0) == 50.0


def test_hop_delay_zero_margin(radio):
    r0 = 10 ** (MARGIN_1M / 20.9)
    assert hop_delay_us(r0, radio, 50.0) == pytest.approx(100.0, rel=1e-12)


def test_hop_delay_oracle(radio):
    assert hop_delay_us(100.0, radio, 50.0) == pytest.approx(HOP_DELAY_100M, rel=1e-13)


def test_hop_delay_underflow_is_infinite():
    assert hop_delay_us(100.0, RadioParams(tx_power_dbm=-1e4), 50.0) == math.inf


@pytest.mark.parametrize("L, r, k", [(1000, 100, 10), (1000, 333, 4), (1000, 1000, 1),
                                     (1000, 5000, 1), (1000, 1000 / 3, 3)])
def test_expected_hops(L, r, k):
    assert expected_hops(L, r) == k


@given(st.floats(1.0, 1e5), st.floats(0.5, 1e5))
def test_expected_hops_is_a_ceiling(L, r):
    k = expected_hops(L, r)
    assert k >= 1
    assert k * r >= L * (1 - 1e-9)
    assert (k - 1) * r < L


def test_ceil_snap_absorbs_rounding():
    assert 0.07 * 100 > 7
    assert ceil_snap(0.07 * 100) == 7
    assert ceil_snap(3.0) == 3
    assert ceil_snap(3.001) == 4


def test_multihop_delay_perfect_channel():
    s = ScenarioParams(span_m=1000, hop_distance_m=100, slot_time_us=50, proc_time_us=20)
    assert multihop_delay_us(s, perfect_radio()) == 680.0


def test_multihop_delay_single_hop():
    s = ScenarioParams(span_m=1000, hop_distance_m=1500, slot_time_us=50, proc_time_us=20)
    assert multihop_delay_us(s, perfect_radio()) == 50.0


def test_multihop_delay_oracle(radio):
    s = ScenarioParams(hop_distance_m=50.0)
    assert multihop_delay_us(s, radio) == pytest.approx(MULTIHOP_DELAY_R50, rel=1e-13)


def test_multihop_delay_matches_closed_form(radio):
    # 2*k*t/(1+M) + (k-1)*T_pro
    s = ScenarioParams(hop_distance_m=70.0)
    m = math.erf(link_margin_db(70.0, radio) / (math.sqrt(2) * radio.shadow_sigma_db))
    k = math.ceil(1000 / 70)
    expected = 2 * k * 50.0 / (1 + m) + (k - 1) * 20.0
    assert multihop_delay_us(s, radio) == pytest.approx(expected, rel=1e-12)


# --- Erlang distance and connectivity --------------------------------------

def test_erlang_shape_one_is_exponential():
    for r0 in (0.5, 10.0, 80.0):
        assert erlang_distance_cdf(r0, 1, 0.07) == pytest.approx(-math.expm1(-0.07 * r0), rel=1e-14)


def test_erlang_at_zero():
    assert erlang_distance_cdf(0.0, 5, 0.1) == 0.0


def test_erlang_oracle():
    assert erlang_distance_cdf(100.0, 10, 0.1) == pytest.approx(ERLANG_10_10, rel=1e-13)


def test_poisson_tails_sum_to_one():
    for shape, lam in [(1, 0.1), (5, 3.0), (50, 100.0), (40, 12.0)]:
        lo, hi = poisson_tails(shape, lam)
        assert lo + hi == pytest.approx(1.0, abs=1e-15)


def test_erlang_deep_tail_keeps_relative_precision():
    value = erlang_distance_cdf(1.0, 50, 1.0)
    expected = float(oracles.erlang_cdf(50, 1.0))
    assert expected < 1e-60
    assert value == pytest.approx(expected, rel=1e-12)


@given(st.integers(1, 60), st.floats(0.0, 200.0), st.floats(0.0, 50.0))
def test_erlang_monotone(shape, r0, dr):
    rho = 0.1
    f = erlang_distance_cdf(r0, shape, rho)
    assert 0.0 <= f <= 1.0
    assert erlang_distance_cdf(r0 + dr, shape, rho) >= f - 1e-15
    assert erlang_distance_cdf(r0, shape + 1, rho) <= f + 1e-15


@settings(max_examples=200)
@given(st.integers(1, 50), st.floats(1e-3, 100.0))
def test_erlang_matches_incomplete_gamma(shape, lam):
    expected = float(oracles.erlang_cdf(shape, lam))
    assert erlang_distance_cdf(lam, shape, 1.0) == pytest.approx(expected, rel=1e-10, abs=1e-300)


def test_connectivity_infinite_coverage():
    assert path_connectivity(ScenarioParams(), RadioParams(coverage_radius_m=1e9)) == 1.0


def test_connectivity_single_hop_exponential():
    s = ScenarioParams(density_per_m=0.001, span_m=1000.0, hop_distance_m=1000.0)
    r = RadioParams(coverage_radius_m=150.0)
    assert path_connectivity(s, r) == pytest.approx(-math.expm1(-0.001 * 150.0), rel=1e-14)


def test_connectivity_oracle(radio):
    s = ScenarioParams(density_per_m=0.1, hop_distance_m=100.0)
    assert path_connectivity(s, radio) == pytest.approx(CONNECTIVITY_RHO01_R100, rel=1e-12)
    assert path_connectivity(s, radio) == pytest.approx(ERLANG_10_10**10, rel=1e-12)


def test_connectivity_near_one_uses_log1p():
    s = ScenarioParams(density_per_m=0.5, hop_distance_m=1.0, span_m=1e6)
    r = RadioParams(coverage_radius_m=100.0)
    base_complement = math.exp(-50.0)
    expected = math.exp(-1e6 * base_complement)
    assert path_connectivity(s, r) == pytest.approx(expected, rel=1e-9)


# --- assess_link -----------------------------------------------------------

def test_assess_reliability_only(scenario, radio):
    a = assess_link(scenario, radio, ServiceProfile(1.0, 0.0))
    assert a.quality == a.connectivity


def test_assess_delay_only_at_budget(radio):
    s = ScenarioParams(hop_distance_m=50.0)
    t = multihop_delay_us(s, radio)
    s = ScenarioParams(hop_distance_m=50.0, max_delay_us=t)
    a = assess_link(s, radio, ServiceProfile(0.0, 1.0))
    assert a.delay_indicator == 0.0
    assert a.quality == 0.0


def test_assess_default_oracle(scenario, radio, profile):
    a = assess_link(scenario, radio, profile)
    assert a.connectivity == pytest.approx(DEFAULT_P, rel=1e-12)
    assert a.delay_us == pytest.approx(MULTIHOP_DELAY_R50, rel=1e-13)
    assert a.quality == pytest.approx(DEFAULT_Q, rel=1e-12)
    assert a.hop_count == 20
    assert a.erlang_shape == 5
    assert not a.delay_saturated


def test_assess_infinite_delay():
    radio = RadioParams(tx_power_dbm=-1e4)
    s = ScenarioParams()
    a = assess_link(s, radio, ServiceProfile(0.5, 0.5))
    assert a.delay_saturated
    assert a.delay_us == math.inf
    assert a.quality == -math.inf
    a = assess_link(s, radio, ServiceProfile(1.0, 0.0))
    assert a.quality == a.connectivity


def test_assess_quality_strictly_below_one(radio):
    s = ScenarioParams(density_per_m=10.0, hop_distance_m=1.0)
    a = assess_link(s, RadioParams(tx_power_dbm=1e6, coverage_radius_m=1e6), ServiceProfile())
    assert a.quality < 1.0
