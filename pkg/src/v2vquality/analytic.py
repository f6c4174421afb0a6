"""Closed-form link model: hop success, multi-hop delay, connectivity and Q*."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .params import RadioParams, ScenarioParams, ServiceProfile, noise_power_dbm

PATH_LOSS_INTERCEPT_DB = 69.6
PATH_LOSS_SLOPE_DB = 20.9
MIN_HOP_SUCCESS = 1e-300

# Relative slack for ceilings of products/ratios that should land on an
# integer but miss by rounding (0.06 * 50 == 3.0000000000000004).
_CEIL_RTOL = 1e-9


def ceil_snap(x: float) -> int:
    """``ceil(x)``, treating values a few ulps above an integer as that integer."""
    below = math.floor(x)
    if x - below <= _CEIL_RTOL * max(1.0, abs(x)):
        return int(below)
    return int(math.ceil(x))


def poisson_count_prob(n: int, span_m: float, density_per_m: float) -> float:
    """Probability of exactly ``n`` vehicles on a road of ``span_m`` meters."""
    lam = density_per_m * span_m
    if n < 0:
        return 0.0
    return math.exp(n * math.log(lam) - lam - math.lgamma(n + 1))


def link_margin_db(distance_m: float, radio: RadioParams) -> float:
    """Budget left after threshold, noise and deterministic path loss at ``distance_m``."""
    return (
        radio.tx_power_dbm
        - radio.snr_threshold_db
        - noise_power_dbm(radio)
        - PATH_LOSS_INTERCEPT_DB
        - PATH_LOSS_SLOPE_DB * math.log10(distance_m)
    )


def path_loss_db(distance_m: float, shadow_db: float = 0.0) -> float:
    return PATH_LOSS_INTERCEPT_DB + PATH_LOSS_SLOPE_DB * math.log10(distance_m) + shadow_db


def success_prob_from_margin(margin_db: float, sigma_db: float) -> float:
    # P(xi <= margin) for xi ~ N(0, sigma^2); erfc keeps both tails accurate.
    return 0.5 * math.erfc(-margin_db / (math.sqrt(2.0) * sigma_db))


def hop_success_prob(distance_m: float, radio: RadioParams) -> float:
    """Probability that one slot over ``distance_m`` meters clears the SNR threshold."""
    return success_prob_from_margin(link_margin_db(distance_m, radio), radio.shadow_sigma_db)


def hop_delay_us(distance_m: float, radio: RadioParams, slot_time_us: float) -> float:
    """Mean slots-until-success delay of one hop; ``inf`` when success underflows."""
    p = hop_success_prob(distance_m, radio)
    if p < MIN_HOP_SUCCESS:
        return math.inf
    return slot_time_us / p


def expected_hops(span_m: float, hop_distance_m: float) -> int:
    return max(1, ceil_snap(span_m / hop_distance_m))


def multihop_delay_us(scenario: ScenarioParams, radio: RadioParams) -> float:
    """End-to-end delay assuming every hop has length exactly ``hop_distance_m``."""
    k = expected_hops(scenario.span_m, scenario.hop_distance_m)
    per_hop = hop_delay_us(scenario.hop_distance_m, radio, scenario.slot_time_us)
    return k * per_hop + (k - 1) * scenario.proc_time_us


def erlang_shape(density_per_m: float, hop_distance_m: float) -> int:
    return max(1, ceil_snap(density_per_m * hop_distance_m))


def poisson_tails(shape: int, lam: float) -> tuple[float, float]:
    """Return ``(P[N < shape], P[N >= shape])`` for ``N ~ Poisson(lam)``.

    The smaller of the two tails is summed directly with the term
    recurrence, anchored at a log-space term so nothing overflows; the other
    is its complement. Both are therefore accurate to a few ulps relative
    on the side that matters.
    """
    if shape < 1:
        raise ValueError("shape must be >= 1")
    if lam <= 0.0:
        return 1.0, 0.0
    log_lam = math.log(lam)

    def log_term(i: int) -> float:
        return i * log_lam - lam - math.lgamma(i + 1)

    if lam < shape:
        # upper tail: terms decrease from i = shape on
        term = math.exp(log_term(shape))
        total = term
        i = shape
        while term > total * 1e-18:
            i += 1
            term *= lam / i
            total += term
        upper = min(total, 1.0)
        return 1.0 - upper, upper

    # lower tail: walk down from i = shape - 1, terms decrease since i <= lam
    term = math.exp(log_term(shape - 1))
    total = term
    for i in range(shape - 1, 0, -1):
        term *= i / lam
        total += term
        if term < total * 1e-18:
            break
    lower = min(total, 1.0)
    return lower, 1.0 - lower


def erlang_distance_cdf(r0_m: float, shape: int, density_per_m: float) -> float:
    """P(sum of ``shape`` Exp(density) gaps <= ``r0_m``)."""
    if r0_m <= 0.0:
        return 0.0
    return poisson_tails(shape, density_per_m * r0_m)[1]


def path_connectivity(scenario: ScenarioParams, radio: RadioParams) -> float:
    """Probability that every hop of the relay chain fits within coverage."""
    k = expected_hops(scenario.span_m, scenario.hop_distance_m)
    shape = erlang_shape(scenario.density_per_m, scenario.hop_distance_m)
    lower, upper = poisson_tails(shape, scenario.density_per_m * radio.coverage_radius_m)
    if upper <= 0.0:
        return 0.0
    log_base = math.log1p(-lower) if lower < 0.5 else math.log(upper)
    return math.exp(k * log_base)


@dataclass(frozen=True)
class LinkAssessment:
    connectivity: float
    delay_us: float
    delay_indicator: float
    hop_count: int
    quality: float
    # intermediates, reported for auditing
    margin_db: float = math.nan
    hop_success: float = math.nan
    erlang_shape: int = 1
    erlang_base: float = math.nan
    delay_saturated: bool = False


def quality_score(connectivity: float, delay_indicator: float, profile: ServiceProfile) -> float:
    # beta == 0 drops the delay term entirely, even when D is -inf
    delay_term = 0.0 if profile.beta == 0 else profile.beta * delay_indicator
    return profile.alpha * connectivity + delay_term


def assess_link(
    scenario: ScenarioParams, radio: RadioParams, profile: ServiceProfile
) -> LinkAssessment:
    """Evaluate connectivity, delay, delay indicator and weighted quality Q*."""
    r = scenario.hop_distance_m
    margin = link_margin_db(r, radio)
    p_hop = success_prob_from_margin(margin, radio.shadow_sigma_db)
    shape = erlang_shape(scenario.density_per_m, r)

    connectivity = path_connectivity(scenario, radio)
    delay = multihop_delay_us(scenario, radio)
    indicator = 1.0 - delay / scenario.max_delay_us
    return LinkAssessment(
        connectivity=connectivity,
        delay_us=delay,
        delay_indicator=indicator,
        hop_count=expected_hops(scenario.span_m, r),
        quality=quality_score(connectivity, indicator, profile),
        margin_db=margin,
        hop_success=p_hop,
        erlang_shape=shape,
        erlang_base=erlang_distance_cdf(radio.coverage_radius_m, shape, scenario.density_per_m),
        delay_saturated=p_hop < MIN_HOP_SUCCESS,
    )
