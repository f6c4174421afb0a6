"""Monte Carlo engine for the multi-hop V2V link.

Each trial places vehicles on a 1-D road, picks relays greedily toward the
target hop distance, checks unit-disk connectivity, and counts slot-level
retransmissions under log-normal shadowing.
"""

from __future__ import annotations

import bisect
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .analytic import link_margin_db, quality_score
from .params import RadioParams, ScenarioParams, ServiceProfile

FADING_MODES = ("per_slot", "per_hop")
PLACEMENT_MODES = ("poisson", "lattice")
DEFAULT_MAX_SLOTS = 10**6


class InsufficientData(RuntimeError):
    """No usable delay sample: mean delay (and so quality) is undefined.

    ``stats`` still carries the connectivity estimate.
    """

    def __init__(self, message: str, stats: "EnsembleStats"):
        super().__init__(message)
        self.stats = stats


@dataclass(frozen=True)
class VehiclePlacement:
    positions_m: np.ndarray

    @property
    def last_index(self) -> int:
        return len(self.positions_m) - 1


@dataclass(frozen=True)
class RelayChain:
    indices: tuple[int, ...]
    hop_distances_m: tuple[float, ...]

    @property
    def hop_count(self) -> int:
        return len(self.hop_distances_m)


@dataclass(frozen=True)
class TrialOutcome:
    connected: bool
    delay_us: float
    hop_count: int
    truncated: bool = False


@dataclass(frozen=True)
class EnsembleStats:
    trials: int
    connected: int
    connectivity_hat: float
    connectivity_ci: tuple[float, float]
    delay_samples: int
    truncated: int
    mean_delay_us: float
    delay_se_us: float
    quality_hat: float
    alpha: float
    beta: float


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent generator for one trial, derived from ``(seed, trial)`` only."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(trial,))))


def spawn_vehicles(
    scenario: ScenarioParams, rng: np.random.Generator, placement: str = "poisson"
) -> VehiclePlacement:
    """Draw a road snapshot: source at 0, destination at ``span_m``.

    ``poisson`` draws a Poisson(rho*L) count of intermediate vehicles placed
    uniformly; ``lattice`` puts them exactly every ``hop_distance_m`` meters.
    """
    L = scenario.span_m
    if placement == "lattice":
        r = scenario.hop_distance_m
        inner = np.arange(1, math.ceil(L / r)) * r
        inner = inner[inner < L]
    elif placement == "poisson":
        n = rng.poisson(scenario.density_per_m * L)
        inner = np.sort(rng.uniform(0.0, L, size=n))
        # uniform draws may land on an endpoint with probability ~0; keep order strict
        inner = inner[(inner > 0.0) & (inner < L)]
        if len(inner) > 1:
            inner = inner[np.concatenate(([True], np.diff(inner) > 0))]
    else:
        raise ValueError(f"unknown placement mode {placement!r}")
    return VehiclePlacement(np.concatenate(([0.0], inner, [L])))


def select_relays(placement: VehiclePlacement, hop_distance_m: float) -> RelayChain:
    """Greedy forward relay choice: next relay is the vehicle ahead whose
    position is closest to ``current + hop_distance_m``; ties go to the
    farther vehicle."""
    xs = placement.positions_m.tolist()
    last = len(xs) - 1
    current = 0
    indices = [0]
    while current != last:
        target = xs[current] + hop_distance_m
        # first index > current with x >= target
        hi = bisect.bisect_left(xs, target, current + 1)
        if hi > last:
            best = last
        elif hi == current + 1:
            best = hi
        else:
            below = hi - 1
            best = hi if xs[hi] - target <= target - xs[below] else below
        indices.append(best)
        current = best
    hops = tuple(xs[b] - xs[a] for a, b in zip(indices, indices[1:]))
    return RelayChain(tuple(indices), hops)


def check_connectivity(chain: RelayChain, radio: RadioParams) -> bool:
    return all(d <= radio.coverage_radius_m for d in chain.hop_distances_m)


def sample_slot_successes(
    distance_m: float, radio: RadioParams, n: int, rng: np.random.Generator
) -> int:
    """Count successful slots among ``n`` independent shadowing draws."""
    xi = rng.normal(0.0, radio.shadow_sigma_db, size=n)
    return int(np.count_nonzero(xi <= link_margin_db(distance_m, radio)))


def _slots_per_hop(
    margins: np.ndarray, sigma: float, rng: np.random.Generator, max_slots: int
) -> tuple[np.ndarray, bool]:
    """Slots until first success on each hop, drawing one shadowing value per slot."""
    k = len(margins)
    slots = np.zeros(k, dtype=np.int64)
    pending = np.arange(k)
    block = 16
    while len(pending):
        room = max_slots - slots[pending]
        width = int(min(block, room.max()))
        draws = rng.normal(0.0, sigma, size=(len(pending), width)) <= margins[pending, None]
        hit = draws.any(axis=1)
        first = draws.argmax(axis=1)
        # a hit past the hop's own remaining room does not count
        hit &= first < room
        slots[pending[hit]] += first[hit] + 1
        slots[pending[~hit]] += np.minimum(width, room[~hit])
        still = pending[~hit]
        if len(still) and (slots[still] >= max_slots).any():
            return slots, True
        pending = still
        block *= 4
    return slots, False


def simulate_delay(
    chain: RelayChain,
    radio: RadioParams,
    scenario: ScenarioParams,
    rng: np.random.Generator,
    max_slots_per_hop: int = DEFAULT_MAX_SLOTS,
    fading_mode: str = "per_slot",
) -> TrialOutcome:
    if max_slots_per_hop < 1:
        raise ValueError("max_slots_per_hop must be >= 1")
    margins = np.array([link_margin_db(d, radio) for d in chain.hop_distances_m])
    k = chain.hop_count
    if fading_mode == "per_slot":
        slots, truncated = _slots_per_hop(margins, radio.shadow_sigma_db, rng, max_slots_per_hop)
    elif fading_mode == "per_hop":
        # one shadowing value per hop: a failed hop fails every slot until the cap
        ok = rng.normal(0.0, radio.shadow_sigma_db, size=k) <= margins
        truncated = bool((~ok).any())
        slots = np.where(ok, 1, max_slots_per_hop)
    else:
        raise ValueError(f"unknown fading mode {fading_mode!r}")
    if truncated:
        return TrialOutcome(True, math.inf, k, truncated=True)
    delay = int(slots.sum()) * scenario.slot_time_us + (k - 1) * scenario.proc_time_us
    return TrialOutcome(True, delay, k)


def run_trial(
    scenario: ScenarioParams,
    radio: RadioParams,
    rng: np.random.Generator,
    max_slots_per_hop: int = DEFAULT_MAX_SLOTS,
    fading_mode: str = "per_slot",
    placement: str = "poisson",
) -> TrialOutcome:
    vehicles = spawn_vehicles(scenario, rng, placement)
    chain = select_relays(vehicles, scenario.hop_distance_m)
    if not check_connectivity(chain, radio):
        return TrialOutcome(False, math.inf, chain.hop_count)
    return simulate_delay(chain, radio, scenario, rng, max_slots_per_hop, fading_mode)


def _run_block(args) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    scenario, radio, seed, start, stop, max_slots, fading_mode, placement = args
    n = stop - start
    connected = np.zeros(n, dtype=bool)
    truncated = np.zeros(n, dtype=bool)
    delay = np.full(n, np.inf)
    for i in range(n):
        out = run_trial(
            scenario, radio, trial_rng(seed, start + i), max_slots, fading_mode, placement
        )
        connected[i] = out.connected
        truncated[i] = out.truncated
        delay[i] = out.delay_us
    return connected, truncated, delay


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    p = successes / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == n else min(1.0, centre + half)
    return lo, hi


def run_ensemble(
    scenario: ScenarioParams,
    radio: RadioParams,
    profile: ServiceProfile,
    trials: int,
    seed: int,
    max_slots_per_hop: int = DEFAULT_MAX_SLOTS,
    fading_mode: str = "per_slot",
    placement: str = "poisson",
    n_jobs: Optional[int] = 1,
) -> EnsembleStats:
    """Run ``trials`` independent trials and aggregate empirical P, E[T], Q*.

    Trial ``i`` always uses the substream derived from ``(seed, i)``, so the
    result does not depend on ``n_jobs``.

    Raises :class:`InsufficientData` when no trial yields a delay sample
    and the delay weight is nonzero.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if fading_mode not in FADING_MODES:
        raise ValueError(f"unknown fading mode {fading_mode!r}")
    if placement not in PLACEMENT_MODES:
        raise ValueError(f"unknown placement mode {placement!r}")

    jobs = max(1, n_jobs or 1)
    edges = np.linspace(0, trials, min(jobs * 4, trials) + 1).astype(int) if jobs > 1 else [0, trials]
    tasks = [
        (scenario, radio, seed, int(a), int(b), max_slots_per_hop, fading_mode, placement)
        for a, b in zip(edges[:-1], edges[1:])
        if b > a
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_block, tasks))
    else:
        parts = [_run_block(t) for t in tasks]
    connected = np.concatenate([p[0] for p in parts])
    truncated = np.concatenate([p[1] for p in parts])
    delay = np.concatenate([p[2] for p in parts])

    n_conn = int(connected.sum())
    usable = delay[connected & ~truncated]
    if len(usable):
        mean = float(usable.mean())
        se = float(usable.std(ddof=1) / math.sqrt(len(usable))) if len(usable) > 1 else math.nan
    else:
        mean = se = math.nan
    p_hat = n_conn / trials
    if math.isnan(mean):
        quality = profile.alpha * p_hat if profile.beta == 0 else math.nan
    else:
        quality = quality_score(p_hat, 1.0 - mean / scenario.max_delay_us, profile)
    stats = EnsembleStats(
        trials=trials,
        connected=n_conn,
        connectivity_hat=p_hat,
        connectivity_ci=wilson_interval(n_conn, trials),
        delay_samples=len(usable),
        truncated=int(truncated.sum()),
        mean_delay_us=mean,
        delay_se_us=se,
        quality_hat=quality,
        alpha=profile.alpha,
        beta=profile.beta,
    )
    if not len(usable) and profile.beta != 0:
        raise InsufficientData(
            f"no connected, untruncated trials out of {trials}; mean delay undefined", stats
        )
    return stats
