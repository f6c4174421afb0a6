"""Grid sweeps of Q*, best hop distance search, and the figure grids."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .analytic import assess_link
from .params import RadioParams, ScenarioParams, ServiceProfile, ValidationError, validate
from .sim import DEFAULT_MAX_SLOTS, InsufficientData, run_ensemble

ENGINES = ("analytic", "montecarlo")

DEFAULT_R_MIN = 10.0
DEFAULT_R_MAX = 200.0
DEFAULT_R_STEP = 1.0
FIGURE_MC_TRIALS = 2000


def grid_values(start: float, stop: float, step: float) -> list[float]:
    """Inclusive arithmetic grid, rounded so 0.05 + 0.01*k prints cleanly."""
    if step <= 0:
        raise ValueError("step must be positive")
    if stop < start:
        raise ValueError("stop must be >= start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(n)]


@dataclass(frozen=True)
class SweepGrid:
    densities: tuple[float, ...]
    hop_distances: tuple[float, ...]
    profiles: tuple[ServiceProfile, ...] = (ServiceProfile(),)

    def __post_init__(self):
        object.__setattr__(self, "densities", tuple(self.densities))
        object.__setattr__(self, "hop_distances", tuple(self.hop_distances))
        object.__setattr__(self, "profiles", tuple(self.profiles))
        problems = []
        for name, values in (("densities", self.densities), ("hop_distances", self.hop_distances)):
            if not values:
                problems.append((name, "empty"))
            elif any(v <= 0 for v in values):
                problems.append((name, "entries must be > 0"))
            elif any(b <= a for a, b in zip(values, values[1:])):
                problems.append((name, "not strictly increasing"))
        if not self.profiles:
            problems.append(("profiles", "empty"))
        for p in self.profiles:
            problems.extend(p.violations())
        if problems:
            raise ValidationError(problems)

    def points(self):
        for rho in self.densities:
            for r in self.hop_distances:
                for profile in self.profiles:
                    yield rho, r, profile


@dataclass
class SweepRow:
    rho: float
    r_m: float
    alpha: float
    beta: float
    P: float
    T_us: float
    D: float
    Q: float
    # Monte Carlo only
    P_ci_lo: Optional[float] = None
    P_ci_hi: Optional[float] = None
    T_se_us: Optional[float] = None
    trials: Optional[int] = None
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class SweepResult:
    rows: list[SweepRow]
    engine: str = "analytic"
    provenance: dict = field(default_factory=dict)

    def series(self, key: str) -> dict:
        """Group rows by ``key`` (e.g. ``"rho"`` or ``"r_m"``), keeping order."""
        out: dict = {}
        for row in self.rows:
            out.setdefault(getattr(row, key), []).append(row)
        return out


def _provenance(radio, base_scenario, engine, **extra) -> dict:
    return {"engine": engine, "radio": asdict(radio), "scenario": asdict(base_scenario), **extra}


def sweep(
    grid: SweepGrid,
    radio: RadioParams,
    base_scenario: ScenarioParams,
    engine: str = "analytic",
    trials: int = FIGURE_MC_TRIALS,
    seed: int = 0,
    max_slots_per_hop: int = DEFAULT_MAX_SLOTS,
    fading_mode: str = "per_slot",
    placement: str = "poisson",
    n_jobs: int = 1,
) -> SweepResult:
    """Evaluate Q* at every grid point in (rho, r, profile) order.

    Monte Carlo rows that cannot produce a delay estimate are kept with
    ``error`` set instead of aborting the sweep.
    """
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}")
    validate(radio)
    rows = []
    for rho, r, profile in grid.points():
        scenario = base_scenario.replace(density_per_m=rho, hop_distance_m=r)
        if engine == "analytic":
            a = assess_link(scenario, radio, profile)
            rows.append(
                SweepRow(rho, r, profile.alpha, profile.beta, a.connectivity, a.delay_us,
                         a.delay_indicator, a.quality)
            )
            continue
        try:
            stats = run_ensemble(
                scenario, radio, profile, trials, seed, max_slots_per_hop, fading_mode,
                placement, n_jobs,
            )
            error = None
        except InsufficientData as exc:
            stats, error = exc.stats, str(exc)
        rows.append(
            SweepRow(
                rho, r, profile.alpha, profile.beta,
                P=stats.connectivity_hat,
                T_us=stats.mean_delay_us,
                D=1.0 - stats.mean_delay_us / scenario.max_delay_us,
                Q=stats.quality_hat,
                P_ci_lo=stats.connectivity_ci[0],
                P_ci_hi=stats.connectivity_ci[1],
                T_se_us=stats.delay_se_us,
                trials=stats.trials,
                error=error,
            )
        )
    extra = {}
    if engine == "montecarlo":
        extra = {"seed": seed, "trials": trials, "fading_mode": fading_mode,
                 "placement": placement, "max_slots_per_hop": max_slots_per_hop}
    return SweepResult(rows, engine, _provenance(radio, base_scenario, engine, **extra))


def optimal_hop_distance(
    density: float,
    profile: ServiceProfile,
    radio: RadioParams,
    base_scenario: ScenarioParams,
    r_min: float = DEFAULT_R_MIN,
    r_max: float = DEFAULT_R_MAX,
    step: float = DEFAULT_R_STEP,
) -> tuple[float, float]:
    """Exhaustive grid argmax of Q* over hop distance; ties keep the smallest r.

    Q*(r) jumps wherever L/r or rho*r crosses an integer, so only a grid
    scan is sound here.
    """
    if not 0 < r_min < r_max:
        raise ValueError("need 0 < r_min < r_max")
    best_r, best_q = math.nan, -math.inf
    for r in grid_values(r_min, r_max, step):
        scenario = base_scenario.replace(density_per_m=density, hop_distance_m=r)
        q = assess_link(scenario, radio, profile).quality
        if q > best_q:
            best_r, best_q = r, q
    return best_r, best_q


FIGURE_DENSITIES = {
    2: tuple(grid_values(0.05, 0.25, 0.01)),
    3: (0.07, 0.10, 0.15),
    4: tuple(grid_values(0.05, 0.25, 0.01)),
    5: (0.07,),
}
FIGURE_HOP_DISTANCES = {
    2: tuple(grid_values(DEFAULT_R_MIN, DEFAULT_R_MAX, 5.0)),
    3: tuple(grid_values(DEFAULT_R_MIN, DEFAULT_R_MAX, DEFAULT_R_STEP)),
    4: (30.0, 50.0, 80.0),
    5: tuple(grid_values(DEFAULT_R_MIN, DEFAULT_R_MAX, DEFAULT_R_STEP)),
}
FIGURE_PROFILES = {
    2: (ServiceProfile(0.5, 0.5),),
    3: (ServiceProfile(0.5, 0.5),),
    4: (ServiceProfile(0.5, 0.5),),
    5: (ServiceProfile(0.1, 0.9), ServiceProfile(0.5, 0.5), ServiceProfile(0.9, 0.1)),
}


def figure_grid(figure_id: int) -> SweepGrid:
    if figure_id not in FIGURE_DENSITIES:
        raise ValueError(f"unknown figure id {figure_id!r}; expected one of 2, 3, 4, 5")
    return SweepGrid(
        FIGURE_DENSITIES[figure_id], FIGURE_HOP_DISTANCES[figure_id], FIGURE_PROFILES[figure_id]
    )


def figure_data(
    figure_id: int,
    radio: RadioParams,
    base_scenario: ScenarioParams,
    engine: str = "analytic",
    **mc_options,
) -> SweepResult:
    """Rows for one of the parameter-study figures (2: rho x r surface,
    3: Q* vs r per rho, 4: Q* vs rho per r, 5: Q* vs r per weight pair)."""
    result = sweep(figure_grid(figure_id), radio, base_scenario, engine, **mc_options)
    result.provenance["figure"] = figure_id
    return result


def argmax_by(rows: Sequence[SweepRow], key: str = "r_m") -> float:
    """Value of ``key`` at the row with the largest Q*; first wins on ties."""
    q = np.array([row.Q for row in rows], dtype=float)
    return getattr(rows[int(np.nanargmax(q))], key)
