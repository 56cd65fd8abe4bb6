"""Micro-parameter sweep harness, envelope geometry, and ROI evaluation.

Runs the full 360-combination grid (degree class x utility difference x
seeding pattern x rewiring probability x introduction rate), fits each
trajectory, and aggregates induced (p, q, r-squared, takeoff) records.
Envelope operations map fitted parameter clouds to convex regions and
classify points against them.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np

from diffusim.bass import BassParams, bass_curve, takeoff_time
from diffusim.calibrate import fit_bass
from diffusim.engine import DecisionParams, simulate
from diffusim.network import LatticeSpec, Neighborhood, build_lattice, rewire
from diffusim.seeding import Pattern, build_plan, default_innovator_count

DELTA_U_LEVELS = (0.6, 0.8)
SIGMA_LEVELS = (Pattern.COMPACT, Pattern.INTERMEDIATE, Pattern.UNIFORM)
REWIRE_LEVELS = (0.0, 0.0025, 0.005, 0.01, 0.02, 0.04)
GAMMA_LEVELS = (125, 200, 250, 500, 1000)
K_LEVELS = (8, 4)

SWEEP_CSV_HEADER = [
    "k", "delta_u", "sigma", "p_r", "gamma", "seed", "replication",
    "p", "q", "r_squared", "takeoff", "saturation_tick",
]

# sentinel for runs that never reached full adoption within the tick cap
NOT_SATURATED = -1


class TooFewPoints(ValueError):
    """Fewer than 3 non-collinear points; no 2-D hull exists."""


class Location(Enum):
    INSIDE = "inside"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


@dataclass(frozen=True)
class SimConfig:
    """One simulated micro-parameter combination."""

    lattice: LatticeSpec
    k: int
    delta_u: float
    sigma: Pattern
    p_r: float
    gamma: int
    alpha: float = 0.5
    seed: int = 0
    replication: int = 0

    def __post_init__(self) -> None:
        expected = {4: Neighborhood.VON_NEUMANN, 8: Neighborhood.MOORE}
        if self.k not in expected:
            raise ValueError(f"k must be 4 or 8, got {self.k}")
        if self.lattice.neighborhood is not expected[self.k]:
            raise ValueError(
                f"k={self.k} inconsistent with {self.lattice.neighborhood}"
            )
        if not 0.0 <= self.p_r <= 1.0:
            raise ValueError(f"p_r must be in [0, 1], got {self.p_r}")
        if self.gamma < 1:
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not math.isfinite(self.delta_u):
            raise ValueError("delta_u must be finite")
        if self.replication < 0:
            raise ValueError("replication must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit an unsigned 64-bit integer")


@dataclass(frozen=True)
class SweepRecord:
    """Induced aggregate parameters for one simulated run."""

    config: SimConfig
    p: float
    q: float
    r_squared: float
    takeoff: float
    saturation_tick: int


@dataclass(frozen=True)
class Envelope:
    """Convex region of fitted (p, q) points for one grid cell family."""

    subset_filter: tuple[int, float, Pattern]
    hull_vertices: np.ndarray  # (m, 2), counter-clockwise


def default_grid(
    rows: int = 200,
    cols: int = 200,
    k_levels: Sequence[int] = K_LEVELS,
    delta_u_levels: Sequence[float] = DELTA_U_LEVELS,
    sigma_levels: Sequence[Pattern] = SIGMA_LEVELS,
    p_r_levels: Sequence[float] = REWIRE_LEVELS,
    gamma_levels: Sequence[int] = GAMMA_LEVELS,
    alpha: float = 0.5,
) -> list[SimConfig]:
    """The factorial experiment grid in reference-table row order: degree
    class, then utility difference, seeding pattern, rewiring probability,
    and introduction rate innermost. Full defaults give 360 combinations."""
    grid = []
    for k in k_levels:
        neighborhood = Neighborhood.MOORE if k == 8 else Neighborhood.VON_NEUMANN
        lattice = LatticeSpec(rows, cols, neighborhood)
        for delta_u in delta_u_levels:
            for sigma in sigma_levels:
                for p_r in p_r_levels:
                    for gamma in gamma_levels:
                        grid.append(
                            SimConfig(
                                lattice=lattice, k=k, delta_u=delta_u,
                                sigma=sigma, p_r=p_r, gamma=gamma, alpha=alpha,
                            )
                        )
    return grid


def derive_run_seed(master_seed: int, config_index: int, replication: int) -> int:
    """Collision-resistant per-run seed; stable across processes and runs."""
    ss = np.random.SeedSequence((master_seed, config_index, replication))
    return int(ss.generate_state(1, np.uint64)[0])


def run_once(config: SimConfig, max_ticks: int = 500) -> SweepRecord:
    """Simulate one configuration and fit its trajectory.

    The run's random stream is seeded from config.seed and consumed in a
    fixed order: rewiring, innovator placement, activation scheduling. Fit
    failures never raise; the record carries whatever the fitter returned,
    and saturation_tick is -1 when the run never saturated.
    """
    rng = np.random.default_rng(config.seed)
    net = build_lattice(config.lattice)
    if config.p_r > 0:
        net = rewire(net, config.p_r, rng)
    count = default_innovator_count(config.lattice)
    plan = build_plan(config.lattice, config.sigma, count, config.gamma, rng)
    traj = simulate(
        net, plan, DecisionParams(delta_u=config.delta_u, alpha=config.alpha),
        max_ticks=max_ticks,
    )
    fit = fit_bass(traj)
    return SweepRecord(
        config=config,
        p=fit.params.p,
        q=fit.params.q,
        r_squared=fit.r_squared,
        takeoff=takeoff_time(fit.params),
        saturation_tick=(
            traj.saturated_at if traj.saturated_at is not None else NOT_SATURATED
        ),
    )


def _run_config_block(args: tuple) -> list[SweepRecord]:
    config, index, master_seed, replications, max_ticks = args
    records = []
    for rep in range(replications):
        seeded = dataclasses.replace(
            config, seed=derive_run_seed(master_seed, index, rep), replication=rep
        )
        try:
            records.append(run_once(seeded, max_ticks=max_ticks))
        except ValueError:
            # a failed run keeps its row so the sweep never aborts; NaNs
            # mark the fit columns as unusable
            records.append(
                SweepRecord(
                    config=seeded, p=math.nan, q=math.nan,
                    r_squared=math.nan, takeoff=math.nan,
                    saturation_tick=NOT_SATURATED,
                )
            )
    return records


def run_sweep(
    grid: Sequence[SimConfig],
    replications: int = 1,
    master_seed: int = 0,
    max_ticks: int = 500,
    jobs: int = 1,
) -> list[SweepRecord]:
    """Run every configuration x replication and collect fitted records.

    Output order is deterministic (grid order, replications within each
    config) and independent of jobs; every run's stream is derived from
    (master_seed, config index, replication), so any row can be reproduced
    in isolation from its recorded seed.
    """
    if not grid:
        raise ValueError("grid must be non-empty")
    if replications < 1:
        raise ValueError("replications must be >= 1")
    tasks = [
        (config, index, master_seed, replications, max_ticks)
        for index, config in enumerate(grid)
    ]
    if jobs <= 1:
        blocks = map(_run_config_block, tasks)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            blocks = pool.map(_run_config_block, tasks, chunksize=8)
    return [record for block in blocks for record in block]


def cell_key(record: SweepRecord) -> tuple[int, float, str, float, int]:
    """Grid-cell identity of a record (ignores seed and replication)."""
    c = record.config
    return (c.k, c.delta_u, c.sigma.value, c.p_r, c.gamma)


def median_by_cell(
    records: Iterable[SweepRecord],
) -> dict[tuple, dict[str, float]]:
    """Per-cell medians of the fitted quantities across replications."""
    groups: dict[tuple, list[SweepRecord]] = {}
    for record in records:
        groups.setdefault(cell_key(record), []).append(record)
    out = {}
    for key, group in groups.items():
        out[key] = {
            "p": float(np.median([r.p for r in group])),
            "q": float(np.median([r.q for r in group])),
            "r_squared": float(np.median([r.r_squared for r in group])),
            "takeoff": float(np.median([r.takeoff for r in group])),
            "saturation_tick": float(np.median([r.saturation_tick for r in group])),
            "n": len(group),
        }
    return out


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain 2-D hull, counter-clockwise, starting at the vertex
    with the lowest q (then lowest p). Collinear boundary points are not
    vertices.

    Raises:
        TooFewPoints: fewer than 3 distinct points, or all collinear.
    """
    pts = np.unique(np.asarray(points, dtype=float), axis=0)  # lex-sorted
    if len(pts) < 3:
        raise TooFewPoints(f"need >= 3 distinct points, got {len(pts)}")
    lower: list[np.ndarray] = []
    for pt in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], pt) <= 0:
            lower.pop()
        lower.append(pt)
    upper: list[np.ndarray] = []
    for pt in pts[::-1]:
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], pt) <= 0:
            upper.pop()
        upper.append(pt)
    hull = np.asarray(lower[:-1] + upper[:-1])
    if len(hull) < 3:
        raise TooFewPoints("points are collinear; hull is degenerate")
    start = np.lexsort((hull[:, 0], hull[:, 1]))[0]  # lowest y, then x
    return np.roll(hull, -start, axis=0)


def envelope(
    records: Sequence[SweepRecord], subset: tuple[int, float, Pattern]
) -> Envelope:
    """Convex hull of fitted (p, q) points for one (k, delta_u, sigma)
    family of records."""
    k, delta_u, sigma = subset
    pts = [
        (r.p, r.q)
        for r in records
        if r.config.k == k and r.config.delta_u == delta_u and r.config.sigma is sigma
    ]
    if len(pts) < 3:
        raise TooFewPoints(
            f"subset {subset} matched only {len(pts)} records"
        )
    return Envelope(subset_filter=subset, hull_vertices=convex_hull(np.asarray(pts)))


BOUNDARY_TOL = 1e-12


def locate(point: tuple[float, float], env: Envelope) -> Location:
    """Classify a (p, q) point against a hull.

    The tolerance 1e-12 applies to the edge cross products, so it scales
    with edge length; generating points always classify as Inside or
    Boundary.
    """
    hull = env.hull_vertices
    crosses = [
        _cross(hull[i], hull[(i + 1) % len(hull)], point) for i in range(len(hull))
    ]
    if any(c < -BOUNDARY_TOL for c in crosses):
        return Location.OUTSIDE
    if any(abs(c) <= BOUNDARY_TOL for c in crosses):
        return Location.BOUNDARY
    return Location.INSIDE


def nearest_micro(
    point: tuple[float, float], records: Sequence[SweepRecord]
) -> SweepRecord:
    """The record whose fitted (p, q) is closest to `point`, with each axis
    normalized by the records' own p-range and q-range. Ties go to the
    earlier record."""
    if not records:
        raise ValueError("records must be non-empty")
    ps = np.asarray([r.p for r in records])
    qs = np.asarray([r.q for r in records])
    p_scale = float(ps.max() - ps.min()) or 1.0
    q_scale = float(qs.max() - qs.min()) or 1.0
    d2 = ((ps - point[0]) / p_scale) ** 2 + ((qs - point[1]) / q_scale) ** 2
    return records[int(np.argmin(d2))]  # argmin returns the first minimum


@dataclass(frozen=True)
class RoiReport:
    """Outcome of comparing a boosted seeding strategy against a baseline."""

    exceeds: bool
    gain_base: float
    gain_boosted: float
    delta_gain: float
    adoption_base: float
    adoption_boosted: float

    def __bool__(self) -> bool:
        return self.exceeds


def roi_check(
    base: SweepRecord,
    boosted: SweepRecord,
    t_star: float,
    profit_per_adopter: float,
    investment: float,
    roi_min: float,
    gain: Callable[[float], float] | None = None,
) -> RoiReport:
    """Does the boosted strategy beat the baseline by more than roi_min?

    Adoption levels at the evaluation time come from each record's fitted
    curve. Gross gain defaults to profit_per_adopter * population * adoption
    and can be swapped for any function of the adoption level; the boosted
    side pays `investment`, the baseline pays nothing. The comparison is
    strict: a difference exactly equal to roi_min does not pass.

    Raises:
        ValueError: t_star at or before either record's takeoff time.
    """
    t_base = takeoff_time(BassParams(base.p, base.q))
    t_boost = takeoff_time(BassParams(boosted.p, boosted.q))
    if t_star <= max(t_base, t_boost):
        raise ValueError(
            f"t_star={t_star} must exceed both takeoff times "
            f"({t_base:.6g}, {t_boost:.6g})"
        )
    n_base = float(bass_curve(BassParams(base.p, base.q), t_star))
    n_boost = float(bass_curve(BassParams(boosted.p, boosted.q), t_star))
    if gain is None:
        population = base.config.lattice.node_count
        gain = lambda n: profit_per_adopter * population * n  # noqa: E731
    g_base = gain(n_base)
    g_boost = gain(n_boost) - investment
    delta = g_boost - g_base
    return RoiReport(
        exceeds=delta > roi_min,
        gain_base=g_base,
        gain_boosted=g_boost,
        delta_gain=delta,
        adoption_base=n_base,
        adoption_boosted=n_boost,
    )


def write_sweep_csv(records: Iterable[SweepRecord], path) -> None:
    """Export records under the pinned 12-column header. Floats are
    round-trip repr, so identical records always serialize identically."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_CSV_HEADER)
        for r in records:
            c = r.config
            writer.writerow([
                c.k, repr(float(c.delta_u)), c.sigma.value, repr(float(c.p_r)),
                c.gamma, c.seed, c.replication, repr(float(r.p)), repr(float(r.q)),
                repr(float(r.r_squared)), repr(float(r.takeoff)), r.saturation_tick,
            ])


def read_sweep_csv(path, rows: int = 200, cols: int = 200) -> list[SweepRecord]:
    """Load sweep records; lattice geometry is not serialized, so the
    default experiment size is assumed unless overridden."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SWEEP_CSV_HEADER:
            raise ValueError(f"unexpected sweep CSV header: {reader.fieldnames}")
        for row in reader:
            k = int(row["k"])
            neighborhood = Neighborhood.MOORE if k == 8 else Neighborhood.VON_NEUMANN
            config = SimConfig(
                lattice=LatticeSpec(rows, cols, neighborhood),
                k=k,
                delta_u=float(row["delta_u"]),
                sigma=Pattern(row["sigma"]),
                p_r=float(row["p_r"]),
                gamma=int(row["gamma"]),
                seed=int(row["seed"]),
                replication=int(row["replication"]),
            )
            records.append(
                SweepRecord(
                    config=config,
                    p=float(row["p"]),
                    q=float(row["q"]),
                    r_squared=float(row["r_squared"]),
                    takeoff=float(row["takeoff"]),
                    saturation_tick=int(row["saturation_tick"]),
                )
            )
    return records


def write_envelope_csv(env: Envelope, path) -> None:
    """Export hull vertices as `p,q` rows in counter-clockwise order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["p", "q"])
        for p, q in env.hull_vertices:
            writer.writerow([repr(float(p)), repr(float(q))])


def read_empirical_csv(path) -> list[tuple[str, float, float]]:
    """Load labeled empirical (p, q) points from `label,p,q` rows."""
    points = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["label", "p", "q"]:
            raise ValueError(f"expected label,p,q header, got {reader.fieldnames}")
        for row in reader:
            points.append((row["label"], float(row["p"]), float(row["q"])))
    return points
