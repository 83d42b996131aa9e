"""Monte Carlo simulation of the finite pool of coupled default intensities.

Each of N firms carries a square-root diffusion intensity that jumps by
``beta_c / N`` whenever any firm defaults, and is exposed (with pool-size
scaling eps_N) to one shared mean-reverting factor.  A firm defaults the
first time its running integrated intensity exceeds an independent
standard-exponential threshold.

Discretization: full-truncation Euler for the intensity (the truncated
positive part feeds the drift, the square root, and the factor term), the
exact Gaussian transition for the shared factor, trapezoid accumulation of
the integrated intensity, and default detection at step ends with the
whole batch of simultaneous defaults applied at once to every survivor.

Reproducibility: all randomness derives from ``(seed, replication)``
through per-firm seed sequences plus one factor stream, so results are
bit-identical for a fixed configuration regardless of execution order or
thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import MomentsNotRecordedError, NonFiniteStateError
from .model import (
    DiscreteTypeMeasure,
    SystematicFactorConfig,
    TimeGrid,
    Trajectory,
    validate_measure,
)

ASSIGNMENTS = ("proportional", "sampled")

# Stream tags under (seed, replication, tag, ...): keep these stable, they
# are part of the reproducibility contract.
_STREAM_FACTOR = 0
_STREAM_FIRM = 1
_STREAM_ASSIGN = 2


@dataclass(frozen=True)
class SimConfig:
    """Everything one simulation run depends on."""

    n_firms: int
    measure: DiscreteTypeMeasure
    factor: SystematicFactorConfig
    grid: TimeGrid
    seed: int
    assignment: str = "proportional"
    record_moments: bool = True

    def __post_init__(self):
        object.__setattr__(self, "n_firms", int(self.n_firms))
        object.__setattr__(self, "seed", int(self.seed))
        if self.n_firms < 1:
            raise ValueError("n_firms must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        if self.assignment not in ASSIGNMENTS:
            raise ValueError(f"assignment must be one of {ASSIGNMENTS}")


@dataclass
class PortfolioState:
    """Mutable per-firm state advanced by the stepping loop."""

    lam: np.ndarray           # current intensity (dead firms frozen)
    integrated: np.ndarray    # running integral of the truncated intensity
    threshold: np.ndarray     # standard-exponential default thresholds
    alive: np.ndarray         # bool, monotone nonincreasing per firm
    x: float                  # systematic factor level
    defaults_so_far: int = 0

    @property
    def default_fraction(self) -> float:
        return self.defaults_so_far / self.lam.shape[0]


@dataclass(frozen=True)
class SimResult:
    """One replication: default-rate path plus per-firm outcomes."""

    l_path: Trajectory
    default_times: np.ndarray          # nan where the firm survived
    intensity_moment_paths: tuple[Trajectory, Trajectory] | None
    seed_used: int
    replication: int

    def __post_init__(self):
        dt = np.asarray(self.default_times, dtype=float).copy()
        dt.setflags(write=False)
        object.__setattr__(self, "default_times", dt)


def proportional_counts(weights: np.ndarray, n_firms: int) -> np.ndarray:
    """Firm counts per atom: floor(w*N) plus largest-remainder top-up.

    Deterministic; ties broken toward lower atom index.  Counts always sum
    to ``n_firms``.
    """
    exact = np.asarray(weights, dtype=float) * n_firms
    base = np.floor(exact).astype(int)
    deficit = n_firms - int(base.sum())
    if deficit > 0:
        order = np.argsort(-(exact - base), kind="stable")
        base[order[:deficit]] += 1
    return base


def _firm_stream(seed: int, replication: int, firm: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(replication, _STREAM_FIRM, firm))
    )


def _atom_assignment(config: SimConfig, replication: int) -> np.ndarray:
    weights = config.measure.weights()
    if config.assignment == "proportional":
        counts = proportional_counts(weights, config.n_firms)
        return np.repeat(np.arange(len(weights)), counts)
    rng = np.random.default_rng(
        np.random.SeedSequence(config.seed, spawn_key=(replication, _STREAM_ASSIGN))
    )
    return rng.choice(len(weights), size=config.n_firms, p=weights / weights.sum())


def simulate(config: SimConfig, replication: int = 0) -> SimResult:
    """Run one replication of the coupled-intensity pool.

    Raises :class:`NonFiniteStateError` (reporting firm and step) if any
    intensity becomes NaN or infinite, which signals a grid/parameter
    pathology rather than a statistical fluctuation.
    """
    validate_measure(config.measure, cap=math.inf)  # signs and weight sum
    n = config.n_firms
    grid = config.grid
    n_steps = grid.n_steps
    dt = grid.dt
    sqdt = math.sqrt(dt)

    atom_idx = _atom_assignment(config, replication)
    atoms = config.measure.atoms
    alpha = np.array([a.firm_type.alpha for a in atoms])[atom_idx]
    lbar = np.array([a.firm_type.lambda_bar for a in atoms])[atom_idx]
    sigma = np.array([a.firm_type.sigma for a in atoms])[atom_idx]
    beta_c = np.array([a.firm_type.beta_c for a in atoms])[atom_idx]
    beta_s = np.array([a.firm_type.beta_s for a in atoms])[atom_idx]
    lam0 = np.array([a.lambda_init for a in atoms])[atom_idx]

    thresholds = np.empty(n)
    normals = np.empty((n, n_steps))
    for i in range(n):
        g = _firm_stream(config.seed, replication, i)
        thresholds[i] = g.standard_exponential()
        normals[i] = g.standard_normal(n_steps)
    factor_rng = np.random.default_rng(
        np.random.SeedSequence(config.seed, spawn_key=(replication, _STREAM_FACTOR))
    )
    factor_normals = factor_rng.standard_normal(n_steps)

    gamma = config.factor.gamma
    ou_decay = math.exp(-gamma * dt)
    ou_scale = math.sqrt((1.0 - math.exp(-2.0 * gamma * dt)) / (2.0 * gamma))
    eps = config.factor.eps(n)
    # With zero exposure the factor term is skipped entirely, so the factor
    # stream provably cannot influence firm states.
    factor_active = eps != 0.0 and bool(np.any(beta_s != 0.0))

    state = PortfolioState(
        lam=lam0.copy(),
        integrated=np.zeros(n),
        threshold=thresholds,
        alive=np.ones(n, dtype=bool),
        x=config.factor.x_init,
    )

    l_path = np.zeros(n_steps + 1)
    default_times = np.full(n, np.nan)
    if config.record_moments:
        m1 = np.empty(n_steps + 1)
        m2 = np.empty(n_steps + 1)
        pos0 = np.maximum(state.lam, 0.0)
        m1[0] = pos0.mean()
        m2[0] = np.mean(pos0 * pos0)

    lam = state.lam
    integrated = state.integrated
    alive = state.alive
    for k in range(n_steps):
        x_new = state.x * ou_decay + ou_scale * factor_normals[k]
        dx = x_new - state.x
        state.x = x_new

        lam_plus = np.maximum(lam, 0.0)
        # overflow here is reported as NonFiniteStateError, not a warning
        with np.errstate(over="ignore", invalid="ignore"):
            incr = (
                -alpha * (lam_plus - lbar) * dt
                + sigma * np.sqrt(lam_plus) * (sqdt * normals[:, k])
            )
            if factor_active:
                incr += eps * beta_s * lam_plus * dx
            lam_new = np.where(alive, lam + incr, lam)
        if not np.all(np.isfinite(lam_new)):
            firm = int(np.argmin(np.isfinite(lam_new)))
            raise NonFiniteStateError(firm, k + 1)
        integrated = np.where(
            alive,
            integrated + 0.5 * dt * (lam_plus + np.maximum(lam_new, 0.0)),
            integrated,
        )
        lam = lam_new

        newly = alive & (integrated >= thresholds)
        d = int(np.count_nonzero(newly))
        if d:
            alive = alive & ~newly
            default_times[newly] = (k + 1) * dt
            state.defaults_so_far += d
            # one batched jump: d defaults each contribute beta_c / N
            lam = np.where(alive, lam + d * beta_c / n, lam)
        l_path[k + 1] = state.defaults_so_far / n

        if config.record_moments:
            pos = np.maximum(lam, 0.0)
            m1[k + 1] = pos.mean()
            m2[k + 1] = np.mean(pos * pos)

    state.lam = lam
    state.integrated = integrated
    state.alive = alive
    moments = None
    if config.record_moments:
        moments = (Trajectory(grid, m1), Trajectory(grid, m2))
    return SimResult(
        l_path=Trajectory(grid, l_path),
        default_times=default_times,
        intensity_moment_paths=moments,
        seed_used=config.seed,
        replication=replication,
    )


@dataclass(frozen=True)
class ReplicationSet:
    """Replications of one configuration plus pointwise aggregates."""

    results: tuple[SimResult, ...]
    mean: Trajectory
    q10: Trajectory
    q90: Trajectory


def run_replications(config: SimConfig, n_reps: int, threads: int = 1) -> ReplicationSet:
    """Run ``n_reps`` independent replications and aggregate pointwise.

    Replication r draws its randomness from streams keyed by
    ``(seed, r)``, so the set of paths is independent of ``threads``;
    the thread count is a throughput hint only.
    """
    if n_reps < 1:
        raise ValueError("n_reps must be >= 1")
    reps = range(n_reps)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = tuple(pool.map(lambda r: simulate(config, r), reps))
    else:
        results = tuple(simulate(config, r) for r in reps)
    paths = np.stack([r.l_path.values for r in results])
    grid = config.grid
    return ReplicationSet(
        results=results,
        mean=Trajectory(grid, paths.mean(axis=0)),
        q10=Trajectory(grid, np.quantile(paths, 0.1, axis=0)),
        q90=Trajectory(grid, np.quantile(paths, 0.9, axis=0)),
    )


def moment_diagnostic(result: SimResult, p: int) -> Trajectory:
    """Recorded path of the pool-average p-th power of the intensity.

    Dead firms contribute their frozen value; a blow-up of this path flags
    an unstable discretization.  Only p = 1 and p = 2 are recorded.
    """
    if result.intensity_moment_paths is None:
        raise MomentsNotRecordedError("run with record_moments=True to use this")
    if p == 1:
        return result.intensity_moment_paths[0]
    if p == 2:
        return result.intensity_moment_paths[1]
    raise MomentsNotRecordedError(f"only moments p=1,2 are recorded, asked for p={p}")
