"""Seeded random-instance campaigns.

Protocol per instance: draw valid ``(lam, beta)``, run the alternating
solver from the configured initial matrix, classify the final objective
against ``zero_threshold`` into group 1 (zero value found) or group 2.
Drawing continues until both groups hold ``group_size`` entries; once a
group is full, further results for it are ignored.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .am import ZERO_THRESHOLD, InitStrategy, TraceStatus, am_solve
from .subproblems import ProblemData

logger = logging.getLogger(__name__)

LAMBDA_BOUND = 0.95
MIN_GAP = 1e-3
MIN_BETA = 1e-3
MAX_ATTEMPTS = 100_000


class GenerationFailed(RuntimeError):
    pass


def _draw_lambda(n: int, rng: np.random.Generator) -> np.ndarray:
    for _ in range(MAX_ATTEMPTS):
        lam = np.sort(rng.uniform(-LAMBDA_BOUND, LAMBDA_BOUND, size=n))[::-1]
        if lam[0] > np.max(np.abs(lam[1:])) and np.min(-np.diff(lam)) >= MIN_GAP:
            return lam
    raise GenerationFailed(f"no valid spectrum after {MAX_ATTEMPTS} attempts")


def _draw_beta(n: int, rng: np.random.Generator) -> np.ndarray:
    for _ in range(MAX_ATTEMPTS):
        mag = rng.uniform(MIN_BETA, 1.0, size=n)
        raw = np.where(rng.random(n) < 0.5, -mag, mag)
        total = raw.sum()
        if total == 0.0:
            continue
        beta = raw / total
        if np.min(np.abs(beta)) >= MIN_BETA:
            beta[-1] = 1.0 - beta[:-1].sum()
            if abs(beta[-1]) >= MIN_BETA:
                return beta
    raise GenerationFailed(f"no valid beta after {MAX_ATTEMPTS} attempts")


def gen_instance(n: int, rng: np.random.Generator) -> ProblemData:
    """Random valid problem data.

    ``lam``: sorted uniform draws on ``(-0.95, 0.95)``, redrawn until
    ``lam_1 > |lam_l|`` and all gaps are at least ``1e-3``.  ``beta``: uniform
    on ``(-1, 1)`` minus ``(-1e-3, 1e-3)``, rescaled to sum 1, redrawn if a
    rescaled entry is smaller than ``1e-3`` in magnitude.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    lam = _draw_lambda(n, rng)
    beta = _draw_beta(n, rng)
    return ProblemData(lam, beta)


@dataclass(frozen=True)
class CampaignConfig:
    n: int
    group_size: int = 20
    init: str = "diag"
    seed: int = 0
    tol: float = 1e-6
    zero_threshold: float = ZERO_THRESHOLD
    time_budget: float = 120.0  # per instance, seconds
    total_budget: float | None = None  # whole campaign, seconds
    groups: tuple[int, ...] = (1, 2)
    max_instances: int = 10_000
    workers: int = 1

    def __post_init__(self):
        if self.group_size < 1:
            raise ValueError("group_size must be at least 1")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not set(self.groups) <= {1, 2} or not self.groups:
            raise ValueError("groups must be a non-empty subset of (1, 2)")
        InitStrategy.parse(self.init)


@dataclass
class InstanceResult:
    index: int
    seed: list[int]
    lam: list[float]
    beta: list[float]
    objective: float
    iterations: int
    wall_time: float
    status: str

    @property
    def aborted(self) -> bool:
        return self.status == TraceStatus.TIME_BUDGET.value


@dataclass
class GroupStats:
    count: int
    mean_wall_time: float | None
    mean_iterations: float | None
    mean_objective: float | None
    instances: list[InstanceResult] = field(default_factory=list)

    @classmethod
    def of(cls, items: list[InstanceResult]) -> "GroupStats":
        if not items:
            return cls(0, None, None, None, [])
        return cls(
            len(items),
            float(np.mean([r.wall_time for r in items])),
            float(np.mean([r.iterations for r in items])),
            float(np.mean([r.objective for r in items])),
            list(items),
        )


@dataclass
class CampaignReport:
    config: CampaignConfig
    group1: GroupStats
    group2: GroupStats
    aborted_count: int
    ignored_count: int
    instances_drawn: int
    complete: bool
    wall_time: float

    def to_dict(self) -> dict:
        return asdict(self)

    def table(self) -> str:
        head = f"{'group':<8}{'count':>6}{'mean time (s)':>16}{'mean iters':>12}{'mean objective':>18}"
        lines = [f"n = {self.config.n}, init = {self.config.init}, seed = {self.config.seed}", head]
        for name, g in (("group-1", self.group1), ("group-2", self.group2)):
            if g.count:
                lines.append(
                    f"{name:<8}{g.count:>6}{g.mean_wall_time:>16.4f}"
                    f"{g.mean_iterations:>12.2f}{g.mean_objective:>18.4e}"
                )
            else:
                lines.append(f"{name:<8}{0:>6}{'-':>16}{'-':>12}{'-':>18}")
        lines.append(
            f"drawn {self.instances_drawn}, aborted {self.aborted_count}, "
            f"ignored {self.ignored_count}, complete {self.complete}"
        )
        return "\n".join(lines)


def instance_seed(seed: int, index: int) -> list[int]:
    return [int(seed), int(index)]


def run_instance(config: CampaignConfig, index: int, time_budget: float | None = None) -> InstanceResult:
    """Instance ``index`` of the campaign; depends only on ``(seed, index)``.

    ``time_budget`` overrides ``config.time_budget`` (the campaign passes the
    smaller of it and what is left of the total budget).
    """
    seq = instance_seed(config.seed, index)
    data = gen_instance(config.n, np.random.default_rng(seq))
    strategy = InitStrategy.parse(config.init, seed=int(np.random.SeedSequence(seq).generate_state(1)[0]))
    budget = config.time_budget if time_budget is None else time_budget
    trace = am_solve(data, strategy, tol=config.tol, time_budget=budget)
    return InstanceResult(
        index=index,
        seed=seq,
        lam=data.lam.tolist(),
        beta=data.beta.tolist(),
        objective=trace.objective,
        iterations=trace.n_iterations,
        wall_time=trace.wall_time,
        status=trace.status.value,
    )


def _instance_batches(config: CampaignConfig):
    batch = max(1, config.workers)
    start = 0
    while start < config.max_instances:
        stop = min(start + batch, config.max_instances)
        yield range(start, stop)
        start = stop


def run_campaign(config: CampaignConfig) -> CampaignReport:
    """Fill the requested groups.

    Results are consumed in instance-index order whatever the worker count,
    so the report only depends on the config (up to wall times, and up to
    where a total budget cuts the campaign off).
    """
    start = time.perf_counter()
    want = {g: (config.group_size if g in config.groups else 0) for g in (1, 2)}
    groups: dict[int, list[InstanceResult]] = {1: [], 2: []}
    aborted = ignored = drawn = 0
    pool = ProcessPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        for batch in _instance_batches(config):
            if all(len(groups[g]) >= want[g] for g in (1, 2)):
                break
            budget = config.time_budget
            if config.total_budget is not None:
                left = config.total_budget - (time.perf_counter() - start)
                if left <= 0:
                    break
                budget = min(budget, left)  # an instance cut here counts as aborted
            if pool is None:
                results = [run_instance(config, k, budget) for k in batch]
            else:
                n = len(batch)
                results = list(pool.map(run_instance, [config] * n, batch, [budget] * n))
            for r in results:
                if all(len(groups[g]) >= want[g] for g in (1, 2)):
                    break
                drawn += 1
                if r.aborted:
                    aborted += 1
                    continue
                g = 1 if r.objective <= config.zero_threshold else 2
                if len(groups[g]) < want[g]:
                    groups[g].append(r)
                else:
                    ignored += 1
            logger.info("campaign: drawn %d, group-1 %d, group-2 %d", drawn, len(groups[1]), len(groups[2]))
    finally:
        if pool is not None:
            pool.shutdown()
    return CampaignReport(
        config=config,
        group1=GroupStats.of(groups[1]),
        group2=GroupStats.of(groups[2]),
        aborted_count=aborted,
        ignored_count=ignored,
        instances_drawn=drawn,
        complete=all(len(groups[g]) >= want[g] for g in (1, 2)),
        wall_time=time.perf_counter() - start,
    )
