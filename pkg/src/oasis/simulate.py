"""Slot-driven simulation: replay a trace through a scheduler and measure it.

The harness owns its own usage accounting. Every allocation a scheduler
emits is re-checked here, slot by slot, against server capacities, the
chunk-count concurrency bound, the PS bandwidth coupling, and arrival
times; admitted plans from the online engine are additionally re-validated
in full at decision time against the harness's usage tensors. A scheduler
that breaks a constraint is a bug, not data: the run aborts with a
:class:`SchedulingViolation` naming the scheduler and slot.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .baselines import BASELINES, Arrival, BaselineConfig, SlotTick
from .engine import OnlineScheduler
from .model import ClusterSpec, Job, validate_job, validate_schedule
from .oracle import OracleLimits, solve_offline
from .pricing import compute_constants

SCHEDULERS = ("oasis", "fifo", "drf", "rrh")


class SchedulingViolation(RuntimeError):
    def __init__(self, scheduler: str, slot: int, detail: str) -> None:
        self.scheduler = scheduler
        self.slot = slot
        self.detail = detail
        super().__init__(f"[{scheduler}] slot {slot}: {detail}")


@dataclass(frozen=True)
class SimOptions:
    baseline: BaselineConfig = field(default_factory=BaselineConfig)
    estimate_scale: float = 1.0
    constants_population: tuple[Job, ...] | None = None
    with_oracle: bool = False
    oracle_limits: OracleLimits = field(default_factory=OracleLimits)
    track_duality: bool = False
    inject_overcommit: bool = False


@dataclass
class JobRecord:
    job_id: str
    job_class: str
    arrival: int
    target_delay: float
    admitted: bool
    completed: bool
    completion_slot: int | None
    utility: float
    timeliness: float | None
    latency_s: float


@dataclass
class MetricsReport:
    scheduler: str
    seed: int | None
    records: list[JobRecord]
    duality: list[tuple[str, float, float, bool]] | None = None
    opt_utility: float | None = None
    alpha: float | None = None
    load: float | None = None  # trace demand over capacity, when known

    @property
    def total_utility(self) -> float:
        return sum(r.utility for r in self.records)

    @property
    def acceptance_rate(self) -> float:
        if not self.records:
            return 0.0
        return sum(r.admitted for r in self.records) / len(self.records)

    @property
    def completed_count(self) -> int:
        return sum(r.completed for r in self.records)

    def timeliness_samples(self, job_class: str | None = None) -> list[float]:
        return [
            r.timeliness
            for r in self.records
            if r.timeliness is not None and (job_class is None or r.job_class == job_class)
        ]

    def latency_stats(self) -> tuple[float, float]:
        """(mean, 95th percentile) decision latency in milliseconds."""
        lat = [r.latency_s * 1e3 for r in self.records]
        if not lat:
            return 0.0, 0.0
        return float(np.mean(lat)), float(np.percentile(lat, 95))

    @property
    def performance_ratio(self) -> float | None:
        if self.opt_utility is None:
            return None
        total = self.total_utility
        if total <= 0:
            return None if self.opt_utility > 0 else 1.0
        return self.opt_utility / total

    def signature(self):
        """Deterministic content (latency excluded) for replay comparisons."""
        return tuple(
            (r.job_id, r.admitted, r.completed, r.completion_slot, round(r.utility, 12))
            for r in self.records
        )

    def summary_row(self) -> dict:
        mean_ms, p95_ms = self.latency_stats()
        critical = [abs(x) for x in self.timeliness_samples("critical")]
        row = {
            "scheduler": self.scheduler,
            "seed": self.seed,
            "total_utility": round(self.total_utility, 6),
            "jobs": len(self.records),
            "admitted": sum(r.admitted for r in self.records),
            "completed": self.completed_count,
            "acceptance_rate": round(self.acceptance_rate, 4),
            "critical_abs_timeliness": round(float(np.mean(critical)), 4) if critical else "",
            "latency_mean_ms": round(mean_ms, 3),
            "latency_p95_ms": round(p95_ms, 3),
            "performance_ratio": round(self.performance_ratio, 4) if self.performance_ratio else "",
        }
        return row


class _OasisAdapter:
    """Presents the online engine through the slot-driven interface."""

    name = "oasis"

    def __init__(self, cluster: ClusterSpec, jobs: list[Job], options: SimOptions) -> None:
        population = list(options.constants_population) if options.constants_population else jobs
        constants = compute_constants(population, cluster, estimate_scale=options.estimate_scale)
        self.engine = OnlineScheduler(cluster, constants)
        self.cluster = cluster
        self.jobs = {job.id: job for job in jobs}
        self.slot_plan: dict[int, dict[str, tuple[dict[int, int], dict[int, int]]]] = {}
        self.deadlines: dict[str, int] = {}
        self.alpha = constants.alpha()
        # Harness-side usage tensors, independent of the engine's bookkeeping.
        h, k, r, t = (
            cluster.num_worker_servers,
            cluster.num_ps_servers,
            cluster.num_resources,
            cluster.slots,
        )
        self._w_usage = np.zeros((h, r, t))
        self._p_usage = np.zeros((k, r, t))

    def on_arrival(self, job: Job):
        decision = self.engine.on_arrival(job)
        if decision.admitted:
            schedule = decision.schedule
            problems = validate_schedule(schedule, job, self.cluster, self._w_usage, self._p_usage)
            if problems:
                raise SchedulingViolation("oasis", job.arrival, f"admitted schedule for {job.id} violates {problems}")
            for (t, server), n in schedule.workers.items():
                plan = self.slot_plan.setdefault(t, {})
                w_map, p_map = plan.setdefault(job.id, ({}, {}))
                w_map[server] = w_map.get(server, 0) + n
                for ri, demand in enumerate(job.worker_demand):
                    self._w_usage[server, ri, t - 1] += n * demand
            for (t, server), n in schedule.ps.items():
                plan = self.slot_plan.setdefault(t, {})
                w_map, p_map = plan.setdefault(job.id, ({}, {}))
                p_map[server] = p_map.get(server, 0) + n
                for ri, demand in enumerate(job.ps_demand):
                    self._p_usage[server, ri, t - 1] += n * demand
            self.deadlines[job.id] = schedule.deadline
        return decision

    def slot_allocations(self, t: int):
        allocations = self.slot_plan.get(t, {})
        completed = [job_id for job_id, deadline in self.deadlines.items() if deadline == t]
        return allocations, completed


def run_simulation(
    jobs: list[Job],
    cluster: ClusterSpec,
    scheduler: str = "oasis",
    options: SimOptions | None = None,
    seed: int | None = None,
) -> MetricsReport:
    """Drive one scheduler over one trace and return its metrics.

    Jobs are replayed in arrival order (stable for ties). Every allocation
    is validated independently each slot; any breach raises
    :class:`SchedulingViolation`.
    """
    options = options or SimOptions()
    if scheduler not in SCHEDULERS:
        raise ValueError(f"unknown scheduler {scheduler!r}; expected one of {SCHEDULERS}")
    if not jobs:
        return MetricsReport(scheduler=scheduler, seed=seed, records=[])
    for job in jobs:
        validate_job(job, cluster)
    ordered = sorted(jobs, key=lambda j: j.arrival)

    oasis = scheduler == "oasis"
    if oasis:
        adapter = _OasisAdapter(cluster, ordered, options)
        alpha = adapter.alpha
    else:
        adapter = BASELINES[scheduler](cluster, options.baseline)
        alpha = None

    by_id = {job.id: job for job in jobs}
    decisions: dict[str, tuple[bool, float]] = {}  # admitted, latency
    oasis_results: dict[str, tuple[int, float]] = {}  # completion slot, utility
    duality = [] if (oasis and options.track_duality) else None
    if duality is not None:
        p0, d0 = adapter.engine.objective_values()
        duality.append(("<initial>", p0, d0, False))

    progress: dict[str, float] = {}
    completion: dict[str, int] = {}
    injected = not options.inject_overcommit

    queue = list(ordered)
    for t in range(1, cluster.slots + 1):
        while queue and queue[0].arrival == t:
            job = queue.pop(0)
            started = time.perf_counter()
            if oasis:
                decision = adapter.on_arrival(job)
                decisions[job.id] = (decision.admitted, decision.latency_s)
                if decision.admitted:
                    oasis_results[job.id] = (decision.schedule.deadline, decision.utility)
                if duality is not None:
                    p, d = adapter.engine.objective_values()
                    duality.append((job.id, p, d, decision.admitted))
            else:
                admitted = adapter.step(Arrival(t, job))
                decisions[job.id] = (bool(admitted), time.perf_counter() - started)

        if oasis:
            allocations, completed = adapter.slot_allocations(t)
        else:
            result = adapter.step(SlotTick(t))
            allocations, completed = result.allocations, result.completed

        if not injected and allocations:
            # Negative-control hook: duplicate the first allocation many
            # times over so the capacity check below must fire.
            job_id, (w_map, p_map) = next(iter(allocations.items()))
            if w_map:
                server, count = next(iter(w_map.items()))
                tampered = dict(w_map)
                tampered[server] = count + 10_000
                allocations = dict(allocations)
                allocations[job_id] = (tampered, p_map)
                injected = True

        _check_slot(scheduler, cluster, by_id, allocations, t)

        for job_id, (w_map, _p_map) in allocations.items():
            job = by_id[job_id]
            workers = sum(w_map.values())
            progress[job_id] = progress.get(job_id, 0.0) + workers / job.slots_per_chunk_epoch

        for job_id in completed:
            if job_id in completion:
                raise SchedulingViolation(scheduler, t, f"{job_id} completed twice")
            job = by_id[job_id]
            if not oasis and progress.get(job_id, 0.0) + 1e-6 < job.total_chunk_epochs:
                raise SchedulingViolation(
                    scheduler, t,
                    f"{job_id} reported complete at {progress.get(job_id, 0.0):.3f}"
                    f"/{job.total_chunk_epochs} chunk-epochs",
                )
            completion[job_id] = t

    records = []
    for job in ordered:
        admitted, latency = decisions.get(job.id, (False, 0.0))
        if oasis:
            done = job.id in oasis_results
            slot_done, utility = oasis_results.get(job.id, (None, 0.0))
        else:
            done = job.id in completion
            slot_done = completion.get(job.id)
            utility = job.utility(slot_done - job.arrival) if done else 0.0
        records.append(JobRecord(
            job_id=job.id,
            job_class=job.job_class(),
            arrival=job.arrival,
            target_delay=job.utility.gamma3,
            admitted=admitted,
            completed=done,
            completion_slot=slot_done,
            utility=utility,
            timeliness=(slot_done - job.arrival) - job.utility.gamma3 if done else None,
            latency_s=latency,
        ))

    report = MetricsReport(scheduler=scheduler, seed=seed, records=records, duality=duality, alpha=alpha)
    if options.with_oracle:
        report.opt_utility = solve_offline(list(jobs), cluster, options.oracle_limits).optimal_utility
    return report


def _check_slot(scheduler: str, cluster: ClusterSpec, by_id, allocations, t: int) -> None:
    """Independent per-slot feasibility check of emitted allocations."""
    r_count = cluster.num_resources
    w_used = np.zeros((cluster.num_worker_servers, r_count))
    p_used = np.zeros((cluster.num_ps_servers, r_count))
    for job_id, (w_map, p_map) in allocations.items():
        job = by_id[job_id]
        if t < job.arrival:
            raise SchedulingViolation(scheduler, t, f"{job_id} allocated before arrival {job.arrival}")
        workers = sum(w_map.values())
        ps = sum(p_map.values())
        if any(n < 0 for n in list(w_map.values()) + list(p_map.values())):
            raise SchedulingViolation(scheduler, t, f"{job_id} has negative instance counts")
        if workers > job.chunks:
            raise SchedulingViolation(scheduler, t, f"{job_id} runs {workers} workers for {job.chunks} chunks")
        if workers > 0 and ps * job.ps_bw + 1e-9 < workers * job.worker_bw:
            raise SchedulingViolation(scheduler, t, f"{job_id} PS bandwidth {ps * job.ps_bw} < worker {workers * job.worker_bw}")
        if ps > workers:
            raise SchedulingViolation(scheduler, t, f"{job_id} has more PS ({ps}) than workers ({workers})")
        for server, n in w_map.items():
            w_used[server] += n * np.asarray(job.worker_demand)
        for server, n in p_map.items():
            p_used[server] += n * np.asarray(job.ps_demand)
    caps_w = np.asarray(cluster.worker_caps)
    caps_p = np.asarray(cluster.ps_caps)
    tol = 1e-6
    if (w_used > caps_w + tol).any():
        where = np.argwhere(w_used > caps_w + tol)[0]
        raise SchedulingViolation(scheduler, t, f"worker server {where[0]} over capacity on resource {where[1]}")
    if (p_used > caps_p + tol).any():
        where = np.argwhere(p_used > caps_p + tol)[0]
        raise SchedulingViolation(scheduler, t, f"PS server {where[0]} over capacity on resource {where[1]}")
