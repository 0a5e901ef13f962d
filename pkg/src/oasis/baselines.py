"""Baseline schedulers: FIFO, dominant-resource fairness, and a risk-reward
admission heuristic.

All three run on the same slotted cluster abstraction as the online engine
and honor the same feasibility rules each slot: per-server capacities, at
most one worker per data chunk, parameter-server bandwidth covering worker
bandwidth, and no more parameter servers than workers. Fixed worker/PS
counts from the configuration are clamped per job to respect those rules
(workers capped at the chunk count, PS count clamped between the bandwidth
minimum and the worker count).

Progress accounting matches the engine's workload model: a slot in which a
job runs y workers advances it by ``y / (minibatches * slot_work)``
chunk-epochs; a job completes once its epochs * chunks total is reached.

Placement is round-robin, one instance at a time, with cursors that persist
across slots and events.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ClusterSpec, Job, ceil_units

_PLACE_TOL = 1e-9


@dataclass(frozen=True)
class BaselineConfig:
    fixed_workers: int = 8
    fixed_ps: int = 4
    rrh_threshold: float = 0.0

    def __post_init__(self) -> None:
        if not (1 <= self.fixed_workers <= 30) or not (1 <= self.fixed_ps <= 30):
            raise ValueError("fixed worker/PS counts must lie in [1, 30]")


@dataclass(frozen=True)
class Arrival:
    slot: int
    job: Job


@dataclass(frozen=True)
class SlotTick:
    slot: int


@dataclass
class SlotResult:
    slot: int
    # job id -> ({worker server: count}, {ps server: count})
    allocations: dict[str, tuple[dict[int, int], dict[int, int]]] = field(default_factory=dict)
    completed: list[str] = field(default_factory=list)


class _RoundRobinPool:
    """Per-slot capacity tracker with a cursor persisting across slots."""

    def __init__(self, caps) -> None:
        self.caps = np.asarray(caps, dtype=float)
        self.cursor = 0
        self.used = np.zeros_like(self.caps)

    def begin_slot(self) -> None:
        self.used[:] = 0.0

    def _fits(self, server: int, demand: np.ndarray) -> bool:
        return bool(np.all(self.used[server] + demand <= self.caps[server] + _PLACE_TOL))

    def try_place(self, demand, count: int) -> dict[int, int] | None:
        """Place ``count`` identical units round-robin; all or nothing."""
        if count == 0:
            return {}
        demand = np.asarray(demand, dtype=float)
        n_servers = len(self.caps)
        placed: dict[int, int] = {}
        cursor = self.cursor
        snapshot = self.used.copy()
        for _ in range(count):
            for probe in range(n_servers):
                server = (cursor + probe) % n_servers
                if self._fits(server, demand):
                    self.used[server] += demand
                    placed[server] = placed.get(server, 0) + 1
                    cursor = (server + 1) % n_servers
                    break
            else:
                self.used = snapshot
                return None
        self.cursor = cursor
        return placed


class _ProgressMixin:
    """Shared chunk-epoch bookkeeping."""

    def _init_progress(self) -> None:
        self.progress: dict[str, float] = {}
        self.finished: set[str] = set()
        self.completion_slot: dict[str, int] = {}

    def _advance(self, job: Job, workers: int, slot: int, completed: list[str]) -> None:
        done = self.progress.get(job.id, 0.0) + workers / job.slots_per_chunk_epoch
        self.progress[job.id] = done
        if done + 1e-9 >= job.total_chunk_epochs and job.id not in self.finished:
            self.finished.add(job.id)
            self.completion_slot[job.id] = slot
            completed.append(job.id)


def _effective_counts(job: Job, config: BaselineConfig) -> tuple[int, int] | None:
    """Fixed counts clamped to the per-job feasibility rules, or None when
    the job can never satisfy the PS bandwidth coupling."""
    y = min(config.fixed_workers, job.chunks)
    z_min = ceil_units(y * job.worker_bw / job.ps_bw)
    if z_min > y:
        return None
    z = min(max(config.fixed_ps, z_min), y)
    return y, z


class FifoScheduler:
    """Jobs run in arrival order with fixed instance counts."""

    name = "fifo"

    def __init__(self, cluster: ClusterSpec, config: BaselineConfig | None = None) -> None:
        self.cluster = cluster
        self.config = config or BaselineConfig()
        self.workers_pool = _RoundRobinPool(cluster.worker_caps)
        self.ps_pool = _RoundRobinPool(cluster.ps_caps)
        self.pending: list[Job] = []
        self.running: list[Job] = []
        self._init_progress()
        self.admitted: dict[str, bool] = {}

    _init_progress = _ProgressMixin._init_progress
    _advance = _ProgressMixin._advance

    def step(self, event):
        if isinstance(event, Arrival):
            self.admitted[event.job.id] = True
            if _effective_counts(event.job, self.config) is not None:
                self.pending.append(event.job)
            return True
        return self._tick(event.slot)

    def _place(self, job: Job, result: SlotResult) -> bool:
        y, z = _effective_counts(job, self.config)
        workers = self.workers_pool.try_place(job.worker_demand, y)
        if workers is None:
            return False
        ps = self.ps_pool.try_place(job.ps_demand, z)
        if ps is None:
            # roll the workers back by replaying the slot's other placements
            return self._rollback_and_fail(job, workers)
        result.allocations[job.id] = (workers, ps)
        return True

    def _rollback_and_fail(self, job: Job, workers: dict[int, int]) -> bool:
        demand = np.asarray(job.worker_demand, dtype=float)
        for server, n in workers.items():
            self.workers_pool.used[server] -= n * demand
        return False

    def _tick(self, slot: int) -> SlotResult:
        self.workers_pool.begin_slot()
        self.ps_pool.begin_slot()
        result = SlotResult(slot=slot)
        for job in self.running:
            self._place(job, result)
        while self.pending:
            job = self.pending[0]
            if not self._place(job, result):
                break
            self.pending.pop(0)
            self.running.append(job)
        completed: list[str] = []
        for job in list(self.running):
            alloc = result.allocations.get(job.id)
            if alloc is None:
                continue
            self._advance(job, sum(alloc[0].values()), slot, completed)
            if job.id in self.finished:
                self.running.remove(job)
        result.completed = completed
        return result


class DrfScheduler:
    """Progressive filling on dominant resource shares, one worker at a time.

    Every job is admitted; on each slot the active jobs' allocations are
    rebuilt by repeatedly granting one worker (plus any parameter server the
    bandwidth coupling newly requires) to the job with the smallest dominant
    share that can still grow. A job stops growing at its chunk cap, at the
    workers its remaining workload can use this slot, or when placement no
    longer fits.
    """

    name = "drf"

    def __init__(self, cluster: ClusterSpec, config: BaselineConfig | None = None) -> None:
        self.cluster = cluster
        self.config = config or BaselineConfig()
        self.workers_pool = _RoundRobinPool(cluster.worker_caps)
        self.ps_pool = _RoundRobinPool(cluster.ps_caps)
        self.active: list[Job] = []
        self._init_progress()
        self.admitted: dict[str, bool] = {}
        caps_w = np.asarray(cluster.worker_caps, dtype=float)
        caps_p = np.asarray(cluster.ps_caps, dtype=float)
        self._totals = caps_w.sum(axis=0) + caps_p.sum(axis=0)

    _init_progress = _ProgressMixin._init_progress
    _advance = _ProgressMixin._advance

    def step(self, event):
        if isinstance(event, Arrival):
            self.admitted[event.job.id] = True
            self.active.append(event.job)
            return True
        return self._tick(event.slot)

    def _dominant_share(self, job: Job, y: int, z: int) -> float:
        demand = y * np.asarray(job.worker_demand) + z * np.asarray(job.ps_demand)
        return float((demand / self._totals).max())

    def _worker_cap(self, job: Job) -> int:
        remaining = job.total_chunk_epochs - self.progress.get(job.id, 0.0)
        return min(job.chunks, ceil_units(remaining * job.slots_per_chunk_epoch))

    def _tick(self, slot: int) -> SlotResult:
        self.workers_pool.begin_slot()
        self.ps_pool.begin_slot()
        result = SlotResult(slot=slot)
        jobs = [j for j in self.active if j.id not in self.finished]
        counts = {j.id: [0, 0] for j in jobs}          # workers, ps
        placements = {j.id: ({}, {}) for j in jobs}
        shares = {j.id: 0.0 for j in jobs}
        saturated: set[str] = set()
        order = {j.id: i for i, j in enumerate(jobs)}

        while True:
            open_jobs = [j for j in jobs if j.id not in saturated]
            if not open_jobs:
                break
            job = min(open_jobs, key=lambda j: (shares[j.id], order[j.id]))
            y, z = counts[job.id]
            if y >= self._worker_cap(job):
                saturated.add(job.id)
                continue
            z_target = ceil_units((y + 1) * job.worker_bw / job.ps_bw)
            if z_target > y + 1:
                saturated.add(job.id)
                continue
            worker_units = self.workers_pool.try_place(job.worker_demand, 1)
            if worker_units is None:
                saturated.add(job.id)
                continue
            extra_ps = max(0, z_target - z)
            ps_units = self.ps_pool.try_place(job.ps_demand, extra_ps)
            if ps_units is None:
                demand = np.asarray(job.worker_demand, dtype=float)
                for server, n in worker_units.items():
                    self.workers_pool.used[server] -= n * demand
                saturated.add(job.id)
                continue
            counts[job.id] = [y + 1, z + extra_ps]
            w_map, p_map = placements[job.id]
            for server, n in worker_units.items():
                w_map[server] = w_map.get(server, 0) + n
            for server, n in ps_units.items():
                p_map[server] = p_map.get(server, 0) + n
            shares[job.id] = self._dominant_share(job, *counts[job.id])

        completed: list[str] = []
        for job in jobs:
            y, _z = counts[job.id]
            if y > 0:
                result.allocations[job.id] = placements[job.id]
                self._advance(job, y, slot, completed)
        result.completed = completed
        return result


class RrhScheduler:
    """Admission by utility-minus-delay-cost thresholding; fixed counts.

    At arrival the job is admitted iff its utility at the completion time
    projected behind the current backlog clears the threshold (equivalently:
    utility at an immediate start, minus the utility lost to waiting for the
    backlog, exceeds the threshold). Admitted jobs keep running until done:
    with utilities non-increasing in completion time, pausing can never
    raise a job's own future gain, so the continue-or-pause comparison
    resolves to continue whenever capacity allows. Placement follows
    admission order.
    """

    name = "rrh"

    def __init__(self, cluster: ClusterSpec, config: BaselineConfig | None = None) -> None:
        self.cluster = cluster
        self.config = config or BaselineConfig()
        self.workers_pool = _RoundRobinPool(cluster.worker_caps)
        self.ps_pool = _RoundRobinPool(cluster.ps_caps)
        self.jobs: list[Job] = []
        self._init_progress()
        self.admitted: dict[str, bool] = {}

    _init_progress = _ProgressMixin._init_progress
    _advance = _ProgressMixin._advance

    def _run_slots(self, job: Job) -> int:
        counts = _effective_counts(job, self.config)
        if counts is None:
            return -1
        remaining = job.total_chunk_epochs - self.progress.get(job.id, 0.0)
        if remaining <= 0:
            return 0
        return ceil_units(remaining * job.slots_per_chunk_epoch / counts[0])

    def _queue_delay_slots(self, job: Job) -> int:
        """Slots the pending work ahead delays this job, assuming the queue
        drains at the cluster's worker throughput for this job's footprint."""
        queued_worker_slots = 0.0
        for other in self.jobs:
            if other.id in self.finished:
                continue
            remaining = other.total_chunk_epochs - self.progress.get(other.id, 0.0)
            queued_worker_slots += max(0.0, remaining) * other.slots_per_chunk_epoch
        if queued_worker_slots == 0:
            return 0
        demand = np.asarray(job.worker_demand, dtype=float)
        positive = demand > 0
        per_server = np.floor(
            (self.workers_pool.caps[:, positive] / demand[positive]).min(axis=1) + _PLACE_TOL
        )
        throughput = float(per_server.sum())
        if throughput <= 0:
            return self.cluster.slots
        return ceil_units(queued_worker_slots / throughput)

    def step(self, event):
        if isinstance(event, Arrival):
            return self._admit(event.job)
        return self._tick(event.slot)

    def _admit(self, job: Job) -> bool:
        run_slots = self._run_slots(job)
        if run_slots < 0:
            self.admitted[job.id] = False
            return False
        backlog = self._queue_delay_slots(job)
        value_immediate = job.utility(run_slots - 1)
        value_delayed = job.utility(backlog + run_slots - 1)
        delay_cost = value_immediate - value_delayed
        admit = value_immediate - delay_cost > self.config.rrh_threshold
        self.admitted[job.id] = admit
        if admit:
            self.jobs.append(job)
        return admit

    def _tick(self, slot: int) -> SlotResult:
        self.workers_pool.begin_slot()
        self.ps_pool.begin_slot()
        result = SlotResult(slot=slot)
        runnable = [job for job in self.jobs if job.id not in self.finished]
        completed: list[str] = []
        for job in runnable:
            y, z = _effective_counts(job, self.config)
            workers = self.workers_pool.try_place(job.worker_demand, y)
            if workers is None:
                break
            ps = self.ps_pool.try_place(job.ps_demand, z)
            if ps is None:
                demand = np.asarray(job.worker_demand, dtype=float)
                for server, n in workers.items():
                    self.workers_pool.used[server] -= n * demand
                break
            result.allocations[job.id] = (workers, ps)
            self._advance(job, y, slot, completed)
        result.completed = completed
        return result


BASELINES = {
    "fifo": FifoScheduler,
    "drf": DrfScheduler,
    "rrh": RrhScheduler,
}
