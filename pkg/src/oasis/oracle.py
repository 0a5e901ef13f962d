"""Exact solvers for desk-scale instances.

``exhaustive_best_schedule`` enumerates every per-slot workload split and
every integer server placement for a single job against a usage snapshot —
no greedy ordering, no dynamic program — and is the reference for the
schedule-search module.

``solve_offline`` computes the exact offline optimum of total admitted
utility by depth-first branch and bound over per-job (reject | deadline +
workload split) choices. Placements are resolved by an exact per-slot
packing search, cached by demand multiset; the admissible bound is the sum
of the remaining jobs' capacity-ignoring maximum utilities. Instances above
the configured limits are refused rather than approximated.

Workload semantics match the rest of the package: a slot that trains ``d``
chunk-epochs needs ``ceil(d * minibatches * slot_work)`` workers, i.e. work
on one chunk-epoch does not straddle a slot boundary.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .model import (
    ClusterSpec,
    Job,
    Schedule,
    ceil_units,
    floor_units,
    validate_schedule,
    workers_needed,
)
from .pricing import PricingState


class OracleSizeError(ValueError):
    """Instance exceeds the exact solver's configured limits."""


@dataclass(frozen=True)
class OracleLimits:
    max_jobs: int = 6
    max_slots: int = 6
    max_servers: int = 6          # worker plus PS machines
    max_chunk_epochs: int = 6     # per job

    def check_cluster(self, cluster: ClusterSpec, n_jobs: int) -> None:
        if n_jobs > self.max_jobs:
            raise OracleSizeError(f"{n_jobs} jobs exceed limit {self.max_jobs}")
        if cluster.slots > self.max_slots:
            raise OracleSizeError(f"{cluster.slots} slots exceed limit {self.max_slots}")
        servers = cluster.num_worker_servers + cluster.num_ps_servers
        if servers > self.max_servers:
            raise OracleSizeError(f"{servers} servers exceed limit {self.max_servers}")

    def check_job(self, job: Job) -> None:
        if job.total_chunk_epochs > self.max_chunk_epochs:
            raise OracleSizeError(
                f"job {job.id}: {job.total_chunk_epochs} chunk-epochs exceed limit {self.max_chunk_epochs}"
            )


@dataclass
class OracleResult:
    optimal_utility: float
    admitted: dict[str, Schedule]
    nodes_explored: int
    wall_s: float
    utilities: dict[str, float] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Single-job exhaustive reference
# ---------------------------------------------------------------------------


def _vectors_with_sum(caps: list[int], total: int):
    """All integer vectors v with v[i] <= caps[i] and sum(v) == total."""
    if total < 0:
        return
    if not caps:
        if total == 0:
            yield ()
        return
    head = caps[0]
    for first in range(min(head, total) + 1):
        for rest in _vectors_with_sum(caps[1:], total - first):
            yield (first,) + rest


def _enum_slot_min_cost(job: Job, state: PricingState, t: int, d: int) -> float:
    """Min priced cost of d chunk-epochs in slot t by full placement enumeration."""
    need = workers_needed(d, job)
    if need == 0:
        return 0.0
    if need > job.chunks:
        return math.inf
    w_caps = [int(c) for c in state.worker_unit_caps(job, t)]
    w_unit = state.worker_prices(t) @ np.asarray(job.worker_demand)
    best_workers = math.inf
    for vec in _vectors_with_sum(w_caps, need):
        best_workers = min(best_workers, float(np.dot(vec, w_unit)))
    if not math.isfinite(best_workers):
        return math.inf
    z_need = ceil_units(need * job.worker_bw / job.ps_bw)
    if z_need > need:
        return math.inf
    if z_need == 0:
        return best_workers
    p_caps = [int(c) for c in state.ps_unit_caps(job, t)]
    p_unit = state.ps_prices(t) @ np.asarray(job.ps_demand)
    best_ps = math.inf
    for vec in _vectors_with_sum(p_caps, z_need):
        best_ps = min(best_ps, float(np.dot(vec, p_unit)))
    return best_workers + best_ps


def _compositions(total: int, parts: int):
    """All tuples of ``parts`` non-negative integers summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def exhaustive_best_schedule(
    job: Job,
    state: PricingState,
    limits: OracleLimits | None = None,
) -> float:
    """Maximum payoff of ``job`` against ``state`` by brute enumeration.

    Considers every split of the job's chunk-epochs over the slots of every
    candidate completion window and every integer placement within each
    slot; returns 0.0 when no feasible plan has positive value (reject).
    """
    limits = limits or OracleLimits()
    limits.check_cluster(state.cluster, n_jobs=1)
    limits.check_job(job)
    t_span = state.cluster.slots
    if job.arrival > t_span:
        return 0.0
    en = job.total_chunk_epochs
    slot_cost: dict[tuple[int, int], float] = {}

    def cost(t: int, d: int) -> float:
        key = (t, d)
        if key not in slot_cost:
            slot_cost[key] = _enum_slot_min_cost(job, state, t, d)
        return slot_cost[key]

    best = 0.0
    for deadline in range(job.arrival, t_span + 1):
        n_slots = deadline - job.arrival + 1
        for split in _compositions(en, n_slots):
            if split[-1] == 0:
                continue  # tight deadline; shorter windows cover this split
            total = 0.0
            for offset, d in enumerate(split):
                c = cost(job.arrival + offset, d)
                if not math.isfinite(c):
                    total = math.inf
                    break
                total += c
            if math.isfinite(total):
                best = max(best, job.utility(deadline - job.arrival) - total)
    return best


# ---------------------------------------------------------------------------
# Joint offline optimum
# ---------------------------------------------------------------------------


def _pack_units(items: list[tuple[tuple[float, ...], int]], caps: list[tuple[float, ...]]):
    """Exact packing of ``count`` identical units per item onto servers.

    items: (per-unit demand vector, unit count) per job; caps: per-server
    capacity vectors. Returns one witness [{server: units}, ...] aligned
    with items, or None when no packing exists.
    """
    residual = [list(row) for row in caps]

    def fits(server: int, demand) -> int:
        out = None
        for cap, need in zip(residual[server], demand):
            if need > 0:
                room = floor_units(cap / need)
                out = room if out is None else min(out, room)
        return 10 ** 9 if out is None else out

    def place(idx: int, assignments: list[dict[int, int]]):
        if idx == len(items):
            return assignments
        demand, count = items[idx]

        def distribute(server: int, remaining: int, current: dict[int, int]):
            if remaining == 0:
                assignments.append(dict(current))
                result = place(idx + 1, assignments)
                if result is not None:
                    return result
                assignments.pop()
                return None
            if server == len(residual):
                return None
            room = min(fits(server, demand), remaining)
            for take in range(room, -1, -1):
                if take:
                    for r, need in enumerate(demand):
                        residual[server][r] -= take * need
                    current[server] = take
                result = distribute(server + 1, remaining - take, current)
                if take:
                    for r, need in enumerate(demand):
                        residual[server][r] += take * need
                    del current[server]
                if result is not None:
                    return result
            return None

        return distribute(0, count, {})

    return place(0, [])


class _PackCache:
    """Feasibility/witness cache keyed by the multiset of (demand, count)."""

    def __init__(self, caps: tuple[tuple[float, ...], ...]) -> None:
        self.caps = [tuple(row) for row in caps]
        self._seen: dict[tuple, bool] = {}

    def feasible(self, items: list[tuple[tuple[float, ...], int]]) -> bool:
        key = tuple(sorted(items))
        hit = self._seen.get(key)
        if hit is None:
            hit = _pack_units(items, self.caps) is not None
            self._seen[key] = hit
        return hit

    def witness(self, items: list[tuple[tuple[float, ...], int]]):
        return _pack_units(items, self.caps)


def _earliest_completion(job: Job, cluster: ClusterSpec) -> int | None:
    """Capacity-ignoring earliest completion slot, or None if impossible."""
    per_slot = floor_units(job.chunks / job.slots_per_chunk_epoch)
    if per_slot <= 0:
        return None
    slots = math.ceil(job.total_chunk_epochs / per_slot)
    deadline = job.arrival + slots - 1
    return deadline if deadline <= cluster.slots else None


def _job_candidates(job: Job, cluster: ClusterSpec):
    """(deadline, split, per-slot worker counts, per-slot PS counts) tuples.

    Deterministic order: deadline ascending, then split lexicographic.
    Splits are tight (work in the deadline slot) and per-slot feasible in
    isolation; joint feasibility is the caller's concern.
    """
    en = job.total_chunk_epochs
    out = []
    for deadline in range(job.arrival, cluster.slots + 1):
        n_slots = deadline - job.arrival + 1
        for split in _compositions(en, n_slots):
            if split[-1] == 0:
                continue
            needs = []
            ps_needs = []
            ok = True
            for d in split:
                need = workers_needed(d, job)
                if need > job.chunks:
                    ok = False
                    break
                z = ceil_units(need * job.worker_bw / job.ps_bw)
                if z > need:
                    ok = False
                    break
                needs.append(need)
                ps_needs.append(z)
            if ok:
                out.append((deadline, split, tuple(needs), tuple(ps_needs)))
    return out


def solve_offline(
    jobs: list[Job],
    cluster: ClusterSpec,
    limits: OracleLimits | None = None,
) -> OracleResult:
    """Exact maximum total utility over all joint feasible admissions."""
    limits = limits or OracleLimits()
    limits.check_cluster(cluster, len(jobs))
    for job in jobs:
        limits.check_job(job)

    started = time.perf_counter()
    worker_pack = _PackCache(cluster.worker_caps)
    ps_pack = _PackCache(cluster.ps_caps)

    candidates = [_job_candidates(job, cluster) for job in jobs]
    ceilings = []
    for job in jobs:
        t_min = _earliest_completion(job, cluster)
        ceilings.append(job.utility(t_min - job.arrival) if t_min is not None else 0.0)
    suffix_best = [0.0] * (len(jobs) + 1)
    for i in range(len(jobs) - 1, -1, -1):
        suffix_best[i] = suffix_best[i + 1] + ceilings[i]

    # Per-slot demand lists accumulated along the DFS path.
    slot_workers: list[list[tuple[tuple[float, ...], int]]] = [[] for _ in range(cluster.slots + 1)]
    slot_ps: list[list[tuple[tuple[float, ...], int]]] = [[] for _ in range(cluster.slots + 1)]

    best = {"utility": 0.0, "choice": [None] * len(jobs)}
    choice: list[tuple[int, tuple[int, ...]] | None] = [None] * len(jobs)
    nodes = 0

    def dfs(i: int, acc: float) -> None:
        nonlocal nodes
        if acc + suffix_best[i] <= best["utility"]:
            return
        if i == len(jobs):
            if acc > best["utility"]:
                best["utility"] = acc
                best["choice"] = list(choice)
            return
        job = jobs[i]
        for deadline, split, needs, ps_needs in candidates[i]:
            nodes += 1
            pushed_w: list[int] = []
            pushed_p: list[int] = []
            feasible = True
            for offset, (need, z) in enumerate(zip(needs, ps_needs)):
                t = job.arrival + offset
                if need > 0:
                    slot_workers[t].append((job.worker_demand, need))
                    pushed_w.append(t)
                    if not worker_pack.feasible(slot_workers[t]):
                        feasible = False
                        break
                if z > 0:
                    slot_ps[t].append((job.ps_demand, z))
                    pushed_p.append(t)
                    if not ps_pack.feasible(slot_ps[t]):
                        feasible = False
                        break
            if feasible:
                choice[i] = (deadline, split)
                dfs(i + 1, acc + job.utility(deadline - job.arrival))
                choice[i] = None
            for t in pushed_w:
                slot_workers[t].pop()
            for t in pushed_p:
                slot_ps[t].pop()
        dfs(i + 1, acc)  # reject job i

    dfs(0, 0.0)

    schedules = _materialize(jobs, cluster, best["choice"], worker_pack, ps_pack)
    utilities = {
        jobs[i].id: jobs[i].utility(best["choice"][i][0] - jobs[i].arrival)
        for i in range(len(jobs))
        if best["choice"][i] is not None
    }
    return OracleResult(
        optimal_utility=best["utility"],
        admitted=schedules,
        nodes_explored=nodes,
        wall_s=time.perf_counter() - started,
        utilities=utilities,
    )


def _materialize(jobs, cluster, choices, worker_pack: _PackCache, ps_pack: _PackCache):
    """Rebuild concrete schedules for the winning choice set and validate them."""
    per_slot_items_w: dict[int, list[tuple[int, tuple[tuple[float, ...], int]]]] = {}
    per_slot_items_p: dict[int, list[tuple[int, tuple[tuple[float, ...], int]]]] = {}
    for i, picked in enumerate(choices):
        if picked is None:
            continue
        job = jobs[i]
        _deadline, split = picked
        for offset, d in enumerate(split):
            t = job.arrival + offset
            need = workers_needed(d, job)
            if need == 0:
                continue
            z = ceil_units(need * job.worker_bw / job.ps_bw)
            per_slot_items_w.setdefault(t, []).append((i, (job.worker_demand, need)))
            if z > 0:
                per_slot_items_p.setdefault(t, []).append((i, (job.ps_demand, z)))

    schedules: dict[str, Schedule] = {}
    for i, picked in enumerate(choices):
        if picked is not None:
            deadline, _split = picked
            schedules[jobs[i].id] = Schedule(job_id=jobs[i].id, deadline=deadline)

    for t, tagged in per_slot_items_w.items():
        witness = worker_pack.witness([item for _i, item in tagged])
        if witness is None:
            raise AssertionError("winning choice lost worker packability at materialization")
        for (i, _item), placement in zip(tagged, witness):
            for server, n in placement.items():
                schedules[jobs[i].id].workers[(t, server)] = n
    for t, tagged in per_slot_items_p.items():
        witness = ps_pack.witness([item for _i, item in tagged])
        if witness is None:
            raise AssertionError("winning choice lost PS packability at materialization")
        for (i, _item), placement in zip(tagged, witness):
            for server, n in placement.items():
                schedules[jobs[i].id].ps[(t, server)] = n

    # Joint validation: every admitted schedule must pass with the others applied.
    h, k, r, t_span = (
        cluster.num_worker_servers,
        cluster.num_ps_servers,
        cluster.num_resources,
        cluster.slots,
    )
    w_usage = np.zeros((h, r, t_span))
    p_usage = np.zeros((k, r, t_span))
    by_id = {job.id: job for job in jobs}
    for job_id, schedule in schedules.items():
        job = by_id[job_id]
        problems = validate_schedule(schedule, job, cluster, w_usage, p_usage)
        if problems:
            raise AssertionError(f"oracle produced an invalid schedule for {job_id}: {problems}")
        for (t, server), n in schedule.workers.items():
            for ri in range(r):
                w_usage[server, ri, t - 1] += n * job.worker_demand[ri]
        for (t, server), n in schedule.ps.items():
            for ri in range(r):
                p_usage[server, ri, t - 1] += n * job.ps_demand[ri]
    return schedules
