"""Best-schedule search for a single job against frozen prices.

Three layers, innermost first:

1. A greedy placement kernel: given a slot and a chunk-epoch count ``d``,
   place the minimum worker count on the cheapest servers first, then the
   minimum parameter-server count the bandwidth coupling requires. Because
   servers are filled cheapest-first, the cost of placing D workers is a
   prefix sum over a sorted marginal-price array, so every (slot, d) query
   is O(1) after one sort per slot.
2. A dynamic program distributing the job's total chunk-epochs over the
   slots of a candidate window: cost(t, D) = min_d slot_cost(t, d) +
   cost(t-1, D-d). Columns are shared across deadlines, so enumerating all
   deadlines costs one DP pass.
3. Deadline enumeration: for each candidate completion slot, payoff =
   utility(deadline - arrival) - cost; the schedule with the largest
   strictly positive payoff wins, earliest deadline on ties.

Infeasibility is a value (``feasible`` flag, +inf sentinel in internal
arrays used only for comparisons/minima, never subtracted or scaled).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import Job, Schedule, UNIT_EPS, ceil_units, workers_needed
from .pricing import PricingState

# Above this workload the DP uses a row-by-row transition instead of one
# (D+1)^2 candidate matrix, trading speed for bounded memory.
_DP_MATRIX_LIMIT = 2048


@dataclass
class SlotPlacement:
    """Placement of one slot's share of the workload (or an infeasible marker)."""

    slot: int
    workers: dict[int, int] = field(default_factory=dict)
    ps: dict[int, int] = field(default_factory=dict)
    cost: float = 0.0
    feasible: bool = True


class _SlotTable:
    """Cheapest-first fill structure for one (job, slot) under frozen prices.

    ``worker_prefix[D]`` is the minimum cost of placing D workers,
    ``ps_prefix[Z]`` the same for parameter servers; both arrays stop at the
    point where either capacity or the per-job concurrency budget runs out.
    """

    __slots__ = ("slot", "worker_takes", "worker_prefix", "max_workers",
                 "ps_takes", "ps_prefix", "max_ps")

    def __init__(self, job: Job, state: PricingState, t: int) -> None:
        self.slot = t
        budget = job.chunks  # concurrent workers bound; PS never exceed workers
        self.worker_takes, self.worker_prefix, self.max_workers = self._fill(
            state.worker_prices(t), job.worker_demand, state.worker_unit_caps(job, t), budget)
        self.ps_takes, self.ps_prefix, self.max_ps = self._fill(
            state.ps_prices(t), job.ps_demand, state.ps_unit_caps(job, t), budget)

    @staticmethod
    def _fill(prices: np.ndarray, demand, unit_caps: np.ndarray, budget: int):
        unit_price = prices @ np.asarray(demand, dtype=float)
        order = np.lexsort((np.arange(len(unit_price)), unit_price))
        takes: list[tuple[int, int, float]] = []
        marginal: list[float] = []
        placed = 0
        for server in order:
            if placed >= budget:
                break
            n = min(int(unit_caps[server]), budget - placed)
            if n > 0:
                takes.append((int(server), n, float(unit_price[server])))
                marginal.extend([float(unit_price[server])] * n)
                placed += n
        prefix = np.zeros(placed + 1)
        if placed:
            np.cumsum(marginal, out=prefix[1:])
        return takes, prefix, placed

    def ps_required(self, job: Job, d_workers: int) -> int:
        return ceil_units(d_workers * job.worker_bw / job.ps_bw)

    def query(self, job: Job, d_workers: int) -> tuple[bool, float, int]:
        """(feasible, cost, ps count) for placing ``d_workers`` workers."""
        if d_workers == 0:
            return True, 0.0, 0
        if d_workers > self.max_workers:
            return False, math.inf, 0
        z = self.ps_required(job, d_workers)
        if z > self.max_ps or z > d_workers:
            return False, math.inf, 0
        return True, float(self.worker_prefix[d_workers] + self.ps_prefix[z]), z

    @staticmethod
    def _materialize(takes, count: int) -> dict[int, int]:
        out: dict[int, int] = {}
        for server, cap, _price in takes:
            if count <= 0:
                break
            n = min(cap, count)
            out[server] = n
            count -= n
        return out

    def placement(self, job: Job, t: int, d_workers: int) -> SlotPlacement:
        ok, cost, z = self.query(job, d_workers)
        if not ok:
            return SlotPlacement(slot=t, cost=math.inf, feasible=False)
        return SlotPlacement(
            slot=t,
            workers=self._materialize(self.worker_takes, d_workers),
            ps=self._materialize(self.ps_takes, z),
            cost=cost,
            feasible=True,
        )


class DpTable:
    """Rolling DP over slots: minimum cost of finishing D chunk-epochs so far.

    ``push_slot`` appends one slot's cost row (indexed by the chunk-epochs
    done in that slot) and returns the new column over remaining workload;
    per-slot argmin rows are kept for backtracking.
    """

    def __init__(self, workload: int) -> None:
        self.workload = workload
        self.cols: list[np.ndarray] = []
        self.args: list[np.ndarray] = []
        n = workload + 1
        if n <= _DP_MATRIX_LIMIT:
            diff = np.arange(n)[:, None] - np.arange(n)[None, :]
            self._idx = np.where(diff >= 0, diff, n)
        else:
            self._idx = None

    def push_slot(self, cost_row: np.ndarray) -> np.ndarray:
        n = self.workload + 1
        if not self.cols:
            col = cost_row[:n].astype(float).copy()
            arg = np.arange(n)
        else:
            prev = self.cols[-1]
            if self._idx is not None:
                prev_ext = np.append(prev, np.inf)
                cand = cost_row[None, :n] + prev_ext[self._idx]
                arg = cand.argmin(axis=1)
                col = cand[np.arange(n), arg]
            else:
                col = np.empty(n)
                arg = np.empty(n, dtype=np.int64)
                for total in range(n):
                    cand = cost_row[: total + 1] + prev[total::-1]
                    arg[total] = int(cand.argmin())
                    col[total] = cand[arg[total]]
        self.cols.append(col)
        self.args.append(arg)
        return col

    def backtrack(self, upto_slot_index: int, total: int) -> list[int]:
        """Chunk-epochs chosen per slot index 0..upto, summing to ``total``."""
        split = [0] * (upto_slot_index + 1)
        remaining = total
        for i in range(upto_slot_index, -1, -1):
            d = int(self.args[i][remaining])
            split[i] = d
            remaining -= d
        if remaining != 0:
            raise AssertionError("DP backtrack did not consume the workload")
        return split


def min_cost_split(slot_costs, workload: int) -> tuple[float, list[int]]:
    """Reference entry to the DP core on explicit per-slot cost rows.

    ``slot_costs[i][d]`` is the cost of doing d chunk-epochs in the i-th
    slot; rows must have workload+1 entries. Returns the minimum total cost
    of splitting ``workload`` across the slots and the chosen split, or
    (inf, []) when no split is feasible.
    """
    table = DpTable(workload)
    col = None
    for row in slot_costs:
        row = np.asarray(row, dtype=float)
        if len(row) != workload + 1:
            raise ValueError("each cost row must cover d = 0..workload")
        col = table.push_slot(row)
    if col is None or not np.isfinite(col[workload]):
        return math.inf, []
    return float(col[workload]), table.backtrack(len(table.cols) - 1, workload)


class _SearchContext:
    """Caches per-slot tables and cost rows for one job decision."""

    def __init__(self, job: Job, state: PricingState, use_cache: bool = True) -> None:
        self.job = job
        self.state = state
        self.use_cache = use_cache
        self._tables: dict[int, _SlotTable] = {}
        self._rows: dict[int, np.ndarray] = {}
        en = job.total_chunk_epochs
        d = np.arange(en + 1)
        need = np.ceil(d * job.slots_per_chunk_epoch - UNIT_EPS).astype(np.int64)
        need[0] = 0
        self.d_to_workers = np.maximum(need, 0)
        self.z_of_d = np.ceil(self.d_to_workers * (job.worker_bw / job.ps_bw) - UNIT_EPS).astype(np.int64)
        self.z_of_d = np.maximum(self.z_of_d, 0)

    def table(self, t: int) -> _SlotTable:
        tbl = self._tables.get(t)
        if tbl is None:
            tbl = _SlotTable(self.job, self.state, t)
            if self.use_cache:
                self._tables[t] = tbl
        return tbl

    def cost_row(self, t: int) -> np.ndarray:
        row = self._rows.get(t)
        if row is not None:
            return row
        tbl = self.table(t)
        need = self.d_to_workers
        z = self.z_of_d
        feasible = (need <= tbl.max_workers) & (z <= tbl.max_ps) & (z <= np.maximum(need, 0)) | (need == 0)
        row = np.full(len(need), np.inf)
        if feasible.any():
            idx_w = need[feasible]
            idx_z = z[feasible]
            row[feasible] = tbl.worker_prefix[idx_w] + tbl.ps_prefix[idx_z]
        if self.use_cache:
            self._rows[t] = row
        return row


def cost_t(job: Job, state: PricingState, t: int, d: int) -> SlotPlacement:
    """Optimal placement for ``d`` chunk-epochs of ``job`` in slot ``t``."""
    if not (job.arrival <= t <= state.cluster.slots):
        raise ValueError(f"slot {t} outside [{job.arrival}, {state.cluster.slots}]")
    if not (0 <= d <= job.total_chunk_epochs):
        raise ValueError(f"chunk-epoch count {d} outside [0, {job.total_chunk_epochs}]")
    table = _SlotTable(job, state, t)
    return table.placement(job, t, workers_needed(d, job))


def dp_cost(
    job: Job,
    state: PricingState,
    deadline: int,
    workload: int | None = None,
    use_cache: bool = True,
) -> tuple[float, list[SlotPlacement]]:
    """Minimum cost of finishing ``workload`` chunk-epochs in
    [arrival, deadline], plus the arg-min per-slot placements (active slots
    only). Returns (inf, []) when infeasible.
    """
    if workload is None:
        workload = job.total_chunk_epochs
    if not (job.arrival <= deadline <= state.cluster.slots):
        raise ValueError(f"deadline {deadline} outside [{job.arrival}, {state.cluster.slots}]")
    ctx = _SearchContext(job, state, use_cache=use_cache)
    table = DpTable(workload)
    col = None
    for t in range(job.arrival, deadline + 1):
        col = table.push_slot(ctx.cost_row(t))
    assert col is not None
    if not np.isfinite(col[workload]):
        return math.inf, []
    split = table.backtrack(deadline - job.arrival, workload)
    placements = [
        ctx.table(job.arrival + i).placement(job, job.arrival + i, int(ctx.d_to_workers[d]))
        for i, d in enumerate(split)
        if d > 0
    ]
    return float(col[workload]), placements


def best_schedule(
    job: Job,
    state: PricingState,
    use_cache: bool = True,
) -> tuple[Schedule | None, float]:
    """Payoff-maximizing schedule of ``job`` against the frozen ``state``.

    Returns (schedule, payoff) with payoff > 0, or (None, 0.0) when no
    deadline yields a strictly positive payoff (the job is rejected).
    """
    t_span = state.cluster.slots
    if job.arrival > t_span:
        return None, 0.0
    en = job.total_chunk_epochs
    ctx = _SearchContext(job, state, use_cache=use_cache)
    table = DpTable(en)

    best_payoff = 0.0
    best_deadline = -1
    best_cost = math.inf
    for t in range(job.arrival, t_span + 1):
        col = table.push_slot(ctx.cost_row(t))
        total = col[en]
        if not np.isfinite(total):
            continue
        payoff = job.utility(t - job.arrival) - float(total)
        if payoff > best_payoff:
            best_payoff = payoff
            best_deadline = t
            best_cost = float(total)

    if best_deadline < 0:
        return None, 0.0

    split = table.backtrack(best_deadline - job.arrival, en)
    schedule = Schedule(job_id=job.id, deadline=best_deadline, cost=best_cost, payoff=best_payoff)
    for i, d in enumerate(split):
        if d == 0:
            continue
        t = job.arrival + i
        placement = ctx.table(t).placement(job, t, int(ctx.d_to_workers[d]))
        if not placement.feasible:
            raise AssertionError("DP selected an infeasible slot placement")
        for server, n in placement.workers.items():
            schedule.workers[(t, server)] = n
        for server, n in placement.ps.items():
            schedule.ps[(t, server)] = n
    return schedule, best_payoff
