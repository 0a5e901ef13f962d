"""Domain model: jobs, clusters, schedules, and the shared feasibility rules.

Conventions used throughout the package:

- Time is slotted. Slot indices are 1-based and run over ``[1, T]``.
- A *chunk-epoch* is one data chunk trained once; a job with ``epochs`` E and
  ``chunks`` N must complete ``E * N`` chunk-epochs.
- All per-mini-batch times (compute and gradient exchange) are stored as
  fractions of one slot. The trace generator performs unit conversion once,
  so no kernel in this package ever sees seconds, MB, or Gbps mixed together.
- Worker / parameter-server counts and chunk-epoch workloads are exact
  integers; resource amounts, prices, and costs are 64-bit floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

# Tolerance for rounding a float to an integer unit count. Demand and timing
# quantities are physical values far coarser than 1e-9, so a value within
# 1e-9 of an integer is treated as that integer rather than pushed over the
# ceiling by representation error.
UNIT_EPS = 1e-9

# Tolerance for capacity comparisons (resource amounts are sums of floats).
CAPACITY_TOL = 1e-6


class ModelError(ValueError):
    """Structurally invalid domain object (bad dimension, sign, or index)."""


def ceil_units(x: float) -> int:
    """Ceiling to an integer unit count, immune to float noise near integers."""
    return max(0, math.ceil(x - UNIT_EPS))


def floor_units(x: float) -> int:
    """Floor to an integer unit count, immune to float noise near integers."""
    return max(0, math.floor(x + UNIT_EPS))


@dataclass(frozen=True)
class UtilityFunction:
    """Sigmoid value of a job as a function of completion delay.

    ``value(delay) = gamma1 / (1 + exp(gamma2 * (delay - gamma3)))``

    gamma1 is the job priority (utility units), gamma2 the decay rate
    (1/slots; 0 gives a constant utility of gamma1/2), gamma3 the target
    completion delay in slots relative to arrival. The function is strictly
    positive and non-increasing in the delay.
    """

    gamma1: float
    gamma2: float
    gamma3: float

    def __post_init__(self) -> None:
        if not self.gamma1 > 0:
            raise ModelError(f"gamma1 must be positive, got {self.gamma1}")
        if self.gamma2 < 0:
            raise ModelError(f"gamma2 must be non-negative, got {self.gamma2}")
        if self.gamma3 < 1:
            raise ModelError(f"gamma3 must be >= 1, got {self.gamma3}")

    def __call__(self, delay: float) -> float:
        x = self.gamma2 * (delay - self.gamma3)
        # Numerically stable logistic; keeps the result strictly positive.
        if x >= 0:
            e = math.exp(-x)
            return self.gamma1 * e / (1.0 + e)
        return self.gamma1 / (1.0 + math.exp(x))


@dataclass(frozen=True)
class ClusterSpec:
    """Static cluster description.

    ``worker_caps[h][r]`` is the capacity of resource r on worker server h;
    ``ps_caps[k][r]`` the same for parameter-server machines. All capacities
    must be strictly positive. ``bandwidth_index``, when set, names the
    resource component that holds network bandwidth so that per-job bandwidth
    figures can be cross-checked against resource vectors.
    """

    slots: int
    worker_caps: tuple[tuple[float, ...], ...]
    ps_caps: tuple[tuple[float, ...], ...]
    bandwidth_index: int | None = None

    def __post_init__(self) -> None:
        if self.slots < 1:
            raise ModelError("cluster needs at least one time slot")
        if not self.worker_caps or not self.ps_caps:
            raise ModelError("cluster needs at least one server in each pool")
        object.__setattr__(self, "worker_caps", tuple(tuple(float(c) for c in row) for row in self.worker_caps))
        object.__setattr__(self, "ps_caps", tuple(tuple(float(c) for c in row) for row in self.ps_caps))
        r = len(self.worker_caps[0])
        for row in self.worker_caps + self.ps_caps:
            if len(row) != r:
                raise ModelError("all capacity vectors must share one resource dimension")
            if any(c <= 0 for c in row):
                raise ModelError("server capacities must be strictly positive")
        if self.bandwidth_index is not None and not (0 <= self.bandwidth_index < r):
            raise ModelError(f"bandwidth_index {self.bandwidth_index} outside [0, {r})")

    @property
    def num_resources(self) -> int:
        return len(self.worker_caps[0])

    @property
    def num_worker_servers(self) -> int:
        return len(self.worker_caps)

    @property
    def num_ps_servers(self) -> int:
        return len(self.ps_caps)


@dataclass(frozen=True)
class Job:
    """One training job as submitted to the cluster.

    ``tau`` is the compute time of one mini-batch and ``grad_size`` the
    gradient volume exchanged per mini-batch, pre-scaled so that
    ``grad_size / worker_bw`` is a fraction of one slot (see module notes).
    ``worker_demand`` / ``ps_demand`` give per-instance resource vectors.
    """

    id: str
    arrival: int
    epochs: int
    chunks: int
    minibatches: int
    tau: float
    grad_size: float
    worker_bw: float
    ps_bw: float
    worker_demand: tuple[float, ...]
    ps_demand: tuple[float, ...]
    utility: UtilityFunction

    def __post_init__(self) -> None:
        if self.arrival < 1:
            raise ModelError(f"job {self.id}: arrival must be >= 1")
        for name in ("epochs", "chunks", "minibatches"):
            if getattr(self, name) < 1:
                raise ModelError(f"job {self.id}: {name} must be a positive integer")
        if self.tau < 0 or self.grad_size < 0:
            raise ModelError(f"job {self.id}: negative timing parameters")
        if self.worker_bw <= 0 or self.ps_bw <= 0:
            raise ModelError(f"job {self.id}: bandwidths must be positive")
        object.__setattr__(self, "worker_demand", tuple(float(x) for x in self.worker_demand))
        object.__setattr__(self, "ps_demand", tuple(float(x) for x in self.ps_demand))
        if len(self.worker_demand) != len(self.ps_demand):
            raise ModelError(f"job {self.id}: demand vectors differ in length")
        if any(x < 0 for x in self.worker_demand + self.ps_demand):
            raise ModelError(f"job {self.id}: demands must be non-negative")
        if not (0 < self.slot_work < math.inf):
            raise ModelError(f"job {self.id}: per-mini-batch slot work must be positive and finite")

    @property
    def slot_work(self) -> float:
        """Slots consumed by one mini-batch: compute plus two transfers."""
        return self.tau + 2.0 * self.grad_size / self.worker_bw

    @property
    def total_chunk_epochs(self) -> int:
        return self.epochs * self.chunks

    @property
    def slots_per_chunk_epoch(self) -> float:
        """Worker-slots needed to push one data chunk through one epoch."""
        return self.minibatches * self.slot_work

    @property
    def workload_worker_slots(self) -> float:
        """Total worker-slots the whole job requires (fractional)."""
        return self.total_chunk_epochs * self.slots_per_chunk_epoch

    @property
    def min_duration_slots(self) -> int:
        """Slots needed at full parallelism (all chunks training at once)."""
        return max(1, ceil_units(self.epochs * self.minibatches * self.slot_work))

    def job_class(self) -> str:
        """Workload class by utility decay: insensitive / sensitive / critical."""
        if self.utility.gamma2 == 0:
            return "insensitive"
        return "critical" if self.utility.gamma2 >= 4 else "sensitive"


def validate_job(job: Job, cluster: ClusterSpec) -> None:
    """Check job/cluster cross invariants; raise ModelError on any breach."""
    r = cluster.num_resources
    if len(job.worker_demand) != r:
        raise ModelError(f"job {job.id}: demand vector has {len(job.worker_demand)} entries, cluster has {r} resources")
    if job.arrival > cluster.slots:
        raise ModelError(f"job {job.id}: arrival {job.arrival} beyond timespan {cluster.slots}")
    bi = cluster.bandwidth_index
    if bi is not None:
        if not math.isclose(job.worker_demand[bi], job.worker_bw, rel_tol=1e-9, abs_tol=1e-12):
            raise ModelError(f"job {job.id}: worker_bw {job.worker_bw} != bandwidth demand {job.worker_demand[bi]}")
        if not math.isclose(job.ps_demand[bi], job.ps_bw, rel_tol=1e-9, abs_tol=1e-12):
            raise ModelError(f"job {job.id}: ps_bw {job.ps_bw} != bandwidth demand {job.ps_demand[bi]}")


def workers_needed(d: int, job: Job) -> int:
    """Minimum worker count that can finish ``d`` chunk-epochs in one slot."""
    if d < 0:
        raise ModelError("chunk-epoch count must be non-negative")
    if d == 0:
        return 0
    return ceil_units(d * job.slots_per_chunk_epoch)


@dataclass
class Schedule:
    """A complete per-slot placement plan for one job.

    ``workers[(t, h)]`` is the worker count on server h in slot t (missing
    keys mean zero); ``ps[(t, k)]`` likewise for parameter servers.
    ``deadline`` is the slot in which the job completes, ``cost`` the priced
    resource cost of the plan and ``payoff`` the utility minus that cost.
    """

    job_id: str
    workers: dict[tuple[int, int], int] = field(default_factory=dict)
    ps: dict[tuple[int, int], int] = field(default_factory=dict)
    deadline: int = 0
    cost: float = 0.0
    payoff: float = 0.0

    def worker_total(self, t: int) -> int:
        return sum(n for (ts, _h), n in self.workers.items() if ts == t)

    def ps_total(self, t: int) -> int:
        return sum(n for (ts, _k), n in self.ps.items() if ts == t)

    def active_slots(self) -> list[int]:
        slots = {t for (t, _h), n in self.workers.items() if n > 0}
        return sorted(slots)


# Identifiers for the individual feasibility rules, reported by
# validate_schedule. Each maps to one constraint of the scheduling model.
V_WORKLOAD = "workload"                  # enough worker-slots for all chunk-epochs
V_CONCURRENCY = "worker_concurrency"     # per-slot workers <= number of chunks
V_WORKER_CAPACITY = "worker_capacity"    # per-server resource capacity (workers)
V_PS_CAPACITY = "ps_capacity"            # per-server resource capacity (PS)
V_PS_BANDWIDTH = "ps_bandwidth"          # PS aggregate bandwidth covers workers
V_PS_COUNT = "ps_count"                  # no more PS than workers
V_COMPLETION = "completion"              # deadline equals last working slot
V_BEFORE_ARRIVAL = "before_arrival"      # nothing placed before arrival
V_SLOT_RANGE = "slot_range"              # placements within [1, T]
V_NEGATIVE = "negative_count"            # counts are non-negative integers


def validate_schedule(
    schedule: Schedule,
    job: Job,
    cluster: ClusterSpec,
    worker_usage=None,
    ps_usage=None,
    tol: float = CAPACITY_TOL,
) -> list[str]:
    """Re-evaluate every feasibility rule for ``schedule`` added on top of
    ``worker_usage`` / ``ps_usage`` (arrays indexed ``[server][resource][t-1]``,
    or None for an empty cluster). Returns the identifiers of all violated
    rules; an empty list means the schedule is feasible.

    Pure function of its inputs; safe to call repeatedly.
    """
    r = cluster.num_resources
    if len(job.worker_demand) != r or len(job.ps_demand) != r:
        raise ModelError("job demand dimension does not match cluster resources")

    violations: set[str] = set()
    t_span = cluster.slots
    h_count = cluster.num_worker_servers
    k_count = cluster.num_ps_servers

    worker_slot_totals: dict[int, int] = {}
    ps_slot_totals: dict[int, int] = {}

    def scan(entries, server_count, totals):
        for (t, s), n in entries.items():
            if not (1 <= t <= t_span) or not (0 <= s < server_count):
                violations.add(V_SLOT_RANGE)
                continue
            if n < 0 or n != int(n):
                violations.add(V_NEGATIVE)
                continue
            if n > 0 and t < job.arrival:
                violations.add(V_BEFORE_ARRIVAL)
            totals[t] = totals.get(t, 0) + int(n)

    scan(schedule.workers, h_count, worker_slot_totals)
    scan(schedule.ps, k_count, ps_slot_totals)

    # Total work across all slots must cover the full training workload.
    total_worker_slots = sum(worker_slot_totals.values())
    if total_worker_slots + tol < job.workload_worker_slots:
        violations.add(V_WORKLOAD)

    for t, y_total in worker_slot_totals.items():
        if y_total > job.chunks:
            violations.add(V_CONCURRENCY)
        z_total = ps_slot_totals.get(t, 0)
        if y_total > 0 and z_total * job.ps_bw + tol < y_total * job.worker_bw:
            violations.add(V_PS_BANDWIDTH)
        if z_total > y_total:
            violations.add(V_PS_COUNT)
    for t, z_total in ps_slot_totals.items():
        if z_total > worker_slot_totals.get(t, 0):
            violations.add(V_PS_COUNT)

    active = [t for t, y in worker_slot_totals.items() if y > 0]
    if not active or max(active) != schedule.deadline:
        violations.add(V_COMPLETION)

    def capacity_check(entries, caps, usage, demand, ident):
        for (t, s), n in entries.items():
            if n <= 0 or not (1 <= t <= t_span) or not (0 <= s < len(caps)):
                continue
            for ri in range(r):
                used = float(usage[s][ri][t - 1]) if usage is not None else 0.0
                if used + n * demand[ri] > caps[s][ri] + tol:
                    violations.add(ident)
                    return

    capacity_check(schedule.workers, cluster.worker_caps, worker_usage, job.worker_demand, V_WORKER_CAPACITY)
    capacity_check(schedule.ps, cluster.ps_caps, ps_usage, job.ps_demand, V_PS_CAPACITY)

    return sorted(violations)
