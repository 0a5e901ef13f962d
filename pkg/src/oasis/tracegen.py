"""Synthetic workload traces: clusters, job populations, and trace files.

The generator samples every job parameter uniformly from configurable
ranges and performs all unit conversion up front: gradient sizes are given
in MB and bandwidths in Gbps, and are folded into a single ``grad_size``
figure scaled by the slot length so that downstream code works purely in
slot fractions.

Default ranges are sized for laptop-scale experiments (the schedule search
is quadratic in a job's chunk-epoch count); every range is a plain field on
:class:`TraceSpec` and can be widened to heavier workloads.

Trace files are line-delimited JSON: a header record carrying the cluster,
then one record per job in arrival order. Floats round-trip exactly.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from .model import ClusterSpec, Job, ModelError, UtilityFunction, validate_job

RESOURCES = ("gpu", "vcpu", "mem_gb", "storage_gb", "bw_gbps")
BANDWIDTH_INDEX = 4


class TraceSpecError(ValueError):
    """Unsatisfiable or malformed trace specification."""


@dataclass(frozen=True)
class TraceSpec:
    """Everything needed to sample one reproducible trace."""

    seed: int = 0
    slots: int = 48
    job_count: int = 60
    slot_seconds: float = 1200.0

    # workload shape
    epochs: tuple[int, int] = (2, 6)
    chunks: tuple[int, int] = (2, 10)
    minibatches: tuple[int, int] = (10, 40)
    tau_slots: tuple[float, float] = (0.001, 0.01)
    grad_mb: tuple[float, float] = (30.0, 575.0)

    # utility mix: time-insensitive / sensitive / critical fractions
    class_fractions: tuple[float, float, float] = (0.10, 0.55, 0.35)
    gamma1: tuple[float, float] = (1.0, 100.0)
    gamma2_sensitive: tuple[float, float] = (0.01, 1.0)
    gamma2_critical: tuple[float, float] = (4.0, 6.0)
    gamma3: tuple[int, int] = (1, 15)

    # per-instance demands (order: gpu, vcpu, mem_gb, storage_gb, bw_gbps)
    worker_gpu: tuple[int, int] = (0, 4)
    worker_vcpu: tuple[int, int] = (1, 10)
    worker_mem: tuple[float, float] = (2.0, 32.0)
    worker_storage: tuple[float, float] = (5.0, 10.0)
    worker_bw: tuple[float, float] = (0.5, 5.0)
    ps_vcpu: tuple[int, int] = (1, 10)
    ps_mem: tuple[float, float] = (2.0, 32.0)
    ps_storage: tuple[float, float] = (5.0, 10.0)
    ps_bw: tuple[float, float] = (5.0, 20.0)

    # cluster
    worker_servers: int = 8
    ps_servers: int = 8
    worker_server_gpu: tuple[float, float] = (8, 16)
    worker_server_vcpu: tuple[float, float] = (32, 64)
    worker_server_mem: tuple[float, float] = (128, 512)
    worker_server_storage: tuple[float, float] = (200, 500)
    ps_server_gpu: tuple[float, float] = (1, 2)
    ps_server_vcpu: tuple[float, float] = (32, 64)
    ps_server_mem: tuple[float, float] = (128, 512)
    ps_server_storage: tuple[float, float] = (200, 500)
    server_bw: tuple[float, float] = (20, 50)

    # arrivals: jobs land in [1, ceil(slots*arrival_fraction)], weighted by
    # the (optional) per-slot profile, resampled to that span
    arrival_fraction: float = 0.75
    arrival_profile: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.job_count < 0 or self.slots < 1:
            raise TraceSpecError("job_count must be >= 0 and slots >= 1")
        if abs(sum(self.class_fractions) - 1.0) > 1e-9:
            raise TraceSpecError("class fractions must sum to 1")
        for name in ("epochs", "chunks", "minibatches", "tau_slots", "grad_mb", "gamma1", "gamma3"):
            lo, hi = getattr(self, name)
            if lo > hi or lo < 0:
                raise TraceSpecError(f"range {name} is empty or negative")
        if not (0 < self.arrival_fraction <= 1):
            raise TraceSpecError("arrival_fraction must lie in (0, 1]")
        if self.slot_seconds <= 0:
            raise TraceSpecError("slot_seconds must be positive")

    @classmethod
    def from_dict(cls, raw: dict) -> "TraceSpec":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise TraceSpecError(f"unknown trace spec keys: {sorted(unknown)}")
        coerced = {}
        for key, value in raw.items():
            if isinstance(value, list):
                value = tuple(value)
            coerced[key] = value
        return cls(**coerced)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        return out


def _uniform(rng: np.random.Generator, bounds) -> float:
    lo, hi = bounds
    return float(rng.uniform(lo, hi))


def _uniform_int(rng: np.random.Generator, bounds) -> int:
    lo, hi = bounds
    return int(rng.integers(lo, hi + 1))


def generate_cluster(spec: TraceSpec, rng: np.random.Generator) -> ClusterSpec:
    def server(gpu, vcpu, mem, storage):
        return (
            _uniform(rng, gpu),
            _uniform(rng, vcpu),
            _uniform(rng, mem),
            _uniform(rng, storage),
            _uniform(rng, spec.server_bw),
        )

    worker_caps = tuple(
        server(spec.worker_server_gpu, spec.worker_server_vcpu, spec.worker_server_mem, spec.worker_server_storage)
        for _ in range(spec.worker_servers)
    )
    ps_caps = tuple(
        server(spec.ps_server_gpu, spec.ps_server_vcpu, spec.ps_server_mem, spec.ps_server_storage)
        for _ in range(spec.ps_servers)
    )
    return ClusterSpec(
        slots=spec.slots,
        worker_caps=worker_caps,
        ps_caps=ps_caps,
        bandwidth_index=BANDWIDTH_INDEX,
    )


def _sample_arrivals(spec: TraceSpec, rng: np.random.Generator) -> list[int]:
    span = max(1, int(np.ceil(spec.slots * spec.arrival_fraction)))
    if spec.arrival_profile is None:
        weights = np.ones(span)
    else:
        profile = np.asarray(spec.arrival_profile, dtype=float)
        if profile.ndim != 1 or len(profile) == 0 or (profile < 0).any() or profile.sum() == 0:
            raise TraceSpecError("arrival_profile must be a non-empty non-negative weight vector")
        # Resample the profile shape onto the arrival span.
        x_src = np.linspace(0.0, 1.0, len(profile))
        x_dst = np.linspace(0.0, 1.0, span)
        weights = np.interp(x_dst, x_src, profile)
        if weights.sum() == 0:
            weights = np.ones(span)
    probs = weights / weights.sum()
    arrivals = rng.choice(np.arange(1, span + 1), size=spec.job_count, p=probs)
    return sorted(int(a) for a in arrivals)


def _class_quotas(spec: TraceSpec, rng: np.random.Generator) -> list[int]:
    """Per-job class labels (0 insensitive, 1 sensitive, 2 critical) with
    largest-remainder quotas, shuffled: realized counts stay within one job
    of the requested fractions."""
    n = spec.job_count
    exact = [f * n for f in spec.class_fractions]
    counts = [int(x) for x in exact]
    remainders = sorted(range(3), key=lambda i: exact[i] - counts[i], reverse=True)
    for i in range(n - sum(counts)):
        counts[remainders[i % 3]] += 1
    labels = [c for c, k in enumerate(counts) for _ in range(k)]
    rng.shuffle(labels)
    return labels


def _sample_utility(spec: TraceSpec, rng: np.random.Generator, label: int) -> UtilityFunction:
    if label == 0:
        gamma2 = 0.0
    elif label == 1:
        gamma2 = _uniform(rng, spec.gamma2_sensitive)
    else:
        gamma2 = _uniform(rng, spec.gamma2_critical)
    return UtilityFunction(
        gamma1=_uniform(rng, spec.gamma1),
        gamma2=gamma2,
        gamma3=float(_uniform_int(rng, spec.gamma3)),
    )


def generate_trace(spec: TraceSpec) -> tuple[list[Job], ClusterSpec]:
    """Deterministically sample a job population and a cluster from ``spec``."""
    rng = np.random.default_rng(spec.seed)
    cluster = generate_cluster(spec, rng)
    arrivals = _sample_arrivals(spec, rng)
    labels = _class_quotas(spec, rng)
    jobs: list[Job] = []
    for i in range(spec.job_count):
        worker_bw = _uniform(rng, spec.worker_bw)
        ps_bw = _uniform(rng, spec.ps_bw)
        worker_demand = (
            float(_uniform_int(rng, spec.worker_gpu)),
            float(_uniform_int(rng, spec.worker_vcpu)),
            _uniform(rng, spec.worker_mem),
            _uniform(rng, spec.worker_storage),
            worker_bw,
        )
        ps_demand = (
            0.0,
            float(_uniform_int(rng, spec.ps_vcpu)),
            _uniform(rng, spec.ps_mem),
            _uniform(rng, spec.ps_storage),
            ps_bw,
        )
        grad_mb = _uniform(rng, spec.grad_mb)
        # MB -> Gbit, then scale by the slot length so grad_size / bw is a
        # fraction of one slot.
        grad_size = grad_mb * 8e-3 / spec.slot_seconds
        job = Job(
            id=f"j{i:04d}",
            arrival=arrivals[i],
            epochs=_uniform_int(rng, spec.epochs),
            chunks=_uniform_int(rng, spec.chunks),
            minibatches=_uniform_int(rng, spec.minibatches),
            tau=_uniform(rng, spec.tau_slots),
            grad_size=grad_size,
            worker_bw=worker_bw,
            ps_bw=ps_bw,
            worker_demand=worker_demand,
            ps_demand=ps_demand,
            utility=_sample_utility(spec, rng, labels[i]),
        )
        validate_job(job, cluster)
        jobs.append(job)
    return jobs, cluster


def estimated_load(jobs: list[Job], cluster: ClusterSpec) -> float:
    """Aggregate worker-pool demand over capacity; > 1 means oversubscribed.

    Uses the binding resource: max over resource types of total demanded
    worker-slots weighted by per-worker demand, divided by capacity summed
    over servers and slots.
    """
    r_count = cluster.num_resources
    totals = [sum(row[r] for row in cluster.worker_caps) * cluster.slots for r in range(r_count)]
    demand = [0.0] * r_count
    for job in jobs:
        for r in range(r_count):
            demand[r] += job.workload_worker_slots * job.worker_demand[r]
    return max(d / t for d, t in zip(demand, totals))


# -- trace files ------------------------------------------------------------


def write_trace(path, jobs: list[Job], cluster: ClusterSpec) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "record": "cluster",
            "slots": cluster.slots,
            "resources": list(RESOURCES) if cluster.num_resources == len(RESOURCES) else
            [f"r{i}" for i in range(cluster.num_resources)],
            "bandwidth_index": cluster.bandwidth_index,
            "worker_servers": [list(row) for row in cluster.worker_caps],
            "ps_servers": [list(row) for row in cluster.ps_caps],
        }
        fh.write(json.dumps(header) + "\n")
        for job in jobs:
            fh.write(json.dumps({
                "record": "job",
                "id": job.id,
                "arrival": job.arrival,
                "epochs": job.epochs,
                "chunks": job.chunks,
                "minibatches": job.minibatches,
                "tau": job.tau,
                "grad_size": job.grad_size,
                "worker_bw": job.worker_bw,
                "ps_bw": job.ps_bw,
                "worker_demand": list(job.worker_demand),
                "ps_demand": list(job.ps_demand),
                "gamma1": job.utility.gamma1,
                "gamma2": job.utility.gamma2,
                "gamma3": job.utility.gamma3,
            }) + "\n")


def read_trace(path) -> tuple[list[Job], ClusterSpec]:
    jobs: list[Job] = []
    cluster: ClusterSpec | None = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            raw = json.loads(line)
            kind = raw.get("record")
            if kind == "cluster":
                cluster = ClusterSpec(
                    slots=raw["slots"],
                    worker_caps=tuple(tuple(row) for row in raw["worker_servers"]),
                    ps_caps=tuple(tuple(row) for row in raw["ps_servers"]),
                    bandwidth_index=raw.get("bandwidth_index"),
                )
            elif kind == "job":
                jobs.append(Job(
                    id=raw["id"],
                    arrival=raw["arrival"],
                    epochs=raw["epochs"],
                    chunks=raw["chunks"],
                    minibatches=raw["minibatches"],
                    tau=raw["tau"],
                    grad_size=raw["grad_size"],
                    worker_bw=raw["worker_bw"],
                    ps_bw=raw["ps_bw"],
                    worker_demand=tuple(raw["worker_demand"]),
                    ps_demand=tuple(raw["ps_demand"]),
                    utility=UtilityFunction(raw["gamma1"], raw["gamma2"], raw["gamma3"]),
                ))
            else:
                raise ModelError(f"{path}:{line_no}: unknown record kind {kind!r}")
    if cluster is None:
        raise ModelError(f"{path}: missing cluster header record")
    for job in jobs:
        validate_job(job, cluster)
    return jobs, cluster
