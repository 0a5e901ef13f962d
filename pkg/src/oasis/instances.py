"""Random desk-scale instances for property suites and tests.

Quantities are drawn on dyadic grids (multiples of 0.25) so that unit-count
floors and ceilings are exact in binary floating point: greedy kernels and
enumeration references then agree bit-for-bit at integer boundaries instead
of flaking on representation noise.
"""

from __future__ import annotations

import numpy as np

from .model import ClusterSpec, Job, UtilityFunction


def _dyadic(rng: np.random.Generator, low: float, high: float, step: float = 0.25) -> float:
    lo = round(low / step)
    hi = round(high / step)
    return float(rng.integers(lo, hi + 1) * step)


def random_cluster(
    rng: np.random.Generator,
    *,
    slots: int = 4,
    workers: int = 2,
    ps: int = 2,
    resources: int = 2,
    cap_range: tuple[float, float] = (2.0, 6.0),
) -> ClusterSpec:
    worker_caps = tuple(
        tuple(_dyadic(rng, *cap_range) for _ in range(resources)) for _ in range(workers)
    )
    ps_caps = tuple(
        tuple(_dyadic(rng, *cap_range) for _ in range(resources)) for _ in range(ps)
    )
    return ClusterSpec(slots=slots, worker_caps=worker_caps, ps_caps=ps_caps)


def random_job(
    rng: np.random.Generator,
    cluster: ClusterSpec,
    *,
    job_id: str = "j0",
    arrival: int | None = None,
    max_chunk_epochs: int = 6,
    demand_range: tuple[float, float] = (0.5, 2.0),
    allow_constant_utility: bool = True,
    max_per_chunk: float = 1.5,
) -> Job:
    if arrival is None:
        arrival = int(rng.integers(1, cluster.slots + 1))
    horizon = cluster.slots - arrival + 1
    # epochs * chunks <= max_chunk_epochs with both >= 1; epochs bounded so
    # the job stays completable within its horizon at full parallelism
    epochs = int(rng.integers(1, min(max_chunk_epochs, max(1, horizon * 4)) + 1))
    chunks = int(rng.integers(1, max_chunk_epochs // epochs + 1))
    minibatches = int(rng.integers(1, 4))
    # Pick the per-mini-batch slot work on the dyadic grid, then split it
    # between compute and exchange so tau stays positive. Keeping
    # minibatches * slot_work at or below 1.0 guarantees one worker can
    # finish a chunk-epoch within a slot (jobs above that need several
    # workers per chunk and can become unschedulable when chunks are few).
    per_chunk = _dyadic(rng, 0.25, max(0.25, min(max_per_chunk, horizon / epochs)))
    slot_work = per_chunk / minibatches
    worker_bw = float(rng.choice([0.5, 1.0]))
    ps_bw = worker_bw * float(rng.choice([1.0, 2.0]))
    comm_fraction = float(rng.choice([0.25, 0.5]))
    grad_size = slot_work * comm_fraction * worker_bw / 2.0
    tau = slot_work - 2.0 * grad_size / worker_bw

    r = cluster.num_resources
    worker_demand = tuple(_dyadic(rng, *demand_range) for _ in range(r))
    ps_demand = tuple(_dyadic(rng, *demand_range) for _ in range(r))

    gamma2_choices = [0.25, 0.5, 1.0, 5.0]
    if allow_constant_utility:
        gamma2_choices.append(0.0)
    utility = UtilityFunction(
        gamma1=float(rng.integers(2, 40)),
        gamma2=float(rng.choice(gamma2_choices)),
        gamma3=float(rng.integers(1, cluster.slots + 1)),
    )
    return Job(
        id=job_id,
        arrival=arrival,
        epochs=epochs,
        chunks=chunks,
        minibatches=minibatches,
        tau=tau,
        grad_size=grad_size,
        worker_bw=worker_bw,
        ps_bw=ps_bw,
        worker_demand=worker_demand,
        ps_demand=ps_demand,
        utility=utility,
    )


def random_instance(
    rng: np.random.Generator,
    *,
    n_jobs: int = 3,
    slots: int = 4,
    workers: int = 2,
    ps: int = 2,
    resources: int = 2,
    max_chunk_epochs: int = 4,
    cap_range: tuple[float, float] = (2.0, 6.0),
    demand_range: tuple[float, float] = (0.5, 2.0),
    max_per_chunk: float = 1.5,
    max_arrival: int | None = None,
) -> tuple[list[Job], ClusterSpec]:
    cluster = random_cluster(
        rng, slots=slots, workers=workers, ps=ps, resources=resources, cap_range=cap_range
    )
    last = min(slots, max_arrival) if max_arrival else slots
    arrivals = sorted(int(rng.integers(1, last + 1)) for _ in range(n_jobs))
    jobs = [
        random_job(
            rng,
            cluster,
            job_id=f"j{i:03d}",
            arrival=arrivals[i],
            max_chunk_epochs=max_chunk_epochs,
            demand_range=demand_range,
            max_per_chunk=max_per_chunk,
        )
        for i in range(n_jobs)
    ]
    return jobs, cluster


def random_loaded_state(
    rng: np.random.Generator,
    jobs: list[Job],
    cluster: ClusterSpec,
    fill_fraction: float = 0.4,
):
    """A pricing state with part of the cluster already allocated.

    Usage is injected directly (amounts on the dyadic grid, within caps) so
    search/oracle comparisons run against non-trivial price landscapes
    without depending on the engine.
    """
    from .pricing import PricingState, compute_constants

    constants = compute_constants(jobs, cluster)
    state = PricingState(cluster, constants)
    for arr, caps in ((state.g, cluster.worker_caps), (state.v, cluster.ps_caps)):
        for s in range(arr.shape[0]):
            for r in range(arr.shape[1]):
                for t in range(arr.shape[2]):
                    if rng.random() < fill_fraction:
                        arr[s, r, t] = _dyadic(rng, 0.0, caps[s][r] * 0.75)
    return state
