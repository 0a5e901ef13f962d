#!/usr/bin/env python3
"""Walk through one admission decision end to end.

A small cluster, one job: derive the price constants, look at the price
landscape, enumerate candidate deadlines, and inspect the schedule the
search settles on.
"""

import numpy as np

from oasis import ClusterSpec, Job, PricingState, UtilityFunction, compute_constants
from oasis.search import best_schedule, dp_cost

cluster = ClusterSpec(
    slots=6,
    worker_caps=((8.0, 8.0), (8.0, 8.0)),   # two worker servers, two resources
    ps_caps=((8.0, 8.0),),                  # one parameter-server machine
)

job = Job(
    id="demo",
    arrival=1,
    epochs=3,
    chunks=2,              # at most two workers may run concurrently
    minibatches=2,
    tau=0.2,               # per-mini-batch compute, fractions of a slot
    grad_size=0.0125,      # pre-scaled gradient volume (grad_size/bw is slots)
    worker_bw=0.5,
    ps_bw=1.0,
    worker_demand=(1.0, 0.5),
    ps_demand=(0.5, 0.5),
    utility=UtilityFunction(gamma1=30.0, gamma2=1.0, gamma3=3.0),
)

print(f"job needs {job.total_chunk_epochs} chunk-epochs; one chunk-epoch")
print(f"occupies a worker for {job.slots_per_chunk_epoch:.2f} slots\n")

constants = compute_constants([job], cluster)
print(f"price floor (worker side) L = {constants.l_worker:.3g}")
print(f"price ceilings per resource U = {[round(u, 3) for u in constants.u_worker]}")
print(f"competitive exponent alpha = {constants.alpha():.2f}\n")

state = PricingState(cluster, constants)

print("deadline enumeration (utility at that delay minus cheapest cost):")
for deadline in range(job.arrival, cluster.slots + 1):
    cost, _ = dp_cost(job, state, deadline)
    utility = job.utility(deadline - job.arrival)
    mark = "infeasible" if np.isinf(cost) else f"payoff {utility - cost: .3f}"
    print(f"  finish by slot {deadline}: utility {utility:6.3f}, cost {cost:8.3g} -> {mark}")

schedule, payoff = best_schedule(job, state)
print(f"\nchosen deadline: slot {schedule.deadline}, payoff {payoff:.3f}")
print("placements (slot -> workers per server / PS per server):")
for t in schedule.active_slots():
    workers = {h: n for (ts, h), n in schedule.workers.items() if ts == t}
    ps = {k: n for (ts, k), n in schedule.ps.items() if ts == t}
    print(f"  slot {t}: workers {workers}, parameter servers {ps}")
