#!/usr/bin/env python3
"""Watch prices climb as arrivals commit resources.

Replays a stream of arrivals on a small cluster and prints, after each
decision, the admission outcome and how the priciest slot of the worker
pool has moved. Early jobs get in cheaply; once popular slots fill, the
exponential price curve starts filtering low-value work.
"""

import numpy as np

from oasis import OnlineScheduler, compute_constants
from oasis.tracegen import TraceSpec, generate_trace

spec = TraceSpec(
    seed=42, job_count=30, slots=12,
    worker_servers=2, ps_servers=2,
    chunks=(2, 6), epochs=(2, 4), arrival_fraction=0.7,
)
jobs, cluster = generate_trace(spec)
constants = compute_constants(jobs, cluster)
engine = OnlineScheduler(cluster, constants)

print(f"{len(jobs)} jobs over {cluster.slots} slots; alpha = {constants.alpha():.1f}\n")
print("  job     arrive   class        payoff   decision   max fill   P (total)   D (dual)")

for job in sorted(jobs, key=lambda j: j.arrival):
    decision = engine.on_arrival(job)
    fill = float((engine.state.g / np.asarray(cluster.worker_caps)[:, :, None]).max())
    p, d = engine.objective_values()
    verdict = "admit " if decision.admitted else "reject"
    print(f"  {job.id}  t={job.arrival:3d}   {job.job_class():11s} "
          f"{decision.payoff:8.2f}   {verdict}    {fill:6.1%}   {p:9.2f}  {d:9.2f}")

admitted = sum(d.admitted for d in engine.decisions)
print(f"\nadmitted {admitted}/{len(jobs)}; dual stays above primal throughout.")
