"""Online event loop: decide each arriving job once, immediately, irrevocably.

On each arrival the engine computes the job's best schedule against current
prices, admits the job iff its payoff (utility minus priced resource cost)
is strictly positive, and on admission commits the schedule's demands so
that prices rise for everyone arriving later. There is no preemption and no
re-admission; rejected jobs leave the state untouched.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .model import ClusterSpec, Job, Schedule
from .pricing import PriceConstants, PricingState
from .search import best_schedule


class ArrivalOrderError(RuntimeError):
    """Jobs must be presented in non-decreasing arrival order."""


@dataclass
class Decision:
    """Outcome of one arrival: admitted iff payoff > 0 iff schedule present."""

    job_id: str
    admitted: bool
    schedule: Schedule | None
    payoff: float
    utility: float
    latency_s: float


class OnlineScheduler:
    """Sequential admission controller over a shared pricing state."""

    def __init__(self, cluster: ClusterSpec, constants: PriceConstants) -> None:
        self.cluster = cluster
        self.state = PricingState(cluster, constants)
        self.decisions: list[Decision] = []
        self._last_arrival = 0
        self._primal = 0.0
        self._payoff_sum = 0.0

    def on_arrival(self, job: Job) -> Decision:
        if job.arrival < self._last_arrival:
            raise ArrivalOrderError(
                f"job {job.id} arrives at {job.arrival}, after slot {self._last_arrival} was already processed"
            )
        self._last_arrival = max(self._last_arrival, job.arrival)

        started = time.perf_counter()
        schedule, payoff = best_schedule(job, self.state)
        admitted = schedule is not None and payoff > 0
        if admitted:
            self.state.commit(schedule, job)
            utility = job.utility(schedule.deadline - job.arrival)
            self._primal += utility
            self._payoff_sum += payoff
        else:
            schedule = None
            payoff = 0.0
            utility = 0.0
        decision = Decision(
            job_id=job.id,
            admitted=admitted,
            schedule=schedule,
            payoff=payoff,
            utility=utility,
            latency_s=time.perf_counter() - started,
        )
        self.decisions.append(decision)
        return decision

    def objective_values(self) -> tuple[float, float]:
        """(primal, dual): admitted utility vs payoffs + price-weighted capacity."""
        dual = self._payoff_sum + self.state.price_capacity_total()
        return self._primal, dual
