"""Dual resource prices and the mutable allocation state of the online engine.

Each (server, resource, slot) cell carries a price that grows exponentially
with its allocated fraction, from a floor L (so that any population job is
worth admitting on an empty cluster) to a ceiling U (so that nothing is
admitted through an exhausted resource):

    price = L * (U_r / L) ** (allocated / capacity)

The constants are derived from a job population; by default the full trace
is used, but any prior population can be supplied instead to model online
estimation of the constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import ClusterSpec, Job, Schedule, ceil_units

# A worker with zero demand for some resource must not be priced through it;
# when *no* job demands a resource the ceiling degenerates to L*e so the
# price stays well-defined and never gates admission.
_UNUSED_RESOURCE_RATIO = math.e


class PricingError(ValueError):
    """Raised for invalid populations or capacity overflows on commit."""


@dataclass(frozen=True)
class PriceConstants:
    """Price-function endpoints and scaling factors for one cluster/population.

    ``u_worker[r]`` / ``u_ps[r]`` are the per-unit-resource utility ceilings,
    ``l_worker`` / ``l_ps`` the floors, and ``eta_worker`` / ``eta_ps`` the
    deflation factors applied to the floors. ``estimate_scale`` multiplies
    the U/L ratio actually used by the price functions, modelling inaccurate
    estimation of the constants (1.0 = exact knowledge).
    """

    u_worker: tuple[float, ...]
    u_ps: tuple[float, ...]
    l_worker: float
    l_ps: float
    eta_worker: float
    eta_ps: float
    estimate_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.l_worker <= 0 or self.l_ps <= 0:
            raise PricingError("price floors must be positive")
        if self.eta_worker < 1 or self.eta_ps < 1:
            raise PricingError("eta factors must be >= 1")
        if self.estimate_scale <= 0:
            raise PricingError("estimate_scale must be positive")
        if any(u <= self.l_worker for u in self.u_worker):
            raise PricingError("every worker price ceiling must exceed the floor")
        if any(u <= self.l_ps for u in self.u_ps):
            raise PricingError("every PS price ceiling must exceed the floor")

    def worker_ratio(self, r: int) -> float:
        return self.estimate_scale * self.u_worker[r] / self.l_worker

    def ps_ratio(self, r: int) -> float:
        return self.estimate_scale * self.u_ps[r] / self.l_ps

    def alpha(self) -> float:
        """Competitive-ratio exponent: max over resources of 1 and ln(U/L)."""
        best = 1.0
        for r in range(len(self.u_worker)):
            best = max(best, math.log(self.worker_ratio(r)), math.log(self.ps_ratio(r)))
        return best


def compute_constants(
    jobs: Sequence[Job],
    cluster: ClusterSpec,
    *,
    estimate_scale: float = 1.0,
) -> PriceConstants:
    """Derive price constants from a job population.

    The ceilings take each job's utility at its fastest possible completion
    per unit of demanded resource; the floors take the slowest (end-of-span)
    utility per unit of total workload demand, deflated by 4*eta. The eta
    factors are the smallest values >= 1 satisfying their load inequalities,
    with equality at the binding job.
    """
    if not jobs:
        raise PricingError("constants need a non-empty job population")
    r_count = cluster.num_resources
    t_span = cluster.slots

    worker_cap_total = sum(sum(row) for row in cluster.worker_caps)
    ps_cap_total = sum(sum(row) for row in cluster.ps_caps)

    u_worker = [0.0] * r_count
    u_ps = [0.0] * r_count
    l_worker = math.inf
    l_ps = math.inf
    eta_worker = 1.0
    eta_ps = 1.0

    for job in jobs:
        f_best = job.utility(job.min_duration_slots - job.arrival)
        f_worst = job.utility(t_span - job.arrival)
        if f_worst <= 0:
            raise PricingError(f"job {job.id}: non-positive utility at end of span")
        workload = ceil_units(job.workload_worker_slots)
        w_weighted = sum(workload * w for w in job.worker_demand)
        s_weighted = sum(workload * s for s in job.ps_demand)
        if w_weighted <= 0 or s_weighted <= 0:
            raise PricingError(f"job {job.id}: zero aggregate demand")
        for r in range(r_count):
            if job.worker_demand[r] > 0:
                u_worker[r] = max(u_worker[r], f_best / job.worker_demand[r])
            if job.ps_demand[r] > 0:
                u_ps[r] = max(u_ps[r], f_best / job.ps_demand[r])
        l_worker = min(l_worker, f_worst / w_weighted)
        l_ps = min(l_ps, f_worst / s_weighted)
        eta_worker = max(eta_worker, t_span * worker_cap_total / (workload * sum(job.worker_demand)))
        eta_ps = max(eta_ps, t_span * ps_cap_total / (workload * sum(job.ps_demand)))

    l_worker /= 4.0 * eta_worker
    l_ps /= 4.0 * eta_ps

    # Resources no job demands: degenerate ceiling just above the floor.
    u_worker = [u if u > 0 else l_worker * _UNUSED_RESOURCE_RATIO for u in u_worker]
    u_ps = [u if u > 0 else l_ps * _UNUSED_RESOURCE_RATIO for u in u_ps]

    return PriceConstants(
        u_worker=tuple(u_worker),
        u_ps=tuple(u_ps),
        l_worker=l_worker,
        l_ps=l_ps,
        eta_worker=eta_worker,
        eta_ps=eta_ps,
        estimate_scale=estimate_scale,
    )


class PricingState:
    """Allocated amounts and implied prices per (server, resource, slot).

    Mutated only by :meth:`commit`; the engine processes one arrival at a
    time, so reads between commits see a consistent snapshot.
    """

    def __init__(self, cluster: ClusterSpec, constants: PriceConstants) -> None:
        if len(constants.u_worker) != cluster.num_resources:
            raise PricingError("constants dimension does not match cluster resources")
        self.cluster = cluster
        self.constants = constants
        h, k, r, t = (
            cluster.num_worker_servers,
            cluster.num_ps_servers,
            cluster.num_resources,
            cluster.slots,
        )
        self.g = np.zeros((h, r, t))
        self.v = np.zeros((k, r, t))
        self._worker_caps = np.asarray(cluster.worker_caps, dtype=float)
        self._ps_caps = np.asarray(cluster.ps_caps, dtype=float)
        self._worker_ratio = np.array([constants.worker_ratio(i) for i in range(r)])
        self._ps_ratio = np.array([constants.ps_ratio(i) for i in range(r)])

    def copy(self) -> "PricingState":
        dup = PricingState(self.cluster, self.constants)
        dup.g = self.g.copy()
        dup.v = self.v.copy()
        return dup

    # -- prices ---------------------------------------------------------

    def worker_prices(self, t: int) -> np.ndarray:
        """Price of every (worker server, resource) cell in slot t."""
        frac = self.g[:, :, t - 1] / self._worker_caps
        return self.constants.l_worker * self._worker_ratio[None, :] ** frac

    def ps_prices(self, t: int) -> np.ndarray:
        frac = self.v[:, :, t - 1] / self._ps_caps
        return self.constants.l_ps * self._ps_ratio[None, :] ** frac

    def price_worker(self, h: int, r: int, t: int) -> float:
        frac = self.g[h, r, t - 1] / self._worker_caps[h, r]
        return self.constants.l_worker * self.constants.worker_ratio(r) ** frac

    def price_ps(self, k: int, r: int, t: int) -> float:
        frac = self.v[k, r, t - 1] / self._ps_caps[k, r]
        return self.constants.l_ps * self.constants.ps_ratio(r) ** frac

    def price_capacity_total(self) -> float:
        """Sum of price*capacity over every cell, both pools, all slots.

        This is the capacity part of the dual objective.
        """
        pw = self.constants.l_worker * self._worker_ratio[None, :, None] ** (self.g / self._worker_caps[:, :, None])
        pq = self.constants.l_ps * self._ps_ratio[None, :, None] ** (self.v / self._ps_caps[:, :, None])
        return float((pw * self._worker_caps[:, :, None]).sum() + (pq * self._ps_caps[:, :, None]).sum())

    # -- residual capacities --------------------------------------------

    def worker_unit_caps(self, job: Job, t: int) -> np.ndarray:
        """How many additional workers of ``job`` each worker server fits in t."""
        return self._unit_caps(self.g[:, :, t - 1], self._worker_caps, job.worker_demand)

    def ps_unit_caps(self, job: Job, t: int) -> np.ndarray:
        return self._unit_caps(self.v[:, :, t - 1], self._ps_caps, job.ps_demand)

    @staticmethod
    def _unit_caps(used: np.ndarray, caps: np.ndarray, demand) -> np.ndarray:
        demand = np.asarray(demand, dtype=float)
        positive = demand > 0
        if not positive.any():
            # Nothing to constrain on; effectively unbounded per server.
            return np.full(used.shape[0], np.iinfo(np.int64).max // 2, dtype=np.int64)
        resid = (caps[:, positive] - used[:, positive]) / demand[positive]
        units = np.floor(resid.min(axis=1) + 1e-9).astype(np.int64)
        return np.maximum(units, 0)

    # -- mutation --------------------------------------------------------

    def commit(self, schedule: Schedule, job: Job) -> None:
        """Record an admitted schedule's demands; prices rise accordingly.

        Raises PricingError (leaving the state unchanged) if any placement
        would exceed a capacity.
        """
        w = np.asarray(job.worker_demand, dtype=float)
        s = np.asarray(job.ps_demand, dtype=float)
        for (t, h), n in schedule.workers.items():
            if n <= 0:
                continue
            if np.any(self.g[h, :, t - 1] + n * w > self._worker_caps[h] + 1e-9 * (1.0 + self._worker_caps[h])):
                raise PricingError(f"commit would overflow worker server {h} in slot {t}")
        for (t, k), n in schedule.ps.items():
            if n <= 0:
                continue
            if np.any(self.v[k, :, t - 1] + n * s > self._ps_caps[k] + 1e-9 * (1.0 + self._ps_caps[k])):
                raise PricingError(f"commit would overflow PS server {k} in slot {t}")
        for (t, h), n in schedule.workers.items():
            if n > 0:
                self.g[h, :, t - 1] += n * w
        for (t, k), n in schedule.ps.items():
            if n > 0:
                self.v[k, :, t - 1] += n * s


def price_worker(state: PricingState, h: int, r: int, t: int) -> float:
    """Current unit price of resource r on worker server h in slot t."""
    return state.price_worker(h, r, t)


def price_ps(state: PricingState, k: int, r: int, t: int) -> float:
    """Current unit price of resource r on PS server k in slot t."""
    return state.price_ps(k, r, t)
