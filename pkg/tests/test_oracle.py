import itertools
import math

import pytest

from oasis.instances import random_instance
from oasis.model import ClusterSpec, UtilityFunction, ceil_units, workers_needed
from oasis.oracle import (
    OracleLimits,
    OracleSizeError,
    _job_candidates,
    _pack_units,
    exhaustive_best_schedule,
    solve_offline,
)
from oasis.pricing import PriceConstants, PricingState

from conftest import make_job


def flat_price_state(cluster, l_worker=1.0, l_ps=0.5):
    constants = PriceConstants(
        u_worker=tuple(4.0 * l_worker for _ in range(cluster.num_resources)),
        u_ps=tuple(4.0 * l_ps for _ in range(cluster.num_resources)),
        l_worker=l_worker, l_ps=l_ps, eta_worker=1.0, eta_ps=1.0,
    )
    return PricingState(cluster, constants)


class TestExhaustiveBestSchedule:
    def test_no_feasible_assignment_returns_zero(self):
        cluster = ClusterSpec(slots=2, worker_caps=((1.0,),), ps_caps=((1.0,),))
        state = flat_price_state(cluster)
        job = make_job(chunks=1, epochs=6, minibatches=1, tau=0.5, grad_size=0.125,
                       worker_bw=0.5, ps_bw=1.0, worker_demand=(1.0,), ps_demand=(1.0,))
        # 6 chunk-epochs at 0.5 slots each on one chunk: needs 3 worker-slots
        # per slot but only 1 worker may run; 2 slots cannot hold the work
        assert exhaustive_best_schedule(job, state) == 0.0

    def test_single_slot_closed_form(self):
        cluster = ClusterSpec(slots=1, worker_caps=((8.0,),), ps_caps=((8.0,),))
        state = flat_price_state(cluster, l_worker=2.0, l_ps=0.5)
        job = make_job(
            chunks=3, epochs=1, minibatches=1, tau=0.5, grad_size=0.125,
            worker_bw=0.5, ps_bw=1.0, worker_demand=(1.0,), ps_demand=(1.0,),
            utility=UtilityFunction(gamma1=40.0, gamma2=0.0, gamma3=1.0),
        )
        d = job.total_chunk_epochs
        workers = workers_needed(d, job)
        ps = ceil_units(workers * job.worker_bw / job.ps_bw)
        expected = job.utility(0) - (2.0 * workers + 0.5 * ps)
        assert exhaustive_best_schedule(job, state) == pytest.approx(expected)

    def test_size_limits_enforced(self):
        cluster = ClusterSpec(slots=8, worker_caps=((4.0,),), ps_caps=((4.0,),))
        state = flat_price_state(cluster)
        with pytest.raises(OracleSizeError):
            exhaustive_best_schedule(make_job(worker_demand=(1.0,), ps_demand=(1.0,)), state)


class TestSolveOffline:
    def test_single_job_earliest_completion(self, rng):
        jobs, cluster = random_instance(
            rng, n_jobs=1, slots=4, cap_range=(6.0, 10.0),
            demand_range=(0.25, 1.0), max_per_chunk=1.0, max_arrival=2,
        )
        job = jobs[0]
        result = solve_offline(jobs, cluster)
        per_slot = math.floor(job.chunks / job.slots_per_chunk_epoch + 1e-9)
        earliest = job.arrival + math.ceil(job.total_chunk_epochs / per_slot) - 1
        assert result.optimal_utility == pytest.approx(job.utility(earliest - job.arrival))
        assert set(result.admitted) == {job.id}

    def test_conflicting_jobs_keep_the_better(self):
        cluster = ClusterSpec(slots=1, worker_caps=((1.0,),), ps_caps=((1.0,),))
        common = dict(chunks=1, epochs=1, minibatches=1, tau=0.5, grad_size=0.125,
                      worker_bw=0.5, ps_bw=1.0, worker_demand=(1.0,), ps_demand=(1.0,))
        good = make_job(id="good", utility=UtilityFunction(20.0, 0.0, 1.0), **common)
        poor = make_job(id="poor", utility=UtilityFunction(6.0, 0.0, 1.0), **common)
        result = solve_offline([poor, good], cluster)
        assert result.optimal_utility == pytest.approx(10.0)
        assert set(result.admitted) == {"good"}

    def test_matches_product_enumeration(self, rng):
        """Cross-oracle: brute product over per-job candidates, no pruning."""
        for _ in range(15):
            jobs, cluster = random_instance(rng, n_jobs=3, slots=3, max_chunk_epochs=3)
            result = solve_offline(jobs, cluster)
            cand_lists = [[None] + _job_candidates(j, cluster) for j in jobs]
            best = 0.0
            for combo in itertools.product(*cand_lists):
                total = 0.0
                slot_w, slot_p = {}, {}
                for job, pick in zip(jobs, combo):
                    if pick is None:
                        continue
                    deadline, _split, needs, ps_needs = pick
                    total += job.utility(deadline - job.arrival)
                    for off, (need, z) in enumerate(zip(needs, ps_needs)):
                        t = job.arrival + off
                        if need:
                            slot_w.setdefault(t, []).append((job.worker_demand, need))
                        if z:
                            slot_p.setdefault(t, []).append((job.ps_demand, z))
                if total <= best:
                    continue
                if all(_pack_units(v, list(cluster.worker_caps)) is not None for v in slot_w.values()) and \
                   all(_pack_units(v, list(cluster.ps_caps)) is not None for v in slot_p.values()):
                    best = total
            assert result.optimal_utility == pytest.approx(best, abs=1e-9)

    def test_deterministic_node_count(self, rng):
        jobs, cluster = random_instance(rng, n_jobs=4, slots=4)
        a = solve_offline(jobs, cluster)
        b = solve_offline(jobs, cluster)
        assert a.nodes_explored == b.nodes_explored
        assert a.optimal_utility == b.optimal_utility

    def test_refuses_oversized_instances(self, rng):
        jobs, cluster = random_instance(rng, n_jobs=3, slots=4)
        with pytest.raises(OracleSizeError):
            solve_offline(jobs, cluster, OracleLimits(max_jobs=2))
        with pytest.raises(OracleSizeError):
            solve_offline(jobs, cluster, OracleLimits(max_slots=3))

    def test_dominates_online_total(self, rng):
        from oasis.engine import OnlineScheduler
        from oasis.pricing import compute_constants

        for _ in range(10):
            jobs, cluster = random_instance(rng, n_jobs=4, slots=4)
            opt = solve_offline(jobs, cluster).optimal_utility
            engine = OnlineScheduler(cluster, compute_constants(jobs, cluster))
            for job in sorted(jobs, key=lambda j: j.arrival):
                engine.on_arrival(job)
            total, _ = engine.objective_values()
            assert opt >= total - 1e-9


class TestPackUnits:
    def test_witness_respects_capacities(self, rng):
        """Packer vs naive per-unit assignment enumeration on tiny cases."""
        for _ in range(40):
            caps = [tuple(float(rng.integers(1, 4)) for _ in range(2)) for _ in range(2)]
            items = [
                (tuple(float(rng.integers(1, 3)) * 0.5 for _ in range(2)), int(rng.integers(1, 3)))
                for _ in range(int(rng.integers(1, 3)))
            ]
            witness = _pack_units(items, caps)
            # naive reference: enumerate every unit-to-server assignment
            units = [demand for demand, count in items for _ in range(count)]
            feasible = False
            for assignment in itertools.product(range(len(caps)), repeat=len(units)):
                used = [[0.0, 0.0] for _ in caps]
                for unit, server in zip(units, assignment):
                    for r in range(2):
                        used[server][r] += unit[r]
                if all(used[s][r] <= caps[s][r] + 1e-9 for s in range(len(caps)) for r in range(2)):
                    feasible = True
                    break
            assert (witness is not None) == feasible
            if witness is not None:
                used = [[0.0, 0.0] for _ in caps]
                for (demand, count), placement in zip(items, witness):
                    assert sum(placement.values()) == count
                    for server, n in placement.items():
                        for r in range(2):
                            used[server][r] += n * demand[r]
                assert all(used[s][r] <= caps[s][r] + 1e-9 for s in range(len(caps)) for r in range(2))
