import math

import pytest
from hypothesis import given, strategies as st

from oasis.model import (
    ClusterSpec,
    ModelError,
    Schedule,
    UtilityFunction,
    V_COMPLETION,
    V_PS_BANDWIDTH,
    V_WORKLOAD,
    ceil_units,
    validate_job,
    validate_schedule,
    workers_needed,
)

from conftest import make_cluster, make_job


class TestUtilityFunction:
    def test_constant_when_gamma2_zero(self):
        f = UtilityFunction(gamma1=20.0, gamma2=0.0, gamma3=5.0)
        assert f(0) == f(30) == 10.0

    def test_positive_and_nonincreasing(self):
        f = UtilityFunction(gamma1=7.0, gamma2=2.0, gamma3=3.0)
        values = [f(d) for d in range(-5, 40)]
        assert all(v > 0 for v in values)
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_no_overflow_far_past_target(self):
        f = UtilityFunction(gamma1=100.0, gamma2=6.0, gamma3=1.0)
        assert 0.0 <= f(1000.0) < 1e-300 or f(1000.0) == 0.0

    @pytest.mark.parametrize("kw", [
        dict(gamma1=0.0, gamma2=0.1, gamma3=1.0),
        dict(gamma1=1.0, gamma2=-0.1, gamma3=1.0),
        dict(gamma1=1.0, gamma2=0.1, gamma3=0.5),
    ])
    def test_invalid_parameters(self, kw):
        with pytest.raises(ModelError):
            UtilityFunction(**kw)


class TestWorkersNeeded:
    def test_zero_work(self):
        assert workers_needed(0, make_job()) == 0

    def test_float_boundary_exact(self):
        # 2 * 10 * (0.02 + 0.03) is exactly 1 worker despite float noise
        job = make_job(minibatches=10, tau=0.02, grad_size=0.0075, worker_bw=0.5)
        assert math.isclose(job.slot_work, 0.05, rel_tol=1e-12)
        assert workers_needed(2, job) == 1

    def test_fractional_rounds_up(self):
        # 3 * 10 * (0.05 + 0.06) = 3.3 -> 4 workers
        job = make_job(minibatches=10, tau=0.05, grad_size=0.015, worker_bw=0.5)
        assert workers_needed(3, job) == 4

    def test_negative_rejected(self):
        with pytest.raises(ModelError):
            workers_needed(-1, make_job())

    @given(st.integers(0, 50), st.integers(0, 50), st.integers(1, 8),
           st.integers(1, 12).map(lambda k: k * 0.125))
    def test_monotone_and_split_bound(self, d1, d2, minibatches, slot_work):
        job = make_job(minibatches=minibatches, tau=slot_work / 2,
                       grad_size=slot_work / 8, worker_bw=0.5)
        lo, hi = workers_needed(d1, job), workers_needed(d1 + d2, job)
        assert hi >= lo
        # ceiling algebra: splitting never saves more than one worker total
        assert workers_needed(d1, job) + workers_needed(d2, job) <= hi + 1


class TestJobValidation:
    def test_bandwidth_must_match_demand_component(self):
        cluster = make_cluster(bandwidth_index=1)
        job = make_job(worker_demand=(1.0, 0.5), worker_bw=0.5, ps_demand=(0.5, 1.0), ps_bw=1.0)
        validate_job(job, cluster)
        with pytest.raises(ModelError):
            validate_job(make_job(worker_bw=0.25), cluster)

    def test_dimension_mismatch(self):
        with pytest.raises(ModelError):
            validate_job(make_job(worker_demand=(1.0,), ps_demand=(1.0,)), make_cluster())

    def test_arrival_beyond_span(self):
        with pytest.raises(ModelError):
            validate_job(make_job(arrival=9), make_cluster())

    def test_cluster_invariants(self):
        with pytest.raises(ModelError):
            ClusterSpec(slots=4, worker_caps=((1.0, 0.0),), ps_caps=((1.0, 1.0),))
        with pytest.raises(ModelError):
            ClusterSpec(slots=0, worker_caps=((1.0,),), ps_caps=((1.0,),))


def _schedule(job, entries, ps_entries, deadline):
    s = Schedule(job_id=job.id, deadline=deadline)
    s.workers.update(entries)
    s.ps.update(ps_entries)
    return s


class TestValidateSchedule:
    def test_empty_schedule_misses_workload(self):
        job, cluster = make_job(), make_cluster()
        violations = validate_schedule(Schedule(job_id=job.id), job, cluster)
        assert V_WORKLOAD in violations

    def test_workers_without_ps_bandwidth(self):
        job, cluster = make_job(), make_cluster()
        s = _schedule(job, {(1, 0): 2, (2, 0): 2}, {}, deadline=2)
        assert V_PS_BANDWIDTH in validate_schedule(s, job, cluster)

    def test_search_output_is_clean(self, rng):
        from oasis.instances import random_instance, random_loaded_state
        from oasis.search import best_schedule

        checked = 0
        while checked < 25:
            jobs, cluster = random_instance(rng, n_jobs=2, slots=4)
            state = random_loaded_state(rng, jobs, cluster)
            for job in jobs:
                schedule, payoff = best_schedule(job, state)
                if schedule is None:
                    continue
                assert validate_schedule(schedule, job, cluster, state.g, state.v) == []
                checked += 1

    def test_pure_function(self):
        job, cluster = make_job(), make_cluster()
        s = _schedule(job, {(1, 0): 2, (1, 1): 1}, {(1, 0): 1}, deadline=1)
        first = validate_schedule(s, job, cluster)
        assert first == validate_schedule(s, job, cluster)

    def test_deadline_must_match_last_active_slot(self):
        job, cluster = make_job(), make_cluster()
        s = _schedule(job, {(1, 0): 2, (2, 0): 2}, {(1, 0): 1, (2, 0): 1}, deadline=3)
        assert V_COMPLETION in validate_schedule(s, job, cluster)

    def test_accepted_schedules_satisfy_ps_coupling(self, rng):
        from oasis.instances import random_instance, random_loaded_state
        from oasis.search import best_schedule

        seen = 0
        while seen < 20:
            jobs, cluster = random_instance(rng, n_jobs=1, slots=3)
            state = random_loaded_state(rng, jobs, cluster, fill_fraction=0.3)
            schedule, _ = best_schedule(jobs[0], state)
            if schedule is None:
                continue
            job = jobs[0]
            for t in schedule.active_slots():
                y = schedule.worker_total(t)
                z = schedule.ps_total(t)
                assert z >= ceil_units(y * job.worker_bw / job.ps_bw)
                seen += 1
