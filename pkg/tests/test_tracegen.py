import json

import pytest

from oasis.model import validate_job
from oasis.tracegen import (
    TraceSpec,
    TraceSpecError,
    estimated_load,
    generate_trace,
    read_trace,
    write_trace,
)


class TestGenerateTrace:
    def test_same_seed_identical_traces(self, tmp_path):
        spec = TraceSpec(seed=7, job_count=30, slots=20)
        for name in ("a", "b"):
            jobs, cluster = generate_trace(spec)
            write_trace(tmp_path / name, jobs, cluster)
        assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()

    def test_zero_jobs_valid_cluster(self):
        jobs, cluster = generate_trace(TraceSpec(job_count=0))
        assert jobs == [] and cluster.slots >= 1

    def test_parameters_within_declared_ranges(self):
        spec = TraceSpec(seed=3, job_count=1000, slots=40)
        jobs, cluster = generate_trace(spec)
        assert len(jobs) == 1000
        for job in jobs:
            validate_job(job, cluster)
            assert spec.epochs[0] <= job.epochs <= spec.epochs[1]
            assert spec.chunks[0] <= job.chunks <= spec.chunks[1]
            assert spec.minibatches[0] <= job.minibatches <= spec.minibatches[1]
            assert spec.tau_slots[0] <= job.tau <= spec.tau_slots[1]
            assert spec.worker_bw[0] <= job.worker_bw <= spec.worker_bw[1]
            assert spec.ps_bw[0] <= job.ps_bw <= spec.ps_bw[1]
            assert 1 <= job.arrival <= spec.slots
            grad_mb = job.grad_size * spec.slot_seconds / 8e-3
            assert spec.grad_mb[0] - 1e-6 <= grad_mb <= spec.grad_mb[1] + 1e-6
            assert spec.gamma1[0] <= job.utility.gamma1 <= spec.gamma1[1]
            assert spec.gamma3[0] <= job.utility.gamma3 <= spec.gamma3[1]

    def test_class_fractions_within_one_job(self):
        spec = TraceSpec(seed=5, job_count=97, class_fractions=(0.2, 0.5, 0.3))
        jobs, _ = generate_trace(spec)
        counts = {"insensitive": 0, "sensitive": 0, "critical": 0}
        for job in jobs:
            counts[job.job_class()] += 1
        for key, fraction in zip(("insensitive", "sensitive", "critical"), spec.class_fractions):
            assert abs(counts[key] - fraction * 97) <= 1

    def test_arrival_profile_shapes_arrivals(self):
        flat = generate_trace(TraceSpec(seed=2, job_count=400, slots=20, arrival_fraction=1.0))[0]
        late = generate_trace(TraceSpec(seed=2, job_count=400, slots=20, arrival_fraction=1.0,
                                        arrival_profile=(0.0, 0.0, 0.0, 1.0)))[0]
        assert sum(j.arrival for j in late) > sum(j.arrival for j in flat)

    def test_bad_specs_rejected(self):
        with pytest.raises(TraceSpecError):
            TraceSpec(class_fractions=(0.5, 0.5, 0.5))
        with pytest.raises(TraceSpecError):
            TraceSpec(epochs=(5, 2))
        with pytest.raises(TraceSpecError):
            TraceSpec.from_dict({"no_such_field": 1})
        with pytest.raises(TraceSpecError):
            generate_trace(TraceSpec(job_count=4, arrival_profile=(0.0, 0.0)))


class TestTraceFiles:
    def test_round_trip_exact(self, tmp_path):
        jobs, cluster = generate_trace(TraceSpec(seed=9, job_count=25))
        path = tmp_path / "trace.jsonl"
        write_trace(path, jobs, cluster)
        jobs2, cluster2 = read_trace(path)
        assert cluster2 == cluster
        assert jobs2 == jobs

    def test_header_carries_cluster(self, tmp_path):
        jobs, cluster = generate_trace(TraceSpec(seed=1, job_count=2))
        path = tmp_path / "trace.jsonl"
        write_trace(path, jobs, cluster)
        first = json.loads(path.read_text().splitlines()[0])
        assert first["record"] == "cluster"
        assert first["slots"] == cluster.slots
        assert len(first["worker_servers"]) == cluster.num_worker_servers

    def test_load_estimate_positive(self):
        jobs, cluster = generate_trace(TraceSpec(seed=1, job_count=50))
        assert estimated_load(jobs, cluster) > 0
