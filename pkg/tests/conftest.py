import numpy as np
import pytest

from oasis.model import ClusterSpec, Job, UtilityFunction


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_job(**overrides) -> Job:
    """A small, well-behaved job: one chunk-epoch takes half a slot."""
    base = dict(
        id="job-a",
        arrival=1,
        epochs=2,
        chunks=2,
        minibatches=1,
        tau=0.25,
        grad_size=0.0625,
        worker_bw=0.5,
        ps_bw=1.0,
        worker_demand=(1.0, 0.5),
        ps_demand=(0.5, 0.5),
        utility=UtilityFunction(gamma1=20.0, gamma2=0.5, gamma3=2.0),
    )
    base.update(overrides)
    return Job(**base)


def make_cluster(**overrides) -> ClusterSpec:
    base = dict(
        slots=4,
        worker_caps=((4.0, 4.0), (4.0, 4.0)),
        ps_caps=((4.0, 4.0), (4.0, 4.0)),
    )
    base.update(overrides)
    return ClusterSpec(**base)
