import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite", max_examples=50, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("suite")

from finshare import DiscreteFinite, FundAllocation, UtilityFunction
from finshare.harness import Scenario


@pytest.fixture
def worked_dist():
    return DiscreteFinite([(0.05, 0.5), (0.15, 0.5)])


@pytest.fixture
def worked_alloc():
    return FundAllocation(100.0, 0.5)


@pytest.fixture
def worked_scenario(worked_dist, worked_alloc):
    return Scenario(id="worked", alloc=worked_alloc, dist=worked_dist, d=0.10,
                    alpha=0.25, utility=UtilityFunction("cara", 10.0), seed=7)
