import pytest

from circledim.cf import golden_cf, periodic_cf
from circledim.maps import make_map
from circledim.partition import PartitionHierarchy
from circledim.rotation import tune_parameter
from circledim.surd import golden_mean


@pytest.fixture(scope="session")
def tuned_spiked_spec():
    """Arnold map tuned to the periodic word [1,1,1,40] through depth 8."""
    cf = periodic_cf([1, 1, 1, 40], 10)
    proto = make_map("arnold_cubic", "0.5")
    spec, reading = tune_parameter(proto, cf, 8, orbit_cap=50_000)
    return spec, cf, reading


@pytest.fixture(scope="session")
def tuned_spiked_hier(tuned_spiked_spec):
    spec, cf, _ = tuned_spiked_spec
    return PartitionHierarchy(spec, cf.extended(50_000), 8)


@pytest.fixture(scope="session")
def tuned_golden_spec():
    """Arnold map tuned to the golden mean through depth 12."""
    cf = golden_cf(14)
    proto = make_map("arnold_cubic", "0.5")
    spec, reading = tune_parameter(proto, cf, 12, orbit_cap=50_000)
    return spec, cf, reading


@pytest.fixture(scope="session")
def tuned_golden_hier(tuned_golden_spec):
    spec, cf, _ = tuned_golden_spec
    return PartitionHierarchy(spec, cf.extended(50_000), 12)


@pytest.fixture(scope="session")
def golden_rotation_hier_12():
    cf = golden_cf(13)
    spec = make_map("rigid_rotation", golden_mean().to_mpf(256))
    return PartitionHierarchy(spec, cf, 12)
