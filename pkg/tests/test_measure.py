import mpmath
import pytest
from mpmath import mpf

from circledim.cf import ContinuedFraction, golden_cf, periodic_cf
from circledim.errors import InvalidInputError
from circledim.maps import make_map
from circledim.measure import (
    arc_measure,
    atom_measure,
    build_cover,
    check_partition_measure_identity,
    check_small_interval_measure,
    cover_report,
    hausdorff_content_sum,
    local_dimension_samples,
    signature,
    singularity_certificate,
)
from circledim.partition import BridgeDecomposition, PartitionHierarchy, bridge_decomposition
from circledim.rotation import tune_parameter
from circledim.surd import QuadraticIrrational, golden_mean


@pytest.fixture(scope="module")
def golden_hier():
    cf = golden_cf(13)
    spec = make_map("rigid_rotation", golden_mean().to_mpf(256))
    return PartitionHierarchy(spec, cf, 12)


@pytest.fixture(scope="module")
def spiked_rotation_hier():
    cf = periodic_cf([1, 1, 1, 40], 9)
    spec = make_map("rigid_rotation", cf.alpha.to_mpf(256))
    return PartitionHierarchy(spec, cf, 8)


def test_atom_measure_golden_closed_form():
    cf = golden_cf(8)
    mu3 = atom_measure(cf, 3)
    alpha = cf.alpha
    assert mu3 == alpha * alpha * alpha * alpha
    assert abs(float(mu3) - 0.1458980337503155) < 1e-14


def test_measure_identities_exact():
    for quots in ([1] * 12, [2] * 10, [3, 1, 4, 1, 5, 9, 2, 6]):
        cf = ContinuedFraction(quots)
        for n in range(1, cf.depth - 1):
            assert check_partition_measure_identity(cf, n)
            assert check_small_interval_measure(cf, n)
            # delta_n <= 1/q_{n+1}
            assert atom_measure(cf, n) * cf.q(n + 1) <= QuadraticIrrational.from_int(1)


def test_atom_measure_depth_guard():
    with pytest.raises(InvalidInputError):
        atom_measure(golden_cf(4), 6)


def test_arc_measure_full_circle(golden_hier):
    m = arc_measure(golden_hier, "0.3", "0.3")
    assert m.lo == 1 and m.hi == 1


def test_arc_measure_exact_atom(golden_hier):
    part = golden_hier.partition(6)
    atom = part.atoms[2]
    m = arc_measure(golden_hier, atom.left, atom.right, level=6)
    expected = golden_hier.cf.delta(atom.generation, 256)
    with mpmath.workprec(256):
        assert abs(m.lo - expected) < mpf(2) ** -200
        assert abs(m.hi - expected) < mpf(2) ** -200


def test_arc_measure_rotation_is_lebesgue(golden_hier):
    # for the rotation mu = Lebesgue, so the arc [0, 1/2] has measure 1/2
    m = arc_measure(golden_hier, 0, "0.5", level=12)
    assert m.lo <= mpf("0.5") <= m.hi
    assert m.width() <= 2 * golden_hier.cf.delta(11, 256)


def test_arc_measure_brackets_nest_with_level(golden_hier):
    deep = arc_measure(golden_hier, "0.1", "0.4", level=10)
    shallow = arc_measure(golden_hier, "0.1", "0.4", level=5)
    assert shallow.lo <= deep.lo <= deep.hi <= shallow.hi


def test_build_cover_hand_example():
    b = BridgeDecomposition(
        level=3, a_next=100, critical_times=(0, 99), found_spots=(),
        spot_details=(), bridges=((1, 98), None), reduced_bridges=((2, 97), None),
        degenerate=False)
    cov = build_cover(b, 0.5)
    assert cov.trim == 10
    assert cov.kept_ranges[0] == (11, 89)
    assert cov.kept_per_strip == 79


def test_build_cover_small_gamma():
    b = BridgeDecomposition(
        level=3, a_next=100, critical_times=(0, 99), found_spots=(),
        spot_details=(), bridges=((1, 98), None), reduced_bridges=((2, 97), None),
        degenerate=False)
    cov = build_cover(b, 0.01)
    assert cov.trim == 1
    assert cov.kept_per_strip == 97  # j in [2, 98]


def test_build_cover_degenerate_a2():
    b = BridgeDecomposition(
        level=2, a_next=2, critical_times=(0, 1), found_spots=(),
        spot_details=(), bridges=(None, None), reduced_bridges=(None, None),
        degenerate=True)
    cov = build_cover(b, 0.5)
    assert cov.kept_per_strip == 0


def test_cover_golden_always_empty(golden_hier):
    # all-ones continued fraction has no room for bridges at any level
    for n in range(1, 10):
        bridges = bridge_decomposition(golden_hier, n)
        cov = build_cover(bridges, 0.5)
        assert cov.kept_per_strip == 0


def test_cover_report_spiked_rotation(spiked_rotation_hier):
    hier = spiked_rotation_hier
    bridges = bridge_decomposition(hier, 3)  # a_4 = 40
    cov = build_cover(bridges, 0.5)
    rep = cover_report(cov, hier.cf, hier, n_critical=0, m_emp=2.0)
    assert not rep.empty
    assert rep.two_way_exact
    # rotation control: mu(A) equals |A| exactly
    assert abs(rep.mu_total - rep.length_total) < 1e-40
    by_name = {c.name: c for c in rep.checks}
    assert by_name["mu_total_lower"].passed
    # the per-strip lower bound misses by at most one atom's measure here:
    # the kept count is (a-1) - 2 r trim while the bound is stated with a
    c1 = by_name["mu_strip_lower"]
    assert c1.lhs >= c1.rhs - float(hier.cf.delta(3, 256))


def test_cover_report_two_way_identity(spiked_rotation_hier):
    hier = spiked_rotation_hier
    bridges = bridge_decomposition(hier, 7)
    for gamma in (0.3, 0.5, 0.7):
        cov = build_cover(bridges, gamma)
        rep = cover_report(cov, hier.cf, hier, n_critical=0, m_emp=2.0)
        assert rep.two_way_exact


def test_singularity_golden_fails(golden_hier):
    res = singularity_certificate(golden_hier, 0.05)
    assert not res.found
    assert res.witness is None


def test_singularity_rotation_control_flagged(spiked_rotation_hier):
    res = singularity_certificate(spiked_rotation_hier, 0.05)
    assert res.control
    assert not res.found  # mu = length for the rotation: impossible


def test_content_sum_shapes(spiked_rotation_hier):
    rep = hausdorff_content_sum(spiked_rotation_hier, [3, 7], gamma=0.5,
                                d=0.8, tau=0.5, n_critical=0, m_emp=2.0)
    assert len(rep.terms) == 2
    assert rep.partial_sums[0] == pytest.approx(rep.terms[1])
    assert rep.partial_sums[1] == 0.0
    # d = 1 sanity: sum of |A_i| is subadditive vs total length
    rep1 = hausdorff_content_sum(spiked_rotation_hier, [3], gamma=0.5,
                                 d=1.0, tau=0.0, n_critical=0, m_emp=2.0)
    bridges = bridge_decomposition(spiked_rotation_hier, 3)
    cov = build_cover(bridges, 0.5)
    full = cover_report(cov, spiked_rotation_hier.cf, spiked_rotation_hier,
                        0, 2.0)
    assert rep1.terms[0] == pytest.approx(full.length_total, rel=1e-12)


def test_local_dimension_rotation_control(golden_hier):
    est = local_dimension_samples(golden_hier, 10, samples=120, seed=3)
    assert est.samples_used >= 100
    # mu = Lebesgue: every exponent is exactly 1 up to rounding
    assert abs(est.estimate - 1.0) < 1e-6
    assert all(abs(v - 1.0) < 1e-6 for v in est.per_level_median)
    assert est.frostman[0] <= est.estimate <= est.frostman[1]
    assert not est.low_confidence
    lo, hi = est.ball_bracket_last
    assert lo <= 1.0 + 1e-6 and hi >= 1.0 - 1e-6


def test_local_dimension_excludes_endpoints(golden_hier):
    est = local_dimension_samples(golden_hier, 8, samples=10, seed=1,
                                  sample_points=[golden_hier.base, "0.37"])
    assert est.samples_excluded == 1
    assert est.samples_used == 1


def test_signature_rotation_rejected(golden_hier):
    with pytest.raises(InvalidInputError):
        signature(golden_hier)


def test_signature_unicritical_full_circle():
    cf = golden_cf(8)
    proto = make_map("arnold_cubic", "0.5")
    spec, _ = tune_parameter(proto, cf, 6, orbit_cap=2000)
    hier = PartitionHierarchy(spec, cf.extended(2000), 7)
    sig = signature(hier)
    assert sig.n_critical == 1
    assert sig.criticalities == (3,)
    assert sig.lambda_brackets[0] == (1.0, 1.0)
    assert abs(sig.lambda_mid_sum - 1.0) < 1e-12


def test_signature_mfold_masses_sum_to_one():
    cf = ContinuedFraction([2, 1, 1, 2, 1, 1, 2, 1])
    proto = make_map("mfold_cubic", "0.4", m=3)
    spec, _ = tune_parameter(proto, cf, 6, orbit_cap=2000)
    hier = PartitionHierarchy(spec, cf.extended(2000), 7)
    sig = signature(hier)
    assert sig.n_critical == 3
    assert abs(sig.lambda_mid_sum - 1.0) < 0.02
    for lo, hi in sig.lambda_brackets:
        assert 0 <= lo <= hi <= 1
