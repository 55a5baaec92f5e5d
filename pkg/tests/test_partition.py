import mpmath
import pytest
from mpmath import mpf

from circledim.cf import ContinuedFraction, golden_cf, periodic_cf
from circledim.errors import GeometryError, InvalidInputError
from circledim.maps import make_map
from circledim.partition import (
    PartitionHierarchy,
    bridge_decomposition,
    build_partition,
    refine_check,
)
from circledim.rotation import tune_parameter
from circledim.surd import golden_mean


@pytest.fixture(scope="module")
def golden_rotation_hier():
    cf = golden_cf(13)
    spec = make_map("rigid_rotation", golden_mean().to_mpf(256))
    return PartitionHierarchy(spec, cf, 12)


@pytest.fixture(scope="module")
def tuned_golden_hier():
    cf = golden_cf(10)
    proto = make_map("arnold_cubic", "0.5")
    spec, _ = tune_parameter(proto, cf, 8, orbit_cap=3000)
    return PartitionHierarchy(spec, cf.extended(3000), 9)


def brute_force_locate(part, x):
    with mpmath.workprec(part.precision_bits):
        x = mpf(x) % 1
        hits = [a.label for a in part.atoms if a.contains(x)]
        assert len(hits) == 1
        return hits[0]


def test_golden_level4_atom_count(golden_rotation_hier):
    part = golden_rotation_hier.partition(4)
    assert len(part) == 5 + 3  # q_4 + q_3


def test_golden_level4_lengths_are_deltas(golden_rotation_hier):
    part = golden_rotation_hier.partition(4)
    cf = part.cf
    with mpmath.workprec(256):
        tol = mpf(2) ** -200
        for atom in part.atoms:
            expected = cf.delta(atom.generation, 256)
            assert abs(atom.length() - expected) < tol


def test_tiling_residual_tiny(golden_rotation_hier):
    for n in (1, 5, 9, 12):
        part = golden_rotation_hier.partition(n)
        assert part.tiling_residual < 1e-60
        assert part.adjacency_residual < 1e-60


def test_index_map_bijection():
    # (i, j) -> i + q_{n-1} + j q_n bijects onto [q_{n-1}, q_{n+1})
    cf = ContinuedFraction([3, 1, 4, 1, 5, 9, 2, 6])
    for n in range(1, 8):
        seen = set()
        for i in range(cf.q(n)):
            for j in range(cf.a(n + 1)):
                seen.add(i + cf.q(n - 1) + j * cf.q(n))
        assert seen == set(range(cf.q(n - 1), cf.q(n + 1)))


def test_locate_against_brute_force(golden_rotation_hier):
    import random
    rng = random.Random(5)
    part = golden_rotation_hier.partition(6)
    hier = golden_rotation_hier
    for _ in range(40):
        x = mpf(rng.random())
        expected = brute_force_locate(part, x)
        assert part.locate(x).label == expected
        assert hier.locate(x, 6).label == expected


def test_locate_base_point_dual(golden_rotation_hier):
    hier = golden_rotation_hier
    res = hier.locate(hier.base, 5)
    assert res.boundary
    # owner by the left-closed convention is the atom starting at x_0
    owner = hier.partition(5).atom_by_label(res.labels[0])
    assert owner.left == hier.base
    assert len(res.labels) == 2


def test_locate_interior_endpoint_dual(golden_rotation_hier):
    hier = golden_rotation_hier
    x7 = hier.position(7)
    res = hier.locate(x7, 6)
    assert res.boundary
    atoms = [hier.partition(6).atom_by_label(lab) for lab in res.labels]
    assert atoms[0].left == x7        # owner starts at the endpoint
    assert atoms[1].right == x7       # flank ends there


def test_refine_golden_each_long_atom_splits_in_two(golden_rotation_hier):
    for n in range(2, 12):
        rep = refine_check(golden_rotation_hier.partition(n),
                           golden_rotation_hier.partition(n + 1))
        assert rep.pieces_per_long_atom == 2  # a_{n+1} + 1 = 2
        assert rep.worst_violation == 0.0 or rep.worst_violation < 1e-60


def test_refine_rejects_mismatched_levels(golden_rotation_hier):
    with pytest.raises(InvalidInputError):
        refine_check(golden_rotation_hier.partition(3),
                     golden_rotation_hier.partition(5))


def test_corrupted_orbit_raises_geometry_error():
    cf = golden_cf(8)
    spec = make_map("rigid_rotation", golden_mean().to_mpf(256))
    hier = PartitionHierarchy(spec, cf, 7)
    with mpmath.workprec(256):
        # large enough to break the circular order of the endpoints
        hier.orbit.positions[5] = (hier.orbit.positions[5] + mpf("0.2")) % 1
    with pytest.raises(GeometryError):
        hier.partition(6)


def test_build_partition_wrapper():
    cf = golden_cf(5)
    spec = make_map("rigid_rotation", golden_mean().to_mpf(256))
    part = build_partition(spec, cf, 4)
    assert len(part) == 8


def test_bridges_rotation_no_critical_points():
    cf = periodic_cf([1, 1, 1, 40], 9)
    spec = make_map("rigid_rotation", cf.alpha.to_mpf(256))
    hier = PartitionHierarchy(spec, cf, 8)
    b = bridge_decomposition(hier, 3)  # a_4 = 40
    assert b.r == 1
    assert b.critical_times == (0, 39)
    assert b.bridges[0] == (1, 38)
    assert b.bridges[1] is None
    assert b.reduced_bridges[0] == (2, 37)
    assert not b.degenerate


def test_bridges_degenerate_small_quotient(golden_rotation_hier):
    b = bridge_decomposition(golden_rotation_hier, 5)  # a_6 = 1
    assert b.r == 0
    assert b.critical_times == (0,)
    assert all(x is None for x in b.bridges)
    assert b.degenerate


def test_bridges_unicritical_r_at_most_3(tuned_golden_hier):
    for n in range(1, 8):
        b = bridge_decomposition(tuned_golden_hier, n)
        assert b.r <= 3  # 2N + 1 with N = 1


def test_unicritical_base_spot_never_found(tuned_golden_hier):
    # the partition is based at the unique critical point, whose forward
    # orbit never revisits it; no interior spot can appear
    for n in range(1, 8):
        b = bridge_decomposition(tuned_golden_hier, n)
        assert b.found_spots == ()


def test_mfold_spots_stable_across_precision():
    cf = ContinuedFraction([2, 1, 1, 2, 1, 1, 2])
    results = []
    for bits in (192, 384):
        proto = make_map("mfold_cubic", "0.4", m=3, precision_bits=bits)
        spec, _ = tune_parameter(proto, cf, 5, orbit_cap=2000)
        hier = PartitionHierarchy(spec, cf.extended(2000), 6)
        results.append([bridge_decomposition(hier, n).found_spots
                        for n in range(1, 6)])
    assert results[0] == results[1]


def test_partition_rows_format(golden_rotation_hier):
    rows = golden_rotation_hier.partition(3).to_rows(dps=20)
    assert len(rows) == 3 + 2
    gen, idx, left, right, length = rows[0]
    assert gen == 2 and idx == 0
    assert isinstance(left, str) and "." in left
