import math

import pytest

from circledim.bounds import (
    adjacency_ratios,
    almost_parabolic_check,
    bridge_and_spot_comparability,
    empirical_M,
    fit_power_law,
    item4_constant,
    level_bounds,
    yoccoz_fit,
)
from circledim.cf import ContinuedFraction, golden_cf, periodic_cf
from circledim.errors import InvalidInputError
from circledim.maps import make_map
from circledim.partition import PartitionHierarchy, bridge_decomposition
from circledim.rotation import tune_parameter
from circledim.surd import golden_mean


@pytest.fixture(scope="module")
def golden_rotation_hier():
    cf = golden_cf(12)
    spec = make_map("rigid_rotation", golden_mean().to_mpf(256))
    return PartitionHierarchy(spec, cf, 11)


@pytest.fixture(scope="module")
def spiked_rotation_hier():
    cf = periodic_cf([1, 1, 1, 40], 9)
    spec = make_map("rigid_rotation", cf.alpha.to_mpf(256))
    return PartitionHierarchy(spec, cf, 8)


def test_adjacency_golden_rotation_exact(golden_rotation_hier):
    # adjacent atoms have lengths delta_{n-1} and delta_n whose ratio is the
    # inverse golden mean at every level
    phi_inv = float(1 / golden_mean().to_mpf(80))
    for n in (3, 6, 9):
        stats = adjacency_ratios(golden_rotation_hier.partition(n))
        assert abs(stats.max_ratio - phi_inv) < 1e-12


def test_adjacency_rotation_exceeds_big_quotient(spiked_rotation_hier):
    stats = adjacency_ratios(spiked_rotation_hier.partition(3))  # a_4 = 40
    assert stats.max_ratio > 40.0


def test_adjacency_tuned_map_within_stable_constant(tuned_spiked_hier):
    # finite-level geometry at the big-quotient levels stays within a fixed
    # multiple of the stabilized empirical constant (the control grows with
    # the quotient instead, see test_rotation_unbounded_M_grows)
    rep = empirical_M(tuned_spiked_hier, list(range(2, 8)), schwarzian_samples=5)
    for n in (3, 7):
        stats = adjacency_ratios(tuned_spiked_hier.partition(n))
        assert stats.max_ratio <= 10 * rep.M_emp


def test_comparability_rotation_vacuous_small_quotients(golden_rotation_hier):
    bridges = bridge_decomposition(golden_rotation_hier, 4)  # a_5 = 1
    stats = bridge_and_spot_comparability(golden_rotation_hier, bridges)
    assert stats.vacuous


def test_comparability_reports_ratios(tuned_spiked_hier):
    bridges = bridge_decomposition(tuned_spiked_hier, 3)
    stats = bridge_and_spot_comparability(tuned_spiked_hier, bridges)
    assert not stats.vacuous
    assert stats.bridge_max >= 1.0
    assert stats.spot_max >= 1.0


def test_fit_power_law_synthetic_exact():
    # lengths C / d^2 must regress to slope -2 within 1e-6
    dists = list(range(1, 25))
    lengths = [3.7 / d**2 for d in dists]
    slope, intercept, resid = fit_power_law(dists, lengths)
    assert abs(slope + 2.0) < 1e-6
    assert abs(intercept - math.log(3.7)) < 1e-6
    assert resid < 1e-9


def test_fit_power_law_needs_points():
    with pytest.raises(InvalidInputError):
        fit_power_law([1], [0.5])


def test_yoccoz_skips_short_bridges(golden_rotation_hier):
    bridges = bridge_decomposition(golden_rotation_hier, 5)
    assert all(yoccoz_fit(golden_rotation_hier, bridges, s) is None
               for s in range(bridges.r))


def test_yoccoz_rotation_flat(spiked_rotation_hier):
    # rotation atoms at one level all have the same length: slope ~ 0
    bridges = bridge_decomposition(spiked_rotation_hier, 3)
    fit = yoccoz_fit(spiked_rotation_hier, bridges, 0)
    assert fit is not None
    for half in fit.halves:
        assert half is not None
        assert abs(half["slope"]) < 1e-12


def test_yoccoz_tuned_decaying(tuned_spiked_hier):
    # lengths shrink toward the bridge middle on both halves; the exit half
    # decays faster than the entry half at these quotient sizes
    for n in (3, 7):
        bridges = bridge_decomposition(tuned_spiked_hier, n)
        fit = yoccoz_fit(tuned_spiked_hier, bridges, 0)
        assert fit is not None and fit.n_atoms >= 20
        slopes = [h["slope"] for h in fit.halves if h]
        assert len(slopes) == 2
        assert all(s < -0.5 for s in slopes)
        assert min(slopes) < -1.5


def test_yoccoz_profiles_agree_across_big_levels(tuned_spiked_hier):
    # the continued fraction is periodic, so the bridge shape at the two
    # big-quotient levels is the renormalization-periodic asymptotic one
    fits = []
    for n in (3, 7):
        bridges = bridge_decomposition(tuned_spiked_hier, n)
        fits.append(yoccoz_fit(tuned_spiked_hier, bridges, 0))
    for h3, h7 in zip(fits[0].halves, fits[1].halves):
        assert abs(h3["slope"] - h7["slope"]) < 0.1


def test_schwarzian_rotation_control(spiked_rotation_hier):
    bridges = bridge_decomposition(spiked_rotation_hier, 3)
    rec = almost_parabolic_check(spiked_rotation_hier, bridges, 0, n_samples=50)
    assert rec.control
    assert rec.fraction_negative == 0.0


def test_schwarzian_tuned_negative(tuned_spiked_hier):
    bridges = bridge_decomposition(tuned_spiked_hier, 3)
    rec = almost_parabolic_check(tuned_spiked_hier, bridges, 0, n_samples=100)
    assert not rec.control
    assert rec.n_valid >= 90
    assert rec.fraction_negative == 1.0


def test_schwarzian_empty_reduced_bridge(golden_rotation_hier):
    bridges = bridge_decomposition(golden_rotation_hier, 5)
    assert almost_parabolic_check(golden_rotation_hier, bridges, 0) is None


def test_empirical_M_monotone_in_levels(tuned_spiked_hier):
    rep_small = empirical_M(tuned_spiked_hier, [3, 4, 5], schwarzian_samples=10)
    rep_large = empirical_M(tuned_spiked_hier, [3, 4, 5, 6, 7], schwarzian_samples=10)
    per = {n: lb.level_constant() for n, lb in rep_large.per_level.items()}
    assert max(per[n] for n in (3, 4, 5)) <= max(per.values()) + 1e-12
    assert rep_large.M_emp >= 1.0
    assert rep_small.M_emp >= 1.0


def test_empirical_M_item5_slack(tuned_spiked_hier):
    rep = empirical_M(tuned_spiked_hier, list(range(2, 8)), schwarzian_samples=10)
    assert rep.n0 in rep.per_level
    for n, slack in rep.item5.items():
        assert slack >= 0.0, f"item 5 fails at level {n}"


def test_empirical_M_needs_levels(tuned_spiked_hier):
    with pytest.raises(InvalidInputError):
        empirical_M(tuned_spiked_hier, [3, 4])


def test_rotation_unbounded_M_grows(spiked_rotation_hier):
    # the control with a large quotient has adjacency ratio > a at the big
    # level, pushing the constant past 40 (bounded geometry fails)
    rep = empirical_M(spiked_rotation_hier, [2, 3, 4, 5], schwarzian_samples=5)
    assert rep.M_emp > 40.0
