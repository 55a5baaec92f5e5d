import mpmath
import pytest
from mpmath import mpf

from circledim.errors import (
    DomainError,
    InvalidFamilyError,
    InvalidInputError,
    PrecisionError,
)
from circledim.maps import (
    MapSpec,
    derivatives,
    eval_lift,
    iterate_orbit,
    make_map,
    schwarzian,
    spec_from_config,
    validate_map,
)
from circledim.surd import golden_mean


def fd_derivative(spec, x, order, h_exp=-30):
    """5-point central finite differences, the independent oracle."""
    with mpmath.workprec(spec.precision_bits):
        h = mpf(2) ** h_exp
        f = lambda t: eval_lift(spec, t)
        if order == 1:
            return (-f(x + 2*h) + 8*f(x + h) - 8*f(x - h) + f(x - 2*h)) / (12*h)
        if order == 2:
            return (-f(x + 2*h) + 16*f(x + h) - 30*f(x) + 16*f(x - h) - f(x - 2*h)) / (12*h*h)
        return (f(x + 2*h) - 2*f(x + h) + 2*f(x - h) - f(x - 2*h)) / (2*h**3)


def test_rigid_rotation_lift():
    spec = make_map("rigid_rotation", "0.25")
    assert eval_lift(spec, 0) == mpf("0.25")


def test_arnold_lift_at_zero():
    spec = make_map("arnold_cubic", "0.25")
    assert eval_lift(spec, 0) == mpf("0.25")


def test_periodicity_random_points():
    import random
    rng = random.Random(1)
    for family, kw in [("arnold_cubic", {}), ("mfold_cubic", {"m": 3}),
                       ("perturbed_bicritical", {"u0": "0.3"})]:
        spec = make_map(family, "0.37", **kw)
        with mpmath.workprec(spec.precision_bits):
            tol = mpf(2) ** -240
            for _ in range(100):
                x = mpf(rng.random())
                assert abs(eval_lift(spec, x + 1) - eval_lift(spec, x) - 1) < tol


def test_arnold_derivatives():
    spec = make_map("arnold_cubic", "0.25")
    assert derivatives(spec, 0, 1) == 0  # critical point
    with mpmath.workprec(256):
        d3 = derivatives(spec, 0, 3)
        assert abs(d3 - 4 * mpmath.pi**2) < mpf(2) ** -240
    assert derivatives(make_map("rigid_rotation", "0.1"), "0.77", 2) == 0


@pytest.mark.parametrize("family,kw", [
    ("arnold_cubic", {}),
    ("mfold_cubic", {"m": 2}),
    ("perturbed_bicritical", {"u0": "-0.4"}),
])
def test_derivatives_match_finite_differences(family, kw):
    spec = make_map(family, "0.31", **kw)
    with mpmath.workprec(256):
        for x in (mpf("0.13"), mpf("0.47"), mpf("0.81")):
            for order in (1, 2, 3):
                exact = derivatives(spec, x, order)
                approx = fd_derivative(spec, x, order)
                assert abs(exact - approx) <= abs(exact) * mpf("1e-6") + mpf("1e-30")


def test_schwarzian_rigid_rotation_zero():
    spec = make_map("rigid_rotation", "0.3")
    assert schwarzian(spec, "0.123") == 0


def test_schwarzian_matches_finite_difference():
    spec = make_map("arnold_cubic", "0.25")
    with mpmath.workprec(256):
        x = mpf("0.5")
        d1 = fd_derivative(spec, x, 1)
        d2 = fd_derivative(spec, x, 2)
        d3 = fd_derivative(spec, x, 3)
        oracle = d3 / d1 - mpf(1.5) * (d2 / d1) ** 2
        val = schwarzian(spec, x)
        assert abs(val - oracle) < abs(oracle) * mpf("1e-6")


def test_schwarzian_negative_everywhere_arnold():
    spec = make_map("arnold_cubic", "0.25")
    with mpmath.workprec(256):
        for i in range(1, 40):
            assert schwarzian(spec, mpf(i) / 40) < 0


def test_schwarzian_guard_near_critical():
    spec = make_map("arnold_cubic", "0.25", precision_bits=128)
    with pytest.raises(DomainError):
        schwarzian(spec, mpf("1e-40"))


def test_validate_arnold():
    rep = validate_map(make_map("arnold_cubic", "0.37"))
    assert len(rep.critical_points) == 1
    c = rep.critical_points[0]
    assert c.position == 0.0
    assert abs(c.fitted_exponent - 3.0) < 0.05
    assert rep.monotone_min >= 0.0 or abs(rep.monotone_min) < 1e-30


def test_validate_mfold():
    rep = validate_map(make_map("mfold_cubic", "0.2", m=3))
    assert [round(c.position, 6) for c in rep.critical_points] == [0.0, round(1/3, 6), round(2/3, 6)]
    for c in rep.critical_points:
        assert abs(c.fitted_exponent - 3.0) < 0.05


def test_validate_bicritical():
    rep = validate_map(make_map("perturbed_bicritical", "0.4", u0="0.25"))
    assert len(rep.critical_points) == 2
    for c in rep.critical_points:
        assert abs(c.fitted_exponent - 3.0) < 0.05


def test_invalid_family_detected():
    # raw amplitudes that force F' < 0 somewhere
    spec = make_map("perturbed_bicritical", "0.4", a1="-0.3", a2="0.01")
    with pytest.raises(InvalidFamilyError):
        validate_map(spec)


def test_mfold_commutes_with_rotation():
    spec = make_map("mfold_cubic", "0.29", m=3)
    with mpmath.workprec(256):
        third = mpf(1) / 3
        tol = mpf(2) ** -240
        for x in (mpf("0.11"), mpf("0.52"), mpf("0.9")):
            assert abs(eval_lift(spec, x + third) - eval_lift(spec, x) - third) < tol


def test_omega_monotone_family():
    lo = make_map("arnold_cubic", "0.3")
    hi = make_map("arnold_cubic", "0.31")
    for x in ("0.1", "0.6"):
        assert eval_lift(hi, x) > eval_lift(lo, x)


def test_orbit_rigid_rotation_exact():
    alpha = golden_mean().to_mpf(256)
    spec = make_map("rigid_rotation", alpha)
    orbit = iterate_orbit(spec, 0, 10_000)
    with mpmath.workprec(256):
        # x_k - x_0 - k alpha is an integer to ~200+ bits
        for k in (1, 137, 9999):
            resid = orbit.lift_value(k) - orbit.x0 - k * alpha
            assert abs(resid) < mpf(2) ** -200


def test_orbit_consistency_arnold():
    spec = make_map("arnold_cubic", "0.6066")
    orbit = iterate_orbit(spec, 0, 300)
    with mpmath.workprec(256):
        for k in (0, 10, 299):
            got = eval_lift(spec, orbit.positions[k]) % 1
            assert abs(got - orbit.positions[k + 1]) < mpf(2) ** -200
        assert len({mpmath.nstr(p, 30) for p in orbit.positions}) == 301


def test_orbit_budget_refusal():
    spec = make_map("arnold_cubic", "0.6066", precision_bits=64)
    with pytest.raises(PrecisionError) as exc:
        iterate_orbit(spec, "0.5", 2_000_000)
    assert exc.value.suggested_bits > 64


def test_orbit_rejects_bad_count():
    with pytest.raises(InvalidInputError):
        iterate_orbit(make_map("rigid_rotation", "0.5"), 0, 0)


def test_spec_config_roundtrip():
    spec = make_map("mfold_cubic", "0.123456789", m=3, precision_bits=192)
    cfg = spec.to_config()
    back = spec_from_config(cfg)
    assert back.family == spec.family
    assert back.params == spec.params
    with mpmath.workprec(192):
        assert abs(back.omega - spec.omega) < mpf(2) ** -150
