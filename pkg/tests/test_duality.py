import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kahlerdual import numkit
from kahlerdual.duality import (
    DualityProblem,
    SpecialMap,
    candidate_lambda,
    dual,
    dual_polarized,
    dual_radial,
    dual_rotation_invariant,
    make_problem,
    necsuff_residual,
    residual_radial,
    residual_rotation_invariant,
    scaled,
    special_map_from_potential,
)
from kahlerdual.numkit import DomainError
from kahlerdual.verify import fd_jacobian
from kahlerdual.potentials import (
    PolarizedPotential,
    RadialPotential,
    RotationInvariantPotential,
    catalog,
    hartogs,
    parabola_rotation,
    quadratic_defect,
    taubnut,
)

# U = W(1/2) solves U e^U = 1/2; the inner point is (-U, 0) and U' = W(-U).
TAUBNUT_WITNESS = 0.45908101765978593


def flat_rot(n, c=1.0):
    return RotationInvariantPotential(lambda *xs: c * sum(xs), n, "flat_rot", radius=1.0)


def test_dual_radial_examples():
    hyp = catalog("hyperbolic")
    star = dual_radial(hyp)
    for x in np.linspace(-0.5, 2.0, 11):
        assert star(float(x)) == pytest.approx(math.log(1 + x), abs=1e-15)
    assert (star.lo, star.hi) == (-1.0, math.inf)
    flat = catalog("flat", c=0.3)
    for x in (-1.0, 0.2, 5.0):
        assert dual_radial(flat)(x) == pytest.approx(flat(x), abs=1e-15)
    q = dual_radial(quadratic_defect())
    for x in (-0.4, 0.1, 0.7):
        assert q(x) == pytest.approx(x + x * x / 4, abs=1e-15)


def test_dual_radial_needs_nonpositive_side():
    p = RadialPotential(lambda t: t, "positive_only", lo=0.5, hi=1.0)
    with pytest.raises(DomainError):
        dual_radial(p)


def test_dual_rotation_invariant_examples():
    p = hartogs("1-x", n=2)
    star = dual_rotation_invariant(p)
    assert star(0.1, 0.2) == pytest.approx(-p(-0.1, -0.2), abs=1e-15)
    assert star(0.1, 0.2) == pytest.approx(math.log(1.3), abs=1e-15)
    even = RotationInvariantPotential(lambda a, b: a * a + b**4, 2, "even")
    assert dual(even)(0.3, -0.2) == pytest.approx(-even(0.3, -0.2))
    flat = flat_rot(3)
    assert dual(flat)(0.1, 0.2, 0.3) == pytest.approx(flat(0.1, 0.2, 0.3))


def test_dual_polarized_examples():
    star, report = dual_polarized(catalog("hyperbolic_plus_linear"))
    z, w = np.array([0.2 + 0.1j]), np.array([0.3 - 0.05j])
    expected = np.log(1 + z[0] * w[0]) - z[0] + w[0]
    assert star(z, w) == pytest.approx(expected, abs=1e-15)
    assert star.on_diagonal(np.array([0.1j])).imag == pytest.approx(-0.2, abs=1e-15)
    assert not report.is_real
    assert report.max_abs_imag >= 0.2 - 1e-15
    _, report = dual_polarized(PolarizedPotential(lambda z, w: -np.log(1 - z[0] * w[0]), 1, "hyp"), 0.9)
    assert report.is_real and report.max_abs_imag < 1e-12
    star, report = dual_polarized(PolarizedPotential(lambda z, w: z @ w, 2, "flat"), 0.5)
    assert report.is_real
    assert star(np.array([0.1, 0.2j]), np.array([0.3, 0.4])) == pytest.approx(0.03 + 0.08j)


def test_dual_polarized_domain_error():
    # P* = log(1 - z w) hits log(0) at z = 1 on the sampled circle of radius 1
    p = PolarizedPotential(lambda z, w: -np.log(1 + z[0] * w[0]), 1, "fs_polarized")
    with pytest.raises(DomainError) as info:
        dual_polarized(p, 1.0)
    assert info.value.at == [1.0]


def test_special_map_examples():
    m = special_map_from_potential(catalog("hyperbolic"), 1.0)
    assert m([0.5])[0] == pytest.approx(0.5 / math.sqrt(0.75), abs=1e-15)
    assert m([0.5])[0] == pytest.approx(0.577350, abs=1e-6)
    for lam in (0.5, 2.0):
        ident = special_map_from_potential(catalog("flat", c=1 / lam), lam, n=2)
        z = np.array([0.3 + 0.1j, -0.2j])
        np.testing.assert_allclose(ident(z), z, rtol=1e-15)
        np.testing.assert_allclose(ident.jacobian(z), np.eye(4), atol=1e-15)
    m = special_map_from_potential(catalog("scaled_hyperbolic", mu=2.0), 0.5)
    z = np.array([math.sqrt(0.19)])
    assert m(z)[0] == pytest.approx(z[0] / 0.9, rel=1e-14)


def test_special_map_radicand_error_has_location():
    p = RadialPotential(lambda t: t - t * t, "bends", radius=1.0)
    m = special_map_from_potential(p, 1.0)
    with pytest.raises(DomainError) as info:
        m([0.8])
    assert info.value.at == pytest.approx([0.64])
    with pytest.raises(ValueError):
        special_map_from_potential(p, -1.0)


def test_special_map_from_jets_and_identity():
    m = SpecialMap.from_jets(2, lambda a, b: [1 + a * b, numkit.exp(a - b)])
    z = np.array([0.3 + 0.2j, -0.1 + 0.4j])
    x = (z * z.conj()).real
    np.testing.assert_allclose(m(z), [(1 + x[0] * x[1]) * z[0], math.exp(x[0] - x[1]) * z[1]])
    np.testing.assert_array_equal(SpecialMap.identity(3)(np.array([1j, 2, 3])), [1j, 2, 3])


def test_residual_radial_examples():
    assert abs(residual_radial(catalog("hyperbolic"), 1.0, 0.25)) < 1e-14
    assert residual_radial(catalog("scaled_hyperbolic", mu=2.0), 1.0, 0.0) == 3.0
    x = 0.2
    assert residual_radial(quadratic_defect(), 1.0, x) == pytest.approx(-x * x / 2 + x**3 / 8, abs=1e-15)


def test_residual_radial_inner_point_outside_domain():
    p = RadialPotential(lambda t: t + t * t, "narrow", lo=-0.1, hi=1.0)
    with pytest.raises(DomainError):
        residual_radial(p, 1.0, 0.2)


def test_residual_rotation_invariant_examples():
    np.testing.assert_allclose(
        residual_rotation_invariant(hartogs("1-x", n=2), 1.0, [0.1, 0.2]), [0.0, 0.0], atol=1e-12
    )
    r = residual_rotation_invariant(taubnut(0.5), 1.0, [0.5, 0.0])
    assert r[0] == pytest.approx(TAUBNUT_WITNESS, abs=1e-12)
    for lam in (0.5, 3.0):
        r = residual_rotation_invariant(flat_rot(2, 1 / lam), lam, [0.3, 0.7])
        np.testing.assert_allclose(r, 0.0, atol=1e-15)


def test_candidate_lambda():
    assert candidate_lambda(catalog("hyperbolic")) == 1.0
    assert candidate_lambda(catalog("scaled_hyperbolic", mu=4.0)) == pytest.approx(0.25)
    assert candidate_lambda(parabola_rotation(2.5)) == pytest.approx(2.5, rel=1e-14)
    assert candidate_lambda(taubnut(0.5)) == 1.0
    skew = RotationInvariantPotential(lambda a, b: 2 * a + b, 2, "skew")
    assert candidate_lambda(skew) is None
    with pytest.raises(ValueError):
        candidate_lambda(RadialPotential(lambda t: -t, "minus"))


def test_necsuff_examples():
    hyp = catalog("hyperbolic")
    m = special_map_from_potential(hyp, 1.0, n=2)
    rng = np.random.default_rng(0)
    for x in rng.uniform(0, 0.3, size=(10, 2)):
        np.testing.assert_allclose(necsuff_residual(m, hyp, flat_rot(2), x), 0.0, atol=1e-12)
    ident = SpecialMap.identity(2)
    x = np.array([0.1, 0.25])
    np.testing.assert_allclose(necsuff_residual(ident, hyp, hyp, x), 0.0, atol=1e-15)
    np.testing.assert_allclose(necsuff_residual(ident, hyp, flat_rot(2), x), 1 - 1 / (1 - x.sum()), rtol=1e-14)


def test_duality_problem_validation():
    hyp = catalog("hyperbolic")
    with pytest.raises(ValueError):
        DualityProblem(hyp, dual(hyp), 0.0, 0.5, 1)
    minus = RadialPotential(lambda t: -t, "minus")
    with pytest.raises(ValueError):
        DualityProblem(minus, dual(minus), 1.0, 0.5, 1)
    with pytest.raises(ValueError):
        make_problem(RotationInvariantPotential(lambda a, b: 2 * a + b, 2, "skew"))
    problem = make_problem(catalog("scaled_hyperbolic", mu=2.0), n=3)
    assert problem.lam == 0.5 and problem.n == 3 and problem.radial


def test_scaled_potential():
    s = scaled(catalog("hyperbolic"), 3.0)
    assert s.jet(0.5).d1 == pytest.approx(6.0)
    assert s.derivative_jet(0.5).value == pytest.approx(6.0)
    r = scaled(taubnut(0.5), 2.0)
    np.testing.assert_allclose(r.jet(np.zeros(2)).grad, [2.0, 2.0])


@settings(max_examples=100, deadline=None)
@given(st.floats(-0.9, 0.9), st.sampled_from(["hyperbolic", "fubini_study", "quadratic_defect"]))
def test_dual_is_involution_radial(x, name):
    p = catalog(name)
    twice = dual_radial(dual_radial(p))
    assert twice.name == p.name
    if p.contains(x):
        assert abs(twice(x) - p(x)) <= 1e-14 * max(1.0, abs(p(x)))
        assert abs(twice.jet(x).d1 - p.jet(x).d1) <= 1e-14 * max(1.0, abs(p.jet(x).d1))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-0.3, 0.3), min_size=2, max_size=2))
def test_dual_is_involution_and_reflects_gradient_rotation_invariant(x):
    x = np.array(x)
    for p in (taubnut(0.5), hartogs("1-x+0.2*x^2", n=2)):
        star = dual_rotation_invariant(p)
        assert abs(dual_rotation_invariant(star)(*x) - p(*x)) < 1e-14
        np.testing.assert_allclose(star.jet(x).grad, p.jet(-x).grad, rtol=1e-12, atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.floats(-0.3, 0.3), st.floats(-0.3, 0.3), st.floats(-0.3, 0.3), st.floats(-0.3, 0.3))
def test_dual_is_involution_polarized(a, b, c, d):
    p = catalog("hyperbolic_plus_linear")
    star, _ = dual_polarized(p, 0.1)
    twice, _ = dual_polarized(star, 0.1)
    z, w = np.array([a + 1j * b]), np.array([c + 1j * d])
    assert abs(twice(z, w) - p(z, w)) < 1e-14


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 5.0), st.sampled_from(["hyperbolic", "fubini_study", "quadratic_defect",
                                              "parabola_rotation"]))
def test_residual_at_origin(lam, name):
    p = catalog(name)
    d1 = p.jet(0.0).d1
    assert residual_radial(p, lam, 0.0) == lam * lam * d1 * d1 - 1.0
    assert (abs(residual_radial(p, lam, 0.0)) < 1e-12) == (abs(lam - candidate_lambda(p)) < 1e-12)
    assert abs(residual_radial(p, candidate_lambda(p), 0.0)) < 1e-15


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-0.4, 0.4), min_size=4, max_size=4),
       st.sampled_from(["hyperbolic", "fubini_study", "quadratic_defect", "parabola_rotation"]))
def test_special_map_fixes_origin_and_jacobian_matches_fd(coords, name):
    p = catalog(name)
    m = special_map_from_potential(p, candidate_lambda(p), n=2)
    np.testing.assert_array_equal(m(np.zeros(2)), np.zeros(2))
    z = numkit.complexify(np.array(coords))
    z /= max(1.0, np.linalg.norm(z) / 0.35)
    assert numkit.max_abs(m.jacobian(z) - fd_jacobian(m, z)) < 1e-6
