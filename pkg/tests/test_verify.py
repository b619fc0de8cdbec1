import json
import math

import numpy as np
import pytest

from kahlerdual import forms, numkit
from kahlerdual.duality import (
    SpecialMap,
    dual,
    make_problem,
    necsuff_residual,
    scaled,
    special_map_from_potential,
)
from kahlerdual.numkit import DomainError
from kahlerdual.potentials import RotationInvariantPotential, catalog, hartogs, taubnut
from kahlerdual.verify import (
    ComposedMap,
    GaugeMap,
    GridSpec,
    check_duality,
    check_line_preservation,
    check_operator_identities,
    fd_jacobian,
    gauge_transform,
    jacobian_at,
    pullback_at,
    random_unitary,
    run_suite,
    step2_defect,
    symplectic_adjoint,
)

HYP = catalog("hyperbolic")


def hyp_map(n):
    return special_map_from_potential(HYP, 1.0, n)


def flat_rot(n):
    return RotationInvariantPotential(lambda *xs: sum(xs), n, "flat_rot", radius=1.0)


def test_grid_random_is_seeded_and_inside_ball():
    g = GridSpec(2, 0.6, 200, "random", 42)
    pts = g.points()
    assert pts.shape == (200, 2)
    assert np.max(np.linalg.norm(pts, axis=1)) <= 0.6 + 1e-15
    np.testing.assert_array_equal(pts, GridSpec(2, 0.6, 200, "random", 42).points())
    assert not np.array_equal(pts, GridSpec(2, 0.6, 200, "random", 7).points())


def test_grid_lattice():
    pts = GridSpec(1, 0.5, 30, "lattice").points()
    assert pts.shape == (30, 1)
    assert np.max(np.abs(pts)) <= 0.5 + 1e-12
    assert pts[0, 0] == 0
    with pytest.raises(ValueError):
        GridSpec(1, 0.5, scheme="spiral")
    with pytest.raises(ValueError):
        GridSpec(1, -0.5)


def test_jacobian_examples():
    z = np.array([0.3 - 0.2j, 0.1j])
    np.testing.assert_array_equal(jacobian_at(SpecialMap.identity(2), z), np.eye(4))
    np.testing.assert_allclose(jacobian_at(hyp_map(1), [0j]), np.eye(2), atol=1e-15)
    z = np.array([0.5 * np.exp(0.7j)])
    assert numkit.max_abs(jacobian_at(hyp_map(1), z) - jacobian_at(hyp_map(1), z, "fd")) < 1e-8
    with pytest.raises(ValueError):
        jacobian_at(hyp_map(1), z, "spectral")


def test_pullback_examples():
    form = forms.kahler_form_at(HYP, [0.2, 0.1j])
    pulled = pullback_at(SpecialMap.identity(2), lambda w: form, np.array([0.2, 0.1j]))
    assert (pulled - form).norm() == 0
    flat = lambda w: forms.flat_form(1)  # noqa: E731
    np.testing.assert_allclose(pullback_at(hyp_map(1), flat, [0j]).omega, forms.flat_form(1).omega)
    np.testing.assert_allclose(pullback_at(hyp_map(1), flat, [0.5j]).omega,
                               16 / 9 * forms.flat_form(1).omega, rtol=1e-14)


def test_check_duality_examples():
    a, b = check_duality(make_problem(HYP, 1.0, n=2), hyp_map(2), GridSpec(2, 0.6))
    assert a.max_residual < 1e-10 and b.max_residual < 1e-10
    assert a.passed and b.passed
    for lam in (0.5, 2.0):
        problem = make_problem(catalog("flat", c=1 / lam), lam, n=2)
        m = special_map_from_potential(problem.source, lam, 2)
        a, b = check_duality(problem, m, GridSpec(2, 0.8))
        assert a.max_residual < 1e-15 and b.max_residual < 1e-15
    q = make_problem(catalog("quadratic_defect"), 1.0)
    a, b = check_duality(q, special_map_from_potential(q.source, 1.0), GridSpec(1, 0.45))
    assert a.max_residual < 1e-10
    assert b.max_residual > 0.005 and not b.passed


def test_check_duality_records_domain_errors():
    a, _ = check_duality(make_problem(HYP, 1.0), hyp_map(1), GridSpec(1, 1.2, 50))
    assert a.errors and not a.passed and a.max_residual == math.inf
    d = a.to_dict()
    assert d["max_residual"] == "inf" and d["pass"] is False and d["errors"]
    json.dumps(d, allow_nan=False)


def test_operator_identity_examples():
    b1, b2 = check_operator_identities(make_problem(HYP, 1.0, n=2), hyp_map(2), GridSpec(2, 0.5))
    assert b1.max_residual < 1e-9 and b2.max_residual < 1e-9
    lam = 0.5
    problem = make_problem(catalog("flat", c=1 / lam), lam, n=2)
    m = special_map_from_potential(problem.source, lam, 2)
    b1, b2 = check_operator_identities(problem, m, GridSpec(2, 0.5))
    assert b1.max_residual < 1e-15 and b2.max_residual < 1e-15
    np.testing.assert_allclose(symplectic_adjoint(m.jacobian([0.3, 0.1j])), np.eye(4), atol=1e-15)
    with pytest.raises(TypeError):
        check_operator_identities(make_problem(taubnut(0.5)), SpecialMap.identity(2), GridSpec(2, 0.1))


@pytest.mark.parametrize("name", ["hyperbolic", "fubini_study", "quadratic_defect", "parabola_rotation"])
def test_operator_identity_at_origin(name):
    p = catalog(name)
    lam = 1.0 / p.jet(0.0).d1
    J = special_map_from_potential(p, lam, 2).jacobian(np.zeros(2))
    np.testing.assert_allclose(symplectic_adjoint(J) @ J, lam * p.jet(0.0).d1 * np.eye(4), atol=1e-15)


def test_symplectic_adjoint_defining_relation():
    rng = np.random.default_rng(9)
    J = rng.normal(size=(4, 4))
    S = symplectic_adjoint(J)
    omega0 = forms.flat_form(2).omega
    v, w = rng.normal(size=4), rng.normal(size=4)
    assert (J @ v) @ omega0 @ w == pytest.approx(v @ omega0 @ (S @ w), abs=1e-13)


def test_gauge_examples():
    m = hyp_map(2)
    z = np.array([0.3 + 0.1j, -0.2j])
    same = gauge_transform(m, lambda x: 0 * x, np.eye(2))
    np.testing.assert_allclose(same(z), m(z), atol=1e-15)
    np.testing.assert_allclose(same.jacobian(z), m.jacobian(z), atol=1e-15)
    gauged = gauge_transform(m, lambda x: 0.3 * x, np.diag([1j, 1.0]))
    a, b = check_duality(make_problem(HYP, 1.0, n=2), gauged, GridSpec(2, 0.6))
    assert a.max_residual < 1e-9 and b.max_residual < 1e-9
    with pytest.raises(ValueError):
        gauge_transform(m, lambda x: 0 * x, 2 * np.eye(2))
    with pytest.raises(ValueError):
        gauge_transform(m, lambda x: 0 * x, np.eye(3))


def test_gauge_jacobian_matches_fd():
    rng = np.random.default_rng(0)
    g = GaugeMap(3, lambda x: 0.4 * x - x * x + 0.1, random_unitary(3, rng))
    w = 0.4 * (rng.normal(size=3) + 1j * rng.normal(size=3))
    assert numkit.max_abs(g.jacobian(w) - fd_jacobian(g, w)) < 1e-9


def test_pullback_functoriality():
    rng = np.random.default_rng(1)
    m = hyp_map(2)
    gauge = GaugeMap(2, lambda x: 0.7 * x * x - 0.2 * x, random_unitary(2, rng))
    composed = ComposedMap(gauge, m)
    target = lambda w: forms.kahler_form_at(catalog("fubini_study"), w)  # noqa: E731
    for _ in range(10):
        z = rng.normal(size=2) + 1j * rng.normal(size=2)
        z *= 0.6 * rng.uniform() / np.linalg.norm(z)
        direct = pullback_at(composed, target, z)
        inner = lambda y: pullback_at(gauge, target, y)  # noqa: E731
        assert (direct - pullback_at(m, inner, z)).norm() < 1e-10


def test_line_preservation_examples():
    v = np.array([1.0, 1.0]) / math.sqrt(2)
    assert check_line_preservation(hyp_map(2), v, 0.6).max_residual < 1e-12
    rng = np.random.default_rng(2)
    for _ in range(3):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        assert check_line_preservation(hyp_map(2), v, 0.6).max_residual < 1e-12
    A = random_unitary(2, rng)
    gauged = gauge_transform(hyp_map(2), lambda x: 0.5 * x, A)
    report = check_line_preservation(gauged, v, 0.6)
    assert report.max_residual < 1e-10
    image = gauged(0.3 * v / np.linalg.norm(v))
    Av = A @ v
    assert np.linalg.norm(image - np.vdot(Av, image) / np.vdot(Av, Av) * Av) < 1e-12
    with pytest.raises(ValueError):
        check_line_preservation(hyp_map(2), np.zeros(2), 0.6)


def test_line_preservation_degenerate():
    zero = SpecialMap(2, lambda x: (np.zeros(2), np.zeros((2, 2))), "zero")
    with pytest.raises(DomainError):
        check_line_preservation(zero, [1.0, 0.0], 0.5)


MAPS = [
    ("hyperbolic", {}, None),
    ("fubini_study", {}, None),
    ("flat", {"c": 2.0}, None),
    ("scaled_hyperbolic", {"mu": 3.0}, None),
    ("quadratic_defect", {}, None),
    ("parabola_rotation", {"lam": 1.0}, None),
]


@pytest.mark.parametrize("name, params, _", MAPS, ids=[m[0] for m in MAPS])
def test_jets_and_fd_jacobians_agree_radial(name, params, _):
    p = catalog(name, **params)
    m = special_map_from_potential(p, 1.0 / p.jet(0.0).d1, 2)
    for z in GridSpec(2, 0.8 * p.radius, 50, seed=3).points():
        assert numkit.max_abs(m.jacobian(z) - fd_jacobian(m, z)) < 1e-6


@pytest.mark.parametrize("p", [hartogs("1-x", n=3), hartogs("1-x+0.2*x^2", n=2), taubnut(0.5)],
                         ids=["hartogs3", "hartogs_quadratic", "taubnut"])
def test_jets_and_fd_jacobians_agree_rotation_invariant(p):
    m = special_map_from_potential(p, 1.0)
    for z in GridSpec(p.n, 0.8 * p.radius, 50, seed=4).points():
        assert numkit.max_abs(m.jacobian(z) - fd_jacobian(m, z)) < 1e-6


@pytest.mark.parametrize("name", ["hyperbolic", "quadratic_defect", "parabola_rotation"])
def test_reports_reduce_to_necsuff(name):
    # report A pairs (lam Phi, flat); report B pairs (flat, lam Phi*)
    p = catalog(name)
    problem = make_problem(p, n=2)
    lam = problem.lam
    m = special_map_from_potential(p, lam, 2)
    grid = GridSpec(2, 0.8 * p.radius, 60)
    a, b = check_duality(problem, m, grid)
    xs = [(z * z.conj()).real for z in grid.points()]
    nec_a = max(numkit.max_abs(necsuff_residual(m, scaled(p, lam), flat_rot(2), x)) for x in xs)
    nec_b = max(numkit.max_abs(necsuff_residual(m, flat_rot(2), scaled(dual(p), lam), x)) for x in xs)
    assert (a.max_residual < 1e-9) == (nec_a < 1e-10)
    assert (b.max_residual < 1e-9) == (nec_b < 1e-10)


@pytest.mark.parametrize(
    "p",
    [catalog("hyperbolic"), catalog("fubini_study"), catalog("scaled_hyperbolic", mu=2.0),
     catalog("parabola_rotation", lam=0.6), hartogs("1-x", n=2)],
    ids=["hyperbolic", "fubini_study", "scaled_hyperbolic", "parabola_rotation", "hartogs"],
)
def test_step2_consequence_for_passing_problems(p):
    problem = make_problem(p)
    grid = GridSpec(problem.n, 0.8 * p.radius, 50)
    reports = run_suite(problem, grid)
    assert all(r.passed for r in reports), [r.identity for r in reports if not r.passed]
    assert step2_defect(problem) < 1e-10


def test_run_suite_fd_scheme_threshold():
    problem = make_problem(HYP, n=1)
    reports = run_suite(problem, GridSpec(1, 0.5, 30), scheme="fd")
    assert all(r.threshold == 1e-6 and r.passed for r in reports if r.jacobian == "fd")


def test_report_serialization():
    a, _ = check_duality(make_problem(HYP, 1.0, n=2), hyp_map(2), GridSpec(2, 0.6, 20))
    d = a.to_dict()
    for key in ("identity", "potential", "lambda", "grid", "max_residual", "mean_residual",
                "worst_point", "pass", "threshold"):
        assert key in d
    assert d["grid"] == {"radius": 0.6, "count": 20, "seed": 42, "scheme": "random"}
    assert len(d["worst_point"]) == 2 and len(d["worst_point"][0]) == 2
    assert d["pass"] == (d["max_residual"] < d["threshold"])
    back = json.loads(json.dumps(d))
    assert back == d
    z = np.array([complex(*pair) for pair in d["worst_point"]])
    np.testing.assert_array_equal(z, a.worst_point)
