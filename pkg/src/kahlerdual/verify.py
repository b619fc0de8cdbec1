"""Grid-based verification of duality identities.

Every check evaluates a matrix identity at each grid point, takes the max
absolute entry of the defect, and reduces over the grid into a
:class:`VerificationReport`. A point where some evaluation leaves its domain
is recorded in ``errors`` and makes the report fail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

import numpy as np

from . import forms, numkit
from .duality import DualityProblem, SpecialMap
from .forms import FormMatrix
from .numkit import DomainError
from .potentials import RadialPotential

JETS_THRESHOLD = 1e-9
FD_THRESHOLD = 1e-6
FD_STEP = 1e-6


class Map(Protocol):
    n: int

    def __call__(self, z) -> np.ndarray: ...

    def jacobian(self, z) -> np.ndarray: ...


@dataclass(frozen=True)
class GridSpec:
    n: int
    radius: float
    count: int = 200
    scheme: str = "random"
    seed: int = 42

    def __post_init__(self):
        if self.scheme not in ("random", "lattice"):
            raise ValueError(f"unknown grid scheme {self.scheme!r}; use random or lattice")
        if self.radius <= 0 or self.count < 1:
            raise ValueError("grid needs positive radius and count")

    def points(self) -> np.ndarray:
        """``count`` points of the closed ball of ``radius`` in C^n, shape (count, n)."""
        dim = 2 * self.n
        if self.scheme == "random":
            rng = np.random.default_rng(self.seed)
            g = rng.normal(size=(self.count, dim))
            g /= np.linalg.norm(g, axis=1, keepdims=True)
            g *= self.radius * rng.uniform(size=(self.count, 1)) ** (1.0 / dim)
        else:
            g = self._lattice(dim)
        return np.array([numkit.complexify(row) for row in g])

    def _lattice(self, dim: int) -> np.ndarray:
        # smallest odd cubic lattice (so the origin is a node) with `count` nodes in the ball
        k = 3
        while True:
            axis = np.linspace(-self.radius, self.radius, k)
            mesh = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), -1).reshape(-1, dim)
            inside = mesh[np.linalg.norm(mesh, axis=1) <= self.radius * (1 + 1e-12)]
            if len(inside) >= self.count:
                order = np.argsort(np.linalg.norm(inside, axis=1), kind="stable")
                return inside[order[: self.count]]
            k += 2

    def to_dict(self) -> dict:
        return {"radius": self.radius, "count": self.count, "seed": self.seed, "scheme": self.scheme}


@dataclass
class VerificationReport:
    identity: str
    potential: str
    lam: float
    grid: GridSpec
    max_residual: float
    mean_residual: float
    worst_point: np.ndarray
    threshold: float
    jacobian: str = "jets"
    errors: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.max_residual < self.threshold

    def to_dict(self) -> dict:
        worst = [] if self.worst_point is None else [
            [float(c.real), float(c.imag)] for c in np.atleast_1d(self.worst_point)
        ]
        return {
            "identity": self.identity,
            "potential": self.potential,
            "lambda": self.lam,
            "grid": self.grid.to_dict(),
            "max_residual": _json_float(self.max_residual),
            "mean_residual": _json_float(self.mean_residual),
            "worst_point": worst,
            "pass": self.passed,
            "threshold": self.threshold,
            "jacobian": self.jacobian,
            "errors": [
                {"point": [[float(c.real), float(c.imag)] for c in z], "message": msg}
                for z, msg in self.errors
            ],
        }


def _json_float(x: float):
    return x if math.isfinite(x) else "inf"


def threshold_for(scheme: str) -> float:
    if scheme == "jets":
        return JETS_THRESHOLD
    if scheme == "fd":
        return FD_THRESHOLD
    raise ValueError(f"unknown jacobian scheme {scheme!r}; use jets or fd")


def _reduce(identity: str, problem_name: str, lam: float, grid: GridSpec, scheme: str,
            points, residual: Callable[[np.ndarray], float],
            threshold: Optional[float] = None) -> VerificationReport:
    values, worst, worst_z, errors = [], -1.0, None, []
    for z in points:
        try:
            r = float(residual(z))
        except (DomainError, np.linalg.LinAlgError) as exc:
            errors.append((z, str(exc)))
            continue
        values.append(r)
        if r > worst:
            worst, worst_z = r, z
    if errors:
        worst, worst_z = math.inf, errors[0][0]
    return VerificationReport(
        identity=identity,
        potential=problem_name,
        lam=lam,
        grid=grid,
        max_residual=worst,
        mean_residual=float(np.mean(values)) if values else math.inf,
        worst_point=worst_z,
        threshold=threshold_for(scheme) if threshold is None else threshold,
        jacobian=scheme,
        errors=errors,
    )


# maps


def fd_jacobian(m: Map, z, h: float = FD_STEP) -> np.ndarray:
    """Central-difference real Jacobian, O(h^2)."""
    r = numkit.realify(np.atleast_1d(np.asarray(z, dtype=complex)))
    step = h * max(1.0, float(np.max(np.abs(r))))
    if step <= 0 or np.any(r + step == r):
        raise DomainError(f"finite-difference step {step!r} underflows at this point")
    cols = []
    for e in np.eye(r.size):
        plus = numkit.realify(m(numkit.complexify(r + step * e)))
        minus = numkit.realify(m(numkit.complexify(r - step * e)))
        cols.append((plus - minus) / (2 * step))
    return np.array(cols).T


def jacobian_at(m: Map, z, scheme: str = "jets") -> np.ndarray:
    if scheme == "jets":
        return m.jacobian(z)
    if scheme == "fd":
        return fd_jacobian(m, z)
    raise ValueError(f"unknown jacobian scheme {scheme!r}; use jets or fd")


def pullback_at(m: Map, target: Callable[[np.ndarray], FormMatrix], z,
                scheme: str = "jets") -> FormMatrix:
    """``(Psi^* omega)_z = J^T Omega(Psi(z)) J``."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    J = jacobian_at(m, z, scheme)
    form = target(m(z))
    return FormMatrix(form.n, J.T @ form.omega @ J, form.convention)


@dataclass(frozen=True)
class GaugeMap:
    """``w -> exp(i g(|w|^2)) A w`` with ``g`` a scalar function and ``A`` unitary."""

    n: int
    g: Callable
    A: np.ndarray

    def _phase(self, w):
        jet = numkit.jet1_eval(self.g, float((w * w.conj()).real.sum()))
        return jet.value, jet.d1

    def __call__(self, w) -> np.ndarray:
        w = np.atleast_1d(np.asarray(w, dtype=complex))
        theta, _ = self._phase(w)
        return np.exp(1j * theta) * (self.A @ w)

    def jacobian(self, w) -> np.ndarray:
        w = np.atleast_1d(np.asarray(w, dtype=complex))
        theta, dg = self._phase(w)
        rot = np.exp(1j * theta) * self.A
        # d|w|^2 = 2 <realify(w), .>
        return numkit.real_matrix(rot) + np.outer(
            numkit.realify(1j * rot @ w), 2 * dg * numkit.realify(w)
        )


@dataclass(frozen=True)
class ComposedMap:
    """``outer o inner``."""

    outer: Map
    inner: Map

    @property
    def n(self) -> int:
        return self.inner.n

    def __call__(self, z) -> np.ndarray:
        return self.outer(self.inner(z))

    def jacobian(self, z) -> np.ndarray:
        return self.outer.jacobian(self.inner(z)) @ self.inner.jacobian(z)


def gauge_transform(m: Map, g: Callable, A) -> ComposedMap:
    """Post-compose ``m`` with the gauge map ``w -> exp(i g(|w|^2)) A w``."""
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    if A.shape != (m.n, m.n):
        raise ValueError(f"A has shape {A.shape}, expected ({m.n}, {m.n})")
    defect = numkit.max_abs(A.conj().T @ A - np.eye(m.n))
    if defect > 1e-12:
        raise ValueError(f"A is not unitary (|A^H A - I| = {defect:.3g})")
    return ComposedMap(GaugeMap(m.n, g, A), m)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR with phase correction."""
    q, r = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_radial_polynomial(rng: np.random.Generator, degree: int = 3, scale: float = 1.0):
    """``g(x) = sum c_k x^k`` with seeded coefficients, usable on floats and jets."""
    coeffs = rng.uniform(-scale, scale, size=degree + 1)

    def g(x):
        out = 0.0 * x + coeffs[-1]
        for c in coeffs[-2::-1]:
            out = out * x + c
        return out

    g.coeffs = coeffs
    return g


# identities


def _flat(n: int) -> Callable[[np.ndarray], FormMatrix]:
    omega0 = forms.flat_form(n)
    return lambda w: omega0


def check_duality(problem: DualityProblem, m: Map, grid: GridSpec,
                  scheme: str = "jets") -> tuple[VerificationReport, VerificationReport]:
    """Report A: ``Psi^* omega_0 = lam omega``. Report B: ``lam Psi^* omega* = omega_0``."""
    lam, n = problem.lam, m.n
    omega0 = forms.flat_form(n)
    points = grid.points()

    def residual_a(z):
        lhs = pullback_at(m, _flat(n), z, scheme)
        return (lhs - lam * forms.kahler_form_at(problem.source, z)).norm()

    def residual_b(z):
        lhs = pullback_at(m, lambda w: forms.kahler_form_at(problem.dual, w), z, scheme)
        return (lam * lhs - omega0).norm()

    name = problem.source.name
    return (
        _reduce("duality_A", name, lam, grid, scheme, points, residual_a),
        _reduce("duality_B", name, lam, grid, scheme, points, residual_b),
    )


def symplectic_adjoint(J: np.ndarray) -> np.ndarray:
    """``S`` with ``omega_0(J v, w) = omega_0(v, S w)``, i.e. ``Omega_0^{-1} J^T Omega_0``."""
    omega0 = forms.flat_form(J.shape[0] // 2).omega
    return np.linalg.solve(omega0, J.T @ omega0)


def check_operator_identities(problem: DualityProblem, m: Map, grid: GridSpec,
                              scheme: str = "jets") -> tuple[VerificationReport, VerificationReport]:
    """``S J = lam B_z`` and ``S B*_{Psi(z)} J = Id / lam`` for radial problems."""
    if not isinstance(problem.source, RadialPotential):
        raise TypeError("operator identities need a radial potential")
    lam, p = problem.lam, problem.source
    points = grid.points()
    eye = np.eye(2 * m.n)

    def residual_b1(z):
        J = jacobian_at(m, z, scheme)
        return numkit.max_abs(symplectic_adjoint(J) @ J - lam * forms.b_operator_at(p, z))

    def residual_b2(z):
        J = jacobian_at(m, z, scheme)
        Bs = forms.b_star_operator_at(p, m(z))
        return numkit.max_abs(symplectic_adjoint(J) @ Bs @ J - eye / lam)

    return (
        _reduce("operator_B1", p.name, lam, grid, scheme, points, residual_b1),
        _reduce("operator_B2", p.name, lam, grid, scheme, points, residual_b2),
    )


def check_line_preservation(m: Map, direction, radius: float, count: int = 50, seed: int = 42,
                            potential: str = "", lam: float = math.nan) -> VerificationReport:
    """Distance of ``Psi(zeta v)`` from the complex line through a reference image."""
    v = np.atleast_1d(np.asarray(direction, dtype=complex))
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("line direction must be nonzero")
    v = v / norm
    grid = GridSpec(1, radius, count, "random", seed)
    points = grid.points()
    ref = max((m(zeta * v) for zeta in points[:, 0]), key=np.linalg.norm)
    if np.linalg.norm(ref) < 1e-14:
        raise DomainError("every sample maps to 0; the image line is undefined")
    u = ref / np.linalg.norm(ref)

    def residual(zeta):
        w = m(zeta[0] * v)
        return float(np.linalg.norm(w - np.vdot(u, w) * u))

    report = _reduce("line_preservation", potential or getattr(m, "name", "map"), lam, grid,
                     "jets", points, residual, threshold=1e-10)
    if report.worst_point is not None:
        report.worst_point = report.worst_point[0] * v
    return report


def step2_defect(problem: DualityProblem) -> float:
    """``|f'(0) - 1/lam|``, or the max over gradient entries in the rotation-invariant case."""
    p = problem.source
    if isinstance(p, RadialPotential):
        return abs(p.jet(0.0).d1 - 1.0 / problem.lam)
    return float(np.max(np.abs(p.jet(np.zeros(p.n)).grad - 1.0 / problem.lam)))


def run_suite(problem: DualityProblem, grid: GridSpec, scheme: str = "jets",
              m: Optional[SpecialMap] = None, seed: Optional[int] = None) -> list[VerificationReport]:
    """Duality, operator (radial only), gauge and line-preservation reports for one problem."""
    from .duality import special_map_from_potential

    m = special_map_from_potential(problem.source, problem.lam, problem.n) if m is None else m
    reports = list(check_duality(problem, m, grid, scheme))
    if problem.radial:
        reports.extend(check_operator_identities(problem, m, grid, scheme))
    rng = np.random.default_rng(grid.seed if seed is None else seed)
    if problem.radial:
        gauged = gauge_transform(m, random_radial_polynomial(rng), random_unitary(m.n, rng))
        for rep in check_duality(problem, gauged, grid, scheme):
            rep.identity = "gauge_" + rep.identity
            reports.append(rep)
    direction = rng.normal(size=m.n) + 1j * rng.normal(size=m.n)
    if not problem.radial:
        # rotation-invariant maps preserve coordinate axes, not general lines
        direction = np.eye(m.n)[int(rng.integers(m.n))].astype(complex)
    reports.append(check_line_preservation(m, direction, grid.radius, grid.count, grid.seed,
                                           problem.source.name, problem.lam))
    return reports
