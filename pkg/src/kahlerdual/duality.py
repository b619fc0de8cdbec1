"""Dual potentials, special maps and the duality residual equations."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from . import numkit
from .numkit import DomainError, JetN
from .potentials import (
    PolarizedPotential,
    RadialPotential,
    RotationInvariantPotential,
    strict_psh_at_origin,
)

AnyPotential = Union[RadialPotential, RotationInvariantPotential]


def dual_radial(p: RadialPotential) -> RadialPotential:
    """``f*(x) = -f(-x)``, defined on the reflected interval."""
    if not p.contains(0.0) and not p.lo < 0.0:
        raise DomainError("f is not defined on any interval (-eps, 0]", expr=p.name)
    fprime = None
    if p.fprime is not None:
        fprime = lambda t, g=p.fprime: g(-t)  # noqa: E731
    name = p.name[:-1] if p.name.endswith("*") else p.name + "*"
    return RadialPotential(
        lambda t: -p(-t), name, lo=-p.hi, hi=-p.lo, fprime=fprime, radius=p.radius,
    )


def dual_rotation_invariant(p: RotationInvariantPotential) -> RotationInvariantPotential:
    """``phi*(x) = -phi(-x)`` componentwise."""

    def phi(*xs):
        return -p(*[-u for u in xs])

    name = p.name[:-1] if p.name.endswith("*") else p.name + "*"
    return RotationInvariantPotential(phi, p.n, name, lo=-p.hi, hi=-p.lo, radius=p.radius)


def dual(p: AnyPotential) -> AnyPotential:
    if isinstance(p, RadialPotential):
        return dual_radial(p)
    if isinstance(p, RotationInvariantPotential):
        return dual_rotation_invariant(p)
    raise TypeError(f"use dual_polarized for {type(p).__name__}")


@dataclass(frozen=True)
class RealnessReport:
    max_abs_imag: float
    worst_point: np.ndarray
    threshold: float = 1e-12

    @property
    def is_real(self) -> bool:
        return self.max_abs_imag < self.threshold


def sample_ball(n: int, radius: float, rings: int = 10, angles: int = 16,
                random: int = 64, seed: int = 42) -> np.ndarray:
    """Deterministic sample of the complex ball: axis circles plus seeded random points."""
    pts = [np.zeros(n, dtype=complex)]
    theta = 2 * math.pi * np.arange(angles) / angles
    unit = np.cos(theta) + 1j * np.sin(theta)
    unit.real[np.abs(unit.real) < 1e-15] = 0.0
    unit.imag[np.abs(unit.imag) < 1e-15] = 0.0
    for k in range(n):
        for r in radius * np.arange(1, rings + 1) / rings:
            for u in unit:
                z = np.zeros(n, dtype=complex)
                z[k] = r * u
                pts.append(z)
    rng = np.random.default_rng(seed)
    for _ in range(random):
        g = rng.normal(size=2 * n)
        g *= radius * rng.uniform() ** (1 / (2 * n)) / np.linalg.norm(g)
        pts.append(numkit.complexify(g))
    return np.array(pts)


def dual_polarized(p: PolarizedPotential, radius: Optional[float] = None,
                   threshold: float = 1e-12) -> tuple[PolarizedPotential, RealnessReport]:
    """``P*(z, w) = -P(z, -w)`` and how far ``P*(z, conj z)`` is from real."""

    def P_star(z, w):
        return -p(z, -w)

    star = PolarizedPotential(P_star, p.n, p.name + "*", radius=p.radius)
    r = p.radius if radius is None else radius
    worst, worst_z = -1.0, None
    for z in sample_ball(p.n, r):
        try:
            with np.errstate(all="raise"):
                value = complex(star.on_diagonal(z))
        except (ValueError, ZeroDivisionError, FloatingPointError) as exc:
            raise DomainError(str(exc), expr=star.name, at=z.tolist()) from None
        if not cmath.isfinite(value):
            raise DomainError("non-finite value", expr=star.name, at=z.tolist())
        im = abs(value.imag)
        if im > worst:
            worst, worst_z = im, z
    return star, RealnessReport(worst, worst_z, threshold)


@dataclass(frozen=True)
class SpecialMap:
    """``Psi(z)_j = psi_j(|z_1|^2, ..., |z_n|^2) z_j``.

    ``coeffs(x)`` returns ``(psi, dpsi)``: the coefficient values and their
    derivatives ``dpsi[j, k] = d psi_j / d x_k``.
    """

    n: int
    coeffs: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    name: str = "special"

    def __call__(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        psi, _ = self.coeffs((z * z.conj()).real)
        return psi * z

    def jacobian(self, z) -> np.ndarray:
        """Exact real 2n x 2n derivative in the (u1, v1, ...) ordering."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        psi, dpsi = self.coeffs((z * z.conj()).real)
        J = numkit.real_matrix(np.diag(psi))
        for k in range(self.n):
            col = numkit.realify(z * dpsi[:, k])
            J[:, 2 * k] += 2 * z[k].real * col
            J[:, 2 * k + 1] += 2 * z[k].imag * col
        return J

    @classmethod
    def identity(cls, n: int) -> SpecialMap:
        return cls(n, lambda x: (np.ones(n), np.zeros((n, n))), "identity")

    @classmethod
    def from_jets(cls, n: int, fn: Callable[..., list], name: str = "special") -> SpecialMap:
        """Coefficients given as a callable ``fn(x_1, ..., x_n) -> [psi_1, ..., psi_n]`` on jets."""

        def coeffs(x):
            out = fn(*JetN.variables(np.asarray(x, dtype=float)))
            psi = np.array([numkit.value_of(c) for c in out])
            dpsi = np.array([c.grad if isinstance(c, JetN) else np.zeros(n) for c in out])
            return psi, dpsi

        return cls(n, coeffs, name)

    def squared_coefficients(self, x) -> np.ndarray:
        psi, _ = self.coeffs(np.asarray(x, dtype=float))
        return psi**2


def _as_rotation_invariant(p: AnyPotential, n: Optional[int]) -> RotationInvariantPotential:
    if isinstance(p, RadialPotential):
        return p.as_rotation_invariant(1 if n is None else n)
    if n is not None and n != p.n:
        raise ValueError(f"{p.name} has dimension {p.n}, not {n}")
    return p


def special_map_from_potential(p: AnyPotential, lam: float, n: Optional[int] = None) -> SpecialMap:
    """The canonical map with ``psi_k(x) = sqrt(lam * d phi/d x_k (x))``."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    rot = _as_rotation_invariant(p, n)

    def coeffs(x):
        jet = rot.jet(x)
        radicand = lam * jet.grad
        if np.any(radicand <= 0):
            k = int(np.argmin(radicand))
            raise DomainError(
                f"lambda * dphi/dx_{k + 1} = {radicand[k]!r} is not positive", expr=rot.name,
                at=np.asarray(x).tolist(),
            )
        psi = np.sqrt(radicand)
        dpsi = lam * jet.hess / (2 * psi[:, None])
        return psi, dpsi

    return SpecialMap(rot.n, coeffs, f"canonical[{rot.name}, lambda={lam:g}]")


def residual_radial(p: RadialPotential, lam: float, x: float) -> float:
    """``lam^2 f'(x) f'(-lam x f'(x)) - 1``."""
    d1 = p.jet(x).d1
    inner = -lam * x * d1
    if not p.contains(inner):
        raise DomainError(f"inner argument {inner!r} outside ({p.lo}, {p.hi})", expr=p.name, at=x)
    return lam * lam * d1 * p.jet(inner).d1 - 1.0


def residual_rotation_invariant(p: RotationInvariantPotential, lam: float, x) -> np.ndarray:
    """``lam^2 phi_k(x) phi_k(-lam phi_1(x) x_1, ..., -lam phi_n(x) x_n) - 1`` for each k."""
    x = np.asarray(x, dtype=float)
    grad = p.jet(x).grad
    inner = -lam * grad * x
    if not p.contains(inner):
        raise DomainError(f"inner argument {inner.tolist()} outside the domain box", expr=p.name,
                          at=x.tolist())
    return lam * lam * grad * p.jet(inner).grad - 1.0


def candidate_lambda(p: AnyPotential, rtol: float = 1e-10) -> Optional[float]:
    """``1/f'(0)``, the only lambda compatible with a duality at the origin.

    Rotation-invariant potentials need equal gradient entries at 0; otherwise
    there is no admissible lambda and ``None`` is returned.
    """
    if isinstance(p, RadialPotential):
        d1 = p.jet(0.0).d1
        if d1 <= 0:
            raise ValueError(f"{p.name}: f'(0) = {d1!r} is not positive")
        return 1.0 / d1
    grad = p.jet(np.zeros(p.n)).grad
    if np.any(grad <= 0):
        raise ValueError(f"{p.name}: gradient at 0 {grad.tolist()} is not positive")
    if np.max(grad) - np.min(grad) > rtol * np.max(grad):
        return None
    return 1.0 / float(np.mean(grad))


def necsuff_residual(psi_map: SpecialMap, alpha: AnyPotential, beta: AnyPotential, x) -> np.ndarray:
    """``psi_k^2 * dbeta/dx_k(psi_1^2 x_1, ..., psi_n^2 x_n) - dalpha/dx_k``.

    Zero exactly when the special map pulls the form of ``beta`` back to the
    form of ``alpha``.
    """
    x = np.asarray(x, dtype=float)
    a = _as_rotation_invariant(alpha, psi_map.n)
    b = _as_rotation_invariant(beta, psi_map.n)
    sq = psi_map.squared_coefficients(x)
    return sq * b.jet(sq * x).grad - a.jet(x).grad


def scaled(p: AnyPotential, c: float) -> AnyPotential:
    """The potential ``c * Phi``."""
    if isinstance(p, RadialPotential):
        fprime = None if p.fprime is None else (lambda t, g=p.fprime: c * g(t))
        return RadialPotential(lambda t: c * p(t), f"{c:g}*{p.name}", lo=p.lo, hi=p.hi,
                               fprime=fprime, psh_hi=p.psh_hi, radius=p.radius)
    return RotationInvariantPotential(lambda *xs: c * p(*xs), p.n, f"{c:g}*{p.name}",
                                      lo=p.lo, hi=p.hi, radius=p.radius)


@dataclass(frozen=True)
class DualityProblem:
    source: AnyPotential
    dual: AnyPotential
    lam: float
    radius: float
    n: int

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        for p in (self.source, self.dual):
            if not strict_psh_at_origin(p):
                raise ValueError(f"{p.name} is not strictly PSH at the origin")

    @property
    def radial(self) -> bool:
        return isinstance(self.source, RadialPotential)


def make_problem(p: AnyPotential, lam: Optional[float] = None, n: Optional[int] = None,
                 radius: Optional[float] = None) -> DualityProblem:
    """Pair ``p`` with its dual; ``lam=None`` uses :func:`candidate_lambda`."""
    if lam is None:
        lam = candidate_lambda(p)
        if lam is None:
            raise ValueError(f"{p.name}: no admissible lambda (unequal gradient at 0)")
    if isinstance(p, RotationInvariantPotential):
        n = p.n if n is None else n
        if n != p.n:
            raise ValueError(f"{p.name} has dimension {p.n}, not {n}")
    n = 1 if n is None else n
    return DualityProblem(p, dual(p), float(lam), p.radius if radius is None else radius, n)
