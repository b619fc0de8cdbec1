"""Kähler potentials: radial, rotation-invariant and polarized, plus a catalog.

A radial potential is described by its associated function ``f`` with
``Phi(z) = f(|z|^2)``; a rotation-invariant one by ``phi_tilde`` with
``Phi(z) = phi_tilde(|z_1|^2, ..., |z_n|^2)``. Evaluators are plain callables
that accept floats or jets (see :mod:`kahlerdual.numkit`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy import integrate

from . import numkit
from .expr import Expression
from .numkit import DomainError, Jet1, JetN, Scalar

SQRT2 = math.sqrt(2.0)
PARABOLA_X_HI = 1.0 / (4.0 * SQRT2)


class CatalogError(ValueError):
    pass


class SolverError(DomainError):
    """Newton iteration failed; the point lies outside the solvable neighbourhood."""

    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(f"{message} (last residual {residual:.3e})")


@dataclass(frozen=True)
class RadialPotential:
    """``Phi(z) = f(|z|^2)`` on the interval ``lo < x < hi``.

    ``fprime`` is an optional closed form of ``f'``; it gives derivatives of
    ``f`` up to order four, which the curvature needs. ``psh_hi`` bounds the
    sub-interval ``[0, psh_hi)`` on which ``f' > 0`` and ``(x f')' > 0``.
    ``radius`` is the |z| radius of the neighbourhood used for duality checks.
    """

    f: Callable[[Scalar], Scalar]
    name: str
    lo: float = -math.inf
    hi: float = math.inf
    fprime: Optional[Callable[[Scalar], Scalar]] = None
    psh_hi: float = math.inf
    radius: float = 0.5

    def contains(self, x: float) -> bool:
        return self.lo < x < self.hi

    def _check(self, x: float) -> None:
        if not self.contains(x):
            raise DomainError(f"x={x!r} outside ({self.lo}, {self.hi})", expr=self.name)

    def __call__(self, t: Scalar) -> Scalar:
        self._check(numkit.value_of(t))
        return self.f(t)

    def jet(self, x: float) -> Jet1:
        """``(f, f', f'', f''')`` at ``x``."""
        self._check(float(x))
        return numkit.jet1_eval(self.f, float(x))

    def derivative_jet(self, x: float) -> Jet1:
        """``(f', f'', f''', f'''')`` at ``x``; needs the closed form of ``f'``."""
        if self.fprime is None:
            raise ValueError(f"{self.name}: no closed form for f' available")
        self._check(float(x))
        return numkit.jet1_eval(self.fprime, float(x))

    def as_rotation_invariant(self, n: int) -> RotationInvariantPotential:
        """The associated function ``f(x_1 + ... + x_n)`` on R^n."""

        def phi(*xs):
            total = xs[0]
            for u in xs[1:]:
                total = total + u
            return self(total)

        return RotationInvariantPotential(
            phi, n, self.name, lo=np.full(n, self.lo), hi=np.full(n, self.hi), radius=self.radius
        )


@dataclass(frozen=True)
class RotationInvariantPotential:
    """``Phi(z) = phi_tilde(|z_1|^2, ..., |z_n|^2)`` on the box ``lo < x < hi``.

    Constraints that are not box-shaped (e.g. a Hartogs domain) surface as
    :class:`DomainError` from the evaluator itself.
    """

    phi_tilde: Callable[..., Scalar]
    n: int
    name: str
    lo: np.ndarray = None
    hi: np.ndarray = None
    radius: float = 0.5

    def __post_init__(self):
        if self.lo is None:
            object.__setattr__(self, "lo", np.full(self.n, -math.inf))
        if self.hi is None:
            object.__setattr__(self, "hi", np.full(self.n, math.inf))

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x > self.lo) and np.all(x < self.hi))

    def _check(self, x) -> None:
        if not self.contains(x):
            raise DomainError(f"x={np.asarray(x).tolist()} outside the domain box", expr=self.name)

    def __call__(self, *xs: Scalar) -> Scalar:
        self._check([numkit.value_of(u) for u in xs])
        return self.phi_tilde(*xs)

    def jet(self, x) -> JetN:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"{self.name}: expected {self.n} coordinates, got {x.shape}")
        self._check(x)
        return numkit.jetn_eval(self.phi_tilde, x)


@dataclass(frozen=True)
class PolarizedPotential:
    """Analytic ``P(z, w)`` with ``Phi(z) = P(z, conj(z))``."""

    P: Callable[[np.ndarray, np.ndarray], complex]
    n: int
    name: str
    radius: float = 0.1

    def __call__(self, z, w) -> complex:
        return complex(self.P(np.asarray(z, dtype=complex), np.asarray(w, dtype=complex)))

    def on_diagonal(self, z) -> complex:
        z = np.asarray(z, dtype=complex)
        return self(z, np.conj(z))


Potential = Union[RadialPotential, RotationInvariantPotential, PolarizedPotential]


# -- catalog ----------------------------------------------------------------

def hyperbolic() -> RadialPotential:
    return RadialPotential(
        lambda t: -numkit.log(1 - t), "hyperbolic", hi=1.0,
        fprime=lambda t: 1 / (1 - t), psh_hi=1.0, radius=0.9,
    )


def fubini_study() -> RadialPotential:
    return RadialPotential(
        lambda t: numkit.log(1 + t), "fubini_study", lo=-1.0,
        fprime=lambda t: 1 / (1 + t), radius=1.0,
    )


def flat(c: float = 1.0) -> RadialPotential:
    if c <= 0:
        raise CatalogError("flat: c must be positive")
    return RadialPotential(lambda t: c * t, "flat", fprime=lambda t: 0 * t + c, radius=1.0)


def scaled_hyperbolic(mu: float) -> RadialPotential:
    if mu <= 0:
        raise CatalogError("scaled_hyperbolic: mu must be positive")
    return RadialPotential(
        lambda t: -mu * numkit.log(1 - t), "scaled_hyperbolic", hi=1.0,
        fprime=lambda t: mu / (1 - t), psh_hi=1.0, radius=0.9,
    )


def quadratic_defect() -> RadialPotential:
    return RadialPotential(
        lambda t: t - t * t / 4, "quadratic_defect",
        fprime=lambda t: 1 - t / 2, psh_hi=1.0, radius=0.9,
    )


def parabola_G(x: Scalar) -> Scalar:
    """``-sqrt(2)/2 + x + sqrt(2 - 8 sqrt(2) x)/2``; an involution near 0."""
    return -SQRT2 / 2 + x + 0.5 * numkit.sqrt(2 - 8 * SQRT2 * x)


def parabola_rotation(lam: float = 1.0) -> RadialPotential:
    """Radial solution built from the involution :func:`parabola_G`.

    ``f' = -G(x)/(lam x)``. Rationalising the square root gives
    ``G(x)/x = 1 - 4 sqrt(2)/(s + sqrt(2))`` with ``s = sqrt(2 - 8 sqrt(2) x)``,
    which removes the singularity at 0. ``f`` itself is the integral of ``f'``
    from 0, computed by adaptive quadrature.
    """
    if lam <= 0:
        raise CatalogError("parabola_rotation: lambda must be positive")

    def fprime(t):
        s = numkit.sqrt(2 - 8 * SQRT2 * t)
        return (4 * SQRT2 / (s + SQRT2) - 1) / lam

    def fprime_float(t: float) -> float:
        s = math.sqrt(2 - 8 * SQRT2 * t)
        return (4 * SQRT2 / (s + SQRT2) - 1) / lam

    def f(t):
        x = numkit.value_of(t)
        value, _ = integrate.quad(fprime_float, 0.0, x, epsabs=1e-13, epsrel=1e-12, limit=200)
        if not isinstance(t, (Jet1, JetN)):
            return value
        d = numkit.jet1_eval(fprime, x)
        return numkit.lift(t, value, d.value, d.d1, d.d2)

    return RadialPotential(
        f, "parabola_rotation", hi=PARABOLA_X_HI, fprime=fprime,
        psh_hi=PARABOLA_X_HI, radius=0.4,
    )


def _as_callable(F) -> Callable:
    if isinstance(F, str):
        return Expression(F)
    if callable(F):
        return F
    raise CatalogError(f"hartogs: F must be an expression string or callable, got {F!r}")


def hartogs(F="1-x", n: int = 2, x_hi: float = 1.0, samples: int = 64) -> RotationInvariantPotential:
    """``-log(F(x_0) - x_1 - ... - x_{n-1})`` for a decreasing positive ``F``."""
    if n < 1:
        raise CatalogError("hartogs: n must be at least 1")
    Fc = _as_callable(F)
    grid = np.linspace(0.0, x_hi, samples, endpoint=False)
    for x in grid:
        try:
            jet = numkit.jet1_eval(Fc, float(x))
        except DomainError as exc:
            raise CatalogError(f"hartogs: F undefined at x={x:.4g}: {exc}") from None
        if jet.value <= 0:
            raise CatalogError(f"hartogs: F not positive at x={x:.4g}")
        if jet.d1 >= 0:
            raise CatalogError(f"hartogs: F not decreasing at x={x:.4g}")

    def phi(*xs):
        rest = 0.0
        for u in xs[1:]:
            rest = rest + u
        return -numkit.log(Fc(xs[0]) - rest)

    hi = np.full(n, math.inf)
    hi[0] = x_hi
    label = getattr(Fc, "source", getattr(F, "__name__", "F"))
    return RotationInvariantPotential(phi, n, f"hartogs[{label}]", hi=hi, radius=0.5)


def hartogs_pseudoconvexity_check(F, x_hi: float = 1.0, samples: int = 200):
    """Sample ``-(x F'(x)/F(x))' > 0`` on ``[0, x_hi)``.

    Returns ``(ok, first_failure)`` where ``first_failure`` is the first grid
    point violating the condition, or ``None``.
    """
    Fc = _as_callable(F)
    for x in np.linspace(0.0, x_hi, samples, endpoint=False):
        jet = numkit.jet1_eval(Fc, float(x))
        F0, F1, F2 = jet.value, jet.d1, jet.d2
        if F0 <= 0:
            raise DomainError(f"F={F0!r} not positive", expr="F", at=float(x))
        cond = -((F1 + x * F2) * F0 - x * F1 * F1) / (F0 * F0)
        if not cond > 0:
            return False, float(x)
    return True, None


# -- Taub-NUT -------------------------------------------------------------------

@dataclass(frozen=True)
class TaubNutState:
    U: float
    V: float
    m: float
    x1: float
    x2: float
    iterations: int = field(default=0, compare=False)


def taubnut_forward(U: float, V: float, m: float) -> tuple[float, float]:
    """``(|z_1|^2, |z_2|^2)`` as functions of LeBrun's ``(U, V)``."""
    t = 2 * m * (U - V)
    return math.exp(t) * U, math.exp(-t) * V


def _polished(U, V, m, x1, x2, it) -> TaubNutState:
    # one pass of U = x1 e^{-t}, V = x2 e^{t}: keeps the sign of each
    # coordinate and gives tiny components relative accuracy
    t = 2 * m * (U - V)
    return TaubNutState(x1 * math.exp(-t), x2 * math.exp(t), m, x1, x2, it)


def taubnut_solve(x1: float, x2: float, m: float, tol: float = 1e-13, max_iter: int = 100) -> TaubNutState:
    """Invert ``x1 = e^{2m(U-V)} U``, ``x2 = e^{2m(V-U)} V`` by Newton's method.

    The initial guess ``(U, V) = (x1, x2)`` is exact for ``m = 0``. Steps are
    halved until the residual decreases whenever ``m * max|x| > 0.5``.
    Negative arguments are accepted: the dual potential needs them.
    """
    if m < 0:
        raise ValueError("m must be non-negative")
    x1, x2 = float(x1), float(x2)
    if m == 0.0:
        return TaubNutState(x1, x2, m, x1, x2)
    damped = m * max(abs(x1), abs(x2)) > 0.5
    U, V = x1, x2

    def residual(U, V):
        a, b = taubnut_forward(U, V, m)
        return np.array([a - x1, b - x2])

    r = residual(U, V)
    norm = float(np.max(np.abs(r)))
    for it in range(max_iter):
        if norm < tol:
            return _polished(U, V, m, x1, x2, it)
        e = math.exp(2 * m * (U - V))
        jac = np.array([
            [e * (1 + 2 * m * U), -2 * m * U * e],
            [-2 * m * V / e, (1 + 2 * m * V) / e],
        ])
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            raise SolverError("singular Jacobian in Taub-NUT solve", norm) from None
        t = 1.0
        while True:
            Un, Vn = U + t * step[0], V + t * step[1]
            try:
                rn = residual(Un, Vn)
            except OverflowError:
                rn = np.array([math.inf, math.inf])
            nn = float(np.max(np.abs(rn)))
            if not damped or nn < norm or t < 1e-10:
                break
            t *= 0.5
        U, V, r, norm = Un, Vn, rn, nn
        if not math.isfinite(norm):
            break
    if norm < tol:
        return _polished(U, V, m, x1, x2, max_iter)
    raise SolverError(f"Taub-NUT solve did not converge at x=({x1}, {x2}), m={m}", norm)


def taubnut_gradient(state: TaubNutState) -> tuple[float, float]:
    """Closed-form ``(d phi/d x1, d phi/d x2)``."""
    U, V, m = state.U, state.V, state.m
    return (
        (1 + 2 * m * V) * math.exp(2 * m * (V - U)),
        (1 + 2 * m * U) * math.exp(2 * m * (U - V)),
    )


def taubnut_hessian(state: TaubNutState) -> np.ndarray:
    """Second derivatives in ``x`` by implicit differentiation through ``(U, V)``."""
    U, V, m = state.U, state.V, state.m
    e = math.exp(2 * m * (U - V))
    dx_duv = np.array([
        [e * (1 + 2 * m * U), -2 * m * U * e],
        [-2 * m * V / e, (1 + 2 * m * V) / e],
    ])
    g1 = (1 + 2 * m * V) / e
    g2 = (1 + 2 * m * U) * e
    dg_duv = np.array([
        [-2 * m * g1, 2 * m / e + 2 * m * g1],
        [2 * m * e + 2 * m * g2, -2 * m * g2],
    ])
    hess = dg_duv @ np.linalg.inv(dx_duv)
    return 0.5 * (hess + hess.T)


def taubnut(m: float) -> RotationInvariantPotential:
    """LeBrun's ``U + V + m (U^2 + V^2)`` as a function of ``(|z_1|^2, |z_2|^2)``."""
    if m < 0:
        raise CatalogError("taubnut: m must be non-negative")

    def phi(x1, x2):
        state = taubnut_solve(numkit.value_of(x1), numkit.value_of(x2), m)
        value = state.U + state.V + m * (state.U**2 + state.V**2)
        if not isinstance(x1, JetN) and not isinstance(x2, JetN):
            return value
        return numkit.compose(value, taubnut_gradient(state), taubnut_hessian(state), [x1, x2])

    lo = np.full(2, -1.0 / (2 * m * math.e) if m > 0 else -math.inf)
    return RotationInvariantPotential(phi, 2, f"taubnut[m={m:g}]", lo=lo, radius=0.5)


def taubnut_convergence_radius(m: float, r_max: float = 2.0, steps: int = 200, rays: int = 16) -> float:
    """Largest sampled ``r`` such that the solver converges on ``|x| <= r``.

    Rays cover all four quadrants of the ``(x1, x2)`` plane, since the dual
    potential is evaluated at negative arguments.
    """
    angles = np.linspace(0.0, 2 * math.pi, rays, endpoint=False)
    for r in np.linspace(0.0, r_max, steps + 1)[1:]:
        for a in angles:
            try:
                taubnut_solve(r * math.cos(a), r * math.sin(a), m)
            except (SolverError, OverflowError):
                return float(r - r_max / steps)
    return float(r_max)


# -- polarized ------------------------------------------------------------------

def hyperbolic_plus_linear() -> PolarizedPotential:
    return PolarizedPotential(
        lambda z, w: -np.log(1 - z[0] * w[0]) + z[0] + w[0], 1, "hyperbolic_plus_linear"
    )


CATALOG = {
    "hyperbolic": hyperbolic,
    "fubini_study": fubini_study,
    "flat": flat,
    "scaled_hyperbolic": scaled_hyperbolic,
    "hyperbolic_plus_linear": hyperbolic_plus_linear,
    "quadratic_defect": quadratic_defect,
    "parabola_rotation": parabola_rotation,
    "hartogs": hartogs,
    "taubnut": taubnut,
}


def catalog(name: str, **params) -> Potential:
    """Build a catalog potential by name, e.g. ``catalog("taubnut", m=0.5)``."""
    try:
        factory = CATALOG[name]
    except KeyError:
        raise CatalogError(f"unknown potential {name!r}; choose from {', '.join(CATALOG)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise CatalogError(f"{name}: {exc}") from None


def strict_psh_at_origin(p: Potential) -> bool:
    """True iff the Kähler form of ``p`` at the origin is positive definite."""
    from . import forms

    if isinstance(p, PolarizedPotential):
        H = forms.polarized_levi_matrix(p, np.zeros(p.n, dtype=complex))
        return bool(np.all(np.linalg.eigvalsh(0.5 * (H + H.conj().T)) > 0))
    n = p.n if isinstance(p, RotationInvariantPotential) else 1
    try:
        form = forms.kahler_form_at(p, np.zeros(n, dtype=complex))
    except DomainError:
        return False
    return form.is_positive()
