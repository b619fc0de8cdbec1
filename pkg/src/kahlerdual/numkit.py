"""Forward-mode jets and small dense helpers.

Two carriers are provided:

* :class:`Jet1` -- value and the first three derivatives of a univariate
  function at a point.
* :class:`JetN` -- value, gradient and Hessian of a function of ``n`` real
  variables at a point.

Closed-form potentials are written as ordinary Python callables using the
arithmetic operators and the module-level functions :func:`log`,
:func:`exp`, :func:`sqrt`, :func:`sin`, :func:`cos`. The same callable works
on floats, :class:`Jet1` and :class:`JetN` arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

Scalar = Union[float, "Jet1", "JetN"]


class DomainError(ArithmeticError):
    """Evaluation left the real domain of an expression.

    ``expr`` names the offending sub-expression when it is known.
    """

    def __init__(self, message: str, expr: str | None = None, at=None):
        self.message = message
        self.expr = expr
        self.at = at
        text = message if expr is None else f"{expr}: {message}"
        if at is not None:
            text = f"{text} (at {at})"
        super().__init__(text)


@dataclass(frozen=True)
class Jet1:
    value: float
    d1: float = 0.0
    d2: float = 0.0
    d3: float = 0.0

    @classmethod
    def constant(cls, c: float) -> Jet1:
        return cls(float(c))

    @classmethod
    def variable(cls, x: float) -> Jet1:
        return cls(float(x), 1.0)

    def apply(self, f0: float, f1: float, f2: float, f3: float) -> Jet1:
        """Compose with a univariate function given its derivatives at ``value``."""
        a, b, c = self.d1, self.d2, self.d3
        return Jet1(
            f0,
            f1 * a,
            f2 * a * a + f1 * b,
            f3 * a**3 + 3.0 * f2 * a * b + f1 * c,
        )

    def __add__(self, other):
        if isinstance(other, Jet1):
            return Jet1(self.value + other.value, self.d1 + other.d1,
                        self.d2 + other.d2, self.d3 + other.d3)
        if isinstance(other, JetN):
            return NotImplemented
        return Jet1(self.value + other, self.d1, self.d2, self.d3)

    __radd__ = __add__

    def __neg__(self):
        return Jet1(-self.value, -self.d1, -self.d2, -self.d3)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet1):
            f0, f1, f2, f3 = self.value, self.d1, self.d2, self.d3
            g0, g1, g2, g3 = other.value, other.d1, other.d2, other.d3
            return Jet1(
                f0 * g0,
                f1 * g0 + f0 * g1,
                f2 * g0 + 2.0 * f1 * g1 + f0 * g2,
                f3 * g0 + 3.0 * f2 * g1 + 3.0 * f1 * g2 + f0 * g3,
            )
        if isinstance(other, JetN):
            return NotImplemented
        return Jet1(self.value * other, self.d1 * other, self.d2 * other, self.d3 * other)

    __rmul__ = __mul__

    def reciprocal(self) -> Jet1:
        u = self.value
        if u == 0.0:
            raise DomainError("division by zero")
        return self.apply(1.0 / u, -1.0 / u**2, 2.0 / u**3, -6.0 / u**4)

    def __truediv__(self, other):
        if isinstance(other, Jet1):
            return self * other.reciprocal()
        if isinstance(other, JetN):
            return NotImplemented
        if other == 0:
            raise DomainError("division by zero")
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, (Jet1, JetN)):
            return exp(p * log(self))
        return _power(self, float(p))

    def __rpow__(self, base):
        return exp(self * _log_float(float(base)))


class JetN:
    """Value, gradient and Hessian of a scalar function of ``n`` variables."""

    __slots__ = ("value", "grad", "hess")

    def __init__(self, value: float, grad, hess):
        self.value = float(value)
        self.grad = np.asarray(grad, dtype=float)
        self.hess = np.asarray(hess, dtype=float)

    @classmethod
    def constant(cls, c: float, n: int) -> JetN:
        return cls(c, np.zeros(n), np.zeros((n, n)))

    @classmethod
    def variables(cls, x: Sequence[float]) -> list[JetN]:
        """Lift the coordinates of ``x`` as independent variables."""
        n = len(x)
        eye = np.eye(n)
        return [cls(x[k], eye[k], np.zeros((n, n))) for k in range(n)]

    @property
    def n(self) -> int:
        return self.grad.shape[0]

    def apply(self, f0: float, f1: float, f2: float, f3: float = 0.0) -> JetN:
        g = self.grad
        return JetN(f0, f1 * g, f2 * np.outer(g, g) + f1 * self.hess)

    def __repr__(self) -> str:
        return f"JetN(value={self.value!r}, grad={self.grad.tolist()!r}, hess={self.hess.tolist()!r})"

    def __add__(self, other):
        if isinstance(other, JetN):
            return JetN(self.value + other.value, self.grad + other.grad, self.hess + other.hess)
        if isinstance(other, Jet1):
            return NotImplemented
        return JetN(self.value + other, self.grad, self.hess)

    __radd__ = __add__

    def __neg__(self):
        return JetN(-self.value, -self.grad, -self.hess)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, JetN):
            gg = np.outer(self.grad, other.grad)
            return JetN(
                self.value * other.value,
                self.value * other.grad + other.value * self.grad,
                self.value * other.hess + other.value * self.hess + gg + gg.T,
            )
        if isinstance(other, Jet1):
            return NotImplemented
        return JetN(self.value * other, self.grad * other, self.hess * other)

    __rmul__ = __mul__

    def reciprocal(self) -> JetN:
        u = self.value
        if u == 0.0:
            raise DomainError("division by zero")
        return self.apply(1.0 / u, -1.0 / u**2, 2.0 / u**3)

    def __truediv__(self, other):
        if isinstance(other, JetN):
            return self * other.reciprocal()
        if isinstance(other, Jet1):
            return NotImplemented
        if other == 0:
            raise DomainError("division by zero")
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, (Jet1, JetN)):
            return exp(p * log(self))
        return _power(self, float(p))

    def __rpow__(self, base):
        return exp(self * _log_float(float(base)))


def value_of(x: Scalar) -> float:
    return x.value if isinstance(x, (Jet1, JetN)) else float(x)


def lift(x: Scalar, f0: float, f1: float, f2: float, f3: float = 0.0) -> Scalar:
    """Apply a univariate function, known through its derivatives at ``value_of(x)``."""
    if isinstance(x, (Jet1, JetN)):
        return x.apply(f0, f1, f2, f3)
    return f0


def compose(value: float, grad, hess, inputs: Sequence[Scalar]) -> Scalar:
    """Chain rule for an n-ary function given its value/gradient/Hessian at the inputs.

    ``inputs`` are floats (plain evaluation) or :class:`JetN` carriers over a
    common set of variables.
    """
    jets = [u for u in inputs if isinstance(u, JetN)]
    if not jets:
        return float(value)
    m = jets[0].n
    grads = np.array([u.grad if isinstance(u, JetN) else np.zeros(m) for u in inputs])
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    out_hess = grads.T @ hess @ grads
    for k, u in enumerate(inputs):
        if isinstance(u, JetN):
            out_hess = out_hess + grad[k] * u.hess
    return JetN(value, grads.T @ grad, out_hess)


def _log_float(u: float) -> float:
    if u <= 0.0:
        raise DomainError(f"log of non-positive argument {u!r}", expr="log")
    return math.log(u)


def log(x: Scalar) -> Scalar:
    u = value_of(x)
    if u <= 0.0:
        raise DomainError(f"log of non-positive argument {u!r}", expr="log")
    if isinstance(x, (Jet1, JetN)):
        return x.apply(math.log(u), 1.0 / u, -1.0 / u**2, 2.0 / u**3)
    return math.log(u)


def exp(x: Scalar) -> Scalar:
    e = math.exp(value_of(x))
    return lift(x, e, e, e, e)


def sqrt(x: Scalar) -> Scalar:
    u = value_of(x)
    if isinstance(x, (Jet1, JetN)):
        if u <= 0.0:
            raise DomainError(f"sqrt has no finite derivative at {u!r}", expr="sqrt")
        s = math.sqrt(u)
        return x.apply(s, 0.5 / s, -0.25 / (s * u), 0.375 / (s * u * u))
    if u < 0.0:
        raise DomainError(f"sqrt of negative argument {u!r}", expr="sqrt")
    return math.sqrt(u)


def sin(x: Scalar) -> Scalar:
    u = value_of(x)
    s, c = math.sin(u), math.cos(u)
    return lift(x, s, c, -s, -c)


def cos(x: Scalar) -> Scalar:
    u = value_of(x)
    s, c = math.sin(u), math.cos(u)
    return lift(x, c, -s, -c, s)


def _power(x, p: float):
    u = x.value
    integral = p == int(p)
    if not integral and u <= 0.0:
        raise DomainError(f"non-integer power {p!r} of non-positive argument {u!r}", expr="pow")
    coeffs = []
    c = 1.0
    for k in range(4):
        if c == 0.0:
            coeffs.append(0.0)
        elif u == 0.0 and p - k < 0:
            raise DomainError(f"power {p!r} has no finite derivative at 0", expr="pow")
        else:
            coeffs.append(c * u ** (p - k))
        c *= p - k
    return x.apply(*coeffs)


def jet1_eval(fn: Callable[[Jet1], Scalar], at: float) -> Jet1:
    """Value and first three derivatives of ``fn`` at ``at``."""
    out = fn(Jet1.variable(at))
    if not isinstance(out, Jet1):
        return Jet1.constant(value_of(out))
    return out


def jetn_eval(fn: Callable[..., Scalar], at: Sequence[float]) -> JetN:
    """Value, gradient and Hessian of ``fn(x_1, ..., x_n)`` at ``at``."""
    at = [float(a) for a in at]
    out = fn(*JetN.variables(at))
    if not isinstance(out, JetN):
        return JetN.constant(value_of(out), len(at))
    return out


def fd_check(fn: Callable, at, h: float | None = None, order: int = 1) -> float:
    """Largest discrepancy between jet derivatives and central differences.

    ``order=1`` compares first derivatives with differences of values;
    ``order=2`` compares second derivatives with differences of the jet's first
    derivatives. ``at`` is a float (univariate ``fn``) or a sequence (``fn``
    takes one argument per coordinate).
    """
    univariate = np.ndim(at) == 0
    point = np.atleast_1d(np.asarray(at, dtype=float))
    if h is None:
        h = 1e-6 * max(1.0, float(np.max(np.abs(point))))
    if h <= 0:
        raise ValueError("step h must be positive")

    if univariate:
        x = float(point[0])
        jet = jet1_eval(fn, x)
        if order == 1:
            fd = (value_of(fn(x + h)) - value_of(fn(x - h))) / (2 * h)
            return abs(jet.d1 - fd)
        fd = (jet1_eval(fn, x + h).d1 - jet1_eval(fn, x - h).d1) / (2 * h)
        return abs(jet.d2 - fd)

    jet = jetn_eval(fn, point)
    worst = 0.0
    for k in range(point.size):
        step = np.zeros_like(point)
        step[k] = h
        if order == 1:
            fd = (value_of(fn(*(point + step))) - value_of(fn(*(point - step)))) / (2 * h)
            worst = max(worst, abs(jet.grad[k] - fd))
        else:
            fd = (jetn_eval(fn, point + step).grad - jetn_eval(fn, point - step).grad) / (2 * h)
            worst = max(worst, float(np.max(np.abs(jet.hess[:, k] - fd))))
    return worst


def realify(c) -> np.ndarray:
    """Complex n-vector to the real 2n-vector (u1, v1, ..., un, vn)."""
    c = np.asarray(c, dtype=complex)
    out = np.empty(2 * c.size)
    out[0::2] = c.real
    out[1::2] = c.imag
    return out


def complexify(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return r[0::2] + 1j * r[1::2]


def real_matrix(m) -> np.ndarray:
    """Real 2n x 2n matrix of the complex-linear map ``v -> m @ v``."""
    m = np.asarray(m, dtype=complex)
    n = m.shape[0]
    out = np.empty((2 * n, 2 * n))
    out[0::2, 0::2] = m.real
    out[0::2, 1::2] = -m.imag
    out[1::2, 0::2] = m.imag
    out[1::2, 1::2] = m.real
    return out


def complex_structure(n: int) -> np.ndarray:
    """Multiplication by i in the (u1, v1, ..., un, vn) ordering."""
    return real_matrix(1j * np.eye(n))


def max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0
