"""Point-wise 2-forms and operators in real coordinates.

Convention (fixed everywhere): real coordinates are ordered
``(u_1, v_1, ..., u_n, v_n)`` with ``z_j = u_j + i v_j`` and the flat form is
``omega_0 = sum du_j ^ dv_j = (i/2) sum dz_j ^ dzbar_j``. A 2-form at a point
is stored as the antisymmetric matrix ``Omega[a, b] = omega(e_a, e_b)``.

For a Hermitian coefficient matrix ``H`` the form
``(i/2) sum H_kl dz_k ^ dzbar_l`` evaluates to ``omega(a, b) = -Im(a^T H conj(b))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numkit
from .numkit import DomainError
from .potentials import PolarizedPotential, RadialPotential, RotationInvariantPotential

CONVENTION = "u1v1:omega0(du,dv)=+1"


@dataclass(frozen=True, eq=False)
class FormMatrix:
    n: int
    omega: np.ndarray
    convention: str = CONVENTION

    def _same_frame(self, other: FormMatrix) -> None:
        if not isinstance(other, FormMatrix):
            raise TypeError(f"cannot combine FormMatrix with {type(other).__name__}")
        if other.convention != self.convention or other.n != self.n:
            raise TypeError(
                f"mixed conventions: {self.convention}/n={self.n} vs {other.convention}/n={other.n}"
            )

    def __add__(self, other: FormMatrix) -> FormMatrix:
        self._same_frame(other)
        return FormMatrix(self.n, self.omega + other.omega, self.convention)

    def __sub__(self, other: FormMatrix) -> FormMatrix:
        self._same_frame(other)
        return FormMatrix(self.n, self.omega - other.omega, self.convention)

    def __mul__(self, c: float) -> FormMatrix:
        return FormMatrix(self.n, c * self.omega, self.convention)

    __rmul__ = __mul__

    def norm(self) -> float:
        """Max absolute entry."""
        return numkit.max_abs(self.omega)

    def metric(self) -> np.ndarray:
        """Symmetric pairing ``g(a, b) = omega(a, J b)``."""
        return self.omega @ numkit.complex_structure(self.n)

    def is_positive(self, tol: float = 0.0) -> bool:
        g = self.metric()
        return bool(np.all(np.linalg.eigvalsh(0.5 * (g + g.T)) > tol))


def flat_form(n: int, c: float = 1.0) -> FormMatrix:
    return FormMatrix(n, c * _omega0(n))


def _omega0(n: int) -> np.ndarray:
    out = np.zeros((2 * n, 2 * n))
    for j in range(n):
        out[2 * j, 2 * j + 1] = 1.0
        out[2 * j + 1, 2 * j] = -1.0
    return out


def _basis(n: int) -> np.ndarray:
    E = np.zeros((n, 2 * n), dtype=complex)
    for k in range(n):
        E[k, 2 * k] = 1.0
        E[k, 2 * k + 1] = 1j
    return E


def hermitian_to_form(H) -> FormMatrix:
    """The real matrix of ``(i/2) sum H_kl dz_k ^ dzbar_l``."""
    H = np.asarray(H, dtype=complex)
    E = _basis(H.shape[0])
    omega = -np.imag(E.T @ H @ E.conj())
    return FormMatrix(H.shape[0], 0.5 * (omega - omega.T))


def operator_to_form(B) -> FormMatrix:
    """``omega(a, b) = omega_0(B a, b)`` for a real 2n x 2n operator ``B``."""
    B = np.asarray(B, dtype=float)
    n = B.shape[0] // 2
    return FormMatrix(n, B.T @ _omega0(n))


def _x_of(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return (z * z.conj()).real


def rotation_invariant_matrix(p: RotationInvariantPotential, z) -> np.ndarray:
    """``H_kl = d2phi/dx_k dx_l * conj(z_k) z_l + dphi/dx_k delta_kl``."""
    z = np.asarray(z, dtype=complex)
    jet = p.jet(_x_of(z))
    return jet.hess * np.outer(z.conj(), z) + np.diag(jet.grad)


def kahler_form_at(p, z) -> FormMatrix:
    """The Kähler form ``(i/2) d dbar Phi`` at ``z``.

    Radial potentials go through the operator ``B_z`` (``omega = omega_0(B_z., .)``);
    rotation-invariant ones through the Hermitian coefficient matrix.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if isinstance(p, RadialPotential):
        return operator_to_form(b_operator_at(p, z))
    if isinstance(p, RotationInvariantPotential):
        if z.size != p.n:
            raise ValueError(f"{p.name}: point has {z.size} coordinates, potential has {p.n}")
        return hermitian_to_form(rotation_invariant_matrix(p, z))
    raise TypeError(f"no Kähler form for {type(p).__name__}")


def dual_form_at(p, z) -> FormMatrix:
    """The form of the dual potential ``-Phi(z, -zbar)`` at ``z``.

    Radial: ``omega* = -f''(-|z|^2)(i/2) d|z|^2 ^ dbar|z|^2 + f'(-|z|^2) omega_0``.
    Rotation-invariant: the same reflection ``x -> -x`` applied to the
    Hessian (sign flip) and gradient of ``phi_tilde``.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if isinstance(p, RadialPotential):
        return operator_to_form(b_star_operator_at(p, z))
    if isinstance(p, RotationInvariantPotential):
        jet = p.jet(-_x_of(z))
        H = -jet.hess * np.outer(z.conj(), z) + np.diag(jet.grad)
        return hermitian_to_form(H)
    raise TypeError(f"no dual form for {type(p).__name__}")


def _b_matrix(d1: float, d2: float, z: np.ndarray) -> np.ndarray:
    # (z ⊙ zbar)(v) = <v, z> z  ->  z z^H
    return numkit.real_matrix(d2 * np.outer(z, z.conj()) + d1 * np.eye(z.size))


def b_operator_at(p: RadialPotential, z) -> np.ndarray:
    """Real matrix of ``B_z = f''(|z|^2) z ⊙ zbar + f'(|z|^2) Id``."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    jet = p.jet(float(_x_of(z).sum()))
    return _b_matrix(jet.d1, jet.d2, z)


def b_star_operator_at(p: RadialPotential, z) -> np.ndarray:
    """Real matrix of ``B*_z = -f''(-|z|^2) z ⊙ zbar + f'(-|z|^2) Id``."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    jet = p.jet(-float(_x_of(z).sum()))
    return _b_matrix(jet.d1, -jet.d2, z)


def conformal_factor(p: RadialPotential, x: float) -> float:
    """``S(x) = (x f'(x))'``, the coefficient of ``omega_0`` in one dimension."""
    jet = p.jet(x)
    return x * jet.d2 + jet.d1


def gaussian_curvature_radial(p: RadialPotential, x: float) -> float:
    """Gaussian curvature of the one-dimensional metric ``S(|z|^2) |dz|^2``.

    ``K = -(2/S) [x (log S)'' + (log S)']``; ``K = -4`` for ``-log(1 - x)``.
    """
    d = p.derivative_jet(x)
    f1, f2, f3, f4 = d.value, d.d1, d.d2, d.d3
    S = x * f2 + f1
    if S <= 0:
        raise DomainError(f"conformal factor S={S!r} not positive", expr=p.name, at=x)
    S1 = x * f3 + 2 * f2
    S2 = x * f4 + 3 * f3
    dlog = S1 / S
    d2log = S2 / S - dlog**2
    return -2.0 / S * (x * d2log + dlog)


def polarized_levi_matrix(p: PolarizedPotential, z, h: float = 1e-4) -> np.ndarray:
    """``d^2 P / dz_k dw_l`` at ``(z, conj z)`` by central differences."""
    z = np.asarray(z, dtype=complex)
    w = z.conj()
    n = p.n
    H = np.empty((n, n), dtype=complex)
    eye = np.eye(n)
    for k in range(n):
        for l in range(n):
            dz, dw = h * eye[k], h * eye[l]
            H[k, l] = (
                p(z + dz, w + dw) - p(z + dz, w - dw) - p(z - dz, w + dw) + p(z - dz, w - dw)
            ) / (4 * h * h)
    return H


__all__ = [
    "CONVENTION",
    "DomainError",
    "FormMatrix",
    "b_operator_at",
    "b_star_operator_at",
    "conformal_factor",
    "dual_form_at",
    "flat_form",
    "gaussian_curvature_radial",
    "hermitian_to_form",
    "kahler_form_at",
    "operator_to_form",
    "polarized_levi_matrix",
]
