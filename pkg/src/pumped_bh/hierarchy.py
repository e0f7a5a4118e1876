"""Correlation-function hierarchy of the pumped Kerr cavity.

Normally ordered moments ``<a^dag^l a^m>`` obey

    d/dt <a^dag^l a^m> = A(l,m) <a^dag^l a^m> + B(l,m) <a^dag^(l+1) a^(m+1)>
                         + C(l,m) <a^dag^(l-1) a^(m-1)>

and, by the quantum regression theorem, the retarded correlators
``<<a^dag^(m-1) a^m ; a^dag>>_w`` close into a tridiagonal linear system once
every moment with more than ``L`` creation or annihilation operators is
dropped.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError
from .params import ModelParams, check_order


def coefficients(params: ModelParams, l: int, m: int) -> tuple[complex, complex, complex]:
    """Return the hierarchy coefficients ``(A, B, C)`` for the pair ``(l, m)``.

    Examples
    --------
    >>> p = ModelParams(gamma_p=0.6, gamma_l=0.2)
    >>> coefficients(p, 1, 1)
    ((0.4+0j), (-2+0j), (0.6+0j))
    """
    if l < 0 or m < 0:
        raise DomainError(f"moment indices must be non-negative, got ({l}, {m})")
    wc, U, chi, kappa = params.omega_c, params.U, params.chi, params.kappa
    ll, mm = l * (l - 1), m * (m - 1)
    A = complex(chi * (l + m) - 0.5 * kappa * (ll + mm), wc * (l - m) + 0.5 * U * (ll - mm))
    B = complex(-kappa * (l + m), U * (l - m))
    C = complex(params.gamma_p * l * m, 0.0)
    return A, B, C


@dataclass(frozen=True)
class GreenSystem:
    """Frequency-space hierarchy ``w G = s + M G`` for the vector
    ``G_m = <<a^dag^(m-1) a^m ; a^dag>>_w``, ``m = 1..L``.

    ``G^R(w)`` is the first component of ``(w - M)^{-1} s``.
    """

    M: np.ndarray
    s: np.ndarray
    order: int

    def green(self, omega):
        """Evaluate the retarded Green's function at (array of) ``omega``."""
        omega = np.asarray(omega, dtype=complex)
        eye = np.eye(self.order)
        shifted = omega[..., None, None] * eye - self.M
        rhs = np.broadcast_to(self.s, omega.shape + (self.order,))[..., None]
        return np.linalg.solve(shifted, rhs)[..., 0, 0]

    def inverse_green(self, omega):
        return 1.0 / self.green(omega)


def _diagonal_moments(moments, count):
    if hasattr(moments, "n"):
        n = np.asarray(moments.n, dtype=float)
    else:
        n = np.asarray(moments, dtype=float)
    if n.ndim != 1 or n.size < count:
        raise DimensionError(
            f"need diagonal moments n_0..n_{count - 1}, got {n.size} values"
        )
    return n


def build_green_system(params: ModelParams, L: int, moments) -> GreenSystem:
    """Assemble the truncated Green's-function hierarchy.

    Parameters
    ----------
    params : ModelParams
    L : int
        Truncation order.
    moments : MomentSet or sequence of float
        Diagonal steady-state moments ``n_0 = 1, n_1, ..., n_{L-1}``.
    """
    L = check_order(L)
    n = _diagonal_moments(moments, L)
    M = np.zeros((L, L), dtype=complex)
    s = np.zeros(L, dtype=complex)
    for row in range(L):
        m = row + 1
        A, B, C = coefficients(params, m - 1, m)
        M[row, row] = 1j * A
        if row + 1 < L:
            M[row, row + 1] = 1j * B
        if row > 0:
            M[row, row - 1] = 1j * C
        s[row] = m * n[m - 1]
    return GreenSystem(M=M, s=s, order=L)


def moment_index(L: int) -> list[tuple[int, int]]:
    """Variables of the moment system in canonical order.

    For each ``k = 1..L`` the triple ``(k-1, k), (k, k-1), (k, k)``; the
    constant ``<a^dag^0 a^0> = 1`` is not a variable.
    """
    out = []
    for k in range(1, L + 1):
        out += [(k - 1, k), (k, k - 1), (k, k)]
    return out


@dataclass(frozen=True)
class MomentSystem:
    """Linear moment dynamics ``dv/dt = D v + b`` over :attr:`index`."""

    index: tuple[tuple[int, int], ...]
    D: np.ndarray
    b: np.ndarray
    order: int

    def position(self, l: int, m: int) -> int:
        return self.index.index((l, m))

    def rhs(self, v):
        return self.D @ v + self.b

    def diagonal_block(self):
        """Restriction to the closed diagonal chain ``(l, l)``, ``l = 1..L``."""
        rows = [self.position(k, k) for k in range(1, self.order + 1)]
        return self.D[np.ix_(rows, rows)], self.b[rows]


def build_moment_system(params: ModelParams, L: int) -> MomentSystem:
    """Assemble the truncated moment equations at order ``L``."""
    L = check_order(L)
    index = moment_index(L)
    where = {pair: i for i, pair in enumerate(index)}
    size = len(index)
    D = np.zeros((size, size), dtype=complex)
    b = np.zeros(size, dtype=complex)
    for i, (l, m) in enumerate(index):
        A, B, C = coefficients(params, l, m)
        D[i, i] += A
        up = (l + 1, m + 1)
        if max(up) <= L:
            D[i, where[up]] += B
        down = (l - 1, m - 1)
        if down == (0, 0):
            b[i] += C
        elif min(down) >= 0:
            D[i, where[down]] += C
    return MomentSystem(index=tuple(index), D=D, b=b, order=L)
