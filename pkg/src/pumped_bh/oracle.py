"""Fock-space Lindblad reference for a single cavity.

Builds the full Liouvillian of

    d rho/dt = -i[H, rho] + gamma_p D[a^dag] rho + gamma_l D[a] rho + kappa D[a^2] rho,
    H = omega_c a^dag a + (U/2) a^dag a^dag a a,

in a truncated Fock space and evaluates steady-state moments and the
retarded Green's function through the quantum regression theorem.
Vectorisation is row-major: ``vec(A rho B) = (A kron B^T) vec(rho)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
from scipy.sparse.linalg import expm_multiply

from .errors import DomainError, EigenSolverError, SingularChainError
from .params import ModelParams
from .steady import MomentSet

logger = logging.getLogger(__name__)

DEFAULT_NMAX = 16


@dataclass(frozen=True)
class FockSpec:
    """Fock cutoff; the steady-state population of ``|n_max>`` must stay
    below ``leakage_tol`` or the cutoff is raised by ``grow_step``."""

    n_max: int = DEFAULT_NMAX
    leakage_tol: float = 1e-8
    auto_grow: bool = True
    grow_step: int = 4
    n_limit: int = 80

    def __post_init__(self):
        if self.n_max < 1:
            raise DomainError(f"n_max must be >= 1, got {self.n_max}")

    @classmethod
    def for_order(cls, L: int, **kwargs) -> "FockSpec":
        return cls(n_max=max(DEFAULT_NMAX, 2 * L), **kwargs)

    @property
    def dim(self) -> int:
        return self.n_max + 1


def destroy(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def _dissipator(c: np.ndarray) -> np.ndarray:
    eye = np.eye(c.shape[0])
    cdc = c.conj().T @ c
    return np.kron(c, c.conj()) - 0.5 * np.kron(cdc, eye) - 0.5 * np.kron(eye, cdc.T)


@dataclass(frozen=True)
class Liouvillian:
    matrix: np.ndarray
    fock: FockSpec
    params: ModelParams
    ops: dict = field(repr=False, default_factory=dict)

    @property
    def dim(self) -> int:
        return self.fock.dim

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return (self.matrix @ rho.reshape(-1)).reshape(rho.shape)

    def adjoint_identity(self) -> np.ndarray:
        """``L^dagger(1)``; vanishes for a trace-preserving generator."""
        return self.matrix.conj().T @ np.eye(self.dim).reshape(-1)

    def sector(self, order: int) -> np.ndarray:
        """Flat indices of ``|i><j|`` with ``i - j = order``.

        The generator is phase covariant, so each coherence order is an
        invariant subspace.
        """
        d = self.dim
        i = np.arange(max(order, 0), min(d, d + order))
        return i * d + (i - order)

    def sector_block(self, order: int) -> np.ndarray:
        idx = self.sector(order)
        return self.matrix[np.ix_(idx, idx)]


def build_liouvillian(params: ModelParams, fock: FockSpec = FockSpec()) -> Liouvillian:
    """Dense Liouvillian of one cavity (``J`` is ignored)."""
    d = fock.dim
    a = destroy(d)
    ad = a.conj().T
    num = ad @ a
    pair = ad @ ad @ a @ a
    H = params.omega_c * num + 0.5 * params.U * pair
    eye = np.eye(d)
    L = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    for rate, c in ((params.gamma_p, ad), (params.gamma_l, a), (params.kappa, a @ a)):
        if rate != 0.0:
            L = L + rate * _dissipator(c)
    return Liouvillian(matrix=L, fock=fock, params=params,
                       ops={"a": a, "adag": ad, "num": num, "pair": pair})


def steady_state(liou: Liouvillian, check_unique: bool = True, tol: float = 1e-11) -> np.ndarray:
    """Steady state by shifted inverse iteration on the diagonal sector.

    Raises
    ------
    SingularChainError
        If the zero eigenvalue is degenerate or the residual is too large.
    """
    d = liou.dim
    idx = liou.sector(0)
    block = liou.sector_block(0)
    scale = max(np.linalg.norm(block, 1), 1.0)
    if check_unique:
        zeros = 0
        for order in range(-(d - 1), d):
            ev = np.linalg.eigvals(liou.sector_block(order))
            zeros += int(np.sum(np.abs(ev) < 1e-9 * scale))
        if zeros != 1:
            raise SingularChainError(f"zero eigenvalue has multiplicity {zeros}")

    shift = 1e-10 * scale
    lu = la.lu_factor(block - shift * np.eye(block.shape[0]))
    x = np.ones(block.shape[0], dtype=complex)
    for _ in range(4):
        x = la.lu_solve(lu, x)
        x /= np.sum(x)

    vec = np.zeros(d * d, dtype=complex)
    vec[idx] = x
    rho = vec.reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    residual = np.linalg.norm(liou.apply(rho)) / scale
    if residual > tol:
        raise SingularChainError(f"steady-state residual {residual:.3g} exceeds {tol:g}")
    return rho


def oracle_steady_state(params: ModelParams, fock: FockSpec = FockSpec()):
    """Steady state with automatic growth of the Fock cutoff on leakage.

    Returns ``(liouvillian, rho)``.
    """
    while True:
        liou = build_liouvillian(params, fock)
        rho = steady_state(liou)
        leakage = rho[-1, -1].real
        if leakage < fock.leakage_tol:
            return liou, rho
        if not fock.auto_grow or fock.n_max + fock.grow_step > fock.n_limit:
            raise DomainError(
                f"Fock leakage {leakage:.3g} at n_max={fock.n_max} exceeds {fock.leakage_tol:g}"
            )
        logger.info("leakage %.3g at n_max=%d, growing cutoff", leakage, fock.n_max)
        fock = FockSpec(fock.n_max + fock.grow_step, fock.leakage_tol, fock.auto_grow,
                        fock.grow_step, fock.n_limit)


def expectation(rho: np.ndarray, l: int, m: int) -> complex:
    """``Tr[a^dag^l a^m rho]``."""
    a = destroy(rho.shape[0])
    op = np.linalg.matrix_power(a.conj().T, l) @ np.linalg.matrix_power(a, m)
    return complex(np.trace(op @ rho))


def oracle_moments(rho: np.ndarray, L: int) -> MomentSet:
    """Diagonal moments ``n_0..n_L`` and the ``|l - m| = 1`` coherences."""
    n = np.array([expectation(rho, k, k).real for k in range(L + 1)])
    n[0] = 1.0
    off = {}
    for k in range(1, L + 1):
        off[(k - 1, k)] = expectation(rho, k - 1, k)
        off[(k, k - 1)] = expectation(rho, k, k - 1)
    return MomentSet(n, off)


def _regression_data(liou: Liouvillian, rho: np.ndarray):
    # initial operator X = [a^dag, rho] lives in coherence order +1
    ad = liou.ops["adag"]
    X = ad @ rho - rho @ ad
    idx = liou.sector(1)
    x = X.reshape(-1)[idx]
    # Tr[a Y] = sum_n sqrt(n+1) Y[n+1, n]
    d = liou.dim
    rows = idx // d
    c = np.sqrt(rows.astype(float))
    return liou.sector_block(1), x, c


def regression_green(liou: Liouvillian, rho: np.ndarray, omega) -> np.ndarray:
    """``G^R(w) = Tr[a (w - iL)^{-1} [a^dag, rho]]`` at each frequency."""
    block, x, c = _regression_data(liou, rho)
    omega = np.atleast_1d(np.asarray(omega, dtype=complex))
    out = np.empty(omega.shape, dtype=complex)
    eye = np.eye(block.shape[0])
    for i, w in enumerate(omega):
        mat = w * eye - 1j * block
        cond = np.linalg.cond(mat)
        if cond > 1e13:
            logger.warning("resolvent near-singular at w=%s (cond=%.3g)", w, cond)
        out[i] = c @ np.linalg.solve(mat, x)
    return out


@dataclass(frozen=True)
class OraclePoles:
    poles: np.ndarray
    residues: np.ndarray

    @property
    def dominant(self) -> np.ndarray:
        return self.poles[np.argsort(-np.abs(self.residues))]


def coherence_poles(liou: Liouvillian) -> np.ndarray:
    """All frequencies ``i*lambda`` of the coherence-order-one sector."""
    ev = np.linalg.eigvals(liou.sector_block(1))
    w = 1j * ev
    return w[np.lexsort((w.imag, w.real))]


def regression_poles(liou: Liouvillian, rho: np.ndarray, threshold: float = 1e-6) -> OraclePoles:
    """Poles of ``G^R`` with residues above ``threshold`` times the total weight."""
    block, x, c = _regression_data(liou, rho)
    try:
        lam, V = np.linalg.eig(block)
        left = np.linalg.solve(V, x)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"Liouvillian eigensolver failed: {exc}", np.linalg.cond(block)) from exc
    residues = (c @ V) * left
    weight = np.sum(np.abs(residues))
    keep = np.abs(residues) > threshold * weight
    poles, residues = 1j * lam[keep], residues[keep]
    order = np.lexsort((poles.imag, poles.real))
    return OraclePoles(poles=poles[order], residues=residues[order])


def coherent_density(alpha: complex, dim: int) -> np.ndarray:
    """Truncated, renormalised coherent-state projector."""
    from math import factorial

    amp = np.array([alpha ** n / np.sqrt(float(factorial(n))) for n in range(dim)], dtype=complex)
    amp /= np.linalg.norm(amp)
    return np.outer(amp, amp.conj())


def evolve_density(liou: Liouvillian, rho0: np.ndarray, times) -> np.ndarray:
    """``rho(t)`` on a uniform time grid starting at 0 (shape ``(nt, d, d)``)."""
    times = np.asarray(times, dtype=float)
    out = expm_multiply(liou.matrix, rho0.reshape(-1), start=times[0], stop=times[-1],
                        num=times.size, endpoint=True)
    return out.reshape(times.size, liou.dim, liou.dim)
