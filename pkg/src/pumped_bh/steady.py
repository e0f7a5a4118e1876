"""Noise-state steady moments, observables and moment relaxation dynamics."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DimensionError, DomainError, SingularChainError, UnboundedOccupationError
from .hierarchy import MomentSystem, build_moment_system
from .params import ModelParams, check_order

logger = logging.getLogger(__name__)

NEGATIVE_CLIP = 1e-12
CONDITION_LIMIT = 1e14


@dataclass(frozen=True)
class MomentSet:
    """Single-time moments of one cavity.

    Attributes
    ----------
    n : ndarray
        Diagonal moments ``n_l = <a^dag^l a^l>``, ``l = 0..L`` with ``n_0 = 1``.
    offdiag : dict
        ``(l, m) -> <a^dag^l a^m>`` for ``l != m``; absent keys are zero.
    residual : float
        Relative residual of the steady equations (``nan`` if not computed).
    """

    n: np.ndarray
    offdiag: dict = field(default_factory=dict)
    residual: float = math.nan

    def __post_init__(self):
        n = np.array(self.n, dtype=float)
        if n.ndim != 1 or n.size < 1:
            raise DimensionError("diagonal moments must be a non-empty 1-D array")
        if n[0] != 1.0:
            raise DomainError(f"n_0 must equal 1, got {n[0]}")
        n.setflags(write=False)
        object.__setattr__(self, "n", n)

    @property
    def order(self) -> int:
        return self.n.size - 1

    @property
    def is_noise_state(self) -> bool:
        return all(v == 0 for v in self.offdiag.values())

    def value(self, l: int, m: int) -> complex:
        if l == m:
            return complex(self.n[l])
        return complex(self.offdiag.get((l, m), 0.0))

    @classmethod
    def vacuum(cls, L: int) -> "MomentSet":
        n = np.zeros(check_order(L) + 1)
        n[0] = 1.0
        return cls(n)

    @classmethod
    def coherent(cls, alpha: complex, L: int) -> "MomentSet":
        """Moments of the coherent state ``|alpha>``: ``conj(alpha)^l alpha^m``."""
        L = check_order(L)
        n = np.array([abs(alpha) ** (2 * k) for k in range(L + 1)])
        off = {}
        for l in range(L + 1):
            for m in range(L + 1):
                if l != m:
                    off[(l, m)] = np.conj(alpha) ** l * alpha ** m
        return cls(n, off)

    @classmethod
    def from_vector(cls, system: MomentSystem, v) -> "MomentSet":
        n = np.zeros(system.order + 1)
        n[0] = 1.0
        off = {}
        for (l, m), value in zip(system.index, v):
            if l == m:
                n[l] = value.real
            else:
                off[(l, m)] = complex(value)
        return cls(n, off)

    def to_vector(self, system: MomentSystem) -> np.ndarray:
        out = np.zeros(len(system.index), dtype=complex)
        for i, (l, m) in enumerate(system.index):
            if l == m:
                out[i] = self.n[l] if l < self.n.size else 0.0
            else:
                out[i] = self.offdiag.get((l, m), 0.0)
        return out


@dataclass(frozen=True)
class Observables:
    """Mean photon number and ``g2(0)``; ``g2`` is ``None`` when ``n == 0``."""

    n: float
    g2: Optional[float]

    @property
    def g2_defined(self) -> bool:
        return self.g2 is not None


def _thermal_moments(params: ModelParams, L: int) -> MomentSet:
    # kappa == 0: the chain is lower triangular and solved exactly by n_l = l! nbar^l
    if params.gamma_p == 0.0:
        if params.gamma_l == 0.0:
            raise SingularChainError("no pump and no loss: steady state is not unique")
        return MomentSet.vacuum(L)
    if params.gamma_l <= params.gamma_p:
        raise UnboundedOccupationError(
            f"gamma_p={params.gamma_p} >= gamma_l={params.gamma_l} with kappa=0: "
            "photon number grows without bound"
        )
    nbar = params.gamma_p / (params.gamma_l - params.gamma_p)
    n = np.array([math.factorial(k) * nbar ** k for k in range(L + 1)])
    return MomentSet(n, residual=0.0)


def solve_steady_moments(params: ModelParams, L: int = 4) -> MomentSet:
    """Noise-state steady moments of the order-``L`` hierarchy.

    The diagonal moments solve the closed chain ``l = m`` with ``d/dt = 0``;
    all off-diagonal moments vanish.

    Raises
    ------
    SingularChainError
        The chain matrix is numerically singular.
    UnboundedOccupationError
        ``kappa == 0`` and the net gain is non-negative.
    """
    L = check_order(L)
    if params.kappa == 0.0:
        return _thermal_moments(params, L)

    system = build_moment_system(params, L)
    D, b = system.diagonal_block()
    D, b = D.real, b.real
    cond = np.linalg.cond(D)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SingularChainError(f"diagonal moment chain is singular (cond={cond:.3g})")
    x = np.linalg.solve(D, -b)

    scale = np.abs(D) @ np.abs(x) + np.abs(b)
    scale = np.where(scale > 0, scale, 1.0)
    residual = float(np.max(np.abs(D @ x + b) / scale))

    low = x < 0
    if np.any(x < -NEGATIVE_CLIP):
        logger.warning("negative diagonal moments %s at %s (truncation artefact)", x[x < 0], params)
    elif np.any(low):
        logger.info("clipping round-off negative moments %s", x[low])
        x = np.where(low, 0.0, x)
    return MomentSet(np.concatenate([[1.0], x]), residual=residual)


def observables(moments: MomentSet) -> Observables:
    """Mean photon number ``n_1`` and ``g2(0) = n_2 / n_1**2``."""
    n1 = float(moments.n[1]) if moments.order >= 1 else 0.0
    if n1 <= 0.0 or moments.order < 2:
        return Observables(n=max(n1, 0.0), g2=None)
    return Observables(n=n1, g2=float(moments.n[2]) / n1 ** 2)


@dataclass(frozen=True)
class MomentTrajectory:
    """Time series produced by :func:`evolve_moments`.

    ``values[i, j]`` is the moment ``index[j]`` at time ``t[i]``.  When
    ``diverged`` is set the integration stopped early at ``t[-1]``.
    """

    t: np.ndarray
    values: np.ndarray
    system: MomentSystem
    diverged: bool = False
    message: str = ""

    @property
    def index(self):
        return self.system.index

    def moments(self, i: int = -1) -> MomentSet:
        return MomentSet.from_vector(self.system, self.values[i])

    def series(self, l: int, m: int) -> np.ndarray:
        return self.values[:, self.system.position(l, m)]

    @property
    def final(self) -> MomentSet:
        return self.moments(-1)


def evolve_moments(
    params: ModelParams,
    L: int,
    initial: MomentSet,
    t_final: float,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    t_eval=None,
    bound: float = 1e8,
) -> MomentTrajectory:
    """Integrate the truncated moment equations from ``initial`` to ``t_final``.

    Uses an adaptive explicit Runge-Kutta scheme (DOP853).  If the moment
    norm exceeds ``bound`` the integration stops and the trajectory is
    returned with ``diverged=True``.
    """
    if not t_final > 0:
        raise DomainError(f"t_final must be positive, got {t_final}")
    system = build_moment_system(params, L)
    v0 = initial.to_vector(system)

    def rhs(t, v):
        return system.D @ v + system.b

    def blowup(t, v):
        return bound - np.max(np.abs(v))

    blowup.terminal = True
    blowup.direction = -1

    sol = solve_ivp(
        rhs, (0.0, float(t_final)), v0, method="DOP853",
        rtol=rtol, atol=atol, t_eval=t_eval, events=blowup,
    )
    diverged = bool(sol.status == 1)
    message = f"moment norm exceeded {bound:g} at t={sol.t[-1]:.6g}" if diverged else sol.message
    if diverged:
        logger.warning("evolve_moments: %s", message)
    elif not sol.success:
        diverged = True
    return MomentTrajectory(t=sol.t, values=sol.y.T.copy(), system=system,
                            diverged=diverged, message=message)
