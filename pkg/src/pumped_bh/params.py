"""Model parameters of the pumped dissipative Bose-Hubbard lattice.

All rates and energies are measured in units of the two-photon loss rate
``kappa`` (default 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import DomainError

#: Coordination number of the square lattice.
COORDINATION = 4

DEFAULT_ORDER = 4


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of one cavity plus the hopping strength.

    Parameters
    ----------
    omega_c : float
        Cavity frequency.
    U : float
        Kerr interaction.
    J : float
        Hopping strength (ignored by single-cavity routines).
    gamma_p : float
        Incoherent pump rate.
    gamma_l : float
        Single-photon loss rate.
    kappa : float
        Two-photon loss rate.  ``kappa == 0`` is accepted only so that the
        thermal limit can be evaluated in closed form.
    """

    omega_c: float = 0.0
    U: float = 0.0
    J: float = 0.0
    gamma_p: float = 0.0
    gamma_l: float = 0.0
    kappa: float = 1.0

    def __post_init__(self):
        for name in ("omega_c", "U", "J", "gamma_p", "gamma_l", "kappa"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.kappa < 0:
            raise DomainError(f"kappa must be non-negative, got {self.kappa}")
        if self.gamma_p < 0:
            raise DomainError(f"gamma_p must be non-negative, got {self.gamma_p}")
        if self.gamma_l < 0:
            raise DomainError(f"gamma_l must be non-negative, got {self.gamma_l}")
        if self.J < 0:
            raise DomainError(f"J must be non-negative, got {self.J}")

    @property
    def chi(self) -> float:
        """Effective single-photon gain ``(gamma_p - gamma_l) / 2``."""
        return 0.5 * (self.gamma_p - self.gamma_l)

    @classmethod
    def from_chi(cls, gamma_p, chi, **kwargs) -> "ModelParams":
        """Build parameters from the pump rate and the effective gain.

        The loss rate is back-solved as ``gamma_p - 2 chi``; a negative
        result is rejected.
        """
        gamma_l = gamma_p - 2.0 * chi
        if gamma_l < -1e-12 * max(1.0, abs(gamma_p)):
            raise DomainError(
                f"chi={chi} exceeds gamma_p/2={gamma_p / 2}: gamma_l would be negative"
            )
        return cls(gamma_p=gamma_p, gamma_l=max(gamma_l, 0.0), **kwargs)

    def with_chi(self, chi) -> "ModelParams":
        """Copy with the gain changed at fixed ``gamma_p``."""
        gamma_l = self.gamma_p - 2.0 * chi
        if gamma_l < -1e-12 * max(1.0, abs(self.gamma_p)):
            raise DomainError(
                f"chi={chi} exceeds gamma_p/2={self.gamma_p / 2}: gamma_l would be negative"
            )
        return replace(self, gamma_l=max(gamma_l, 0.0))

    def replace(self, **changes) -> "ModelParams":
        """Copy with fields changed; ``chi`` is accepted and keeps ``gamma_p``."""
        chi = changes.pop("chi", None)
        out = replace(self, **changes)
        return out.with_chi(chi) if chi is not None else out

    def conjugate(self) -> "ModelParams":
        """Complex-conjugate model (``omega_c -> -omega_c``, ``U -> -U``)."""
        return replace(self, omega_c=-self.omega_c, U=-self.U)


def check_order(L) -> int:
    """Validate a truncation order and return it as ``int``."""
    if isinstance(L, bool) or int(L) != L or L < 1:
        raise DomainError(f"truncation order must be a positive integer, got {L!r}")
    return int(L)
