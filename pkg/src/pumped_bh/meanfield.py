"""Mean-field baselines: single cavity, homogeneous lattice, Keldysh saddle point.

All three predict a transition at ``chi = 0`` independent of ``U`` and ``J``;
they serve as the reference the hierarchy method is compared against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .params import ModelParams

VACUUM = "Vacuum"
COHERENT_CLASSICAL = "CoherentClassical"


@dataclass(frozen=True)
class MeanFieldState:
    """Homogeneous mean-field steady state.

    ``alpha_sq`` is the physical condensate density ``|<a>|^2 = <a^dag a>``;
    ``mu`` the interaction shift of the rotation frequency of ``<a>``;
    ``frequency`` the full rotation frequency (``nan`` for the vacuum).
    """

    alpha_sq: float
    mu: float
    label: str
    frequency: float = math.nan

    @property
    def photon_number(self) -> float:
        return self.alpha_sq

    @property
    def keldysh_amplitude_sq(self) -> float:
        """``|a_cl|^2 = 2 |alpha|^2`` in the Keldysh classical-field normalisation."""
        return 2.0 * self.alpha_sq


def _require_kappa(params):
    if params.kappa <= 0:
        raise DomainError("mean-field saturation requires kappa > 0")


def _solve(params: ModelParams, detuning: float) -> MeanFieldState:
    chi = params.chi
    if chi <= 0.0:
        return MeanFieldState(alpha_sq=0.0, mu=0.0, label=VACUUM)
    alpha_sq = chi / params.kappa
    mu = params.U * alpha_sq
    return MeanFieldState(alpha_sq, mu, COHERENT_CLASSICAL, params.omega_c - detuning + mu)


def mf_single_cavity(params: ModelParams) -> MeanFieldState:
    """Single cavity: ``omega = omega_c + U|a|^2 + i(chi - kappa |a|^2)``.

    The vacuum is stable for ``chi <= 0``; otherwise ``|a|^2 = chi/kappa``.
    """
    _require_kappa(params)
    return _solve(params, 0.0)


def mf_lattice(params: ModelParams) -> MeanFieldState:
    """Identical sites: ``da/dt = [-i(omega_c - J + U|a|^2) + chi - kappa|a|^2] a``."""
    _require_kappa(params)
    return _solve(params, params.J)


def mf_keldysh_homogeneous(params: ModelParams) -> MeanFieldState:
    """Homogeneous stationary solution of the classical-field saddle point

        i da/dt = (omega_c - J + U|a|^2/2) a + i(chi - kappa|a|^2/2) a

    with ``a = a_cl``.  For ``chi > 0``, ``|a_cl|^2 = 2 chi / kappa`` and
    ``<a^dag a> = |a_cl|^2 / 2``.
    """
    _require_kappa(params)
    chi = params.chi
    if chi <= 0.0:
        return MeanFieldState(alpha_sq=0.0, mu=0.0, label=VACUUM)
    a_cl_sq = 2.0 * chi / params.kappa
    mu = 0.5 * params.U * a_cl_sq
    return MeanFieldState(0.5 * a_cl_sq, mu, COHERENT_CLASSICAL, params.omega_c - params.J + mu)
