"""Single-cavity excitation poles and noise-state stability."""
from __future__ import annotations

from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy.optimize import brentq, linear_sum_assignment

from .errors import EigenSolverError
from .hierarchy import GreenSystem, build_green_system
from .params import ModelParams, check_order
from .steady import solve_steady_moments

EPS_STAB = 1e-9

NOISE_STATE = "NoiseState"
COHERENT_STATE = "CoherentState"


def sort_poles(poles) -> np.ndarray:
    """Order by real part, ties broken by imaginary part."""
    poles = np.asarray(poles, dtype=complex)
    return poles[np.lexsort((poles.imag, poles.real))]


@dataclass(frozen=True)
class PoleSet:
    poles: np.ndarray
    max_im: float
    stable: bool


def find_poles(system: GreenSystem, eps_stab: float = EPS_STAB) -> PoleSet:
    """Poles of ``G^R``: the eigenvalues of the hierarchy matrix ``M``.

    Raises
    ------
    EigenSolverError
        If LAPACK fails or an eigenpair residual exceeds ``1e-10 ||M||``.
    """
    M = system.M
    try:
        w, v = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigensolver failed: {exc}", np.linalg.cond(M)) from exc
    norm = max(np.linalg.norm(M, 2), 1.0)
    resid = np.linalg.norm(M @ v - v * w, axis=0) / np.maximum(np.linalg.norm(v, axis=0), 1e-300)
    if not np.all(np.isfinite(w)) or np.max(resid) > 1e-10 * norm:
        raise EigenSolverError(
            f"eigenpair residual {np.max(resid):.3g} exceeds tolerance", np.linalg.cond(v)
        )
    w = sort_poles(w)
    max_im = float(np.max(w.imag))
    return PoleSet(poles=w, max_im=max_im, stable=max_im < -eps_stab)


def rank_one_max_imag(system: GreenSystem, sigmas) -> np.ndarray:
    """Largest imaginary part of ``eig(M + sigma s e_1^T)`` for each sigma."""
    sigmas = np.atleast_1d(np.asarray(sigmas, dtype=float))
    update = np.zeros_like(system.M)
    update[:, 0] = system.s
    stack = system.M[None, :, :] + sigmas[:, None, None] * update[None, :, :]
    return np.linalg.eigvals(stack).imag.max(axis=1)


@dataclass(frozen=True)
class SingleCavityPhase:
    label: str
    max_im: float
    poles: np.ndarray

    @property
    def stable(self) -> bool:
        return self.label == NOISE_STATE


def _noise_state_system(params: ModelParams, L: int) -> GreenSystem:
    return build_green_system(params, L, solve_steady_moments(params, L))


def classify_single_cavity(params: ModelParams, L: int = 4, eps_stab: float = EPS_STAB) -> SingleCavityPhase:
    """Noise state if every pole has ``Im < -eps_stab``, coherent state otherwise."""
    poles = find_poles(_noise_state_system(params, L), eps_stab)
    label = NOISE_STATE if poles.max_im < -eps_stab else COHERENT_STATE
    return SingleCavityPhase(label=label, max_im=poles.max_im, poles=poles.poles)


def noise_state_margin(params: ModelParams, L: int = 4) -> float:
    """``max Im(w0)`` of the noise state; negative means stable."""
    return classify_single_cavity(params, L).max_im


def critical_interaction(params: ModelParams, L: int = 4, eps_stab: float = EPS_STAB,
                         U_max: float = 200.0, step: float = 0.5, xtol: float = 1e-6):
    """Smallest ``U`` in ``[0, U_max]`` at which the noise state destabilises.

    Scans ``U`` with spacing ``step`` and refines the first sign change of
    ``max Im + eps_stab`` by Brent's method.  Returns ``None`` if the noise
    state stays stable up to ``U_max``.
    """
    grid = np.arange(0.0, U_max + 0.5 * step, step)

    def margin(U):
        return find_poles(_noise_state_system(params.replace(U=U), L)).max_im + eps_stab

    values = [margin(U) for U in grid]
    for lo, hi, flo, fhi in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if flo < 0 <= fhi:
            return brentq(margin, lo, hi, xtol=xtol)
    if values[0] >= 0:
        return 0.0
    return None


def track_branches(pole_lists) -> np.ndarray:
    """Connect successive pole sets into continuous branches.

    Each new set is matched to the previous one by minimising the total
    distance (Hungarian assignment).  Returns an array ``(len(pole_lists), L)``.
    """
    rows = [sort_poles(pole_lists[0])]
    for poles in pole_lists[1:]:
        poles = np.asarray(poles, dtype=complex)
        prev = rows[-1]
        cost = np.abs(prev[:, None] - poles[None, :])
        _, cols = linear_sum_assignment(cost)
        rows.append(poles[cols])
    return np.array(rows)


def pole_branches(params: ModelParams, U_grid, L: int = 4) -> np.ndarray:
    """Single-cavity poles along a ``U`` sweep, tracked into ``L`` branches.

    Branches are ordered by their real part at the largest ``U`` of the sweep.
    """
    U_grid = np.asarray(U_grid, dtype=float)
    lists = [find_poles(_noise_state_system(params.replace(U=U), L)).poles for U in U_grid]
    branches = track_branches(lists)
    last = int(np.argmax(U_grid))
    order = np.lexsort((branches[last].imag, branches[last].real))
    return branches[:, order]


def _cavity_cell(params, L, eps_stab):
    from .sweep import CellResult

    phase = classify_single_cavity(params, L, eps_stab)
    return CellResult(label=phase.label, max_im=phase.max_im, unstable=not phase.stable)


def single_cavity_phase_diagram(params_base: ModelParams, U_grid, chi_grid, L: int = 4,
                                eps_stab: float = EPS_STAB, workers: int = 1,
                                refine_tol: float = 1e-3):
    """Noise/coherent labels over a ``(U, chi)`` grid at fixed ``gamma_p``.

    The boundary is located along every ``chi`` row by bisection in ``U``
    down to ``refine_tol``.
    """
    from .sweep import Axis, build_phase_diagram

    L = check_order(L)
    return build_phase_diagram(
        partial(_cavity_cell, L=L, eps_stab=eps_stab),
        params_base,
        Axis("U", U_grid),
        Axis("chi", chi_grid),
        workers=workers,
        refine_tol=refine_tol,
        relative=False,
    )
