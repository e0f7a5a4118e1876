"""Lattice-dressed excitations via the non-equilibrium Dyson equation.

With the chain-diagram irreducible part the full retarded Green's function is

    1 / G(k, w) = 1 / G0(w) - Sigma(k)

where ``G0(w) = e_1^T (w - M)^{-1} s`` is the single-cavity hierarchy result
and ``Sigma(k)`` the hopping dispersion.  By the matrix determinant lemma the
dressed poles are the eigenvalues of the rank-one update ``M + Sigma s e_1^T``,
so they depend on ``k`` only through the real scalar ``Sigma(k)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import DomainError
from .hierarchy import GreenSystem, build_green_system
from .params import COORDINATION, ModelParams, check_order
from .spectra import (
    EPS_STAB,
    classify_single_cavity,
    find_poles,
    rank_one_max_imag,
    track_branches,
)
from .steady import solve_steady_moments
from .sweep import Axis, CellResult, build_phase_diagram

LOCALIZED = "Localized"
DELOCALIZED = "Delocalized"

CONVENTIONS = ("positive", "band")
NORMALIZATIONS = ("z", "literal")

SCAN_SAMPLES = 401


@dataclass(frozen=True)
class BZPoint:
    kx: float
    ky: float

    def __post_init__(self):
        for k in (self.kx, self.ky):
            if not (-math.pi - 1e-12 <= k <= math.pi + 1e-12):
                raise DomainError(f"wavevector component {k} outside [-pi, pi]")

    @property
    def tag(self) -> str:
        def fmt(k):
            if abs(k) < 1e-12:
                return "0"
            if abs(abs(k) - math.pi) < 1e-12:
                return "pi" if k > 0 else "-pi"
            return f"{k:.6g}"
        return f"({fmt(self.kx)},{fmt(self.ky)})"


#: High-symmetry points of the square-lattice Brillouin zone.
SPECIAL_POINTS = {
    "G": BZPoint(0.0, 0.0),
    "M": BZPoint(math.pi, math.pi),
    "X": BZPoint(math.pi, 0.0),
}


def parse_point(text: str) -> BZPoint:
    """``G``/``M``/``X`` or ``kx:ky`` with ``pi`` allowed as a factor."""
    text = text.strip()
    if text.upper() in SPECIAL_POINTS:
        return SPECIAL_POINTS[text.upper()]

    def value(tok):
        tok = tok.strip().lower()
        sign = -1.0 if tok.startswith("-") else 1.0
        tok = tok.lstrip("+-")
        try:
            if "pi" in tok:
                num, _, den = tok.partition("/")
                coef = num.replace("pi", "").replace("*", "") or "1"
                return sign * float(coef) * math.pi / (float(den) if den else 1.0)
            return sign * float(tok)
        except ValueError as exc:
            raise DomainError(f"cannot parse wavevector component {tok!r}") from exc

    parts = text.split(":")
    if len(parts) != 2:
        raise DomainError(f"cannot parse BZ point {text!r}")
    return BZPoint(value(parts[0]), value(parts[1]))


def _check_convention(convention, normalization):
    if convention not in CONVENTIONS:
        raise DomainError(f"convention must be one of {CONVENTIONS}, got {convention!r}")
    if normalization not in NORMALIZATIONS:
        raise DomainError(f"normalization must be one of {NORMALIZATIONS}, got {normalization!r}")


def _prefactor(J, convention, normalization):
    # Sigma(k) = prefactor * (cos kx + cos ky)
    _check_convention(convention, normalization)
    scale = 2.0 * J / COORDINATION if normalization == "z" else 2.0 * J
    return scale if convention == "positive" else -scale


def sigma_bound(J, normalization="z") -> float:
    """``max_k |Sigma(k)|``: ``J`` (z-normalised) or ``4 J`` (literal)."""
    return abs(_prefactor(J, "positive", normalization)) * 2.0


@dataclass(frozen=True)
class SelfEnergy:
    value: float
    convention: str = "positive"


def dispersion(k: BZPoint, J: float, convention: str = "positive", normalization: str = "z") -> SelfEnergy:
    """Hopping self-energy ``Sigma(k)``.

    ``positive``: ``(2J/z)(cos kx + cos ky)`` so that ``Sigma(0,0) = +J``;
    ``band`` flips the sign.  ``normalization="literal"`` drops the ``1/z``
    factor, giving ``2J (cos kx + cos ky)``.
    """
    if J < 0:
        raise DomainError(f"J must be non-negative, got {J}")
    value = _prefactor(J, convention, normalization) * (math.cos(k.kx) + math.cos(k.ky))
    return SelfEnergy(value=value, convention=convention)


def wavevector_for(sigma: float, J: float, convention="positive", normalization="z") -> Optional[BZPoint]:
    """A wavevector on the diagonal ``kx = ky`` with ``Sigma(k) = sigma``."""
    pref = _prefactor(J, convention, normalization)
    if pref == 0:
        return None
    c = float(np.clip(sigma / pref / 2.0, -1.0, 1.0))
    if c == 1.0:
        return SPECIAL_POINTS["G"]
    if c == -1.0:
        return SPECIAL_POINTS["M"]
    k = math.acos(c)
    return BZPoint(k, k)


@dataclass(frozen=True)
class DressedPoleSet:
    k: Optional[BZPoint]
    poles: np.ndarray
    max_im: float


def dressed_matrix(system: GreenSystem, sigma: float) -> np.ndarray:
    out = system.M.copy()
    out[:, 0] += sigma * system.s
    return out


def dressed_poles(system: GreenSystem, sigma, k: Optional[BZPoint] = None) -> DressedPoleSet:
    """Poles of the dressed Green's function for a given self-energy."""
    value = sigma.value if isinstance(sigma, SelfEnergy) else float(sigma)
    poles = find_poles(GreenSystem(dressed_matrix(system, value), system.s, system.order)).poles
    return DressedPoleSet(k=k, poles=poles, max_im=float(np.max(poles.imag)))


@dataclass(frozen=True)
class LatticePhase:
    label: str
    unstable_k: Optional[BZPoint]
    max_im: float
    sigma: float  # self-energy maximising Im(w)

    @property
    def mode(self) -> Optional[str]:
        return self.unstable_k.tag if self.unstable_k is not None else None


def _scan_sigma(system, bound, samples):
    """Maximise ``max Im`` over ``Sigma in [-bound, bound]``."""
    sig = np.linspace(-bound, bound, samples)
    f = rank_one_max_imag(system, sig)
    i = int(np.argmax(f))
    best_sigma, best = float(sig[i]), float(f[i])
    if 0 < i < samples - 1:
        res = minimize_scalar(lambda x: -rank_one_max_imag(system, x)[0],
                              bounds=(sig[i - 1], sig[i + 1]), method="bounded",
                              options={"xatol": 1e-10 * max(bound, 1.0)})
        if -res.fun > best:
            best_sigma, best = float(res.x), float(-res.fun)
    return best_sigma, best


def classify_lattice(params: ModelParams, L: int = 4, eps_stab: float = EPS_STAB,
                     convention: str = "positive", normalization: str = "z",
                     samples: int = SCAN_SAMPLES) -> LatticePhase:
    """Localized iff every dressed pole has ``Im < -eps_stab`` for all ``k``.

    Scans the scalar ``Sigma`` over its full range (``samples`` points plus a
    bounded golden-section refinement around an interior maximum).
    """
    _check_convention(convention, normalization)
    if params.J == 0.0:
        single = classify_single_cavity(params, L, eps_stab)
        unstable = not single.stable
        return LatticePhase(DELOCALIZED if unstable else LOCALIZED,
                            SPECIAL_POINTS["G"] if unstable else None, single.max_im, 0.0)
    system = build_green_system(params, L, solve_steady_moments(params, L))
    bound = sigma_bound(params.J, normalization)
    sigma, best = _scan_sigma(system, bound, samples)
    if best < -eps_stab:
        return LatticePhase(LOCALIZED, None, best, sigma)
    k = wavevector_for(sigma, params.J, convention, normalization)
    return LatticePhase(DELOCALIZED, k, best, sigma)


def brute_force_bz_max_imag(params: ModelParams, L: int = 4, grid: int = 101,
                            convention: str = "positive", normalization: str = "z"):
    """Reference: ``max Im`` of dressed poles over a dense ``grid x grid`` BZ mesh."""
    system = build_green_system(params, L, solve_steady_moments(params, L))
    ks = np.linspace(-math.pi, math.pi, grid)
    kx, ky = np.meshgrid(ks, ks, indexing="ij")
    sig = _prefactor(params.J, convention, normalization) * (np.cos(kx) + np.cos(ky))
    f = rank_one_max_imag(system, sig.ravel()).reshape(sig.shape)
    i, j = np.unravel_index(np.argmax(f), f.shape)
    return float(f[i, j]), BZPoint(float(ks[i]), float(ks[j]))


def onset_sigma(params: ModelParams, sign: int, L: int = 4, sigma_max: float = 400.0,
                step: float = 0.5, xtol: float = 1e-13) -> Optional[float]:
    """Smallest ``|Sigma|`` with sign ``sign`` at which a dressed pole reaches ``Im = 0``."""
    system = build_green_system(params, L, solve_steady_moments(params, L))
    grid = np.arange(0.0, sigma_max + 0.5 * step, step)
    f = rank_one_max_imag(system, sign * grid)
    if f[0] >= 0:
        return 0.0
    hits = np.nonzero(f >= 0)[0]
    if hits.size == 0:
        return None
    h = hits[0]
    return brentq(lambda x: rank_one_max_imag(system, sign * x)[0], grid[h - 1], grid[h], xtol=xtol)


@dataclass(frozen=True)
class TipPoint:
    U: float
    J: float
    sigma: float


def find_tip(params_base: ModelParams, U_bracket, L: int = 4, normalization: str = "z",
             sigma_max: float = 400.0) -> TipPoint:
    """Point where the ``Sigma = +bound`` and ``Sigma = -bound`` modes go
    unstable simultaneously; ``U_bracket`` must enclose the crossing."""

    def gap(U):
        p = params_base.replace(U=U)
        up = onset_sigma(p, +1, L, sigma_max)
        down = onset_sigma(p, -1, L, sigma_max)
        if up is None or down is None:
            raise DomainError(f"no instability below |Sigma|={sigma_max} at U={U}")
        return up - down

    U = brentq(gap, *U_bracket, xtol=1e-13, rtol=4 * np.finfo(float).eps)
    sigma = onset_sigma(params_base.replace(U=U), +1, L, sigma_max)
    return TipPoint(U=U, J=sigma / sigma_bound(1.0, normalization), sigma=sigma)


def _lattice_cell(params, L, eps_stab, convention, normalization, samples):
    phase = classify_lattice(params, L, eps_stab, convention, normalization, samples)
    return CellResult(label=phase.label, max_im=phase.max_im,
                      unstable=phase.label == DELOCALIZED, mode=phase.mode)


def lattice_phase_diagram(params_base: ModelParams, axis1: Axis, axis2: Axis, L: int = 4,
                          eps_stab: float = EPS_STAB, convention: str = "positive",
                          normalization: str = "z", workers: int = 1,
                          refine_tol: float = 1e-3, samples: int = SCAN_SAMPLES):
    """Localized/delocalized labels over a grid, with tagged boundary points.

    Boundary crossings along each row are refined by bisection to relative
    ``refine_tol``; each carries the unstable mode and segment tag
    (``I`` for ``(pi,pi)``, ``II`` for ``(0,0)``).
    """
    _check_convention(convention, normalization)
    L = check_order(L)
    evaluate = partial(_lattice_cell, L=L, eps_stab=eps_stab, convention=convention,
                       normalization=normalization, samples=samples)
    return build_phase_diagram(evaluate, params_base, axis1, axis2, workers=workers,
                               refine_tol=refine_tol, relative=True)


@dataclass(frozen=True)
class DispersionTable:
    """Dressed poles along a Brillouin-zone path.

    ``branches[i, b]`` is branch ``b`` at path sample ``i``; ``distance`` is
    the cumulative path length.
    """

    points: list
    distance: np.ndarray
    sigma: np.ndarray
    branches: np.ndarray
    labels: dict

    @property
    def max_im(self) -> float:
        return float(np.max(self.branches.imag))


def sample_path(path: Sequence[BZPoint], samples_per_segment: int = 100):
    """Points along a polyline in the BZ, endpoints included once."""
    if not path:
        raise DomainError("path must contain at least one point")
    if len(path) == 1:
        return [path[0]], np.zeros(1), {0: path[0].tag}
    pts, dist, marks = [], [], {}
    total = 0.0
    for seg, (a, b) in enumerate(zip(path[:-1], path[1:])):
        last = seg == len(path) - 2
        n = samples_per_segment + (1 if last else 0)
        length = math.hypot(b.kx - a.kx, b.ky - a.ky)
        marks[len(pts)] = a.tag
        for t in np.arange(n) / samples_per_segment:
            pts.append(BZPoint(a.kx + t * (b.kx - a.kx), a.ky + t * (b.ky - a.ky)))
            dist.append(total + t * length)
        total += length
    marks[len(pts) - 1] = path[-1].tag
    return pts, np.array(dist), marks


def dispersion_curve(params: ModelParams, L: int, path: Sequence[BZPoint],
                     samples_per_segment: int = 100, convention: str = "positive",
                     normalization: str = "z") -> DispersionTable:
    """Dressed excitation branches along ``path``, tracked by minimal-distance
    matching between neighbouring samples."""
    system = build_green_system(params, L, solve_steady_moments(params, L))
    pts, dist, marks = sample_path(list(path), samples_per_segment)
    sig = np.array([dispersion(k, params.J, convention, normalization).value for k in pts])
    lists = [dressed_poles(system, s).poles for s in sig]
    branches = track_branches(lists)
    return DispersionTable(points=pts, distance=dist, sigma=sig, branches=branches, labels=marks)
