"""Two-parameter sweeps: grids, worker pool, boundary refinement."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, PumpedBHError
from .params import ModelParams

logger = logging.getLogger(__name__)

AXIS_NAMES = ("U", "J", "chi", "gamma_p")
FAILED = "Failed"

# (0,0) instabilities bound segment (II), (pi,pi) instabilities segment (I)
SEGMENT_OF_MODE = {"(0,0)": "II", "(pi,pi)": "I"}


@dataclass(frozen=True)
class Axis:
    name: str
    values: np.ndarray

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise ConfigError(f"unknown axis {self.name!r}; expected one of {AXIS_NAMES}", "axis")
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2 or not np.all(np.isfinite(values)):
            raise ConfigError("an axis needs at least 2 finite values", self.name)
        object.__setattr__(self, "values", values)

    @classmethod
    def linear(cls, name, lo, hi, count) -> "Axis":
        return cls(name, np.linspace(float(lo), float(hi), int(count)))

    @classmethod
    def parse(cls, text: str) -> "Axis":
        """Parse ``name:min:max:count``."""
        parts = str(text).split(":")
        if len(parts) != 4:
            raise ConfigError(f"expected name:min:max:count, got {text!r}", "axis")
        name, lo, hi, count = parts
        try:
            lo, hi, count = float(lo), float(hi), int(count)
        except ValueError as exc:
            raise ConfigError(f"bad number in {text!r}", "axis") from exc
        if count < 2:
            raise ConfigError("count must be >= 2", "axis")
        return cls.linear(name, lo, hi, count)

    def spec(self) -> str:
        return f"{self.name}:{self.values[0]!r}:{self.values[-1]!r}:{self.values.size}"


def apply_axis(params: ModelParams, name: str, value: float) -> ModelParams:
    """Set one swept parameter; ``gamma_p`` sweeps keep ``chi`` fixed."""
    if name == "chi":
        return params.with_chi(value)
    if name == "gamma_p":
        chi = params.chi
        return ModelParams.from_chi(value, chi, omega_c=params.omega_c, U=params.U,
                                    J=params.J, kappa=params.kappa)
    return params.replace(**{name: value})


def cell_params(base: ModelParams, axis1: Axis, v1: float, axis2: Axis, v2: float) -> ModelParams:
    # gamma_p first so that a chi axis is applied at the swept pump rate
    pairs = sorted([(axis1.name, v1), (axis2.name, v2)], key=lambda p: p[0] != "gamma_p")
    for name, value in pairs:
        base = apply_axis(base, name, value)
    return base


def parallel_map(func: Callable, items: Sequence, workers: int = 1) -> list:
    """Order-preserving map over a process pool (serial when ``workers <= 1``)."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items, chunksize=chunk))


@dataclass(frozen=True)
class CellResult:
    label: str
    max_im: float
    unstable: bool
    mode: Optional[str] = None
    failed: bool = False
    error: str = ""


@dataclass(frozen=True)
class BoundaryPoint:
    """Refined phase-boundary crossing along a grid row."""

    row: int
    axis2_value: float
    axis1_value: float
    mode: Optional[str]
    segment: Optional[str]
    direction: int  # +1: unstable side at larger axis1 value


@dataclass
class PhaseDiagram:
    """Phase labels over ``axis2 x axis1`` (rows x columns)."""

    axis1: Axis
    axis2: Axis
    labels: np.ndarray
    max_im: np.ndarray
    modes: np.ndarray
    unstable: np.ndarray
    failed: np.ndarray
    boundary: list = field(default_factory=list)

    @property
    def shape(self):
        return self.labels.shape

    def row(self, i):
        return [
            CellResult(self.labels[i, j], self.max_im[i, j], bool(self.unstable[i, j]),
                       self.modes[i, j] or None, bool(self.failed[i, j]))
            for j in range(self.shape[1])
        ]


def _safe_eval(evaluate, params) -> CellResult:
    try:
        return evaluate(params)
    except (PumpedBHError, np.linalg.LinAlgError, ArithmeticError, ValueError) as exc:
        return CellResult(FAILED, float("nan"), False, None, True, f"{type(exc).__name__}: {exc}")


def _eval_cell(task):
    evaluate, base, axis1, v1, axis2, v2 = task
    return _safe_eval(evaluate, cell_params(base, axis1, v1, axis2, v2))


def _refine(task):
    evaluate, base, axis1, axis2, v2, lo, hi, lo_unstable, tol, relative = task
    # invariant: unstable(lo) == lo_unstable != unstable(hi)
    while True:
        width_ok = (hi - lo) <= tol * (max(abs(lo), abs(hi), 1e-12) if relative else 1.0)
        if width_ok:
            break
        mid = 0.5 * (lo + hi)
        res = _safe_eval(evaluate, cell_params(base, axis1, mid, axis2, v2))
        if res.failed:
            break
        if res.unstable == lo_unstable:
            lo = mid
        else:
            hi = mid
    unstable_end = lo if lo_unstable else hi
    res = _safe_eval(evaluate, cell_params(base, axis1, unstable_end, axis2, v2))
    return 0.5 * (lo + hi), res.mode


def build_phase_diagram(evaluate: Callable[[ModelParams], CellResult], base: ModelParams,
                        axis1: Axis, axis2: Axis, workers: int = 1,
                        refine_tol: float = 1e-3, relative: bool = False) -> PhaseDiagram:
    """Evaluate every cell, then refine each row's label changes by bisection.

    Results are merged by grid index, so the output does not depend on
    ``workers``.
    """
    n2, n1 = axis2.values.size, axis1.values.size
    tasks = [(evaluate, base, axis1, v1, axis2, v2)
             for v2 in axis2.values for v1 in axis1.values]
    results = parallel_map(_eval_cell, tasks, workers)

    labels = np.empty((n2, n1), dtype=object)
    max_im = np.empty((n2, n1))
    modes = np.empty((n2, n1), dtype=object)
    unstable = np.zeros((n2, n1), dtype=bool)
    failed = np.zeros((n2, n1), dtype=bool)
    for idx, res in enumerate(results):
        i, j = divmod(idx, n1)
        labels[i, j] = res.label
        max_im[i, j] = res.max_im
        modes[i, j] = res.mode or ""
        unstable[i, j] = res.unstable
        failed[i, j] = res.failed
        if res.failed:
            logger.warning("cell (%d, %d) failed: %s", i, j, res.error)

    brackets, refine_tasks = [], []
    for i, v2 in enumerate(axis2.values):
        for j in range(n1 - 1):
            if failed[i, j] or failed[i, j + 1] or unstable[i, j] == unstable[i, j + 1]:
                continue
            lo, hi = axis1.values[j], axis1.values[j + 1]
            brackets.append((i, v2, 1 if unstable[i, j + 1] else -1))
            refine_tasks.append((evaluate, base, axis1, axis2, v2, lo, hi,
                                 bool(unstable[i, j]), refine_tol, relative))
    refined = parallel_map(_refine, refine_tasks, workers)

    boundary = [
        BoundaryPoint(row=i, axis2_value=float(v2), axis1_value=float(value), mode=mode,
                      segment=SEGMENT_OF_MODE.get(mode), direction=direction)
        for (i, v2, direction), (value, mode) in zip(brackets, refined)
    ]
    return PhaseDiagram(axis1, axis2, labels, max_im, modes, unstable, failed, boundary)
