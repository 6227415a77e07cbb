"""Possibly singular potentials on the grid torus.

A potential stores one real value per node, with ``-inf`` marking poles.
Any Hessian stencil touching a pole is "unevaluated", which is how the
toolkit keeps singular sets massless: truncated products are later zeroed
outside the stencil interior of the sublevel mask.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .grid import GridTorus, min_eigenvalues
from .tolerances import DEFAULT_TOLS, Tolerances


@dataclass(frozen=True)
class QPshFunction:
    """Node values in R plus ``-inf`` pole sentinels.

    Invariants: the pole set is exactly the ``-inf`` nodes, finite values
    are bounded (no ``+inf``, no NaN), and the function is not identically
    ``-inf`` unless constructed with ``allow_all_poles=True``.
    """

    grid: GridTorus
    values: np.ndarray
    all_poles: bool = field(default=False)

    def __post_init__(self):
        vals = self.grid.as_field(self.values)
        if np.isnan(vals).any():
            raise InvalidArgumentError("potential contains NaN")
        if np.isposinf(vals).any():
            raise InvalidArgumentError("potential contains +inf")
        if not self.all_poles and not np.isfinite(vals).any():
            raise InvalidArgumentError("potential is identically -inf")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def pole_set(self) -> np.ndarray:
        return np.isneginf(self.values)

    @property
    def finite_mask(self) -> np.ndarray:
        return np.isfinite(self.values)

    @property
    def has_poles(self) -> bool:
        return bool(self.pole_set.any())

    def max_finite(self) -> float:
        return float(np.max(self.values[self.finite_mask]))

    def min_finite(self) -> float:
        return float(np.min(self.values[self.finite_mask]))


def as_qpsh(grid: GridTorus, u) -> QPshFunction:
    """Coerce an array/scalar/QPshFunction to a potential on ``grid``."""
    if isinstance(u, QPshFunction):
        if u.grid != grid:
            raise InvalidArgumentError("potential lives on a different grid")
        return u
    return QPshFunction(grid, grid.as_field(u))


def constant(grid: GridTorus, c: float) -> QPshFunction:
    return QPshFunction(grid, grid.field(float(c)))


@dataclass(frozen=True)
class TruncationMask:
    """Sublevel mask at level t: ``inside`` = every potential above -t.

    ``stencil_inside`` restricts to nodes whose full Hessian stencil lies
    in ``inside``; products of truncated potentials are trusted only there.
    """

    grid: GridTorus
    level: float
    inside: np.ndarray
    stencil_inside: np.ndarray


def truncate(u: QPshFunction, t: float) -> QPshFunction:
    """Pointwise max(u, -t); the result has no poles.

    Truncation is idempotent under composition:
    truncate(truncate(u, t), s) == truncate(u, min(t, s)) bit-exact.
    """
    if not np.isfinite(t):
        raise InvalidArgumentError("truncation level must be finite")
    return QPshFunction(u.grid, np.maximum(u.values, -float(t)))


def sublevel_mask(us, t: float) -> TruncationMask:
    """Joint sublevel mask of a family of potentials at level t."""
    us = list(us)
    if not us:
        raise InvalidArgumentError("need at least one potential")
    grid = us[0].grid
    inside = np.ones(grid.sizes, dtype=bool)
    for u in us:
        if u.grid != grid:
            raise InvalidArgumentError("potentials live on different grids")
        inside &= u.values > -float(t)
    return TruncationMask(grid, float(t), inside, grid.stencil_erode(inside))


def chi_eps(u: QPshFunction, eps: float) -> np.ndarray:
    """Quasi-continuous cutoff max(u,0)/(max(u,0)+eps), poles mapped to 0.

    Increases pointwise to the indicator of {u > 0} as eps decreases.
    """
    if not eps > 0:
        raise InvalidArgumentError("eps must be positive")
    top = np.maximum(u.values, 0.0)
    top = np.where(np.isneginf(u.values), 0.0, top)
    return top / (top + float(eps))


@dataclass(frozen=True)
class SlackReport:
    """Nodewise admissibility slack of a potential against a form.

    ``values`` holds the minimal eigenvalue of G + D^2 u where the stencil
    is pole-free and NaN elsewhere; ``evaluated`` marks the former nodes.
    """

    values: np.ndarray
    evaluated: np.ndarray

    @property
    def min(self) -> float:
        if not self.evaluated.any():
            return float("nan")
        return float(np.min(self.values[self.evaluated]))


def theta_convex_slack(u: QPshFunction, form, tols: Tolerances = DEFAULT_TOLS) -> SlackReport:
    """Minimal eigenvalue of G + D^2 u per node, skipping pole stencils.

    The potential is accepted as admissible for the form iff the minimum
    over evaluated nodes is >= -tols.tol_psh.
    """
    grid = u.grid
    if form.grid != grid:
        raise InvalidArgumentError("form and potential live on different grids")
    if u.has_poles:
        evaluated = grid.stencil_erode(u.finite_mask)
        level = 1.0 + max(abs(u.max_finite()), abs(u.min_finite()))
        work = np.maximum(u.values, -level)
    else:
        evaluated = np.ones(grid.sizes, dtype=bool)
        work = u.values
    lam = min_eigenvalues(form.G + grid.hessian(work))
    vals = np.where(evaluated, lam, np.nan)
    return SlackReport(vals, evaluated)


def is_theta_psh(u: QPshFunction, form, tols: Tolerances = DEFAULT_TOLS) -> bool:
    report = theta_convex_slack(u, form, tols)
    return bool(report.min >= -tols.tol_psh)
