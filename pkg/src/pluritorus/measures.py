"""Mixed Monge-Ampere products, truncated products and mass estimates.

The top-degree product of d slots (form, potential) has nodewise density
equal to the mixed discriminant of the shifted Hessians M_i = G_i + D^2 u_i,
normalized so equal slots give det(M).  Potentials with poles go through
truncation at a canonical level, and the resulting weights are zeroed
outside the stencil interior of the joint sublevel mask, so pole sets and
their stencil neighborhoods carry exactly zero mass and the result does
not depend on the truncation level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import (InvalidArgumentError, InvalidComparisonError,
                     UnsupportedError)
from .forms import BackgroundForm, ReferenceMetric, identity_metric
from .grid import GridTorus, dets
from .qpsh import QPshFunction, sublevel_mask, truncate
from .tolerances import DEFAULT_TOLS, Tolerances


@dataclass(frozen=True)
class DiscreteMeasure:
    """Signed node weights with an explicit support mask.

    Weights are exactly 0.0 outside ``support_mask``; the total mass is the
    cell-volume weighted sum taken in fixed row-major order.
    """

    grid: GridTorus
    weights: np.ndarray
    support_mask: np.ndarray

    def __post_init__(self):
        w = self.grid.as_field(self.weights)
        if not np.isfinite(w).all():
            raise InvalidArgumentError("measure weights must be finite")
        mask = np.asarray(self.support_mask, dtype=bool).copy()
        if mask.shape != self.grid.sizes:
            raise InvalidArgumentError("support mask shape does not match grid")
        if np.any(w[~mask] != 0.0):
            raise InvalidArgumentError("weights must vanish exactly off the support mask")
        w.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "support_mask", mask)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights)) * self.grid.cell_volume

    @property
    def support_size(self) -> int:
        return int(np.count_nonzero(self.support_mask))


def total_mass(measure: DiscreteMeasure) -> float:
    """Cell-volume weighted sum of the weights, fixed summation order."""
    return measure.total_mass


def mixed_det_field(Ms) -> np.ndarray:
    """Mixed discriminant field of d stacked matrix fields (d = len(Ms)).

    Polarization over subsets: (1/d!) * sum over nonempty S of
    (-1)^(d-|S|) det(sum of M_i over S); equal slots reduce to det(M).
    Subset sums are accumulated in a content-canonical order so the result
    is invariant bit-for-bit under slot permutations.
    """
    d = len(Ms)
    if d == 1:
        return Ms[0][..., 0, 0].copy()
    keys = [m.tobytes() for m in Ms]
    order = sorted(range(d), key=lambda i: keys[i])
    acc = np.zeros(Ms[0].shape[:-2], dtype=float)
    for size in range(1, d + 1):
        sign = (-1.0) ** (d - size)
        for subset in combinations(order, size):
            total = Ms[subset[0]].copy()
            for i in subset[1:]:
                total += Ms[i]
            acc += sign * dets(total)
    acc /= math.factorial(d)
    return acc


def _check_slots(forms, us):
    forms = list(forms)
    us = list(us)
    if len(forms) != len(us):
        raise InvalidArgumentError("need one potential per form")
    if not forms:
        raise InvalidArgumentError("need at least one slot")
    grid = forms[0].grid
    if len(forms) != grid.dim:
        raise UnsupportedError(
            f"only top-degree products are supported (need {grid.dim} slots, got {len(forms)})")
    for F in forms:
        if F.grid != grid:
            raise InvalidArgumentError("forms live on different grids")
    for u in us:
        if u.grid != grid:
            raise InvalidArgumentError("potentials live on different grids")
    return grid, forms, us


def bt_mixed(forms, us) -> DiscreteMeasure:
    """Mixed product of bounded (pole-free) slots.

    The density is the mixed discriminant of G_i + D^2 u_i; it is symmetric
    and multilinear in the slots, and signed weights are allowed.
    """
    grid, forms, us = _check_slots(forms, us)
    for u in us:
        if u.has_poles:
            raise InvalidArgumentError("bounded product requires pole-free potentials")
    Ms = [F.G + grid.hessian(u.values) for F, u in zip(forms, us)]
    weights = mixed_det_field(Ms)
    return DiscreteMeasure(grid, weights, np.ones(grid.sizes, dtype=bool))


def truncation_level(us) -> float:
    """Canonical truncation level: 1 + the largest finite magnitude."""
    peak = 0.0
    for u in us:
        peak = max(peak, abs(u.max_finite()), abs(u.min_finite()))
    return 1.0 + peak


def npp_mixed(forms, us, level: float | None = None) -> DiscreteMeasure:
    """Truncated mixed product charging no mass to pole neighborhoods.

    Potentials are truncated at the canonical level (or any requested
    ``level`` at least as large, for which the result is bit-identical),
    and weights are zeroed outside the stencil interior of the joint
    sublevel mask.  Pole-free inputs reproduce ``bt_mixed`` bit-for-bit.
    """
    grid, forms, us = _check_slots(forms, us)
    if not any(u.has_poles for u in us):
        return bt_mixed(forms, us)
    t_star = truncation_level(us)
    if level is None:
        level = t_star
    elif level < t_star:
        raise InvalidArgumentError(
            f"truncation level {level} is below the canonical level {t_star}")
    mask = sublevel_mask(us, level).stencil_inside
    cut = [truncate(u, level) for u in us]
    Ms = [F.G + grid.hessian(u.values) for F, u in zip(forms, cut)]
    weights = np.where(mask, mixed_det_field(Ms), 0.0)
    return DiscreteMeasure(grid, weights, mask)


def ma(form: BackgroundForm, u: QPshFunction, level: float | None = None) -> DiscreteMeasure:
    """Top power of a single slot: d copies of (form, u)."""
    d = form.grid.dim
    return npp_mixed([form] * d, [u] * d, level=level)


@dataclass(frozen=True)
class MassDefect:
    """Sampled lower estimate of the mass defect of a form.

    The true defect is a supremum over all bounded admissible pairs; this
    estimate maximizes over finitely many sampled potentials and is zero
    (up to float roundoff) for closed forms.
    """

    form: BackgroundForm
    estimate: float
    samples: int
    seed: int

    def __post_init__(self):
        if self.estimate < 0:
            raise InvalidArgumentError("mass defect estimate must be nonnegative")


def delta_theta_estimate(form: BackgroundForm, C_bound: float, samples: int,
                         seed: int, metric: ReferenceMetric | None = None,
                         tols: Tolerances = DEFAULT_TOLS) -> MassDefect:
    """Sampled mass-defect estimate from C_bound*W-convex potentials.

    Draws ``samples`` pole-free potentials whose shifted Hessian stays PSD
    against C_bound times the reference metric, and returns the largest
    pairwise difference of total product masses.
    """
    from .sampling import sample_convex_potential

    if samples < 2:
        raise InvalidArgumentError("need at least two samples")
    grid = form.grid
    metric = identity_metric(grid) if metric is None else metric
    rng = np.random.default_rng(seed)
    masses = []
    for _ in range(int(samples)):
        u = sample_convex_potential(grid, rng, metric, c_bound=C_bound, tols=tols)
        masses.append(total_mass(ma(form, u)))
    estimate = max(masses) - min(masses)
    return MassDefect(form, max(0.0, estimate), int(samples), int(seed))


@dataclass(frozen=True)
class ComparisonResult:
    holds: bool
    lhs: float
    rhs: float


def mass_monotonicity_check(form: BackgroundForm, phi: QPshFunction,
                            psi: QPshFunction, defect: MassDefect,
                            tols: Tolerances = DEFAULT_TOLS) -> ComparisonResult:
    """Check mass(phi) <= mass(psi) + defect + slack for phi <= psi + O(1).

    On a finite grid the comparability precondition reduces to pole
    containment: every pole of psi must be a pole of phi, otherwise
    phi - psi is unbounded above and the comparison is invalid.
    """
    if phi.grid != psi.grid or phi.grid != form.grid:
        raise InvalidArgumentError("inputs live on different grids")
    if np.any(psi.pole_set & ~phi.pole_set):
        raise InvalidComparisonError("psi has poles outside the pole set of phi")
    lhs = total_mass(ma(form, phi))
    base = total_mass(ma(form, psi))
    rhs = base + defect.estimate + tols.tol_mono(lhs, base)
    return ComparisonResult(bool(lhs <= rhs), lhs, rhs)
