"""Volumes of forms and classes via the canonical least-singular potential.

The volume of a feasible form is the total product mass of its zero
envelope.  Suprema and infima over the infinite families of competitors
are replaced by the canonical candidate plus seeded random search; every
such number is a heuristic bound and is labeled as such, except for the
closed kind where mass invariance makes the canonical value exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .envelopes import v_theta
from .errors import InfeasibleError, InvalidArgumentError, SamplingExhaustedError
from .forms import BackgroundForm, ReferenceMetric, add_metric, identity_metric, scale_form
from .grid import min_eigenvalues
from .measures import ma, total_mass
from .qpsh import QPshFunction, theta_convex_slack
from .sampling import fourier_field
from .tolerances import DEFAULT_TOLS, Tolerances

OK = "ok"
NOT_PSEF = "not_psef"
PARTIAL = "partial"


@dataclass(frozen=True)
class VolumeReport:
    """Volume of a class along a shrinking metric perturbation.

    ``eps_trace`` pairs each perturbation size with the volume of the
    perturbed form (None when infeasible); ``vol_big`` is the value at the
    smallest feasible perturbation, or exactly 0.0 for non-psef input.
    """

    vol_big: float
    lower_est: float
    upper_est: float
    eps_trace: tuple
    status: str
    notes: tuple = ()

    def __post_init__(self):
        if not (0.0 <= self.lower_est <= self.upper_est or np.isnan(self.lower_est)):
            raise InvalidArgumentError("volume bounds must satisfy 0 <= lower <= upper")


def vol_big(form: BackgroundForm, tols: Tolerances = DEFAULT_TOLS) -> float:
    """Total product mass of the zero envelope of the form.

    Raises InfeasibleError when the zero envelope is infeasible (the class
    carries no admissible potential; see ``vol_class`` for the 0 default).
    """
    res = v_theta(form, tols=tols)
    if not res.converged:
        raise InfeasibleError(f"zero envelope is {res.status}")
    return total_mass(ma(form, res.env))


def current_volume_bounds(form: BackgroundForm, phi: QPshFunction,
                          perturbations: int, bound: float, seed: int,
                          tols: Tolerances = DEFAULT_TOLS,
                          max_mode: int = 2):
    """Heuristic mass range over bounded perturbations of a potential.

    Samples perturbations b with sup-norm at most ``bound`` such that
    phi + b stays admissible within tol_psh (scaling rejection: the
    admissibility margin is concave along the scaling), and returns
    (min, max) of the total masses including the unperturbed one.
    """
    if perturbations < 1:
        raise InvalidArgumentError("perturbations must be >= 1")
    if not bound > 0:
        raise InvalidArgumentError("bound must be positive")
    grid = form.grid
    base_slack = theta_convex_slack(phi, form, tols).min
    if not base_slack >= -tols.tol_psh:
        raise InvalidArgumentError("phi must be admissible within tol_psh")
    masses = [total_mass(ma(form, phi))]
    rng = np.random.default_rng(seed)
    target = -0.5 * tols.tol_psh if base_slack >= 0.0 else base_slack

    hess = grid.hessian
    G = form.G
    finite = phi.finite_mask
    evaluated = grid.stencil_erode(finite)
    base_vals = phi.values

    def feasible(vals) -> bool:
        lam = min_eigenvalues(G + hess(np.where(finite, vals, 0.0)))
        return bool(np.min(lam[evaluated]) >= target)

    produced = 0
    attempts = 0
    while produced < perturbations:
        attempts += 1
        if attempts > 50 * perturbations:
            raise SamplingExhaustedError("could not sample admissible perturbations")
        raw = fourier_field(grid, rng, max_mode=max_mode, amplitude=1.0)
        peak = float(np.max(np.abs(raw)))
        if peak == 0.0:
            continue
        b = (bound / peak) * raw
        if feasible(base_vals + b):
            s = 1.0
        else:
            lo, hi = 0.0, 1.0
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                if feasible(base_vals + mid * b):
                    lo = mid
                else:
                    hi = mid
            s = lo
        if s <= 1e-9:
            continue
        pert = QPshFunction(grid, np.where(finite, base_vals + s * b, -np.inf))
        masses.append(total_mass(ma(form, pert)))
        produced += 1
    return min(masses), max(masses)


def vol_class(form: BackgroundForm, metric: Optional[ReferenceMetric],
              eps_list: Sequence[float], tols: Tolerances = DEFAULT_TOLS) -> VolumeReport:
    """Volume of a possibly non-big class along eps-shrinking perturbations.

    Evaluates vol_big(G + eps W) for each eps; non-psef input (every
    perturbation infeasible) reports exactly 0 with status ``not_psef``.
    """
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise InvalidArgumentError("eps_list must be nonempty")
    if any(e <= 0 for e in eps_list):
        raise InvalidArgumentError("eps values must be positive")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise InvalidArgumentError("eps_list must be strictly decreasing")
    metric = identity_metric(form.grid) if metric is None else metric
    trace = []
    values = []
    for eps in eps_list:
        try:
            v = vol_big(add_metric(form, eps, metric), tols=tols)
        except InfeasibleError:
            v = None
        trace.append((eps, v))
        if v is not None:
            values.append(v)
    if not values:
        return VolumeReport(0.0, 0.0, 0.0, tuple(trace), NOT_PSEF,
                            notes=("non-psef input: volume is exactly 0",))
    status = OK if len(values) == len(eps_list) else PARTIAL
    limit = values[-1]
    return VolumeReport(limit, limit, limit, tuple(trace), status,
                        notes=("heuristic bound: canonical candidate only",))


@dataclass(frozen=True)
class PropertyCheck:
    holds: bool
    lhs: float
    rhs: float


def scaling_check(form: BackgroundForm, t: float,
                  tols: Tolerances = DEFAULT_TOLS) -> PropertyCheck:
    """Degree-d homogeneity: vol(t*form) against t^d * vol(form)."""
    if not t > 0:
        raise InvalidArgumentError("t must be positive")
    base = vol_big(form, tols=tols)
    scaled = vol_big(scale_form(form, t), tols=tols)
    expected = (t ** form.grid.dim) * base
    tol = tols.tol_mono(scaled, expected)
    return PropertyCheck(bool(abs(scaled - expected) <= tol), scaled, expected)


def monotonicity_check(F1: BackgroundForm, F2: BackgroundForm,
                       tols: Tolerances = DEFAULT_TOLS) -> PropertyCheck:
    """Volume monotonicity under the nodewise matrix order G1 <= G2."""
    if F1.grid != F2.grid:
        raise InvalidArgumentError("forms live on different grids")
    gap = float(np.min(min_eigenvalues(F2.G - F1.G)))
    if gap < -1e-10 * (1.0 + float(np.max(np.abs(F2.G))) + float(np.max(np.abs(F1.G)))):
        raise InvalidArgumentError("forms are not ordered nodewise")
    v1 = vol_big(F1, tols=tols)
    v2 = vol_big(F2, tols=tols)
    return PropertyCheck(bool(v1 <= v2 + tols.tol_mono(v1, v2)), v1, v2)
