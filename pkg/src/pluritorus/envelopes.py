"""Admissible envelopes below an obstacle, and their contact properties.

The envelope of an obstacle f is the largest grid function u <= f that is
directionally convex against the background form: along every axis and
diagonal-pair direction v,

    u(x) <= (u(x+v) + u(x-v))/2 + c_v(x)/2,   c_v(x) = v_phys^T G(x) v_phys.

It is computed by undamped Gauss-Seidel sweeps of the pointwise update
``u(x) <- min(f(x), min_v ...)`` over a fixed alternating (snake) node
schedule, started from the constant min f.  Sweeping continues past the
update tolerance to exact floating-point stationarity, which makes the
envelope an exact fixed point of its own sweep operator (idempotence is
bit-exact).  Directional convexity agrees with eigenvalue admissibility
in d = 1 and is a slightly wider cone in d >= 2; the gap is measured by
the tests against a linear-programming oracle, never assumed away.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidArgumentError, NonConvergenceError
from .forms import BackgroundForm
from .grid import GridTorus
from .measures import ma
from .qpsh import QPshFunction, is_theta_psh
from .tolerances import DEFAULT_TOLS, Tolerances

try:  # optional accelerator; bit-identical IEEE semantics either way
    import numba as _numba
except Exception:  # pragma: no cover - exercised only without numba
    _numba = None


def _sweep_reference(u, f, plus, minus, cv, valid, order):
    ndir = plus.shape[0]
    maxd = 0.0
    for idx in range(order.shape[0]):
        k = order[idx]
        val = f[k]
        for m in range(ndir):
            if valid[m, k]:
                cand = 0.5 * (u[plus[m, k]] + u[minus[m, k]] + cv[m, k])
                if cand < val:
                    val = cand
        prev = u[k]
        if val != prev:
            dlt = val - prev
            if dlt < 0.0:
                dlt = -dlt
            if dlt > maxd:
                maxd = dlt
            u[k] = val
    return maxd


if _numba is not None:
    _sweep = _numba.njit(cache=False, fastmath=False)(_sweep_reference)
else:  # pragma: no cover
    _sweep = _sweep_reference


CONVERGED = "converged"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class EnvelopeResult:
    """Envelope iterate with its convergence record.

    When ``status`` is ``converged`` the envelope lies below the obstacle
    and its directional slack is >= -tol_psh wherever evaluated; otherwise
    ``env`` holds the last iterate for inspection only.
    """

    env: QPshFunction
    status: str
    sweeps: int
    final_update: float
    update_norms: tuple
    checks: Optional[dict] = None

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED


def direction_coefficients(form: BackgroundForm) -> np.ndarray:
    """Stacked fields c_v(x) = v_phys^T G(x) v_phys, one row per direction."""
    grid = form.grid
    rows = []
    for off in grid.convexity_directions:
        v = grid.physical_vector(off)
        rows.append(np.einsum("...ij,i,j->...", form.G, v, v).ravel())
    return np.stack(rows)


def directional_slack(form: BackgroundForm, u: QPshFunction) -> float:
    """Smallest normalized directional slack of u over pole-free stencils."""
    grid = form.grid
    vals = u.values
    finite = u.finite_mask
    worst = np.inf
    for off in grid.convexity_directions:
        v = grid.physical_vector(off)
        cv = np.einsum("...ij,i,j->...", form.G, v, v)
        up = grid.shift(vals, off)
        dn = grid.shift(vals, tuple(-o for o in off))
        ok = finite & grid.shift(finite, off) & grid.shift(finite, tuple(-o for o in off))
        if not ok.any():
            continue
        resid = (up[ok] + dn[ok] - 2.0 * vals[ok] + cv[ok]) / float(v @ v)
        worst = min(worst, float(np.min(resid)))
    return worst


def _feasibility_certificate(form: BackgroundForm) -> bool:
    """False iff some direction sum proves that no admissible function exists.

    Sum the directional constraint over the torus: the second differences
    telescope to zero, so sum_x c_v(x) < 0 rules out every candidate.
    """
    grid = form.grid
    for off in grid.convexity_directions:
        v = grid.physical_vector(off)
        cv = np.einsum("...ij,i,j->...", form.G, v, v)
        total = float(np.sum(cv))
        if total < -1e-10 * max(1.0, float(np.sum(np.abs(cv)))):
            return False
    return True


def _result_potential(grid: GridTorus, u_flat: np.ndarray, pole: np.ndarray) -> QPshFunction:
    vals = u_flat.reshape(grid.sizes).copy()
    if np.isposinf(vals).any():
        finite = np.isfinite(vals)
        cap = float(np.max(vals[finite])) if finite.any() else 0.0
        vals[np.isposinf(vals)] = cap
    vals[pole] = -np.inf
    return QPshFunction(grid, vals, all_poles=bool(pole.all()))


def envelope(form: BackgroundForm, obstacle, tols: Tolerances = DEFAULT_TOLS,
             max_sweeps: Optional[int] = None) -> EnvelopeResult:
    """Largest directionally admissible function below the obstacle.

    The obstacle may take values in [-inf, +inf]; ``-inf`` nodes become
    poles of the envelope and constraints across their stencils are
    dropped.  Statuses: ``converged`` on success, ``infeasible`` when no
    admissible function exists (certificate, or iterate divergence), and
    ``unbounded`` when the obstacle is +inf everywhere but the constraint
    cone is nonempty.
    """
    grid = form.grid
    f = np.asarray(obstacle, dtype=float)
    if f.shape == ():
        f = grid.field(float(f))
    f = f.reshape(grid.sizes) if f.shape == (grid.node_count,) else f
    if f.shape != grid.sizes:
        raise InvalidArgumentError("obstacle shape does not match grid")
    if np.isnan(f).any():
        raise InvalidArgumentError("obstacle contains NaN")
    pole = np.isneginf(f)
    if pole.all():
        raise InvalidArgumentError("obstacle is identically -inf")
    finite = np.isfinite(f)

    if not finite.any():
        # unconstrained: envelope is +inf iff the cone is nonempty
        probe = envelope(form, grid.field(0.0), tols=tols, max_sweeps=max_sweeps)
        status = UNBOUNDED if probe.converged else INFEASIBLE
        return EnvelopeResult(probe.env, status, probe.sweeps,
                              probe.final_update, probe.update_norms)

    if not pole.any() and not _feasibility_certificate(form):
        env = _result_potential(grid, np.full(grid.node_count, float(np.min(f[finite]))), pole)
        return EnvelopeResult(env, INFEASIBLE, 0, 0.0, ())

    plus, minus = grid.flat_neighbor_tables(grid.convexity_directions)
    cv = direction_coefficients(form)
    pole_flat = pole.ravel()
    nonpole_flat = ~pole_flat
    valid = nonpole_flat[plus] & nonpole_flat[minus]
    order_fwd = np.flatnonzero(nonpole_flat).astype(np.int64)
    order_bwd = order_fwd[::-1].copy()

    f_flat = f.ravel().copy()
    start = float(np.min(f[finite]))
    u = np.full(grid.node_count, start, dtype=float)
    u[pole_flat] = 0.0  # placeholder, never read through valid constraints

    span = float(np.max(f[finite])) - start
    curv = max((float(np.max(np.abs(cv[m]))) / float(grid.physical_vector(off) @ grid.physical_vector(off))
                for m, off in enumerate(grid.convexity_directions)), default=0.0)
    floor = start - tols.divergence_drop * max(1.0, span, curv)

    cap = tols.envelope_max_sweeps if max_sweeps is None else int(max_sweeps)
    norms = []
    status = None
    polish_left = tols.envelope_polish_sweeps
    polishing = False
    sweeps = 0
    while sweeps < cap:
        order = order_fwd if sweeps % 2 == 0 else order_bwd
        maxd = float(_sweep(u, f_flat, plus, minus, cv, valid, order))
        sweeps += 1
        norms.append(maxd)
        if maxd == 0.0:
            status = CONVERGED
            break
        finite_u = u[order_fwd]
        finite_vals = finite_u[np.isfinite(finite_u)]
        if finite_vals.size and float(np.min(finite_vals)) < floor:
            status = INFEASIBLE
            break
        if maxd < tols.envelope_update:
            polishing = True
        if polishing:
            polish_left -= 1
            if polish_left <= 0:
                status = CONVERGED
                break
    if status is None:
        raise NonConvergenceError(
            f"envelope did not settle within {cap} sweeps",
            result=_result_potential(grid, u, pole))

    env = _result_potential(grid, u, pole)
    if status == CONVERGED and np.isposinf(u[nonpole_flat]).any():
        status = UNBOUNDED
    return EnvelopeResult(env, status, sweeps, norms[-1] if norms else 0.0, tuple(norms))


def v_theta(form: BackgroundForm, tols: Tolerances = DEFAULT_TOLS) -> EnvelopeResult:
    """Envelope of the zero obstacle: the least singular admissible potential.

    Infeasible exactly when the positivity probe must fail structurally.
    """
    return envelope(form, form.grid.field(0.0), tols=tols)


@dataclass(frozen=True)
class ContactReport:
    offside_mass: float
    threshold: float
    total: float

    @property
    def holds(self) -> bool:
        return self.offside_mass <= self.threshold


def contact_concentration(form: BackgroundForm, obstacle, result: EnvelopeResult,
                          delta: float, tols: Tolerances = DEFAULT_TOLS) -> ContactReport:
    """Product mass stranded away from the contact set of an envelope.

    Counts |weights| of the envelope's product over nodes at distance
    delta below the obstacle whose stencils avoid the stencil neighborhood
    of the contact set; the contract bounds it by 10 h^2 times the total.
    """
    if not result.converged:
        raise InvalidArgumentError("contact concentration needs a converged envelope")
    if not delta > 0:
        raise InvalidArgumentError("delta must be positive")
    grid = form.grid
    f = grid.as_field(obstacle) if np.isscalar(obstacle) else np.asarray(obstacle, dtype=float).reshape(grid.sizes)
    env = result.env.values
    with np.errstate(invalid="ignore"):
        contact = env >= f - delta
    contact |= np.isneginf(f)  # pole nodes of the obstacle count as contact
    offside = ~contact & grid.stencil_erode(~grid.stencil_dilate(contact))
    mu = ma(form, result.env)
    absw = np.abs(mu.weights)
    total = float(np.sum(absw)) * grid.cell_volume
    offside_mass = float(np.sum(absw[offside])) * grid.cell_volume
    hmax = max(grid.spacing)
    return ContactReport(offside_mass, tols.contact_factor * hmax * hmax * total, total)


def rooftop(form: BackgroundForm, u: QPshFunction, v: QPshFunction,
            tols: Tolerances = DEFAULT_TOLS) -> EnvelopeResult:
    """Envelope of min(u, v) for two admissible potentials.

    Also evaluates the minimum-principle mass bound on stencil-pure
    contact nodes: there the rooftop equals one of the inputs on the whole
    stencil, so its weights must not exceed the indicator-split weights.
    The outcome is attached under ``checks['min_principle']``.
    """
    grid = form.grid
    for w in (u, v):
        if not is_theta_psh(w, form, tols):
            raise InvalidArgumentError("rooftop inputs must be admissible within tol_psh")
    obstacle = np.minimum(u.values, v.values)
    res = envelope(form, obstacle, tols=tols)
    checks = None
    if res.converged:
        roof = res.env.values
        scale = 1.0 + np.maximum(np.abs(u.values), np.abs(v.values))
        with np.errstate(invalid="ignore"):
            on_u = (np.abs(roof - u.values) <= 1e-10 * scale) & (u.values < v.values)
            on_v = (np.abs(roof - v.values) <= 1e-10 * scale) & (v.values <= u.values)
        on_u |= np.isneginf(roof) & np.isneginf(u.values) & (np.isneginf(v.values) | (u.values < v.values))
        pure_u = grid.stencil_erode(on_u)
        pure_v = grid.stencil_erode(on_v & ~on_u)
        w_roof = ma(form, res.env).weights
        w_u = ma(form, u).weights
        w_v = ma(form, v).weights
        lhs = (float(np.sum(w_roof[pure_u])) + float(np.sum(w_roof[pure_v]))) * grid.cell_volume
        rhs = (float(np.sum(w_u[pure_u])) + float(np.sum(w_v[pure_v]))) * grid.cell_volume
        bound = rhs + tols.tol_mono(lhs, rhs)
        checks = {"min_principle": {"lhs": lhs, "rhs": bound, "holds": bool(lhs <= bound)}}
        res = EnvelopeResult(res.env, res.status, res.sweeps, res.final_update,
                             res.update_norms, checks)
    return res
