"""Degenerate Monge-Ampere equations against a big background form.

The twisted equation det(G + D^2 phi) = e^(lambda phi) f w is enforced on
the nodes whose stencils avoid the poles of the certified singular
potential rho; a damped Newton method on the log-determinant residual,
safeguarded to keep the shifted Hessian positive definite, solves it.
The normalized equation det(G + D^2 phi) = c f w with sup phi = 0 is
reached by a geometric continuation lambda_j = 2^-j with warm starts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .envelopes import v_theta
from .errors import (InvalidArgumentError, InvalidSetupError,
                     NonConvergenceError)
from .forms import (BackgroundForm, ReferenceMetric, VolumeForm,
                    big_certificate, identity_metric, metric_form)
from .grid import GridTorus, dets, min_eigenvalues
from .measures import ma
from .qpsh import QPshFunction, theta_convex_slack, truncate
from .tolerances import DEFAULT_TOLS, Tolerances


@dataclass(frozen=True)
class SolverSetup:
    """Data of one equation: form, certified rho, density, volume, twist.

    ``omega_nodes`` are the non-pole nodes of rho whose full stencil also
    avoids poles; equations are enforced there and nowhere else.
    """

    form: BackgroundForm
    rho: QPshFunction
    f: np.ndarray
    dV: VolumeForm
    lam: float = 1.0
    p: float = 2.0
    metric: Optional[ReferenceMetric] = None
    omega_nodes: np.ndarray = field(init=False)

    def __post_init__(self):
        grid = self.form.grid
        if self.rho.grid != grid or self.dV.grid != grid:
            raise InvalidSetupError("setup components live on different grids")
        f = grid.as_field(self.f)
        if not np.isfinite(f).all() or (f < 0).any():
            raise InvalidSetupError("density must be finite and nonnegative")
        if not self.p > 1:
            raise InvalidSetupError("density exponent p must exceed 1")
        metric = identity_metric(grid) if self.metric is None else self.metric
        if not big_certificate(self.form, self.rho, 1.0, metric):
            raise InvalidSetupError("rho does not certify the form as big")
        omega = grid.stencil_erode(self.rho.finite_mask)
        if not omega.any():
            raise InvalidSetupError("no equation nodes: rho poles cover the grid")
        f.setflags(write=False)
        omega.setflags(write=False)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "metric", metric)
        object.__setattr__(self, "omega_nodes", omega)
        if self.density_norm() <= 0:
            raise InvalidSetupError("density must have positive L^p norm")

    def density_norm(self) -> float:
        """L^p norm of the density against the volume form."""
        f = self.form.grid.as_field(self.f)
        w = self.dV.weights
        return float(np.sum((f ** self.p) * w) * self.form.grid.cell_volume) ** (1.0 / self.p)

    def rhs_field(self) -> np.ndarray:
        """Pointwise density of the right-hand side measure: f times w."""
        return self.f * self.dV.weights


@dataclass(frozen=True)
class SolveResult:
    """Solution record of a twisted or normalized solve."""

    phi: QPshFunction
    c: Optional[float]
    residual_inf: float
    iterations: int
    continuation_trace: tuple
    c_report: float

    def summary(self) -> dict:
        return {
            "c": self.c,
            "residual_inf": self.residual_inf,
            "iterations": self.iterations,
            "C_report": self.c_report,
            "continuation_trace": [list(step) for step in self.continuation_trace],
        }


def _hessian_stencil(grid: GridTorus):
    """Sparse stencil data of the Hessian entries: offsets and coefficients.

    Returns a list of (entry (i, j), [(offset, coeff), ...]) pairs such
    that D^2 u(x)[i, j] = sum coeff * u(x + offset).
    """
    d = grid.dim
    entries = []
    for k in range(d):
        e = grid.unit_offset(k)
        hk2 = grid.spacing[k] ** 2
        entries.append(((k, k), [(e, 1.0 / hk2),
                                 (tuple(-o for o in e), 1.0 / hk2),
                                 ((0,) * d, -2.0 / hk2)]))
    for i in range(d):
        for j in range(i + 1, d):
            pp = [0] * d
            pp[i], pp[j] = 1, 1
            pm = [0] * d
            pm[i], pm[j] = 1, -1
            pp, pm = tuple(pp), tuple(pm)
            mm = tuple(-o for o in pp)
            mp = tuple(-o for o in pm)
            coeff = 1.0 / (4.0 * grid.spacing[i] * grid.spacing[j])
            entries.append(((i, j), [(pp, coeff), (mm, coeff),
                                     (pm, -coeff), (mp, -coeff)]))
    return entries


def _adjugates(M: np.ndarray) -> np.ndarray:
    """Adjugate (transposed cofactor) field for symmetric d x d stacks."""
    d = M.shape[-1]
    if d == 1:
        return np.ones_like(M)
    if d == 2:
        adj = np.empty_like(M)
        adj[..., 0, 0] = M[..., 1, 1]
        adj[..., 1, 1] = M[..., 0, 0]
        adj[..., 0, 1] = -M[..., 0, 1]
        adj[..., 1, 0] = -M[..., 1, 0]
        return adj
    a, b, c = M[..., 0, 0], M[..., 0, 1], M[..., 0, 2]
    e, f = M[..., 1, 1], M[..., 1, 2]
    i = M[..., 2, 2]
    adj = np.empty_like(M)
    adj[..., 0, 0] = e * i - f * f
    adj[..., 1, 1] = a * i - c * c
    adj[..., 2, 2] = a * e - b * b
    adj[..., 0, 1] = adj[..., 1, 0] = -(b * i - f * c)
    adj[..., 0, 2] = adj[..., 2, 0] = b * f - e * c
    adj[..., 1, 2] = adj[..., 2, 1] = -(a * f - b * c)
    return adj


class _TwistedSystem:
    """Residual/Jacobian assembly for one twisted equation on omega nodes."""

    def __init__(self, setup: SolverSetup, lam: float, tols: Tolerances):
        grid = setup.form.grid
        self.grid = grid
        self.setup = setup
        self.lam = float(lam)
        self.tols = tols
        self.omega = setup.omega_nodes
        self.omega_flat = self.omega.ravel()
        self.free = np.flatnonzero(self.omega_flat)
        self.col_of = -np.ones(grid.node_count, dtype=np.int64)
        self.col_of[self.free] = np.arange(self.free.size)
        self.rhs = setup.rhs_field().ravel()[self.free]
        # rows with numerically irrelevant densities behave as degenerate:
        # their log transform would demand det within roundoff of zero
        rhs_floor = 1e-10 * (1.0 + float(np.max(self.rhs)))
        self.log_rows = self.rhs > rhs_floor
        # the constant mode is exactly resolvable when every node carries a
        # log row: shifting phi by t changes the residual by -lam*t only
        self.pure_log = bool(self.log_rows.all()) and self.free.size == grid.node_count
        self.stencil = _hessian_stencil(grid)
        idx = np.arange(grid.node_count).reshape(grid.sizes)
        self.neighbor = {}
        for (_, terms) in self.stencil:
            for off, _ in terms:
                if off not in self.neighbor:
                    self.neighbor[off] = grid.shift(idx, off).ravel()[self.free]

    def hessian_matrices(self, psi_flat: np.ndarray) -> np.ndarray:
        M = self.setup.form.G + self.grid.hessian(psi_flat.reshape(self.grid.sizes))
        return M.reshape(self.grid.node_count, self.grid.dim, self.grid.dim)[self.free]

    def min_eig(self, psi_flat: np.ndarray) -> float:
        return float(np.min(min_eigenvalues(self.hessian_matrices(psi_flat))))

    def min_eig_guard(self, psi_flat: np.ndarray) -> float:
        """Safeguard value: strict positivity is required where logs are taken.

        Zero-density rows solve det = 0, a degenerate boundary state, so the
        line search must be allowed to approach it there.
        """
        lam = min_eigenvalues(self.hessian_matrices(psi_flat))
        if self.log_rows.any():
            return float(np.min(lam[self.log_rows]))
        return float(np.min(lam))

    def lam_phi(self, psi_flat: np.ndarray, base: float) -> np.ndarray:
        # the iterate is split as phi = base + psi so that the O(1/lam)
        # constant along the continuation never degrades the differencing
        return self.lam * psi_flat[self.free] + self.lam * base

    def residual(self, psi_flat: np.ndarray, base: float) -> np.ndarray:
        """Log-determinant residual on f-positive rows, raw elsewhere."""
        M = self.hessian_matrices(psi_flat)
        det = dets(M)
        lp = self.lam_phi(psi_flat, base)
        out = np.empty(self.free.size, dtype=float)
        pos = self.log_rows & (det > 0.0)
        out[pos] = np.log(det[pos]) - lp[pos] - np.log(self.rhs[pos])
        rawmask = ~pos
        out[rawmask] = det[rawmask] - np.exp(lp[rawmask]) * self.rhs[rawmask]
        return out

    def raw_residual_inf(self, psi_flat: np.ndarray, base: float) -> float:
        M = self.hessian_matrices(psi_flat)
        det = dets(M)
        lp = self.lam_phi(psi_flat, base)
        return float(np.max(np.abs(det - np.exp(lp) * self.rhs)))

    def jacobian(self, psi_flat: np.ndarray, base: float) -> sp.csr_matrix:
        M = self.hessian_matrices(psi_flat)
        det = dets(M)
        adj = _adjugates(M)
        lp = self.lam_phi(psi_flat, base)
        pos = self.log_rows & (det > 0.0)
        # d residual / d M_ij per row: adj/det on log rows, adj on raw rows
        safe_det = np.where(pos, det, 1.0)
        coeff = np.where(pos[:, None, None], adj / safe_det[:, None, None], adj)
        rows, cols, vals = [], [], []
        nrows = np.arange(self.free.size)
        for (entry, terms) in self.stencil:
            i, j = entry
            factor = 1.0 if i == j else 2.0  # symmetric entries count twice
            weight = factor * coeff[:, i, j]
            for off, cf in terms:
                neigh = self.neighbor[off]
                col = self.col_of[neigh]
                keep = col >= 0
                rows.append(nrows[keep])
                cols.append(col[keep])
                vals.append((cf * weight)[keep])
        diag = np.where(pos, -self.lam,
                        -self.lam * np.exp(lp) * self.rhs)
        rows.append(nrows)
        cols.append(nrows)
        vals.append(diag)
        J = sp.csr_matrix((np.concatenate(vals),
                           (np.concatenate(rows), np.concatenate(cols))),
                          shape=(self.free.size, self.free.size))
        return J


def _pd_start(system: _TwistedSystem, phi0: np.ndarray, tols: Tolerances) -> np.ndarray:
    """Blend the start with the truncated rho until the Hessian shift is PD."""
    if system.min_eig(phi0) > 0.0:
        return phi0
    rho = system.setup.rho
    level = 1.0 + max(abs(rho.max_finite()), abs(rho.min_finite()))
    anchor = truncate(rho, level).values.ravel()
    for s in np.linspace(0.05, 1.0, 20):
        cand = (1.0 - s) * phi0 + s * anchor
        if system.min_eig(cand) > 0.0:
            return cand
    raise InvalidSetupError("could not find a positive-definite starting point")


def solve_twisted(setup: SolverSetup, initial: Optional[np.ndarray] = None,
                  tols: Tolerances = DEFAULT_TOLS) -> SolveResult:
    """Solve det(G + D^2 phi) = e^(lam phi) f w on the omega nodes.

    Damped Newton on the log-determinant residual with a line search that
    keeps G + D^2 phi positive definite on omega; after three failed line
    searches one pseudo-time step phi += 0.1 * residual is taken.  Nodes
    outside omega keep their initialization (no residual is enforced
    there).  Raises NonConvergence with the iterate attached after
    ``tols.max_newton_iter`` iterations.
    """
    if not setup.lam > 0:
        raise InvalidArgumentError("twisted solve needs lam > 0")
    result, _, _ = _solve_twisted_lambda(setup, setup.lam, initial, tols)
    return result


def _solve_twisted_lambda(setup: SolverSetup, lam: float, initial,
                          tols: Tolerances):
    """Newton driver; returns (result, psi, base) with phi = base + psi."""
    grid = setup.form.grid
    vres = v_theta(setup.form, tols=tols)
    if not vres.converged:
        raise InvalidSetupError(f"zero envelope is {vres.status}")
    vtheta = vres.env.values.ravel()

    system = _TwistedSystem(setup, lam, tols)
    if initial is None:
        psi, base = vtheta.copy(), 0.0
    elif isinstance(initial, tuple):
        psi, base = initial[0].copy(), float(initial[1])
    else:
        psi, base = np.asarray(initial, dtype=float).ravel().copy(), 0.0
    if psi.shape != (grid.node_count,):
        raise InvalidArgumentError("initial iterate shape does not match grid")
    # the split is only sound when a shift is a true null direction
    can_split = system.free.size == grid.node_count
    if not can_split:
        psi, base = psi + base, 0.0
    psi = _pd_start(system, psi, tols)

    def rebalance(psi, base):
        if not can_split:
            return psi, base
        shift = float(np.mean(psi))
        return psi - shift, base + shift

    psi, base = rebalance(psi, base)
    tol_solve = tols.solve_rtol * (1.0 + float(np.max(setup.f)))
    fails = 0
    iterations = 0
    for iterations in range(1, tols.max_newton_iter + 1):
        if system.pure_log:
            # exact constant-mode correction: residual shifts by -lam * tau
            tau = float(np.mean(system.residual(psi, base))) / lam
            if np.isfinite(tau) and tau != 0.0:
                base += tau
        if system.raw_residual_inf(psi, base) <= tol_solve:
            break
        R = system.residual(psi, base)
        J = system.jacobian(psi, base)
        try:
            delta = spla.spsolve(J.tocsc(), -R)
        except Exception:
            delta = None
        moved = False
        if delta is not None and np.isfinite(delta).all():
            if can_split:
                dbase = float(np.mean(delta))
                dpsi = delta - dbase
            else:
                dbase = 0.0
                dpsi = delta
            rnorm = float(np.max(np.abs(R)))
            alpha = 1.0
            while alpha >= 2.0 ** -20:
                cand = psi.copy()
                cand[system.free] = psi[system.free] + alpha * dpsi
                cand_base = base + alpha * dbase
                if system.min_eig_guard(cand) > 0.0:
                    cand_norm = float(np.max(np.abs(system.residual(cand, cand_base))))
                    if cand_norm <= (1.0 - 1e-4 * alpha) * rnorm or cand_norm <= tol_solve:
                        psi, base = cand, cand_base
                        moved = True
                        fails = 0
                        break
                alpha *= 0.5
        if not moved:
            fails += 1
            if fails >= 3:
                # pseudo-time damping fallback
                dt = 0.1
                for _ in range(40):
                    cand = psi.copy()
                    cand[system.free] = psi[system.free] + dt * system.residual(psi, base)
                    if system.min_eig_guard(cand) > 0.0:
                        psi = cand
                        break
                    dt *= 0.5
                psi, base = rebalance(psi, base)
                fails = 0
    else:
        raise NonConvergenceError(
            f"twisted solve stalled at residual {system.raw_residual_inf(psi, base):.3e}",
            result=_finish(setup, psi, base, vtheta, None, (), iterations, system))

    return _finish(setup, psi, base, vtheta, None, (), iterations, system), psi, base


def _finish(setup, psi, base, vtheta, c, trace, iterations, system) -> SolveResult:
    grid = setup.form.grid
    resid = system.raw_residual_inf(psi, base)
    phi_flat = psi + base
    c_report = float(np.max(np.abs(phi_flat - vtheta)))
    phi = QPshFunction(grid, phi_flat.reshape(grid.sizes))
    return SolveResult(phi, c, resid, iterations, tuple(trace), c_report)


def solve_normalized(setup: SolverSetup, tols: Tolerances = DEFAULT_TOLS,
                     schedule: Optional[list] = None) -> SolveResult:
    """Continuation to the normalized equation det(...) = c f w, sup phi = 0.

    Solves the twisted equation along lam_j = 2^-j with warm starts,
    normalizes v_j = u_j - max(u_j) and c_j = exp(lam_j * max(u_j)), and
    stops when both the constant and the normalized iterate settle.  The
    setup's own ``lam`` is ignored.
    """
    grid = setup.form.grid
    if schedule is None:
        schedule = [2.0 ** (-j) for j in range(tols.max_continuation_steps)]
    schedule = [float(lam) for lam in schedule]
    if len(schedule) < 2 or any(lam <= 0 for lam in schedule):
        raise InvalidArgumentError("schedule needs at least two positive levels")
    vres = v_theta(setup.form, tols=tols)
    if not vres.converged:
        raise InvalidSetupError(f"zero envelope is {vres.status}")
    vtheta = vres.env.values.ravel()

    system0 = _TwistedSystem(setup, 0.0, tols)
    tol_solve = tols.solve_rtol * (1.0 + float(np.max(setup.f)))

    def residual_vs_constant(v, c):
        det = dets(system0.hessian_matrices(v))
        return float(np.max(np.abs(det - c * system0.rhs)))

    trace = []
    prev_c = None
    prev_v = None
    warm = None
    result = None
    iterations = 0
    for lam in schedule:
        step, psi, base = _solve_twisted_lambda(setup, lam, warm, tols)
        iterations += step.iterations
        top_psi = float(np.max(psi))
        v = psi - top_psi
        top = top_psi + base
        c = math.exp(lam * top_psi + lam * base)
        trace.append((lam, top, c))
        warm = (psi, base)
        if prev_c is not None:
            settled_c = abs(c - prev_c) <= tols.continuation_c_rtol * abs(c)
            settled_v = float(np.max(np.abs(v - prev_v))) <= tols.continuation_v_atol
            if settled_c and settled_v and residual_vs_constant(v, c) <= tol_solve:
                result = (v, c)
                break
        prev_c, prev_v = c, v
    if result is None:
        raise NonConvergenceError(
            "continuation did not settle",
            result=SolveResult(QPshFunction(grid, (prev_v).reshape(grid.sizes)),
                               prev_c, residual_vs_constant(prev_v, prev_c),
                               iterations, tuple(trace), float("nan")))
    v, c = result
    resid = residual_vs_constant(v, c)
    c_report = float(np.max(vtheta - v))  # one-sided: v <= vtheta + tol is verified
    phi = QPshFunction(grid, v.reshape(grid.sizes))
    upper_gap = float(np.max(v - vtheta))
    res = SolveResult(phi, c, resid, iterations, tuple(trace), max(c_report, 0.0))
    if upper_gap > tols.tol_psh:
        raise NonConvergenceError(
            f"normalized solution exceeds the zero envelope by {upper_gap:.3e}",
            result=res)
    return res


@dataclass(frozen=True)
class SubsolutionResult:
    v: QPshFunction
    m: float
    degenerate: bool


def subsolution(setup: SolverSetup, eta: QPshFunction, g,
                q: float = 2.0, tols: Tolerances = DEFAULT_TOLS) -> SubsolutionResult:
    """Potential v with eta <= v <= eta + 1 whose product dominates m*g*w.

    An auxiliary reference-metric twisted solve with density
    h = g * (2 - rho)^(2d) produces u in [-1, 0]; then u1 = rho + u and
    v = eta + 1/(1 + eta - u1).  The returned m is the smallest weight
    ratio of the product of v against g*w over the omega nodes; it is
    positive whenever g is not identically zero.  g == 0 is flagged
    degenerate with m = +inf.
    """
    grid = setup.form.grid
    if eta.grid != grid:
        raise InvalidArgumentError("eta lives on a different grid")
    g = grid.as_field(g)
    if (g < 0).any() or not np.isfinite(g).all():
        raise InvalidArgumentError("g must be finite and nonnegative")
    if not q > 1:
        raise InvalidArgumentError("exponent q must exceed 1")
    rho = setup.rho
    finite_eta = eta.finite_mask
    ok = finite_eta | rho.pole_set
    if not ok.all():
        raise InvalidArgumentError("eta may only be singular on poles of rho")
    with np.errstate(invalid="ignore"):
        below = (rho.values <= eta.values) | rho.pole_set
        above = np.where(finite_eta, eta.values <= 1e-12, True)
    if not below.all() or not above.all():
        raise InvalidArgumentError("need rho <= eta <= 0")

    if not (g > 0).any():
        v_vals = np.where(finite_eta, eta.values + 1.0, -np.inf)
        return SubsolutionResult(QPshFunction(grid, v_vals), float("inf"), True)

    d = grid.dim
    two_minus_rho = np.where(rho.pole_set, 1.0, 2.0 - rho.values)
    h = np.where(rho.pole_set, 0.0, g * two_minus_rho ** (2 * d))
    total = float(np.sum(h * setup.dV.weights)) * grid.cell_volume
    if total <= 0:
        raise InvalidArgumentError("auxiliary density vanished")
    h_norm = h / total

    ref_setup = SolverSetup(metric_form(setup.metric), QPshFunction(grid, grid.field(0.0)),
                            h_norm, setup.dV, lam=1.0, p=q, metric=setup.metric)
    aux = solve_twisted(ref_setup, tols=tols)
    u = aux.phi.values - float(np.max(aux.phi.values))
    low = float(np.min(u))
    if low < -1.0:
        u = u / (-low)

    u1 = np.where(rho.pole_set, -np.inf, rho.values + u)
    denom = np.where(np.isneginf(u1), np.inf, 1.0 + eta.values - u1)
    v_vals = np.where(finite_eta, eta.values + np.where(np.isinf(denom), 0.0, 1.0 / denom),
                      -np.inf)
    v_vals = np.where(finite_eta & np.isinf(denom), eta.values, v_vals)
    v = QPshFunction(grid, v_vals)

    weights = ma(setup.form, v).weights
    target = g * setup.dV.weights
    omega = setup.omega_nodes & (target > 0) & v.grid.stencil_erode(v.finite_mask)
    if not omega.any():
        return SubsolutionResult(v, 0.0, False)
    ratios = weights[omega] / target[omega]
    m = max(0.0, float(np.min(ratios)))
    return SubsolutionResult(v, m, False)


@dataclass(frozen=True)
class DominationReport:
    consistent: bool
    hypothesis_holds: bool
    ordering_gap: float
    c: float


def domination_check(form: BackgroundForm, u: QPshFunction, v: QPshFunction,
                     c: float, rho: Optional[QPshFunction] = None,
                     tols: Tolerances = DEFAULT_TOLS) -> DominationReport:
    """Consistency of the domination principle on one instance.

    If the weights of the product of u are nodewise at most c times those
    of v (within slack) on the equation nodes: for c < 1 this must force
    u >= v - tol nodewise, and any such full domination must have
    c >= 1 - tol.  Returns vacuous consistency when the hypothesis fails.
    """
    grid = form.grid
    if u.grid != grid or v.grid != grid:
        raise InvalidArgumentError("inputs live on different grids")
    if c < 0:
        raise InvalidArgumentError("c must be nonnegative")
    omega = grid.stencil_erode(u.finite_mask & v.finite_mask)
    if rho is not None:
        omega &= grid.stencil_erode(rho.finite_mask)
    if not omega.any():
        raise InvalidArgumentError("no comparison nodes")
    if rho is not None:
        with np.errstate(invalid="ignore"):
            for w in (u, v):
                below = (rho.values <= w.values + tols.tol_psh) | rho.pole_set
                if not below.all():
                    raise InvalidArgumentError("inputs must dominate rho")
    wu = ma(form, u).weights
    wv = ma(form, v).weights
    scale = 1.0 + float(np.max(np.abs(wu[omega]))) + float(np.max(np.abs(wv[omega])))
    dominated = bool(np.all(wu[omega] <= c * wv[omega] + 1e-10 * scale))
    gap = float(np.min((u.values - v.values)[omega]))
    consistent = True
    if dominated and c < 1.0:
        consistent = consistent and gap >= -tols.tol_psh
    if dominated:
        consistent = consistent and c >= 1.0 - tols.tol_psh
    return DominationReport(bool(consistent), dominated, gap, float(c))


@dataclass(frozen=True)
class LocalComparisonReport:
    holds: bool
    hypothesis_holds: bool
    interior_gap: float


def local_comparison_check(form: BackgroundForm, u: QPshFunction, v: QPshFunction,
                           region: np.ndarray, tols: Tolerances = DEFAULT_TOLS) -> LocalComparisonReport:
    """Local comparison on a strict subregion with stencil boundary control.

    Requires u >= v on the stencil boundary of the region (nodes outside
    the region reachable by one stencil step) and admissibility of both on
    the region.  If the product of u is nodewise dominated by the product
    of v on the region where u < v, then u >= v - tol on the region.
    """
    grid = form.grid
    region = np.asarray(region, dtype=bool)
    if region.shape != grid.sizes:
        raise InvalidArgumentError("region shape does not match grid")
    if not region.any():
        raise InvalidArgumentError("region is empty")
    boundary = grid.stencil_dilate(region) & ~region
    if not boundary.any():
        raise InvalidArgumentError("region has no stencil boundary; a strict subregion is required")
    diff = u.values - v.values
    if float(np.min(diff[boundary])) < -tols.tol_psh:
        raise InvalidArgumentError("u >= v fails on the stencil boundary")
    for w in (u, v):
        slack = theta_convex_slack(w, form, tols)
        inside = region & slack.evaluated
        if inside.any() and float(np.min(slack.values[inside])) < -tols.tol_psh:
            raise InvalidArgumentError("inputs must be admissible on the region")
    wu = ma(form, u).weights
    wv = ma(form, v).weights
    where = region & (u.values < v.values)
    scale = 1.0 + float(np.max(np.abs(wu[region]))) + float(np.max(np.abs(wv[region])))
    hypothesis = bool(np.all(wu[where] <= wv[where] + 1e-10 * scale)) if where.any() else True
    gap = float(np.min(diff[region]))
    holds = (not hypothesis) or gap >= -tols.tol_psh
    return LocalComparisonReport(bool(holds), hypothesis, gap)
