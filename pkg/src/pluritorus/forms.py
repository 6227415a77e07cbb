"""Background forms, reference metrics and volume forms on the torus.

A background form is a symmetric d x d matrix per node.  Closed forms are
generated as a constant part A plus the discrete Hessian of a periodic
potential tau; their class is the constant part, and any two closed forms
with the same A are equivalent.  General forms carry no generating data
and model the non-closed case, where total masses may genuinely move.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidArgumentError, UnsupportedError
from .grid import GridTorus, min_eigenpairs, min_eigenvalues
from .qpsh import QPshFunction, truncate
from .tolerances import DEFAULT_TOLS, Tolerances

CLOSED = "closed"
GENERAL = "general"


@dataclass(frozen=True)
class BackgroundForm:
    """Symmetric matrix field G, optionally of closed kind G = A + D^2 tau."""

    grid: GridTorus
    G: np.ndarray
    kind: str
    A: Optional[np.ndarray] = None
    tau: Optional[np.ndarray] = None

    def __post_init__(self):
        d = self.grid.dim
        G = np.asarray(self.G, dtype=float)
        if G.shape != self.grid.sizes + (d, d):
            raise InvalidArgumentError(f"form field shape {G.shape} does not match grid")
        if not np.array_equal(G, np.swapaxes(G, -1, -2)):
            raise InvalidArgumentError("form must be symmetric at every node")
        G = G.copy()
        G.setflags(write=False)
        object.__setattr__(self, "G", G)
        if self.kind not in (CLOSED, GENERAL):
            raise InvalidArgumentError(f"unknown form kind {self.kind!r}")
        if self.kind == CLOSED:
            if self.A is None or self.tau is None:
                raise InvalidArgumentError("closed form needs constant part and potential")
            A = np.asarray(self.A, dtype=float).copy()
            tau = self.grid.as_field(self.tau)
            A.setflags(write=False)
            tau.setflags(write=False)
            object.__setattr__(self, "A", A)
            object.__setattr__(self, "tau", tau)

    @property
    def is_closed(self) -> bool:
        return self.kind == CLOSED


def make_closed_form(grid: GridTorus, A, tau=None) -> BackgroundForm:
    """Closed form G = A + D^2 tau from a constant symmetric matrix A.

    Two closed forms with equal constant parts are in the same class.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    d = grid.dim
    if A.shape != (d, d):
        raise InvalidArgumentError(f"constant part shape {A.shape} does not match dim {d}")
    if not np.array_equal(A, A.T):
        raise InvalidArgumentError("constant part must be symmetric")
    tau_field = grid.field(0.0) if tau is None else grid.as_field(tau)
    G = np.broadcast_to(A, grid.sizes + (d, d)) + grid.hessian(tau_field)
    return BackgroundForm(grid, G, CLOSED, A=A, tau=tau_field)


def constant_form(grid: GridTorus, A) -> BackgroundForm:
    return make_closed_form(grid, A, tau=None)


def general_form(grid: GridTorus, G) -> BackgroundForm:
    """Wrap a symmetric matrix field with no generating data (non-closed)."""
    return BackgroundForm(grid, np.asarray(G, dtype=float), GENERAL)


def scale_form(form: BackgroundForm, t: float) -> BackgroundForm:
    if form.is_closed:
        return make_closed_form(form.grid, t * form.A, t * form.tau)
    return general_form(form.grid, t * form.G)


def add_metric(form: BackgroundForm, eps: float, metric: "ReferenceMetric") -> BackgroundForm:
    """The form G + eps * W; stays closed when W is constant over nodes."""
    W = metric.W
    if form.is_closed and metric.is_constant:
        return make_closed_form(form.grid, form.A + eps * W[(0,) * form.grid.dim], form.tau)
    return general_form(form.grid, form.G + eps * W)


@dataclass(frozen=True)
class ReferenceMetric:
    """Per-node symmetric positive-definite matrix field (default identity)."""

    grid: GridTorus
    W: np.ndarray

    def __post_init__(self):
        d = self.grid.dim
        W = np.asarray(self.W, dtype=float)
        if W.shape == (d, d):
            W = np.broadcast_to(W, self.grid.sizes + (d, d)).copy()
        if W.shape != self.grid.sizes + (d, d):
            raise InvalidArgumentError("metric field shape does not match grid")
        if not np.array_equal(W, np.swapaxes(W, -1, -2)):
            raise InvalidArgumentError("metric must be symmetric at every node")
        if float(np.min(min_eigenvalues(W))) < DEFAULT_TOLS.eps_pd:
            raise InvalidArgumentError("metric is not positive definite")
        W = W.copy()
        W.setflags(write=False)
        object.__setattr__(self, "W", W)

    @property
    def is_constant(self) -> bool:
        first = self.W[(0,) * self.grid.dim]
        return bool(np.all(self.W == first))


def identity_metric(grid: GridTorus) -> ReferenceMetric:
    return ReferenceMetric(grid, np.eye(grid.dim))


def metric_form(metric: ReferenceMetric) -> BackgroundForm:
    """View a reference metric as a background form (closed when constant)."""
    if metric.is_constant:
        return make_closed_form(metric.grid, metric.W[(0,) * metric.grid.dim])
    return general_form(metric.grid, metric.W)


@dataclass(frozen=True)
class VolumeForm:
    """Positive node weights; total mass is the weighted cell sum."""

    grid: GridTorus
    weights: np.ndarray

    def __post_init__(self):
        w = self.grid.as_field(self.weights)
        if not np.isfinite(w).all():
            raise InvalidArgumentError("volume weights must be finite")
        if not (w > 0).all():
            raise InvalidArgumentError("volume weights must be positive")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def mass(self) -> float:
        return float(np.sum(self.weights)) * self.grid.cell_volume


def uniform_volume(grid: GridTorus, mass: float = 1.0) -> VolumeForm:
    """Uniform volume form with the given total mass."""
    if not mass > 0:
        raise InvalidArgumentError("mass must be positive")
    return VolumeForm(grid, grid.field(float(mass)))


# -- class and positivity probes -------------------------------------------


def class_equivalent(F1: BackgroundForm, F2: BackgroundForm,
                     tols: Tolerances = DEFAULT_TOLS) -> bool:
    """Whether two closed forms lie in the same class (equal constant parts).

    Raises UnsupportedError for general forms: without generating data the
    class comparison is undecidable in this model.
    """
    if F1.grid != F2.grid:
        raise InvalidArgumentError("forms live on different grids")
    if not (F1.is_closed and F2.is_closed):
        raise UnsupportedError("class comparison requires closed forms")
    return bool(np.max(np.abs(F1.A - F2.A)) <= tols.tol_class)


def psef_probe(form: BackgroundForm, iters: int = 200,
               tols: Tolerances = DEFAULT_TOLS):
    """Search for a potential u with G + D^2 u positive semidefinite.

    Closed forms are decided exactly: the discrete Hessian of a periodic
    function telescopes to zero along every direction, so feasibility is
    equivalent to the constant part being PSD, with witness u = -tau.
    General forms use projected ascent on the minimal eigenvalue; a
    negative answer is then only "not found", never a disproof.

    Returns
    -------
    dict with keys ``feasible`` (bool) and ``witness`` (QPshFunction or None).
    """
    grid = form.grid
    if form.is_closed:
        if float(np.min(np.linalg.eigvalsh(form.A))) >= -tols.tol_psh:
            witness = QPshFunction(grid, -form.tau)
            return {"feasible": True, "witness": witness}
        return {"feasible": False, "witness": None}

    # descend the violation energy E(u) = sum of squared negative eigenvalues
    # of G + D^2 u; its gradient 2 D^2*(negative part) is preconditioned by
    # the inverse squared Laplacian symbol (the quartic stiffness of D^2*D^2
    # otherwise throttles the step to O(h^4))
    d = grid.dim

    def negative_part(M):
        if d == 1:
            lam = np.minimum(M[..., 0, 0], 0.0)
            return lam[..., None, None].copy(), float(np.sum(lam * lam))
        lam, vecs = np.linalg.eigh(M)
        neg = np.minimum(lam, 0.0)
        S = np.einsum("...k,...ik,...jk->...ij", neg, vecs, vecs)
        return S, float(np.sum(neg * neg))

    freq = np.meshgrid(*[np.fft.fftfreq(n, 1.0 / n) for n in grid.sizes], indexing="ij")
    lap = sum((4.0 / h ** 2) * np.sin(np.pi * k * h) ** 2
              for k, h in zip(freq, grid.spacing))
    inv_quartic = np.where(lap > 0, 1.0 / np.maximum(lap, 1e-12) ** 2, 0.0)

    def precondition(grad):
        return np.real(np.fft.ifftn(np.fft.fftn(grad) * inv_quartic))

    u = grid.field(0.0)
    step = 1.0
    S, energy = negative_part(form.G + grid.hessian(u))
    for _ in range(max(0, int(iters))):
        if float(np.min(min_eigenvalues(form.G + grid.hessian(u)))) >= -tols.tol_psh:
            return {"feasible": True, "witness": QPshFunction(grid, u)}
        if energy == 0.0:
            break
        direction = precondition(2.0 * grid.hessian_adjoint(S))
        slope = float(np.sum(direction * grid.hessian_adjoint(S))) * 2.0
        if slope <= 0.0:
            break
        step = min(step * 4.0, 2.0 * energy / slope)
        while step > 1e-18:
            cand = u - step * direction
            S_c, e_c = negative_part(form.G + grid.hessian(cand))
            if e_c < energy:
                u, S, energy = cand, S_c, e_c
                break
            step *= 0.25
        else:
            break
    if float(np.min(min_eigenvalues(form.G + grid.hessian(u)))) >= -tols.tol_psh:
        return {"feasible": True, "witness": QPshFunction(grid, u)}
    return {"feasible": False, "witness": None}


def big_certificate(form: BackgroundForm, rho: QPshFunction, eps: float,
                    metric: Optional[ReferenceMetric] = None,
                    tols: Tolerances = DEFAULT_TOLS) -> bool:
    """Check G + D^2 rho - eps*W >= 0 on pole-free stencils of rho.

    True iff the minimal eigenvalue is >= -tols.tol_cert at every node
    whose full stencil avoids the poles of rho.
    """
    if not eps > 0:
        raise InvalidArgumentError("eps must be positive")
    grid = form.grid
    if rho.grid != grid:
        raise InvalidArgumentError("rho lives on a different grid")
    W = identity_metric(grid).W if metric is None else metric.W
    nodes = grid.stencil_erode(rho.finite_mask)
    if not nodes.any():
        raise InvalidArgumentError("rho has no pole-free stencil")
    if rho.has_poles:
        level = 1.0 + max(abs(rho.max_finite()), abs(rho.min_finite()))
        work = truncate(rho, level).values
    else:
        work = rho.values
    lam = min_eigenvalues(form.G + grid.hessian(work) - eps * W)
    return bool(np.min(lam[nodes]) >= -tols.tol_cert)


def upper_volume_probe(metric: ReferenceMetric, samples: int, seed: int,
                       tols: Tolerances = DEFAULT_TOLS) -> float:
    """Lower estimate of the upper volume of a reference metric.

    Maximizes the total product mass over randomly generated metric-convex
    potentials (the zero potential included).  A heuristic bound: the true
    upper volume is a supremum over all admissible potentials.
    """
    from .measures import ma, total_mass
    from .sampling import sample_convex_potential

    if samples < 1:
        raise InvalidArgumentError("samples must be >= 1")
    grid = metric.grid
    form = metric_form(metric)
    rng = np.random.default_rng(seed)
    best = total_mass(ma(form, QPshFunction(grid, grid.field(0.0))))
    for _ in range(int(samples)):
        u = sample_convex_potential(grid, rng, metric, c_bound=1.0, tols=tols)
        best = max(best, total_mass(ma(form, u)))
    return best
