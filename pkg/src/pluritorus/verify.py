"""Property-suite runner behind the ``verify`` subcommand.

Each suite exercises the declared invariants of one module on small seeded
instances and returns one record per invariant.  All randomness flows from
the given seed, so a rerun reproduces every number bit-for-bit.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import scipy.optimize
import scipy.sparse

from . import envelopes, forms, measures, qpsh, solver, volumes
from .grid import GridTorus
from .qpsh import QPshFunction
from .sampling import (fourier_field, random_pole_mask,
                       sample_admissible_potential, sample_convex_potential,
                       with_poles)
from .tolerances import DEFAULT_TOLS


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str


def _check(records, suite, name, passed, detail=""):
    records.append(CheckResult(suite, name, bool(passed), str(detail)))


def lp_envelope(form, obstacle):
    """Linear-programming solution of the envelope problem (check harness).

    Maximize the node sum subject to the directional inequalities and the
    obstacle bound; an independent route to the same discrete problem.
    """
    grid = form.grid
    f = np.asarray(obstacle, dtype=float).ravel()
    n = grid.node_count
    rows, cols, vals, rhs = [], [], [], []
    r = 0
    plus, minus = grid.flat_neighbor_tables(grid.convexity_directions)
    cv = envelopes.direction_coefficients(form)
    for m in range(plus.shape[0]):
        for k in range(n):
            rows += [r, r, r]
            cols += [k, plus[m, k], minus[m, k]]
            vals += [2.0, -1.0, -1.0]
            rhs.append(cv[m, k])
            r += 1
    for k in range(n):
        if np.isfinite(f[k]):
            rows.append(r)
            cols.append(k)
            vals.append(1.0)
            rhs.append(f[k])
            r += 1
    A = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(r, n))
    res = scipy.optimize.linprog(-np.ones(n), A_ub=A, b_ub=np.array(rhs),
                                 bounds=[(None, None)] * n, method="highs")
    if res.status == 2:
        return "infeasible", None
    if res.status == 3:
        return "unbounded", None
    return "converged", res.x.reshape(grid.sizes)


# -- suites ------------------------------------------------------------------


def suite_geometry(seed: int):
    records = []
    rng = np.random.default_rng(seed)
    tols = DEFAULT_TOLS

    grid = GridTorus((8, 8))
    u = fourier_field(grid, rng, max_mode=2, amplitude=1.0)
    sums = [grid.axis_telescoping_sum(u, k) for k in range(grid.dim)]
    _check(records, "geometry", "hessian_axis_telescoping_exact",
           all(s == 0.0 for s in sums), f"sums={sums}")

    A1, A2 = np.array([[1.0, 0.2], [0.2, 2.0]]), np.array([[1.0, 0.2], [0.2, 2.0]])
    F1 = forms.make_closed_form(grid, A1, fourier_field(grid, rng))
    F2 = forms.make_closed_form(grid, A2, fourier_field(grid, rng))
    F3 = forms.make_closed_form(grid, A1 + 1e-15, fourier_field(grid, rng))
    refl = forms.class_equivalent(F1, F1)
    sym = forms.class_equivalent(F1, F2) == forms.class_equivalent(F2, F1)
    trans = (not (forms.class_equivalent(F1, F2) and forms.class_equivalent(F2, F3))
             or forms.class_equivalent(F1, F3))
    _check(records, "geometry", "class_equivalence_relation", refl and sym and trans)

    raw = fourier_field(grid, rng)
    curb = 1.0 + float(np.max(np.abs(grid.hessian(raw))))
    rho = QPshFunction(grid, (0.5 / curb) * raw)
    F = forms.make_closed_form(grid, np.array([[3.0, 0.0], [0.0, 3.0]]))
    if forms.big_certificate(F, rho, 0.5):
        probe = forms.psef_probe(F)
        _check(records, "geometry", "big_certificate_implies_psef_witness",
               probe["feasible"] and probe["witness"] is not None)
    else:
        _check(records, "geometry", "big_certificate_implies_psef_witness",
               False, "certificate unexpectedly failed")
    return records


def suite_qpsh(seed: int):
    records = []
    rng = np.random.default_rng(seed)
    grid = GridTorus((16,))
    vals = fourier_field(grid, rng, amplitude=1.0)
    u = with_poles(QPshFunction(grid, vals), random_pole_mask(grid, rng, 2))

    t, s = 0.8, 0.3
    lhs = qpsh.truncate(qpsh.truncate(u, t), s)
    rhs = qpsh.truncate(u, min(t, s))
    _check(records, "qpsh", "truncate_semigroup_bit_exact",
           np.array_equal(lhs.values, rhs.values))

    m1 = qpsh.sublevel_mask([u], 0.5)
    m2 = qpsh.sublevel_mask([u], 1.5)
    _check(records, "qpsh", "sublevel_mask_monotone",
           bool(np.all(m2.inside >= m1.inside) and np.all(m1.stencil_inside <= m1.inside)))

    c1 = qpsh.chi_eps(u, 0.1)
    c2 = qpsh.chi_eps(u, 0.7)
    _check(records, "qpsh", "chi_eps_monotone", bool(np.all(c1 >= c2)))

    F = forms.make_closed_form(grid, np.array([[2.0]]))
    a = QPshFunction(grid, 0.02 * fourier_field(grid, rng))
    b = QPshFunction(grid, 0.02 * fourier_field(grid, rng))
    mx = QPshFunction(grid, np.maximum(a.values, b.values))
    sa = qpsh.theta_convex_slack(a, F).values
    sb = qpsh.theta_convex_slack(b, F).values
    sm = qpsh.theta_convex_slack(mx, F).values
    from_a = grid.stencil_erode(a.values >= b.values)
    from_b = grid.stencil_erode(b.values > a.values)
    ok = np.all(sm[from_a] == sa[from_a]) and np.all(sm[from_b] == sb[from_b])
    _check(records, "qpsh", "max_slack_on_crossing_free_stencils", bool(ok))
    return records


def suite_measures(seed: int):
    records = []
    rng = np.random.default_rng(seed)
    tols = DEFAULT_TOLS
    grid = GridTorus((8, 8))
    metric = forms.identity_metric(grid)

    Fs = [forms.make_closed_form(grid, np.eye(2) * (1 + i), fourier_field(grid, rng, amplitude=0.1))
          for i in range(2)]
    us = [sample_convex_potential(grid, rng, metric) for _ in range(2)]
    mu = measures.npp_mixed(Fs, us)
    mu_perm = measures.npp_mixed(Fs[::-1], us[::-1])
    _check(records, "measures", "permutation_symmetry_bit_exact",
           np.array_equal(mu.weights, mu_perm.weights))

    Fa = forms.general_form(grid, Fs[0].G)
    Fb = forms.general_form(grid, Fs[1].G)
    ua, ub = us
    a, b = 0.7, 0.3
    blended_form = forms.general_form(grid, a * Fa.G + b * Fb.G)
    blended_u = QPshFunction(grid, a * ua.values + b * ub.values)
    lhs = measures.npp_mixed([blended_form, Fs[0]], [blended_u, us[0]]).weights
    wa = measures.npp_mixed([Fa, Fs[0]], [ua, us[0]]).weights
    wb = measures.npp_mixed([Fb, Fs[0]], [ub, us[0]]).weights
    rel = np.max(np.abs(lhs - (a * wa + b * wb))) / (1.0 + np.max(np.abs(lhs)))
    _check(records, "measures", "multilinearity_1e-10_relative", rel <= 1e-10, f"rel={rel:.2e}")

    poled = [with_poles(u, random_pole_mask(grid, rng, 2)) for u in us]
    t_star = measures.truncation_level(poled)
    base = measures.npp_mixed(Fs, poled)
    bumped = measures.npp_mixed(Fs, poled, level=t_star + 7.5)
    _check(records, "measures", "truncation_level_independent_bit_exact",
           np.array_equal(base.weights, bumped.weights))

    patch = random_pole_mask(grid, rng, 1)
    patch_d = grid.stencil_dilate(patch)
    other = [QPshFunction(grid, np.where(patch_d, u.values, u.values + 0.5)) for u in us]
    m1 = measures.npp_mixed(Fs, us).weights
    m2 = measures.npp_mixed(Fs, other).weights
    agree = grid.stencil_erode(patch_d)
    _check(records, "measures", "stencil_locality_exact",
           bool(np.all(m1[agree] == m2[agree])))

    psd_ok = True
    for _ in range(3):
        uu = sample_convex_potential(grid, rng, metric)
        F = forms.make_closed_form(grid, np.eye(2))
        w = measures.ma(F, uu).weights
        bound = -2.0 * 3.0 * tols.tol_psh * (1.0 + float(np.max(np.abs(F.G))) +
                                             float(np.max(np.abs(grid.hessian(uu.values)))))
        psd_ok = psd_ok and bool(np.min(w) >= bound)
    _check(records, "measures", "positivity_under_psd", psd_ok)

    g1 = GridTorus((32,))
    F1 = forms.make_closed_form(g1, np.array([[2.0]]))
    u0 = sample_convex_potential(g1, rng, forms.identity_metric(g1), c_bound=2.0)
    u_sing = with_poles(u0, random_pole_mask(g1, rng, 2))
    masses = [measures.total_mass(measures.ma(F1, qpsh.truncate(u_sing, t)))
              for t in (2.0, 4.0, 8.0)]
    target = measures.total_mass(measures.ma(F1, u_sing))
    lsc_ok = target <= min(masses) + tols.tol_mono(target, min(masses))
    _check(records, "measures", "mass_lower_semicontinuity_avatar", lsc_ok,
           f"target={target:.6f} truncated={masses}")

    a = sample_convex_potential(grid, rng, metric, amplitude=0.3)
    b = QPshFunction(grid, sample_convex_potential(grid, rng, metric, amplitude=0.3).values + 0.01)
    mx = QPshFunction(grid, np.maximum(a.values, b.values))
    F = forms.make_closed_form(grid, np.eye(2))
    wmax = measures.ma(F, mx).weights
    wa = measures.ma(F, a).weights
    wb = measures.ma(F, b).weights
    pure_a = grid.stencil_erode(a.values > b.values)
    pure_b = grid.stencil_erode(b.values > a.values)
    ok = np.all(wmax[pure_a] == wa[pure_a]) and np.all(wmax[pure_b] == wb[pure_b])
    _check(records, "measures", "max_principle_stencil_pure_exact", bool(ok))
    return records


def suite_envelopes(seed: int):
    records = []
    rng = np.random.default_rng(seed)
    tols = DEFAULT_TOLS
    grid = GridTorus((48,))
    F = forms.make_closed_form(grid, np.array([[30.0]]))
    x = grid.coordinates()[0]
    f = np.where((x > 0.3) & (x < 0.6), -1.0, 0.0)

    res = envelopes.envelope(F, f)
    res2 = envelopes.envelope(F, res.env.values)
    _check(records, "envelopes", "idempotence_bit_exact",
           res.converged and np.array_equal(res.env.values, res2.env.values))

    res_hi = envelopes.envelope(F, f + 0.25)
    _check(records, "envelopes", "monotone_in_obstacle",
           bool(np.all(res.env.values <= res_hi.env.values + 1e-12)))

    g = np.where((x > 0.5) & (x < 0.8), -0.5, 0.1)
    both = envelopes.envelope(F, np.minimum(f, g)).env.values
    cap = np.minimum(envelopes.envelope(F, f).env.values,
                     envelopes.envelope(F, g).env.values)
    _check(records, "envelopes", "concave_under_min",
           bool(np.all(both <= cap + 1e-12)))

    status, lp = lp_envelope(F, f)
    gap = float(np.max(np.abs(lp - res.env.values))) if status == "converged" else np.inf
    _check(records, "envelopes", "d1_lp_agreement_1e-8", gap <= 1e-8, f"gap={gap:.2e}")

    report = envelopes.contact_concentration(F, f, res, delta=1e-6)
    _check(records, "envelopes", "contact_concentration_bound",
           report.holds, f"offside={report.offside_mass:.2e} thr={report.threshold:.2e}")
    return records


def suite_volumes(seed: int):
    records = []
    rng = np.random.default_rng(seed)
    tols = DEFAULT_TOLS
    grid = GridTorus((12, 12))
    metric = forms.identity_metric(grid)

    boundary = forms.make_closed_form(grid, np.diag([1.0, 0.0]))
    eps_list = [0.4, 0.2, 0.1, 0.05]
    rep = volumes.vol_class(boundary, metric, eps_list)
    vols = [v for _, v in rep.eps_trace]
    dec = all(b <= a + tols.tol_mono(a, b) for a, b in zip(vols, vols[1:]))
    toward_zero = vols[-1] <= vols[0]
    neg = volumes.vol_class(forms.make_closed_form(grid, -np.eye(2)), metric, eps_list=[0.1, 0.05])
    _check(records, "volumes", "psef_boundary_continuity",
           dec and toward_zero and neg.status == volumes.NOT_PSEF and neg.vol_big == 0.0,
           f"trace={vols}")

    A = np.array([[1.5, 0.2], [0.2, 1.0]])
    v = volumes.vol_big(forms.make_closed_form(grid, A, 0.002 * fourier_field(grid, rng)))
    det = float(np.linalg.det(A))
    h2 = max(grid.spacing) ** 2
    _check(records, "volumes", "vol_equals_det_closed",
           abs(v - det) <= tols.stokes_factor * h2, f"v={v} det={det}")

    g1 = GridTorus((24,))
    F1 = forms.make_closed_form(g1, np.array([[2.0]]), 0.002 * fourier_field(g1, rng))
    phi = sample_admissible_potential(g1, rng, F1)
    lo, hi = volumes.current_volume_bounds(F1, phi, perturbations=4, bound=0.2, seed=seed)
    _check(records, "volumes", "closed_d1_bounds_collapse",
           hi - lo <= tols.tol_exact, f"spread={hi - lo:.2e}")
    _check(records, "volumes", "bounds_ordered", 0.0 <= lo <= hi)
    return records


def suite_solver(seed: int):
    records = []
    rng = np.random.default_rng(seed)
    tols = DEFAULT_TOLS
    grid = GridTorus((32,))
    F = forms.make_closed_form(grid, np.array([[2.0]]))
    zero = QPshFunction(grid, grid.field(0.0))
    dV = forms.uniform_volume(grid)
    x = grid.coordinates()[0]
    f = 1.0 + 0.5 * np.sin(2 * np.pi * x)

    setup = solver.SolverSetup(F, zero, f, dV, lam=1.0)
    r1 = solver.solve_twisted(setup)
    r2 = solver.solve_twisted(setup, initial=grid.field(-1.0).ravel())
    gap = float(np.max(np.abs(r1.phi.values - r2.phi.values)))
    _check(records, "solver", "twisted_uniqueness_1e-6", gap <= 1e-6, f"gap={gap:.2e}")

    creports = []
    for raw in (1.0 + 0.5 * np.sin(2 * np.pi * x),
                1.0 + 0.5 * np.cos(2 * np.pi * x),
                1.0 + 0.4 * np.sin(4 * np.pi * x)):
        s0 = solver.SolverSetup(F, zero, raw, dV, lam=1.0)
        fs = raw / s0.density_norm()  # fix the L^p norm across the family
        s = solver.SolverSetup(F, zero, fs, dV, lam=1.0)
        creports.append(solver.solve_twisted(s).c_report)
    lo, hi = min(creports), max(creports)
    _check(records, "solver", "apriori_bound_stability",
           hi <= 1.5 * max(lo, 1e-12) + 1e-9, f"C_reports={creports}")

    rn = solver.solve_normalized(solver.SolverSetup(F, zero, f, dV))
    mass = measures.total_mass(measures.ma(F, rn.phi))
    target = rn.c * float(np.sum(f * dV.weights)) * grid.cell_volume
    h2 = max(grid.spacing) ** 2
    rel = abs(mass - target) / max(abs(target), 1e-12)
    _check(records, "solver", "closed_mass_identity_10h2", rel <= 10 * h2, f"rel={rel:.2e}")
    _check(records, "solver", "continuation_trace_recorded",
           len(rn.continuation_trace) >= 2 and all(len(t) == 3 for t in rn.continuation_trace))

    g = np.where(x < 0.5, 1.0, 0.0) * (1.0 + 0.2 * np.cos(2 * np.pi * x))
    sub = solver.subsolution(setup, zero, g)
    inside = (sub.v.values >= zero.values - 0.0) & (sub.v.values <= zero.values + 1.0)
    _check(records, "solver", "subsolution_range_exact_and_m_positive",
           bool(inside.all()) and sub.m > 0.0, f"m={sub.m:.3e}")
    return records


SUITES = {
    "geometry": suite_geometry,
    "qpsh": suite_qpsh,
    "measures": suite_measures,
    "envelopes": suite_envelopes,
    "volumes": suite_volumes,
    "solver": suite_solver,
}


def run_suites(names, seed: int) -> dict:
    """Run the requested suites; returns a JSON-ready report."""
    if names == ["all"] or names == "all":
        names = list(SUITES)
    results = []
    for name in names:
        if name not in SUITES:
            raise KeyError(f"unknown suite {name!r}")
        results.extend(SUITES[name](seed))
    return {
        "seed": seed,
        "suites": sorted(set(r.suite for r in results)),
        "checks": [asdict(r) for r in results],
        "failures": [asdict(r) for r in results if not r.passed],
        "passed": all(r.passed for r in results),
    }
