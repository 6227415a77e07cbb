import numpy as np
import pytest

from pluritorus import (GridTorus, InvalidArgumentError,
                        InvalidComparisonError, QPshFunction,
                        UnsupportedError, bt_mixed, constant,
                        delta_theta_estimate, general_form, identity_metric,
                        ma, make_closed_form, mass_monotonicity_check,
                        mixed_det_field, npp_mixed, total_mass,
                        truncation_level)
from pluritorus.sampling import (fourier_field, random_pole_mask,
                                 sample_convex_potential, with_poles)

from oracles import mixed_det_columns


# -- mixed determinant -------------------------------------------------------


@pytest.mark.parametrize("d", [1, 2, 3])
def test_mixed_det_matches_column_oracle(d):
    rng = np.random.default_rng(4)
    mats = []
    for _ in range(d):
        M = rng.normal(size=(5, d, d))
        mats.append(M + np.swapaxes(M, -1, -2))
    got = mixed_det_field(mats)
    for n in range(5):
        want = mixed_det_columns([m[n] for m in mats])
        assert got[n] == pytest.approx(want, rel=1e-10, abs=1e-10)


def test_bt_mixed_examples():
    g = GridTorus(8)
    F = make_closed_form(g, [[1.0]])
    mu = bt_mixed([F], [constant(g, 0.0)])
    assert np.all(mu.weights == 1.0) and total_mass(mu) == pytest.approx(1.0)

    g2 = GridTorus((8, 8))
    Fa = make_closed_form(g2, np.diag([1.0, 0.0]))
    Fb = make_closed_form(g2, np.diag([0.0, 1.0]))
    mu2 = bt_mixed([Fa, Fb], [constant(g2, 0.0)] * 2)
    # polarization: the mixed discriminant of diag(1,0), diag(0,1) is 1/2
    assert np.all(mu2.weights == 0.5) and total_mass(mu2) == pytest.approx(0.5)


def test_bt_mixed_gradient_degree_refinement():
    # closed form, equal slots: total mass converges to det(A) = 2 at order
    # >= 1.8, and Richardson extrapolation recovers the limit
    A = np.diag([1.0, 2.0])
    masses = []
    for n in (16, 32, 64):
        g = GridTorus((n, n))
        x, y = g.coordinates()
        u = QPshFunction(g, 0.05 * np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y))
        F = make_closed_form(g, A)
        masses.append(total_mass(bt_mixed([F, F], [u, u])))
    errs = [abs(m - 2.0) for m in masses]
    order = np.log2(errs[0] / errs[2]) / 2.0
    assert order >= 1.8
    richardson = (4.0 * masses[2] - masses[1]) / 3.0
    assert richardson == pytest.approx(2.0, abs=2e-4)


def test_bt_mixed_contract_errors():
    g = GridTorus((8, 8))
    F = make_closed_form(g, np.eye(2))
    with pytest.raises(UnsupportedError):
        bt_mixed([F], [constant(g, 0.0)])  # p != d
    with pytest.raises(InvalidArgumentError):
        bt_mixed([F, F], [constant(g, 0.0)])
    vals = np.zeros((8, 8))
    vals[0, 0] = -np.inf
    with pytest.raises(InvalidArgumentError):
        bt_mixed([F, F], [QPshFunction(g, vals), constant(g, 0.0)])


# -- truncated products ------------------------------------------------------


def test_npp_pole_free_is_bt_bitwise():
    g = GridTorus((8, 8))
    rng = np.random.default_rng(9)
    F = make_closed_form(g, np.eye(2), 0.01 * fourier_field(g, rng))
    u = sample_convex_potential(g, rng, identity_metric(g))
    a = bt_mixed([F, F], [u, u])
    b = npp_mixed([F, F], [u, u])
    assert np.array_equal(a.weights, b.weights)
    assert a.support_mask.all() and b.support_mask.all()


def test_npp_stencil_exclusion_example():
    g = GridTorus(8)
    F = make_closed_form(g, [[4.0]])
    vals = np.zeros(8)
    vals[0] = -np.inf
    mu = ma(F, QPshFunction(g, vals))
    expected = np.array([0.0, 0.0, 4.0, 4.0, 4.0, 4.0, 4.0, 0.0])
    np.testing.assert_array_equal(mu.weights, expected)
    assert total_mass(mu) == pytest.approx(2.5)
    assert not mu.support_mask[[0, 1, 7]].any()


def test_npp_truncation_level_independence():
    g = GridTorus((10, 10))
    rng = np.random.default_rng(17)
    F = make_closed_form(g, np.eye(2))
    metric = identity_metric(g)
    for _ in range(5):
        us = [with_poles(sample_convex_potential(g, rng, metric),
                         random_pole_mask(g, rng, 3)) for _ in range(2)]
        t_star = truncation_level(us)
        base = npp_mixed([F, F], us)
        for bump in (0.0, 3.0, 17.5):
            again = npp_mixed([F, F], us, level=t_star + bump)
            assert np.array_equal(base.weights, again.weights)
        with pytest.raises(InvalidArgumentError):
            npp_mixed([F, F], us, level=t_star - 0.5)


def test_npp_positivity_on_psd_instances():
    g = GridTorus((8, 8))
    rng = np.random.default_rng(23)
    F = make_closed_form(g, np.eye(2))
    metric = identity_metric(g)
    for _ in range(5):
        us = [with_poles(sample_convex_potential(g, rng, metric),
                         random_pole_mask(g, rng, 2)) for _ in range(2)]
        mu = npp_mixed([F, F], us)
        assert np.min(mu.weights) >= 0.0


def test_npp_permutation_symmetry_bitwise_d3():
    g = GridTorus((4, 4, 4))
    rng = np.random.default_rng(31)
    metric = identity_metric(g)
    Fs = [make_closed_form(g, np.eye(3) * s, 0.01 * fourier_field(g, rng, max_mode=1))
          for s in (1.0, 1.5, 2.0)]
    us = [sample_convex_potential(g, rng, metric, max_mode=1) for _ in range(3)]
    base = npp_mixed(Fs, us)
    for perm in [(1, 0, 2), (2, 1, 0), (2, 0, 1)]:
        other = npp_mixed([Fs[i] for i in perm], [us[i] for i in perm])
        assert np.array_equal(base.weights, other.weights)


def test_npp_multilinearity():
    g = GridTorus((8, 8))
    rng = np.random.default_rng(37)
    metric = identity_metric(g)
    G1 = general_form(g, make_closed_form(g, np.eye(2), 0.01 * fourier_field(g, rng)).G)
    G2 = general_form(g, make_closed_form(g, 2 * np.eye(2), 0.01 * fourier_field(g, rng)).G)
    Ffix = make_closed_form(g, np.eye(2))
    u1, u2, ufix = [sample_convex_potential(g, rng, metric) for _ in range(3)]
    a, b = 0.4, 0.6
    blend_form = general_form(g, a * G1.G + b * G2.G)
    blend_u = QPshFunction(g, a * u1.values + b * u2.values)
    lhs = npp_mixed([blend_form, Ffix], [blend_u, ufix]).weights
    rhs = (a * npp_mixed([G1, Ffix], [u1, ufix]).weights
           + b * npp_mixed([G2, Ffix], [u2, ufix]).weights)
    rel = np.max(np.abs(lhs - rhs)) / (1.0 + np.max(np.abs(lhs)))
    assert rel <= 1e-10


def test_npp_stencil_locality():
    g = GridTorus((12, 12))
    rng = np.random.default_rng(41)
    metric = identity_metric(g)
    F = make_closed_form(g, np.eye(2))
    u = sample_convex_potential(g, rng, metric)
    patch = random_pole_mask(g, rng, 2)
    far = ~g.stencil_dilate(g.stencil_dilate(patch))
    v = QPshFunction(g, np.where(g.stencil_dilate(patch), u.values - 0.7, u.values))
    wu = ma(F, u).weights
    wv = ma(F, v).weights
    assert np.array_equal(wu[far], wv[far])


# -- ma -----------------------------------------------------------------------


def test_ma_identity_d2():
    g = GridTorus((8, 8))
    F = make_closed_form(g, np.eye(2))
    mu = ma(F, constant(g, 0.0))
    assert np.all(mu.weights == 1.0)
    assert total_mass(mu) == pytest.approx(1.0)


def test_ma_closed_d1_mass_exact():
    g = GridTorus(128)
    rng = np.random.default_rng(43)
    F = make_closed_form(g, [[3.0]], 0.1 * fourier_field(g, rng))
    for _ in range(5):
        u = QPshFunction(g, 0.5 * fourier_field(g, rng))
        assert abs(total_mass(ma(F, u)) - 3.0) <= 1e-12


def test_ma_pole_support_mask_d2():
    g = GridTorus((8, 8))
    F = make_closed_form(g, np.eye(2))
    vals = np.zeros((8, 8))
    vals[3, 3] = -np.inf
    mu = ma(F, QPshFunction(g, vals))
    pole = np.zeros((8, 8), dtype=bool)
    pole[3, 3] = True
    excluded = g.stencil_dilate(pole)
    assert np.all(mu.weights[excluded] == 0.0)
    assert np.array_equal(mu.support_mask, g.stencil_erode(~pole))


# -- mass defect and monotonicity ---------------------------------------------


def test_delta_closed_d1_is_zero():
    g = GridTorus(64)
    F = make_closed_form(g, [[2.0]])
    defect = delta_theta_estimate(F, 1.0, samples=8, seed=5)
    assert 0.0 <= defect.estimate <= 1e-12


def test_delta_closed_d2_within_stokes_tol():
    g = GridTorus((32, 32))
    F = make_closed_form(g, np.eye(2))
    defect = delta_theta_estimate(F, 1.0, samples=20, seed=5)
    assert defect.estimate <= 10.0 * (1.0 / 32) ** 2


def test_delta_general_positive_golden():
    g = GridTorus((16, 16))
    x, y = g.coordinates()
    G = np.zeros((16, 16, 2, 2))
    G[..., 0, 0] = 1.0 + 0.3 * np.sin(2 * np.pi * y)
    G[..., 1, 1] = 1.0
    F = general_form(g, G)
    defect = delta_theta_estimate(F, 1.0, samples=50, seed=3)
    assert defect.estimate > 0.0
    # frozen value of the seeded run
    assert defect.estimate == pytest.approx(GOLDEN_DELTA_GENERAL, rel=0, abs=1e-12)


GOLDEN_DELTA_GENERAL = 0.06350180416955309


def test_mass_monotonicity_examples():
    g = GridTorus(8)
    F = make_closed_form(g, [[4.0]])
    zero = constant(g, 0.0)
    defect = delta_theta_estimate(F, 1.0, samples=4, seed=2)

    same = mass_monotonicity_check(F, zero, zero, defect)
    assert same.holds and same.lhs <= same.rhs

    vals = np.zeros(8)
    vals[0] = -np.inf
    poled = QPshFunction(g, vals)
    rep = mass_monotonicity_check(F, poled, zero, defect)
    assert rep.holds and rep.lhs == pytest.approx(2.5) and rep.rhs >= 4.0

    with pytest.raises(InvalidComparisonError):
        mass_monotonicity_check(F, zero, poled, defect)


def test_mass_monotonicity_seeded_general_d2():
    g = GridTorus((16, 16))
    rng = np.random.default_rng(8)
    x, y = g.coordinates()
    G = np.zeros((16, 16, 2, 2))
    G[..., 0, 0] = 1.0 + 0.3 * np.sin(2 * np.pi * y)
    G[..., 1, 1] = 1.0
    F = general_form(g, G)
    metric = identity_metric(g)
    defect = delta_theta_estimate(F, 1.0, samples=50, seed=8)
    for _ in range(20):
        psi = sample_convex_potential(g, rng, metric, amplitude=0.25)
        phi = with_poles(psi, random_pole_mask(g, rng, int(rng.integers(0, 4))))
        rep = mass_monotonicity_check(F, phi, psi, defect)
        assert rep.holds


def test_mass_monotonicity_closed_d1_any_pair_exact():
    g = GridTorus(64)
    rng = np.random.default_rng(55)
    F = make_closed_form(g, [[4.0]])
    defect = delta_theta_estimate(F, 1.0, samples=4, seed=9)
    for _ in range(5):
        phi = QPshFunction(g, 0.4 * fourier_field(g, rng))
        psi = QPshFunction(g, 0.4 * fourier_field(g, rng))
        rep = mass_monotonicity_check(F, phi, psi, defect)
        assert rep.holds
        assert rep.lhs == pytest.approx(4.0, abs=1e-12)
