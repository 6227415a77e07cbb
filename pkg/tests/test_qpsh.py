import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pluritorus import (GridTorus, InvalidArgumentError, QPshFunction, chi_eps,
                        constant, make_closed_form, sublevel_mask,
                        theta_convex_slack, truncate)


def grid1(n=16):
    return GridTorus(n)


def test_qpsh_validation():
    g = grid1()
    with pytest.raises(InvalidArgumentError):
        QPshFunction(g, np.full(16, np.nan))
    with pytest.raises(InvalidArgumentError):
        QPshFunction(g, np.full(16, np.inf))
    with pytest.raises(InvalidArgumentError):
        QPshFunction(g, np.full(16, -np.inf))
    u = QPshFunction(g, np.full(16, -np.inf), all_poles=True)
    assert u.pole_set.all()


def test_truncate_examples():
    g = grid1()
    u = constant(g, 0.0)
    assert np.array_equal(truncate(u, 5.0).values, u.values)

    vals = np.zeros(16)
    vals[0] = -np.inf
    u = QPshFunction(g, vals)
    t = truncate(u, 1.0)
    assert t.values[0] == -1.0 and not t.has_poles
    assert np.all(t.values[1:] == 0.0)

    rng = np.random.default_rng(2)
    table = rng.normal(size=16)
    u = QPshFunction(g, table)
    np.testing.assert_array_equal(truncate(u, 0.5).values, np.maximum(table, -0.5))


@given(t=st.floats(-3, 3), s=st.floats(-3, 3))
@settings(max_examples=40, deadline=None)
def test_truncate_semigroup(t, s):
    g = grid1()
    vals = np.linspace(-2.0, 2.0, 16)
    vals[3] = -np.inf
    u = QPshFunction(g, vals)
    lhs = truncate(truncate(u, t), s)
    rhs = truncate(u, min(t, s))
    assert np.array_equal(lhs.values, rhs.values)


def test_sublevel_mask_examples():
    g = grid1()
    m = sublevel_mask([constant(g, 0.0)], 1.0)
    assert m.inside.all() and m.stencil_inside.all()

    vals = np.zeros(16)
    vals[0] = -np.inf
    u = QPshFunction(g, vals)
    m = sublevel_mask([u], 10.0)
    assert not m.inside[0] and m.inside[1:].all()
    assert not m.stencil_inside[[0, 1, 15]].any() and m.stencil_inside[2:15].all()

    v = np.zeros(16)
    v[8] = -np.inf
    masks = sublevel_mask([u, QPshFunction(g, v)], 10.0)
    expected = np.ones(16, dtype=bool)
    expected[[0, 8]] = False
    assert np.array_equal(masks.inside, expected)

    with pytest.raises(InvalidArgumentError):
        sublevel_mask([], 1.0)


def test_sublevel_mask_monotone():
    g = grid1()
    u = QPshFunction(g, np.linspace(-2, 2, 16))
    for lo, hi in [(0.5, 1.0), (1.0, 3.0)]:
        assert np.all(sublevel_mask([u], lo).inside <= sublevel_mask([u], hi).inside)


def test_chi_eps_examples():
    g = grid1()
    assert np.allclose(chi_eps(constant(g, 1.0), 1.0), 0.5)
    assert np.all(chi_eps(constant(g, -1.0), 0.3) == 0.0)

    vals = np.linspace(-1, 1, 16)
    vals[5] = -np.inf
    u = QPshFunction(g, vals)
    chi = chi_eps(u, 0.25)
    top = np.where(np.isneginf(vals), 0.0, np.maximum(vals, 0.0))
    np.testing.assert_allclose(chi, top / (top + 0.25))
    assert chi[5] == 0.0
    with pytest.raises(InvalidArgumentError):
        chi_eps(u, 0.0)


@given(e1=st.floats(1e-3, 1.0), e2=st.floats(1e-3, 1.0))
@settings(max_examples=40, deadline=None)
def test_chi_eps_monotone(e1, e2):
    g = grid1()
    u = QPshFunction(g, np.linspace(-1, 1.5, 16))
    lo, hi = min(e1, e2), max(e1, e2)
    assert np.all(chi_eps(u, lo) >= chi_eps(u, hi))


def test_slack_identity_form():
    g = grid1()
    F = make_closed_form(g, [[1.0]])
    rep = theta_convex_slack(constant(g, 0.0), F)
    assert rep.evaluated.all()
    np.testing.assert_allclose(rep.values, 1.0)


def test_slack_fourier_symbol_d1():
    # minimal slack of a*sin(2 pi x) against G = [1] has the closed form
    # 1 - a * (2/h^2) * (1 - cos(2 pi h))
    n, a = 64, 0.001
    g = GridTorus(n)
    x = np.arange(n) / n
    u = QPshFunction(g, a * np.sin(2 * np.pi * x))
    F = make_closed_form(g, [[1.0]])
    rep = theta_convex_slack(u, F)
    h = 1.0 / n
    expected = 1.0 - a * (2.0 / h ** 2) * (1.0 - np.cos(2 * np.pi * h))
    assert abs(rep.min - expected) < 1e-10


def test_slack_with_poles_reports_unevaluated():
    g = grid1()
    vals = np.zeros(16)
    vals[4] = -np.inf
    u = QPshFunction(g, vals)
    F = make_closed_form(g, [[1.0]])
    rep = theta_convex_slack(u, F)
    assert not rep.evaluated[[3, 4, 5]].any()
    assert np.isnan(rep.values[4])
    assert rep.evaluated[[0, 1, 2, 6, 7]].all()
    assert rep.min == 1.0
