import numpy as np
import pytest

from pluritorus import (GridTorus, InvalidArgumentError, QPshFunction,
                        constant, contact_concentration, directional_slack,
                        envelope, general_form, make_closed_form, rooftop,
                        v_theta)

from oracles import envelope_lp


def obstacle_family(n, rng, count):
    """Piecewise wells and bumps used across the envelope tests."""
    x = np.arange(n) / n
    out = []
    for _ in range(count):
        f = np.zeros(n)
        for _ in range(int(rng.integers(1, 4))):
            c = rng.uniform(0, 1)
            w = rng.uniform(0.05, 0.25)
            depth = rng.uniform(-1.5, 0.5)
            dist = np.minimum(np.abs(x - c), 1.0 - np.abs(x - c))
            f = np.where(dist < w, np.minimum(f, depth), f)
        out.append(f)
    return out


def test_envelope_trivial_examples():
    g = GridTorus((12, 12))
    F = make_closed_form(g, np.eye(2))
    res = envelope(F, g.field(0.0))
    assert res.converged and np.all(res.env.values == 0.0)
    res_c = envelope(F, g.field(-3.5))
    assert res_c.converged and np.all(res_c.env.values == -3.5)


def test_envelope_obstacle_against_lp():
    n = 32
    g = GridTorus(n)
    F = make_closed_form(g, [[50.0]])
    x = np.arange(n) / n
    f = np.where((x >= 0.40625) & (x <= 0.59375), -1.0, 0.0)
    res = envelope(F, f)
    status, lp = envelope_lp(F, f)
    assert res.converged and status == "converged"
    assert np.max(np.abs(res.env.values - lp)) <= 1e-8
    assert np.all(res.env.values <= f + 1e-12)
    assert directional_slack(F, res.env) >= -1e-8


def test_envelope_statuses():
    g = GridTorus(16)
    assert v_theta(make_closed_form(g, [[2.0]])).status == "converged"
    assert v_theta(make_closed_form(g, [[-1.0]])).status == "infeasible"
    unb = envelope(make_closed_form(g, [[2.0]]), np.full(16, np.inf))
    assert unb.status == "unbounded"
    inf_unb = envelope(make_closed_form(g, [[-1.0]]), np.full(16, np.inf))
    assert inf_unb.status == "infeasible"
    with pytest.raises(InvalidArgumentError):
        envelope(make_closed_form(g, [[2.0]]), np.full(16, -np.inf))


def test_v_theta_general_matches_lp_status():
    rng = np.random.default_rng(13)
    n = 24
    g = GridTorus(n)
    x = np.arange(n) / n
    for shift in (0.6, 0.2, -0.2):
        G = (shift + np.sin(2 * np.pi * x))[:, None, None]
        F = general_form(g, G)
        res = v_theta(F)
        status, lp = envelope_lp(F, g.field(0.0))
        assert res.status == status
        if status == "converged":
            assert np.max(np.abs(res.env.values - lp)) <= 1e-8


def test_envelope_with_pole_obstacle():
    n = 32
    g = GridTorus(n)
    F = make_closed_form(g, [[40.0]])
    f = np.zeros(n)
    f[7] = -np.inf
    res = envelope(F, f)
    assert res.converged
    assert np.isneginf(res.env.values[7])
    assert np.isfinite(res.env.values[np.arange(n) != 7]).all()


def test_envelope_idempotent_and_monotone():
    n = 48
    g = GridTorus(n)
    rng = np.random.default_rng(3)
    F = make_closed_form(g, [[30.0]])
    for f in obstacle_family(n, rng, 5):
        res = envelope(F, f)
        again = envelope(F, res.env.values)
        assert np.array_equal(res.env.values, again.env.values)
        higher = envelope(F, f + 0.3)
        assert np.all(res.env.values <= higher.env.values + 1e-12)


def test_envelope_concave_under_min():
    n = 48
    g = GridTorus(n)
    rng = np.random.default_rng(5)
    F = make_closed_form(g, [[25.0]])
    f, h = obstacle_family(n, rng, 2)
    e_min = envelope(F, np.minimum(f, h)).env.values
    cap = np.minimum(envelope(F, f).env.values, envelope(F, h).env.values)
    assert np.all(e_min <= cap + 1e-12)


def test_contact_concentration_examples():
    n = 32
    g = GridTorus(n)
    F = make_closed_form(g, [[50.0]])
    res0 = envelope(F, g.field(0.0))
    rep0 = contact_concentration(F, g.field(0.0), res0, delta=1e-6)
    assert rep0.offside_mass == 0.0

    x = np.arange(n) / n
    f = np.where((x >= 0.40625) & (x <= 0.59375), -1.0, 0.0)
    res = envelope(F, f)
    rep = contact_concentration(F, f, res, delta=1e-6)
    assert rep.holds and rep.offside_mass <= rep.threshold

    big = contact_concentration(F, f, res, delta=100.0)
    assert big.offside_mass == 0.0


def test_contact_concentration_d2():
    g = GridTorus((24, 24))
    F = make_closed_form(g, 30 * np.eye(2))
    x, y = g.coordinates()
    f = np.where((x - 0.5) ** 2 + (y - 0.5) ** 2 < 0.04, -1.0, 0.0)
    res = envelope(F, f)
    rep = contact_concentration(F, f, res, delta=1e-6)
    assert rep.holds


def test_rooftop_examples():
    n = 32
    g = GridTorus(n)
    F = make_closed_form(g, [[30.0]])
    res0 = envelope(F, np.where(np.arange(n) == 5, -0.7, 0.0))
    u = res0.env
    r_same = rooftop(F, u, u)
    assert np.array_equal(r_same.env.values, u.values)
    assert r_same.checks["min_principle"]["holds"]

    below = QPshFunction(g, u.values - 0.4)
    r_below = rooftop(F, below, u)
    # tight nodes are recomputed through shifted arithmetic: ulp-level only
    np.testing.assert_allclose(r_below.env.values, below.values, rtol=0, atol=1e-12)


def test_rooftop_crossing_pair_lp():
    n = 48
    g = GridTorus(n)
    F = make_closed_form(g, [[40.0]])
    x = np.arange(n) / n
    u = envelope(F, np.where(np.abs(x - 0.3) < 0.15, -1.0, 0.0)).env
    v = envelope(F, np.where(np.abs(x - 0.7) < 0.15, -0.8, 0.2)).env
    r = rooftop(F, u, v)
    assert r.converged and r.checks["min_principle"]["holds"]
    status, lp = envelope_lp(F, np.minimum(u.values, v.values))
    assert status == "converged"
    assert np.max(np.abs(r.env.values - lp)) <= 1e-8


def test_rooftop_requires_admissible_inputs():
    g = GridTorus(16)
    F = make_closed_form(g, [[1.0]])
    spike = np.zeros(16)
    spike[4] = 1.0  # concave kink: far from admissible
    with pytest.raises(InvalidArgumentError):
        rooftop(F, QPshFunction(g, spike), constant(g, 0.0))


def test_envelope_desk_scale_n512():
    n = 512
    g = GridTorus(n)
    x = np.arange(n) / n
    F = make_closed_form(g, [[60.0]])
    f = np.where(np.abs(x - 0.4) < 0.1, -1.0, 0.0)
    res = envelope(F, f)
    status, lp = envelope_lp(F, f)
    assert res.converged and status == "converged"
    assert np.max(np.abs(res.env.values - lp)) <= 1e-8
    assert np.array_equal(envelope(F, res.env.values).env.values, res.env.values)


def test_envelope_mixed_sign_fuzz_against_lp():
    rng = np.random.default_rng(999)
    worst = 0.0
    for _ in range(20):
        n = int(rng.choice([24, 32]))
        g = GridTorus(n)
        x = np.arange(n) / n
        curb = (rng.uniform(-0.5, 3.0)
                + rng.uniform(0.0, 3.0) * np.sin(2 * np.pi * x + rng.uniform(0, 7)))
        F = general_form(g, curb[:, None, None])
        f = np.where(np.abs(x - rng.uniform(0, 1)) < rng.uniform(0.05, 0.3),
                     rng.uniform(-1.0, 0.0), 0.0)
        res = envelope(F, f)
        status, lp = envelope_lp(F, f)
        assert res.status == status
        if status == "converged":
            worst = max(worst, float(np.max(np.abs(res.env.values - lp))))
    assert worst <= 1e-8


def test_sweep_kernel_fallback_parity(monkeypatch):
    # the accelerated kernel and the pure reference loop must agree bit-for-bit
    import pluritorus.envelopes as env_mod
    n = 32
    g = GridTorus(n)
    x = np.arange(n) / n
    F = make_closed_form(g, [[35.0]])
    f = np.where(np.abs(x - 0.45) < 0.12, -0.8, 0.0)
    fast = envelope(F, f)
    monkeypatch.setattr(env_mod, "_sweep", env_mod._sweep_reference)
    slow = envelope(F, f)
    assert fast.sweeps == slow.sweeps
    assert np.array_equal(fast.env.values, slow.env.values)
