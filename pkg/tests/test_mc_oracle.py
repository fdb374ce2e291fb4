import math

import numpy as np
import pytest

from hexmimo.hexnet import HexNetwork, make_pilot_plan, point_in_hexagon
from hexmimo.mc_oracle import (
    SIGMA2,
    DualityInfeasibleError,
    _fast_sinr_from_alpha,
    _wishart_increment,
    build_psi_matrix,
    combiner,
    dft_pilot_book,
    duality_power_control,
    duality_tables,
    empirical_expectations,
    empirical_se_study,
    empirical_sinr_impaired,
    empirical_sinr_ul,
    error_covariance_diag,
    fixed_position_sinr,
    fixed_position_sinr_closed,
    make_scenario,
    mmse_estimate,
    pilot_quadratic_forms,
    ul_sinr_from_tables,
    validation_rows,
)
from hexmimo.moments import compute_moments_average
from hexmimo.se_core import FeasibilityError, SeConfig, se_joint


@pytest.fixture(scope="module")
def net1():
    return HexNetwork(tiers=1)


@pytest.fixture(scope="module")
def net2():
    return HexNetwork(tiers=2)


@pytest.fixture(scope="module")
def sc_small(net1):
    # 7 cells, 2 UEs each, all sharing the same 2 pilots
    plan = make_pilot_plan(1, net1, K=2)
    cfg = SeConfig(M=8, K=2, beta=1)
    return make_scenario(net1, plan, cfg, rng=11)


@pytest.fixture(scope="module")
def sc_mid(net1):
    plan = make_pilot_plan(1, net1, K=3)
    cfg = SeConfig(M=24, K=3, beta=1)
    return make_scenario(net1, plan, cfg, rng=4)


@pytest.fixture(scope="module")
def sc_reuse3(net2):
    # three pilot groups, so pzf differs from zf
    plan = make_pilot_plan(3, net2, K=2)
    cfg = SeConfig(M=40, K=2, beta=3)
    return make_scenario(net2, plan, cfg, rng=9)


def _draw_pilot_blocks(scenario, rng, n_draws, bs=0):
    """Explicit channels and received pilot blocks, mirroring the simulator."""
    m = scenario.cfg.M
    std = scenario.effective_std(bs)
    v_rows = scenario.book[:, scenario.pilot_idx.reshape(-1)].T
    z = rng.standard_normal((n_draws, m, scenario.n_ue, 2))
    h_eff = (z[..., 0] + 1j * z[..., 1]) / math.sqrt(2.0) * std
    zn = rng.standard_normal((n_draws, m, scenario.cfg.B, 2))
    noise = (zn[..., 0] + 1j * zn[..., 1]) / math.sqrt(2.0) * math.sqrt(SIGMA2)
    return h_eff, h_eff @ v_rows + noise


def test_pilot_book_orthogonal():
    for b in (1, 2, 3, 7):
        v = dft_pilot_book(b)
        np.testing.assert_allclose(np.abs(v), 1.0, atol=1e-12)
        np.testing.assert_allclose(v.conj().T @ v, b * np.eye(b), atol=1e-10)


def test_make_scenario_geometry(net1, sc_small):
    sc = sc_small
    excl = net1.min_ue_distance_factor * net1.r
    for ci in range(sc.n_cells):
        for kk in range(sc.cfg.K):
            local = sc.positions[ci, kk] - net1.centers[ci]
            assert point_in_hexagon(local, net1.r)
            assert np.hypot(*local) >= excl - 1e-12
    # power control inverts the serving-cell pathloss exactly
    np.testing.assert_allclose(
        sc.powers * sc.serving_gains(), sc.cfg.snr * SIGMA2, rtol=1e-12
    )
    # reuse-1: every cell uses pilots 0..K-1
    assert sc.pilot_idx.shape == (7, 2)
    np.testing.assert_array_equal(sc.pilot_idx, np.tile([0, 1], (7, 1)))
    with pytest.raises(ValueError):
        make_scenario(net1, sc.plan, SeConfig(M=8, K=3, beta=1), rng=0)


def test_make_scenario_reproducible(net1):
    plan = make_pilot_plan(1, net1, K=2)
    cfg = SeConfig(M=8, K=2, beta=1)
    a = make_scenario(net1, plan, cfg, rng=5)
    b = make_scenario(net1, plan, cfg, rng=5)
    c = make_scenario(net1, plan, cfg, rng=6)
    np.testing.assert_array_equal(a.positions, b.positions)
    assert np.any(a.positions != c.positions)


def test_psi_diagonalized_by_pilot_book(sc_reuse3):
    sc = sc_reuse3
    rho = sc.cfg.snr * SIGMA2
    b = sc.cfg.B
    psi = build_psi_matrix(sc)
    np.testing.assert_allclose(psi, psi.conj().T, atol=1e-12)
    alpha = (sc.gains[0] / sc.serving_gains()).reshape(-1)
    group = np.bincount(sc.pilot_idx.reshape(-1), weights=alpha, minlength=b)
    lam = b * group + SIGMA2 / rho
    # each pilot waveform is an eigenvector with the group-sum eigenvalue
    for bb in range(b):
        v = sc.book[:, bb]
        np.testing.assert_allclose(psi @ v, lam[bb] * v, atol=1e-10)
    quad = pilot_quadratic_forms(sc)
    np.testing.assert_allclose(np.diag(quad).real, b / lam, rtol=1e-10)
    off = quad - np.diag(np.diag(quad))
    assert np.abs(off).max() < 1e-9


def test_mmse_estimate_matches_scalar_law(sc_reuse3):
    sc = sc_reuse3
    rho = sc.cfg.snr * SIGMA2
    b = sc.cfg.B
    rng = np.random.default_rng(3)
    _, y = _draw_pilot_blocks(sc, rng, 1)
    h_v, est = mmse_estimate(y[0], sc)
    alpha = sc.gains[0] / sc.serving_gains()
    group = np.bincount(sc.pilot_idx.reshape(-1), weights=alpha.reshape(-1), minlength=b)
    lam = b * group + SIGMA2 / rho
    # matrix solve must reduce to one correlation per pilot
    np.testing.assert_allclose(h_v, (y[0] @ sc.book.conj()) / lam, atol=1e-10)
    np.testing.assert_allclose(
        est, alpha[..., None] * h_v.T[sc.pilot_idx], atol=1e-12
    )


def test_error_covariance_empirical(sc_small):
    sc = sc_small
    n, m = 10_000, sc.cfg.M
    rng = np.random.default_rng(17)
    h_eff, y = _draw_pilot_blocks(sc, rng, n)
    _, est = mmse_estimate(y, sc)  # broadcasts over draws, giving (L, K, n, M)
    h_by_ue = h_eff.reshape(n, m, sc.n_cells, sc.cfg.K).transpose(2, 3, 0, 1)
    err = h_by_ue - est
    emp = (err.real**2 + err.imag**2).mean(axis=(2, 3))
    want = error_covariance_diag(sc)
    # |err|^2 is exponential, so the sample-mean sd is want / sqrt(n * M)
    tol = 4.0 * want / math.sqrt(n * m)
    assert np.all(np.abs(emp - want) <= tol)


def test_estimate_orthogonal_to_error(sc_small):
    sc = sc_small
    n, m = 10_000, sc.cfg.M
    rng = np.random.default_rng(23)
    h_eff, y = _draw_pilot_blocks(sc, rng, n)
    _, est = mmse_estimate(y, sc)
    h_by_ue = h_eff.reshape(n, m, sc.n_cells, sc.cfg.K).transpose(2, 3, 0, 1)
    err = h_by_ue - est
    inner = (est.conj() * err).sum(axis=3).mean(axis=2)  # per-UE E{est^H err}
    scale = np.sqrt((est.real**2 + est.imag**2).sum(axis=3).mean(axis=2))
    scale *= np.sqrt((err.real**2 + err.imag**2).sum(axis=3).mean(axis=2))
    assert np.all(np.abs(inner) / scale <= 4.0 / math.sqrt(n))


def test_copilot_estimates_exactly_parallel(sc_small):
    sc = sc_small
    rng = np.random.default_rng(2)
    _, y = _draw_pilot_blocks(sc, rng, 1)
    _, est = mmse_estimate(y[0], sc)
    # reuse-1: all cells share pilots, so estimates for pilot k are collinear
    for kk in range(sc.cfg.K):
        ref = est[0, kk]
        for l in range(1, sc.n_cells):
            other = est[l, kk]
            cos = abs(ref.conj() @ other)
            assert cos == pytest.approx(
                np.linalg.norm(ref) * np.linalg.norm(other), rel=1e-12
            )


def test_combiner_identities(sc_reuse3):
    sc = sc_reuse3
    rng = np.random.default_rng(8)
    _, y = _draw_pilot_blocks(sc, rng, 1)
    h_v, est = mmse_estimate(y[0], sc)
    plan = sc.plan
    own = plan.colors[0] * plan.K + np.arange(plan.K)

    g_mr = combiner("mr", h_v, plan)
    np.testing.assert_array_equal(g_mr, h_v[:, own])

    g_zf = combiner("zf", h_v, plan)
    np.testing.assert_allclose(
        g_zf.conj().T @ h_v[:, own], np.eye(plan.K), atol=1e-10
    )

    g_pzf = combiner("pzf", h_v, plan)
    want = np.zeros((plan.K, sc.cfg.B))
    want[np.arange(plan.K), own] = 1.0
    np.testing.assert_allclose(g_pzf.conj().T @ h_v, want, atol=1e-10)

    with pytest.raises(FeasibilityError):
        combiner("pzf", h_v[: sc.cfg.B - 1], plan)  # M <= B
    with pytest.raises(FeasibilityError):
        combiner("zf", h_v[: plan.K], plan)  # M <= K


@pytest.mark.parametrize("scheme", ["mr", "zf", "pzf"])
def test_fixed_position_empirical_matches_closed(sc_mid, scheme):
    closed = fixed_position_sinr_closed(scheme, sc_mid)
    emp, stderr = fixed_position_sinr(scheme, sc_mid, 8000, rng=31, n_batches=8)
    assert np.all(np.abs(emp - closed) <= 4.0 * stderr + 1e-9)
    np.testing.assert_allclose(emp, closed, rtol=0.1)


def test_combiner_norms_follow_inverse_wishart(sc_mid):
    # E||g||^2 = 1 / (dof * rho * phi) with dof = M-K (zf) or M-B (pzf)
    sc = sc_mid
    rho = sc.cfg.snr * SIGMA2
    phi = np.diag(pilot_quadratic_forms(sc)).real
    own = sc.pilot_idx[0]
    for scheme, dof in (("zf", sc.cfg.M - sc.cfg.K), ("pzf", sc.cfg.M - sc.cfg.B)):
        t = empirical_expectations(scheme, sc, 6000, rng=13)
        want = 1.0 / (dof * rho * phi[own])
        np.testing.assert_allclose(t.norm, want, rtol=0.1)


def test_fast_engine_matches_closed(sc_reuse3):
    sc = sc_reuse3
    alpha = (sc.gains[0] / sc.serving_gains()).reshape(-1)
    pil = sc.pilot_idx.reshape(-1)
    out = _fast_sinr_from_alpha(
        alpha, pil, sc.cfg.K, sc.cfg.B, sc.cfg.snr, (24, 40),
        ("mr", "zf", "pzf"), 30_000, np.random.SeedSequence(21),
    )
    from dataclasses import replace

    for m in (24, 40):
        sc_m = make_scenario(sc.net, sc.plan, replace(sc.cfg, M=m), rng=9)
        for scheme in ("mr", "zf", "pzf"):
            closed = fixed_position_sinr_closed(scheme, sc_m)
            np.testing.assert_allclose(out[(scheme, m)], closed, rtol=0.03)


def test_wishart_increment_moments():
    rng = np.random.default_rng(5)
    c, b, dm = 4000, 5, 9
    g = _wishart_increment(rng, c, b, dm).astype(np.complex128)
    em = g.mean(axis=0)
    tol = 5.0 * math.sqrt(dm) / math.sqrt(c)
    assert np.abs(np.diagonal(em).real - dm).max() < tol
    assert np.abs(em - np.diag(np.diagonal(em))).max() < tol
    # E[G^-1] = I / (dm - b) for a complex Wishart
    dinv = np.diagonal(np.linalg.inv(g), axis1=1, axis2=2).real.mean(axis=0)
    np.testing.assert_allclose(dinv, 1.0 / (dm - b), rtol=0.1)
    # short blocks fall back to the explicit product
    g2 = _wishart_increment(rng, c, 6, 2).astype(np.complex128)
    assert np.abs(g2.mean(axis=0) - 2 * np.eye(6)).max() < 5.0 * math.sqrt(2.0 / c) * 6


@pytest.mark.parametrize("scheme", ["mr", "zf", "pzf"])
def test_duality_reproduces_ul_sinrs(net1, scheme):
    plan = make_pilot_plan(1, net1, K=4)
    cfg = SeConfig(M=32, K=4, beta=1)
    sc = make_scenario(net1, plan, cfg, rng=2)
    tables = duality_tables(scheme, sc, 1500, rng=7)
    gam = ul_sinr_from_tables(tables)
    sol = duality_power_control(sc, gam, tables)
    assert np.all(sol.q > 0)
    np.testing.assert_allclose(sol.dl_sinr, gam, rtol=1e-9)
    assert sol.dl_total_power == pytest.approx(sol.ul_total_power, rel=1e-9)


def test_duality_with_distortion(net1):
    plan = make_pilot_plan(1, net1, K=2)
    cfg = SeConfig(M=16, K=2, beta=1)
    sc = make_scenario(net1, plan, cfg, rng=3)
    tables = duality_tables("zf", sc, 1200, rng=1)
    gam = ul_sinr_from_tables(tables, epsilon=0.2)
    sol = duality_power_control(sc, gam, tables, epsilon=0.2)
    np.testing.assert_allclose(sol.dl_sinr, gam, rtol=1e-9)
    assert sol.dl_total_power == pytest.approx(sol.ul_total_power, rel=1e-9)


def test_duality_rejects_unreachable_targets(net1):
    plan = make_pilot_plan(1, net1, K=2)
    cfg = SeConfig(M=16, K=2, beta=1)
    sc = make_scenario(net1, plan, cfg, rng=3)
    tables = duality_tables("mr", sc, 1200, rng=1)
    gam = ul_sinr_from_tables(tables)
    with pytest.raises(DualityInfeasibleError):
        duality_power_control(sc, 1e4 * gam, tables)


def test_study_bounds_from_below(net1):
    # closed form averages moments before inverting, so it must not exceed
    # the position-averaged simulation by more than mc noise
    plan = make_pilot_plan(1, net1, K=2)
    cfg = SeConfig(M=30, K=2, beta=1)
    moments = compute_moments_average(net1, 40_000, rng=0)
    study = empirical_se_study(
        net1, plan, cfg, n_channel_draws=2000, n_position_draws=40, seed=5
    )
    for scheme in ("mr", "zf", "pzf"):
        cell = study[(scheme, 30)]
        closed = se_joint(scheme, cfg, moments, plan).se_total
        assert closed <= cell.se_total + 3.0 * cell.se_stderr
        assert closed >= 0.5 * cell.se_total


def test_study_worker_count_invariance(net1):
    plan = make_pilot_plan(1, net1, K=2)
    cfg = SeConfig(M=16, K=2, beta=1)
    kw = dict(m_values=(8, 16), n_channel_draws=1200, n_position_draws=6, seed=3)
    r1 = empirical_se_study(net1, plan, cfg, n_workers=1, **kw)
    r2 = empirical_se_study(net1, plan, cfg, n_workers=2, **kw)
    for key in r1:
        assert r1[key].se_total == r2[key].se_total
        assert r1[key].se_stderr == r2[key].se_stderr


def test_distortion_zero_is_bit_identical(net1):
    plan = make_pilot_plan(1, net1, K=2)
    cfg = SeConfig(M=16, K=2, beta=1)
    sc = make_scenario(net1, plan, cfg, rng=1)
    base = empirical_sinr_ul("zf", sc, n_channel_draws=1000, n_position_draws=6, seed=2)
    eps0 = empirical_sinr_impaired(
        "zf", sc, 0.0, n_channel_draws=1000, n_position_draws=6, seed=2
    )
    assert eps0.se_total == base.se_total
    eps3 = empirical_sinr_impaired(
        "zf", sc, 0.3, n_channel_draws=1000, n_position_draws=6, seed=2
    )
    assert eps3.se_total < base.se_total


def test_study_monotone_in_antennas(net1):
    plan = make_pilot_plan(1, net1, K=2)
    cfg = SeConfig(M=64, K=2, beta=1)
    study = empirical_se_study(
        net1, plan, cfg, m_values=(16, 32, 64), n_channel_draws=2000,
        n_position_draws=20, seed=7,
    )
    for scheme in ("mr", "zf", "pzf"):
        se = [study[(scheme, m)].se_total for m in (16, 32, 64)]
        assert se[0] < se[1] < se[2]


def test_validation_rows_contract(net1):
    plan = make_pilot_plan(1, net1, K=2)
    cfg = SeConfig(M=24, K=2, beta=1)
    moments = compute_moments_average(net1, 40_000, rng=0)
    rows = validation_rows(
        net1, plan, cfg, moments, m_values=(24,), n_channel_draws=1500,
        n_position_draws=10, seed=1, rel_tol=0.5, pzf_rel_tol=0.5,
    )
    assert len(rows) == 3
    for row in rows:
        assert row["se_mc"] > 0 and row["mc_stderr"] > 0
        gap = (row["se_closed"] - row["se_mc"]) / row["se_mc"]
        assert row["rel_gap"] == pytest.approx(gap, rel=1e-12)
        if row["scheme"] == "pzf":
            want = (row["se_closed"] <= row["se_mc"] + 3 * row["mc_stderr"]
                    and abs(gap) <= 0.5)
        else:
            want = abs(gap) <= 0.5
        assert row["ok"] == want


def test_argument_validation(net1, sc_small):
    plan = make_pilot_plan(1, net1, K=2)
    cfg = SeConfig(M=16, K=2, beta=1)
    with pytest.raises(ValueError):
        empirical_sinr_ul("mr", sc_small, n_channel_draws=500)
    with pytest.raises(ValueError):
        empirical_se_study(net1, plan, cfg, n_position_draws=1)
    with pytest.raises(ValueError):
        fixed_position_sinr("mr", sc_small, 5, n_batches=10)
    with pytest.raises(ValueError):
        empirical_expectations("mr", sc_small, 0)
    with pytest.raises(FeasibilityError):
        empirical_se_study(net1, plan, cfg, m_values=(2, 16))
