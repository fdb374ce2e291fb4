"""First-principles Monte-Carlo oracle for the closed-form SE engine.

Nothing here reuses the interference expressions from se_core: pilot
signaling, MMSE channel estimation, receive combining, SINR expectations and
the UL/DL power-control duality are simulated from sampled channel
realizations.  The closed forms are validated against this independent
implementation of the same system model.

Two evaluation paths are provided.  The literal path materializes full
M-dimensional channels and runs every step explicitly; it is used for the
estimator- and combiner-level checks and for the duality solve.  The fast
path exploits the fact that, with orthogonal pilots, the per-pilot estimate
columns are iid complex Gaussian vectors whose Gram matrix is a sufficient
statistic for every combiner's SINR ingredients; it powers the large
position-averaged runs and is cross-validated against the literal path in
the tests.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve, lu_factor, lu_solve

from . import hexnet
from .se_core import SCHEMES, check_feasible, se_joint

SIGMA2 = 1.0  # receiver noise power; the SNR knob is cfg.snr = rho / SIGMA2

# inner-draw batch size for the fast path; fixed so that results are
# reproducible regardless of how outer draws are split across workers
_CHUNK = 512


def _as_rng(rng):
    if rng is None:
        rng = 0
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(int(rng))
    return rng


def _complex_normal(rng, shape):
    # circularly symmetric CN(0, 1) entries from two real gaussians
    z = rng.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) / math.sqrt(2.0)


def dft_pilot_book(b):
    """b mutually orthogonal unit-modulus pilot sequences (DFT columns)."""
    n = np.arange(b)
    return np.exp(-2j * np.pi * np.outer(n, n) / b)


@dataclass
class McScenario:
    """One concrete network snapshot: UE positions, pilots and powers.

    gains[j, l, k] is the pathloss between BS j and UE k of cell l;
    powers[l, k] = rho / gains[l, l, k] inverts the serving-cell pathloss so
    every effective channel seen by the serving BS has power rho.
    """

    net: hexnet.HexNetwork
    plan: hexnet.PilotPlan
    cfg: object  # SeConfig
    kappa: float
    positions: np.ndarray  # (L, K, 2)
    gains: np.ndarray  # (L, L, K)
    powers: np.ndarray  # (L, K)
    pilot_idx: np.ndarray  # (L, K) ints in [0, B)
    book: np.ndarray  # (B, B); column b is pilot waveform b

    @property
    def n_cells(self):
        return self.net.n_cells

    @property
    def n_ue(self):
        return self.net.n_cells * self.cfg.K

    def serving_gains(self):
        idx = np.arange(self.n_cells)
        return self.gains[idx, idx, :]  # (L, K)

    def effective_std(self, bs):
        # per-element std of sqrt(p) * h for every UE, flattened cell-major
        var = (self.powers * self.gains[bs]).reshape(-1)
        return np.sqrt(var)


def make_scenario(net, plan, cfg, rng=None, kappa=3.7):
    """Drop K UEs uniformly in every cell and fix pilots and UL powers."""
    if plan.K != cfg.K or plan.beta != cfg.beta:
        raise ValueError("pilot plan does not match the configuration")
    rng = _as_rng(rng)
    n_cells = net.n_cells
    k = cfg.K
    positions = np.empty((n_cells, k, 2))
    for ci, cell in enumerate(net.cells):
        positions[ci] = hexnet.sample_ue_position(cell, net, rng, size=k)
    # unit pathloss constant: only gain ratios and rho-normalized powers
    # enter any SINR, so the constant would cancel everywhere
    diff = positions[None, :, :, :] - net.centers[:, None, None, :]
    gains = np.hypot(diff[..., 0], diff[..., 1]) ** (-kappa)
    idx = np.arange(n_cells)
    powers = cfg.snr * SIGMA2 / gains[idx, idx, :]
    colors = np.asarray(plan.colors)
    pilot_idx = colors[:, None] * k + np.arange(k)
    return McScenario(
        net=net,
        plan=plan,
        cfg=cfg,
        kappa=float(kappa),
        positions=positions,
        gains=gains,
        powers=powers,
        pilot_idx=pilot_idx,
        book=dft_pilot_book(plan.B),
    )


def _alpha(scenario, bs):
    # gain of every UE at the observing BS relative to its serving BS
    return scenario.gains[bs] / scenario.serving_gains()  # (L, K)


def build_psi_matrix(scenario, bs=0):
    """Pilot-space covariance of the received pilot block at one BS."""
    rho = scenario.cfg.snr * SIGMA2
    alpha = _alpha(scenario, bs).reshape(-1)
    v = scenario.book[:, scenario.pilot_idx.reshape(-1)]  # (B, U)
    return (v * alpha) @ v.conj().T + (SIGMA2 / rho) * np.eye(scenario.cfg.B)


def mmse_estimate(y, scenario, bs=0):
    """MMSE-estimate every UE's effective channel from a pilot block y.

    Returns (h_v, est).  h_v is the (M, B) per-pilot estimate matrix shared
    by all combiners; est[l, k] is the (M,) estimate for UE k of cell l,
    which is the UE's relative gain times the column of its pilot.  y may
    carry leading batch axes, in which case they end up between the UE axes
    and the antenna axis of est.
    """
    psi = build_psi_matrix(scenario, bs)
    x = cho_solve(cho_factor(psi.T), scenario.book.conj())  # (B, B)
    h_v = y @ x
    alpha = _alpha(scenario, bs)
    cols = np.moveaxis(h_v, -1, 0)[scenario.pilot_idx]  # (L, K, ..., M)
    est = alpha.reshape(alpha.shape + (1,) * (h_v.ndim - 1)) * cols
    return h_v, est


def pilot_quadratic_forms(scenario, bs=0):
    """v_a^H Psi^-1 v_b for every pilot pair, as a (B, B) table."""
    psi = build_psi_matrix(scenario, bs)
    return scenario.book.conj().T @ cho_solve(cho_factor(psi), scenario.book)


def error_covariance_diag(scenario, bs=0):
    """Per-element estimation-error variance for each UE, as an (L, K) array."""
    rho = scenario.cfg.snr * SIGMA2
    phi = np.diag(pilot_quadratic_forms(scenario, bs)).real  # (B,)
    alpha = _alpha(scenario, bs)
    return rho * alpha * (1.0 - alpha * phi[scenario.pilot_idx])


def combiner(scheme, h_v, plan, cell=0):
    """Receive combining vectors for the K UEs of one cell, as columns.

    mr uses the own-cell estimates directly, zf orthogonalizes within the
    own-cell estimates, pzf orthogonalizes against all B pilot directions.
    """
    m, b = h_v.shape
    k = plan.K
    cfg_like = _FeasibilityShim(m, k, b)
    check_feasible(scheme, cfg_like)
    own = plan.colors[cell] * k + np.arange(k)
    est = h_v[:, own]  # own-cell estimates (relative gain is exactly 1)
    if scheme == "mr":
        return est
    if scheme == "zf":
        return est @ np.linalg.inv(est.conj().T @ est)
    return h_v @ np.linalg.inv(h_v.conj().T @ h_v)[:, own]


class _FeasibilityShim:
    # check_feasible only reads M, K and B
    def __init__(self, m, k, b):
        self.M = m
        self.K = k
        self.B = b


@dataclass
class ExpTable:
    """Channel-averaged SINR ingredients at one BS, positions held fixed.

    Everything is in effective-channel units (sqrt(p) folded into h):
    sig[k] = E{g_k^H h_own_k}, quad[k, u] = E{|g_k^H h_u|^2} over all UEs u
    in cell-major order, norm[k] = E{||g_k||^2}.
    """

    scheme: str
    bs: int
    n_draws: int
    sig: np.ndarray
    quad: np.ndarray
    norm: np.ndarray

    def sinr(self, epsilon=0.0):
        """Per-UE uplink SINR assembled from the stored expectations.

        epsilon > 0 models transceiver distortion: the useful power shrinks
        by (1 - epsilon^2) while the total received power is unchanged.
        """
        useful = (1.0 - epsilon**2) * np.abs(self.sig) ** 2
        den = self.quad.sum(axis=1) - useful + SIGMA2 * self.norm
        return useful / den


def empirical_expectations(scheme, scenario, n_draws, rng=None, bs=0, batch=256):
    """Estimate the SINR expectations by explicit channel simulation.

    Draws effective channels for every UE, simulates the pilot phase with
    additive noise, runs the MMSE estimator and the combiner, and
    accumulates the moments that enter the uplink SINR.
    """
    if n_draws < 1:
        raise ValueError("n_draws must be positive")
    rng = _as_rng(rng)
    cfg = scenario.cfg
    m, k, b = cfg.M, cfg.K, cfg.B
    check_feasible(scheme, cfg)

    std = scenario.effective_std(bs)
    v_rows = scenario.book[:, scenario.pilot_idx.reshape(-1)].T  # (U, B)
    psi = build_psi_matrix(scenario, bs)
    x_est = cho_solve(cho_factor(psi.T), scenario.book.conj())
    own = scenario.pilot_idx[bs]
    own_u = bs * k + np.arange(k)

    sig = np.zeros(k, dtype=complex)
    quad = np.zeros((k, scenario.n_ue))
    norm = np.zeros(k)
    done = 0
    while done < n_draws:
        nb = min(batch, n_draws - done)
        h_eff = _complex_normal(rng, (nb, m, scenario.n_ue)) * std
        noise = _complex_normal(rng, (nb, m, b)) * math.sqrt(SIGMA2)
        y = h_eff @ v_rows + noise
        h_v = y @ x_est
        est_own = h_v[:, :, own]
        if scheme == "mr":
            g = est_own
        elif scheme == "zf":
            gram = est_own.conj().transpose(0, 2, 1) @ est_own
            g = est_own @ np.linalg.inv(gram)
        else:
            gram = h_v.conj().transpose(0, 2, 1) @ h_v
            g = h_v @ np.linalg.inv(gram)[:, :, own]
        proj = g.conj().transpose(0, 2, 1) @ h_eff  # (nb, K, U)
        sig += proj[:, np.arange(k), own_u].sum(axis=0)
        quad += (proj.real**2 + proj.imag**2).sum(axis=0)
        norm += (g.real**2 + g.imag**2).sum(axis=(0, 1))
        done += nb
    return ExpTable(scheme, bs, n_draws, sig / n_draws, quad / n_draws, norm / n_draws)


def fixed_position_sinr(scheme, scenario, n_draws, rng=None, bs=0, epsilon=0.0, n_batches=10):
    """Empirical per-UE SINR at fixed positions plus a batch-split stderr."""
    if n_draws < n_batches:
        raise ValueError("need at least one draw per batch")
    rng = _as_rng(rng)
    streams = rng.spawn(n_batches)
    per = [n_draws // n_batches] * n_batches
    per[0] += n_draws - sum(per)
    tables = [
        empirical_expectations(scheme, scenario, n, streams[i], bs)
        for i, n in enumerate(per)
    ]
    sub = np.stack([t.sinr(epsilon) for t in tables])
    weights = np.array(per, dtype=float)[:, None, None]
    merged = ExpTable(
        scheme,
        bs,
        n_draws,
        sum(t.sig * n for t, n in zip(tables, per)) / n_draws,
        (np.stack([t.quad for t in tables]) * weights).sum(axis=0) / n_draws,
        sum(t.norm * n for t, n in zip(tables, per)) / n_draws,
    )
    stderr = sub.std(axis=0, ddof=1) / math.sqrt(n_batches)
    return merged.sinr(epsilon), stderr


def fixed_position_sinr_closed(scheme, scenario, bs=0):
    """Exact per-UE SINR at fixed positions, channel averages in closed form.

    Analytic counterpart of fixed_position_sinr: the expectations over
    channel realizations are evaluated exactly from the estimator statistics,
    only the UE positions stay fixed.  Used to validate the simulation before
    any position averaging enters.
    """
    cfg = scenario.cfg
    m, k, b = cfg.M, cfg.K, cfg.B
    check_feasible(scheme, cfg)
    rho = cfg.snr * SIGMA2
    w = pilot_quadratic_forms(scenario, bs)
    phi = np.diag(w).real
    alpha = _alpha(scenario, bs).reshape(-1)
    pil = scenario.pilot_idx.reshape(-1)
    own = scenario.pilot_idx[bs]
    colors = np.asarray(scenario.plan.colors)
    same_color = np.repeat(colors == colors[bs], k)  # cells sharing our pilots

    out = np.empty(k)
    for kk in range(k):
        bk = own[kk]
        if scheme == "mr":
            den = (
                np.sum(alpha / m + alpha**2 * w[bk, pil].real)
                - phi[bk]
                + SIGMA2 / (m * rho)
            )
            out[kk] = phi[bk] / den
        else:
            dof = m - k if scheme == "zf" else m - b
            nulled = same_color if scheme == "zf" else np.ones_like(same_color)
            copilot = pil == bk
            den = (
                np.sum(alpha**2 * copilot)
                + np.sum(alpha * (1.0 - nulled * alpha * phi[pil])) / (dof * phi[bk])
                - 1.0
                + SIGMA2 / (dof * rho * phi[bk])
            )
            out[kk] = 1.0 / den
    return out


# ---------------------------------------------------------------------------
# UL/DL duality


class DualityInfeasibleError(RuntimeError):
    """DL power solve failed: singular system or non-positive powers."""


@dataclass
class DualitySolution:
    q: np.ndarray  # (L, K) DL transmit powers
    d: np.ndarray  # diagonal of the SINR-target matrix, flat (L*K,)
    psi: np.ndarray  # (L*K, L*K) cross-coupling matrix
    cond: float  # condition number of the solved system
    dl_sinr: np.ndarray  # (L, K) achieved DL SINRs
    ul_total_power: float
    dl_total_power: float


def duality_tables(scheme, scenario, n_draws, rng=None):
    """One expectation table per BS; channels at distinct BSs are independent."""
    rng = _as_rng(rng)
    streams = rng.spawn(scenario.n_cells)
    return [
        empirical_expectations(scheme, scenario, n_draws, streams[j], bs=j)
        for j in range(scenario.n_cells)
    ]


def ul_sinr_from_tables(tables, epsilon=0.0):
    return np.stack([t.sinr(epsilon) for t in tables])  # (L, K)


def duality_power_control(scenario, ul_sinrs, tables, epsilon=0.0):
    """DL powers replicating the UL SINRs with the same normalized beams.

    Builds the coupling matrix and target diagonal from the given expectation
    tables (one per BS, physical-channel units recovered by dividing the UL
    powers back out) and solves the linear system for the DL powers.  The
    total DL power always equals the total UL power when the tables, the UL
    SINRs and the powers are mutually consistent; pass the epsilon the UL
    SINRs were computed with, since distortion adds a self-interference term
    on both link directions.
    """
    l_cells, k = scenario.n_cells, scenario.cfg.K
    n = l_cells * k
    p = scenario.powers.reshape(-1)
    gamma = np.asarray(ul_sinrs, dtype=float).reshape(-1)

    sig2 = np.concatenate([np.abs(t.sig) ** 2 for t in tables]) / p
    norm = np.concatenate([t.norm for t in tables])
    quad_phys = np.stack([t.quad for t in tables]) / p[None, None, :]

    psi = np.empty((n, n))
    for l in range(l_cells):
        for mm in range(k):
            col = l * k + mm
            psi[:, col] = quad_phys[l, mm, :] / norm[col]
    psi[np.diag_indices(n)] -= sig2 / norm
    useful = 1.0 - epsilon**2
    scale = useful - gamma * epsilon**2
    if scale.min() <= 0.0:
        raise DualityInfeasibleError(
            "SINR targets unreachable under distortion epsilon = %g" % epsilon
        )
    d = gamma * norm / (sig2 * scale)

    a = np.eye(n) - d[:, None] * psi
    cond = np.linalg.cond(a)
    try:
        lu = lu_factor(a)
        q = SIGMA2 * lu_solve(lu, d)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - measure zero
        raise DualityInfeasibleError("duality system is singular") from exc
    if not np.all(np.isfinite(q)) or q.min() <= 0.0:
        raise DualityInfeasibleError(
            "non-positive DL power; expectation tables are inconsistent "
            "(min q = %g, cond = %g)" % (q.min(), cond)
        )
    x = q * sig2 / norm
    dl = useful * x / (psi @ q + epsilon**2 * x + SIGMA2)
    return DualitySolution(
        q=q.reshape(l_cells, k),
        d=d,
        psi=psi,
        cond=cond,
        dl_sinr=dl.reshape(l_cells, k),
        ul_total_power=p.sum(),
        dl_total_power=q.sum(),
    )


# ---------------------------------------------------------------------------
# fast position-averaged engine


_INV_SQRT2 = np.float32(1.0 / math.sqrt(2.0))


def _wishart_increment(rng, c, b, dm):
    """c draws of A^H A for an iid dm-by-b standard complex Gaussian block.

    Tall blocks use the triangular (Bartlett) factorization: unit complex
    normals strictly below the diagonal and chi-distributed diagonal entries
    with dm, dm-1, ... complex degrees of freedom.  Short blocks (dm < b)
    fall back to forming the product explicitly.
    """
    if dm >= b:
        t = rng.standard_normal((c, b, b, 2), dtype=np.float32).view(np.complex64)[..., 0]
        t = np.tril(t * _INV_SQRT2, -1)
        gam = rng.standard_gamma(dm - np.arange(b), size=(c, b), dtype=np.float32)
        idx = np.arange(b)
        t[:, idx, idx] = np.sqrt(gam)
        return t @ t.conj().transpose(0, 2, 1)
    a = rng.standard_normal((c, dm, b, 2), dtype=np.float32).view(np.complex64)[..., 0]
    a *= _INV_SQRT2
    return a.conj().transpose(0, 2, 1) @ a


def _fast_sinr_from_alpha(alpha, pilot_of_u, k, b, snr, m_values, schemes, n_draws, seed_seq, epsilon=0.0):
    """Per-UE SINRs at the central BS for one position draw, every (scheme, M).

    alpha holds each UE's gain at the central BS relative to its serving BS
    (own-cell entries are exactly 1) and pilot_of_u the pilot index of each
    UE; the own cell must occupy the first K slots with pilots 0..K-1.

    With orthogonal pilots the per-pilot estimate columns are iid CN vectors
    whose variances follow from the estimator, so only their Gram matrix is
    needed per draw.  The Gram of a tall iid block is Wishart, so it is drawn
    directly through its triangular factorization instead of materializing
    antenna-by-pilot channel blocks.  Antenna counts are nested: the Gram for
    a smaller M is a prefix sum of independent Wishart increments, which
    shares all randomness across the m_values grid and across schemes.
    """
    alpha = np.asarray(alpha, dtype=float)
    rho = snr * SIGMA2
    group = np.bincount(pilot_of_u, weights=alpha, minlength=b)
    psi = b * group + SIGMA2 / rho  # per-pilot eigenvalue of the pilot covariance
    q_col = b * rho / psi  # per-element variance of each estimate column
    c_u = rho * alpha * (1.0 - alpha * b / psi[pilot_of_u])
    c_tot = c_u.sum()
    w = np.bincount(pilot_of_u, weights=alpha**2, minlength=b)
    qq = np.sqrt(q_col)[:, None] * np.sqrt(q_col)[None, :]

    m_sorted = tuple(sorted(set(int(m) for m in m_values)))
    want_zf = "zf" in schemes
    want_pzf = "pzf" in schemes
    eye_own = np.eye(b, dtype=np.complex128)[:, :k]

    acc_quad = {key: np.zeros(k) for key in ((s, m) for s in schemes for m in m_sorted)}
    acc_n = {key: np.zeros(k) for key in acc_quad}

    n_chunks = -(-n_draws // _CHUNK)
    chunk_seeds = seed_seq.spawn(n_chunks)
    for ci in range(n_chunks):
        c = min(_CHUNK, n_draws - ci * _CHUNK)
        rng = np.random.Generator(np.random.SFC64(chunk_seeds[ci]))
        gcum = np.zeros((c, b, b), dtype=np.complex128)
        start = 0
        for m in m_sorted:
            gcum += _wishart_increment(rng, c, b, m - start)
            start = m
            g = gcum * qq
            dg = np.diagonal(g, axis1=1, axis2=2).real
            if "mr" in schemes:
                rows = g[:, :k, :]
                quad = (rows.real**2 + rows.imag**2) @ w + c_tot * dg[:, :k]
                acc_quad[("mr", m)] += quad.sum(axis=0, dtype=np.float64)
                acc_n[("mr", m)] += dg[:, :k].sum(axis=0, dtype=np.float64)
            if want_zf:
                xi = np.linalg.inv(g[:, :k, :k])
                r = xi @ g[:, :k, :]
                dxi = np.diagonal(xi, axis1=1, axis2=2).real
                quad = (r.real**2 + r.imag**2) @ w + c_tot * dxi
                acc_quad[("zf", m)] += quad.sum(axis=0, dtype=np.float64)
                acc_n[("zf", m)] += dxi.sum(axis=0, dtype=np.float64)
            if want_pzf:
                x = np.linalg.solve(g, eye_own)  # (c, B, K)
                dxg = np.diagonal(x[:, :k, :], axis1=1, axis2=2).real
                acc_n[("pzf", m)] += dxg.sum(axis=0, dtype=np.float64)

    useful = 1.0 - epsilon**2
    out = {}
    for sch in schemes:
        for m in m_sorted:
            e_n = acc_n[(sch, m)] / n_draws
            if sch == "mr":
                # mr's beam is the own estimate column, so the mean useful
                # amplitude equals the mean squared beam norm
                e_sig = e_n
                e_quad = acc_quad[(sch, m)] / n_draws
            elif sch == "zf":
                e_sig = 1.0  # beams are exact pseudo-inverse rows per draw
                e_quad = acc_quad[(sch, m)] / n_draws
            else:
                e_sig = 1.0
                # pzf nulls every pilot direction exactly, leaving only the
                # own-pilot contamination group and the estimation-error floor
                e_quad = w[np.arange(k)] + c_tot * e_n
            s2 = useful * np.asarray(e_sig, dtype=float) ** 2
            out[(sch, m)] = s2 / (e_quad - s2 + SIGMA2 * e_n)
    return out


def _fast_outer_case(args, seed_seq):
    """One outer position draw: sample UEs, return SINRs for every (scheme, M)."""
    (tiers, r, excl, kappa, beta, k, snr, m_values, schemes, n_draws, epsilon) = args
    net = hexnet.HexNetwork(tiers=tiers, r=r, min_ue_distance_factor=excl)
    plan = hexnet.make_pilot_plan(beta, net, k)
    pos_ss, chan_ss = seed_seq.spawn(2)
    rng = np.random.default_rng(pos_ss)
    colors = np.asarray(plan.colors)
    pilot_of_u = (colors[:, None] * k + np.arange(k)).reshape(-1)
    alpha = np.empty(net.n_cells * k)
    origin = net.centers[0]
    for ci, cell in enumerate(net.cells):
        z = hexnet.sample_ue_position(cell, net, rng, size=k)
        dist_serv = np.hypot(*(z - net.centers[ci]).T)
        dist_orig = np.hypot(*(z - origin).T)
        alpha[ci * k : (ci + 1) * k] = (dist_serv / dist_orig) ** kappa
    return _fast_sinr_from_alpha(
        alpha, pilot_of_u, k, plan.B, snr, m_values, schemes, n_draws, chan_ss, epsilon
    )


def _study_worker(payload):
    return _fast_outer_case(*payload)


@dataclass
class StudyCell:
    """Monte-Carlo SE estimate for one (scheme, M) grid point."""

    scheme: str
    m: int
    se_total: float  # joint UL+DL per-cell SE
    se_stderr: float
    per_ue_se: float
    per_ue_stderr: float
    n_channel_draws: int
    n_position_draws: int


def empirical_se_study(net, plan, cfg, m_values=None, schemes=SCHEMES,
                       n_channel_draws=10_000, n_position_draws=200, seed=0,
                       epsilon=0.0, n_workers=1, kappa=3.7):
    """Position-averaged empirical SE over a grid of (scheme, M) points.

    Inner channel draws are shared across schemes and antenna counts within
    each position draw, which removes most comparison noise between grid
    points.  Outer draws re-randomize every UE position (including the served
    cell's own UEs) and carry independent pre-split rng streams, so results
    do not depend on the worker count.
    """
    if m_values is None:
        m_values = (cfg.M,)
    m_values = tuple(sorted(set(int(m) for m in m_values)))
    schemes = tuple(s.lower() for s in schemes)
    if plan.K != cfg.K or plan.beta != cfg.beta:
        raise ValueError("pilot plan does not match the configuration")
    for sch in schemes:
        for m in m_values:
            check_feasible(sch, replace(cfg, M=m))
    if n_position_draws < 2:
        raise ValueError("need at least two position draws for a stderr")

    args = (net.tiers, net.r, net.min_ue_distance_factor, float(kappa),
            cfg.beta, cfg.K, cfg.snr, m_values, schemes,
            int(n_channel_draws), float(epsilon))
    outer_seeds = np.random.SeedSequence(seed).spawn(n_position_draws)
    if n_workers <= 1:
        outs = [_fast_outer_case(args, ss) for ss in outer_seeds]
    else:
        payloads = [(args, ss) for ss in outer_seeds]
        chunk = max(1, n_position_draws // (4 * n_workers))
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            outs = list(pool.map(_study_worker, payloads, chunksize=chunk))

    prelog = 1.0 - cfg.B / cfg.S
    results = {}
    root_n = math.sqrt(n_position_draws)
    for sch in schemes:
        for m in m_values:
            samples = np.array(
                [prelog * np.log2(1.0 + out[(sch, m)]).sum() for out in outs]
            )
            se = samples.mean()
            stderr = samples.std(ddof=1) / root_n
            results[(sch, m)] = StudyCell(
                scheme=sch, m=m, se_total=se, se_stderr=stderr,
                per_ue_se=se / cfg.K, per_ue_stderr=stderr / cfg.K,
                n_channel_draws=int(n_channel_draws),
                n_position_draws=int(n_position_draws),
            )
    return results


def empirical_sinr_ul(scheme, scenario, n_channel_draws=10_000,
                      n_position_draws=200, seed=0, n_workers=1):
    """Position-averaged empirical SE for one scheme at the scenario's config.

    The scenario supplies geometry and configuration; UE positions are
    re-randomized for every outer draw.
    """
    if n_channel_draws < 1000:
        raise ValueError("need at least 1000 channel draws per position")
    study = empirical_se_study(
        scenario.net, scenario.plan, scenario.cfg, schemes=(scheme,),
        n_channel_draws=n_channel_draws, n_position_draws=n_position_draws,
        seed=seed, n_workers=n_workers, kappa=scenario.kappa,
    )
    return study[(scheme, scenario.cfg.M)]


def empirical_sinr_impaired(scheme, scenario, epsilon, n_channel_draws=10_000,
                            n_position_draws=200, seed=0, n_workers=1):
    """Same as empirical_sinr_ul with transceiver distortion epsilon.

    The distortion only reweights the already-estimated expectations, so
    epsilon = 0 reproduces empirical_sinr_ul bit for bit.
    """
    if n_channel_draws < 1000:
        raise ValueError("need at least 1000 channel draws per position")
    study = empirical_se_study(
        scenario.net, scenario.plan, scenario.cfg, schemes=(scheme,),
        n_channel_draws=n_channel_draws, n_position_draws=n_position_draws,
        seed=seed, epsilon=epsilon, n_workers=n_workers, kappa=scenario.kappa,
    )
    return study[(scheme, scenario.cfg.M)]


def validation_rows(net, plan, cfg, moments, m_values, schemes=SCHEMES,
                    n_channel_draws=10_000, n_position_draws=200, seed=0,
                    epsilon=0.0, n_workers=1, rel_tol=0.03, pzf_rel_tol=0.10):
    """Closed form vs Monte-Carlo comparison rows for the validation report.

    mr/zf pass when the closed form is within rel_tol of the empirical SE;
    pzf passes when it does not exceed the empirical SE by more than three
    standard errors and stays within pzf_rel_tol (its interference term is an
    upper bound, so it may sit visibly below the simulation).
    """
    study = empirical_se_study(
        net, plan, cfg, m_values=m_values, schemes=schemes,
        n_channel_draws=n_channel_draws, n_position_draws=n_position_draws,
        seed=seed, epsilon=epsilon, n_workers=n_workers,
    )
    rows = []
    for sch in schemes:
        for m in sorted(set(int(x) for x in m_values)):
            cfg_m = replace(cfg, M=m, epsilon=epsilon)
            se_cf = se_joint(sch, cfg_m, moments, plan).se_total
            cell = study[(sch, m)]
            gap = (se_cf - cell.se_total) / cell.se_total
            if sch == "pzf":
                ok = (se_cf <= cell.se_total + 3.0 * cell.se_stderr
                      and abs(gap) <= pzf_rel_tol)
            else:
                ok = abs(gap) <= rel_tol
            rows.append({
                "scheme": sch, "m": m, "k": cfg.K, "beta": cfg.beta,
                "epsilon": epsilon, "se_closed": se_cf,
                "se_mc": cell.se_total, "mc_stderr": cell.se_stderr,
                "rel_gap": gap, "ok": bool(ok),
            })
    return rows
