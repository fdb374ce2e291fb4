"""Closed-form per-cell spectral efficiency for MR, ZF, and partial-ZF combining.

Everything here is a deterministic function of the interference moments, the
pilot plan, and a scalar configuration.  The SE of the cell at the origin is

    SE = K (1 - B/S) log2(1 + (1 - eps^2) / (I + eps^2))   [bit/s/Hz/cell]

where I collects pilot contamination plus the non-coherent interference and
noise scaled by the scheme's array gain.  With ideal hardware (eps = 0) this
reduces to the familiar log2(1 + 1/I) form.
"""

import math
from dataclasses import dataclass

import numpy as np

SCHEMES = ("mr", "zf", "pzf")

LOG2 = math.log(2.0)


class FeasibilityError(ValueError):
    """Raised when a (scheme, M, K, beta) combination cannot be operated."""


class _Unbounded:
    """Marker for an interference-free asymptotic SINR (grows without limit)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "unbounded"


UNBOUNDED = _Unbounded()


@dataclass(frozen=True)
class SeConfig:
    """Scalar operating point: antennas, users, reuse, frame and link budget.

    snr is the linear transmit-power-to-noise ratio rho/sigma^2; zeta_ul and
    zeta_dl split the frame between uplink and downlink payload.
    """

    M: int
    K: int
    beta: int
    S: int = 400
    snr: float = 10.0 ** 0.5
    zeta_ul: float = 0.5
    zeta_dl: float = 0.5
    epsilon: float = 0.0

    def __post_init__(self):
        if self.M < 1 or self.K < 1:
            raise ValueError("M and K must be positive integers")
        if self.snr <= 0:
            raise ValueError("snr must be a positive linear ratio")
        B = self.beta * self.K
        if not 1 <= B <= self.S:
            raise ValueError(
                "pilots must fit in the frame: need 1 <= beta*K <= S, got "
                "beta*K=%d, S=%d" % (B, self.S)
            )
        if abs(self.zeta_ul + self.zeta_dl - 1.0) > 1e-12:
            raise ValueError("zeta_ul + zeta_dl must equal 1")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")

    @property
    def B(self):
        return self.beta * self.K


@dataclass(frozen=True)
class SchemeConstants:
    """Array gain G and the per-cell interference suppression factors Z."""

    G: float
    Z: np.ndarray  # aligned with the network's cell order


@dataclass(frozen=True)
class SeResult:
    interference_I: float
    sinr: float
    se_ul: float
    se_dl: float
    se_total: float
    per_ue_se: float


def check_feasible(scheme, cfg):
    if scheme not in SCHEMES:
        raise ValueError("unknown scheme %r" % (scheme,))
    if scheme == "zf" and cfg.M <= cfg.K:
        raise FeasibilityError(
            "zf needs M > K (array gain M - K), got M=%d, K=%d" % (cfg.M, cfg.K)
        )
    if scheme == "pzf" and cfg.M <= cfg.B:
        raise FeasibilityError(
            "pzf needs M > beta*K (array gain M - B), got M=%d, B=%d"
            % (cfg.M, cfg.B)
        )


def scheme_constants(scheme, cfg, moments, plan):
    """Array gain and suppression factors for the scheme, impairments included.

    ZF suppresses the co-pilot cells of the origin cell; partial ZF suppresses
    every cell l through that cell's own co-pilot set, which is why its
    denominator sums over the interferer's pilot group rather than ours.
    """
    check_feasible(scheme, cfg)
    imp = 1.0 - cfg.epsilon**2
    K = cfg.K
    L = len(moments.cells)
    mu1 = moments.mu1
    inv_snr_b = 1.0 / (cfg.B * cfg.snr)
    if scheme == "mr":
        return SchemeConstants(G=cfg.M * imp, Z=np.full(L, float(K)))
    if scheme == "zf":
        own = plan.copilot_cells(0)
        denom = mu1[own].sum() + inv_snr_b
        Z = np.full(L, float(K))
        for l in own:
            Z[l] = K * (1.0 - imp * mu1[l] / denom)
        return SchemeConstants(G=(cfg.M - K) * imp, Z=Z)
    # pzf: every cell is suppressed via its own pilot group
    colors = np.asarray(plan.colors)
    group_sum = np.zeros(plan.beta)
    for c in range(int(colors.max()) + 1):
        group_sum[c] = mu1[colors == c].sum()
    denom = group_sum[colors] + inv_snr_b
    Z = K * (1.0 - imp * mu1 / denom)
    return SchemeConstants(G=(cfg.M - cfg.B) * imp, Z=Z)


def interference_term(scheme, cfg, moments, plan):
    """The interference-plus-noise term I for the origin cell.

    Co-pilot cells contribute coherent contamination mu2 plus the estimation
    spread (mu2 - mu1^2)/G; all cells contribute through the product of the
    suppressed interference sum and the pilot-quality sum, divided by G.
    """
    const = scheme_constants(scheme, cfg, moments, plan)
    mu1, mu2 = moments.mu1, moments.mu2
    own = plan.copilot_cells(0)
    contamination = 0.0
    for l in own:
        if l == 0:
            continue
        contamination += mu2[l] + (mu2[l] - mu1[l] ** 2) / const.G
    inv_snr = 1.0 / cfg.snr
    total = float(mu1 @ const.Z) + inv_snr
    pilot_sum = mu1[own].sum() + inv_snr / cfg.B
    return contamination + total * pilot_sum / const.G


def se_joint(scheme, cfg, moments, plan):
    """Joint UL+DL per-cell SE at the configured operating point."""
    I = interference_term(scheme, cfg, moments, plan)
    imp = 1.0 - cfg.epsilon**2
    sinr = imp / (I + cfg.epsilon**2)
    prelog = cfg.K * (1.0 - cfg.B / cfg.S)
    se_total = prelog * math.log1p(sinr) / LOG2
    return SeResult(
        interference_I=I,
        sinr=sinr,
        se_ul=cfg.zeta_ul * se_total,
        se_dl=cfg.zeta_dl * se_total,
        se_total=se_total,
        per_ue_se=se_total / cfg.K,
    )


def asymptotic_sinr(moments, plan, epsilon=0.0):
    """SINR limit as M grows: pilot contamination (and distortion) only.

    Scheme-independent.  Returns the UNBOUNDED marker when there is no
    contamination and no hardware distortion.
    """
    own = plan.copilot_cells(0)
    contamination = float(sum(moments.mu2[l] for l in own if l != 0))
    e2 = epsilon**2
    if contamination == 0.0 and e2 == 0.0:
        return UNBOUNDED
    return (1.0 - e2) / (contamination + e2)


def asymptotic_se(S, beta, moments, plan):
    """M -> infinity per-cell SE and the optimal UE count for fixed reuse beta.

    The prelog K(1 - beta*K/S) is maximized at K = S/(2 beta); both integer
    neighbors are returned, best first, together with the SE at the winner.
    The SE is the UNBOUNDED marker when there is no pilot contamination.
    """
    if S < 2 * beta:
        raise ValueError("need S >= 2*beta for a nonempty payload at K >= 1")
    half = S / (2.0 * beta)
    cands = sorted({int(math.floor(half)), int(math.ceil(half))})
    cands = [k for k in cands if k >= 1]
    sinr = asymptotic_sinr(moments, plan, 0.0)

    def prelog(k):
        return k * (1.0 - beta * k / S)

    if sinr is UNBOUNDED:
        cands.sort(key=lambda k: (-prelog(k), k))
        return tuple(cands), UNBOUNDED
    rate = math.log1p(sinr) / LOG2
    cands.sort(key=lambda k: (-prelog(k) * rate, k))
    return tuple(cands), prelog(cands[0]) * rate
