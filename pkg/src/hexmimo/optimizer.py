"""Exhaustive integer search over (K, beta) maximizing per-cell SE for each M.

The grid is small (K up to S/beta for a handful of reuse factors), so every
feasible point is scored with the exact closed form and the argmax is kept.
Ties break toward smaller K, then smaller beta.
"""

from dataclasses import dataclass, replace

from .hexnet import HexNetwork, make_pilot_plan
from .se_core import FeasibilityError, check_feasible, se_joint

DEFAULT_BETAS = (1, 3, 4, 7)


@dataclass(frozen=True)
class OptimumPoint:
    M: int
    scheme: str
    K_star: int
    beta_star: int
    se_star: float
    per_ue_se: float
    antennas_per_ue: float


@dataclass(frozen=True)
class SweepSpec:
    m_values: tuple
    schemes: tuple
    case: str
    base: object  # SeConfig template; M, K, beta get replaced per grid point
    beta_candidates: tuple = DEFAULT_BETAS

    def __post_init__(self):
        if len(self.m_values) == 0:
            raise ValueError("m_values must be nonempty")
        if list(self.m_values) != sorted(self.m_values):
            raise ValueError("m_values must be sorted ascending")


def _plans_for(net, beta_candidates, K):
    return {b: make_pilot_plan(b, net, K) for b in beta_candidates}


def k_max(scheme, M, beta, S):
    """Largest schedulable K: pilots must fit, and ZF/P-ZF need spare antennas."""
    k = S // beta
    if scheme == "zf":
        k = min(k, M - 1)
    elif scheme == "pzf":
        k = min(k, (M - 1) // beta)
    return k


def optimize_point(M, scheme, case, base, moments, beta_candidates=DEFAULT_BETAS):
    """Argmax of se_joint over feasible (K, beta) at fixed M and scheme.

    `moments` is a single MomentTable (the tables do not depend on beta); its
    case label must match the requested case.  Raises FeasibilityError when no
    grid point is operable, e.g. ZF with M = 1.
    """
    if moments.case != case:
        raise ValueError(
            "moment table is for case %r, requested %r" % (moments.case, case)
        )
    net = HexNetwork(tiers=moments.tiers)
    best = None
    for beta in beta_candidates:
        kmax = k_max(scheme, M, beta, base.S)
        if kmax < 1:
            continue
        for K in range(1, kmax + 1):
            cfg = replace(base, M=M, K=K, beta=beta)
            check_feasible(scheme, cfg)
            plan = make_pilot_plan(beta, net, K)
            res = se_joint(scheme, cfg, moments, plan)
            key = (res.se_total, -K, -beta)
            if best is None or key > best[0]:
                best = (key, K, beta, res)
    if best is None:
        raise FeasibilityError(
            "no feasible (K, beta) for scheme %s at M=%d" % (scheme, M)
        )
    _, K, beta, res = best
    return OptimumPoint(
        M=M,
        scheme=scheme,
        K_star=K,
        beta_star=beta,
        se_star=res.se_total,
        per_ue_se=res.per_ue_se,
        antennas_per_ue=M / K,
    )


def sweep(spec, moments, skip_infeasible=False):
    """One OptimumPoint per (M, scheme); deterministic given the moment table.

    With skip_infeasible, unoperable grid points are dropped instead of
    raising (the CLI reports them as warning rows).
    """
    out = []
    for M in spec.m_values:
        for scheme in spec.schemes:
            try:
                out.append(
                    optimize_point(
                        M, scheme, spec.case, spec.base, moments,
                        spec.beta_candidates,
                    )
                )
            except FeasibilityError:
                if not skip_infeasible:
                    raise
    return out


def se_vs_k_curve(M, scheme, case, base, moments, beta, k_range):
    """SE for each K in k_range at fixed (M, beta); returns (rows, peak_K).

    Every K in the range must be feasible; rows are (K, se_total).
    """
    if moments.case != case:
        raise ValueError(
            "moment table is for case %r, requested %r" % (moments.case, case)
        )
    net = HexNetwork(tiers=moments.tiers)
    rows = []
    for K in k_range:
        cfg = replace(base, M=M, K=int(K), beta=beta)
        check_feasible(scheme, cfg)
        plan = make_pilot_plan(beta, net, int(K))
        rows.append((int(K), se_joint(scheme, cfg, moments, plan).se_total))
    peak = max(rows, key=lambda r: (r[1], -r[0]))[0]
    return rows, peak
