"""Interference moments of the pathloss ratio between an interfering cell and BS 0.

For a user at position z served by cell l with statistics-aware power control,
the interference it causes at the origin BS scales with the ratio
(||z - b_l|| / ||z - b_0||)^kappa.  This module computes the first and second
moments of that quantity per cell, for three placement cases:

  average - z uniform over cell l (minus the exclusion disk around b_l)
  best    - z at the boundary point of cell l furthest from BS 0
  worst   - z at the boundary point of cell l closest to BS 0

All ratios are scale-free: the cell radius r and the pathloss constant C
cancel, so tables computed at any (r, C) coincide.
"""

import io
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .hexnet import SQRT3, HexNetwork, bs_position, hexagon_corners

CASES = ("average", "best", "worst")


@dataclass(frozen=True)
class MomentTable:
    """Per-cell moments mu1, mu2 of the interference pathloss ratio at BS 0.

    Arrays are aligned with HexNetwork(tiers).cells.  n_samples holds the
    Monte-Carlo sample count for the average case and the boundary resolution
    for the extremal cases (which are deterministic, seed 0, stderr 0).
    """

    case: str
    tiers: int
    kappa: float
    n_samples: int
    seed: int
    min_ue_distance_factor: float
    cells: tuple
    mu1: np.ndarray
    mu2: np.ndarray
    stderr1: np.ndarray
    stderr2: np.ndarray

    def save(self, path):
        buf = io.StringIO()
        buf.write("# hexmimo moment table v1\n")
        buf.write(
            "# tiers=%d kappa=%.17g case=%s n_samples=%d seed=%d "
            "min_ue_distance_factor=%.17g\n"
            % (
                self.tiers,
                self.kappa,
                self.case,
                self.n_samples,
                self.seed,
                self.min_ue_distance_factor,
            )
        )
        buf.write("# columns: a1 a2 mu1 mu2 stderr1 stderr2\n")
        for (a1, a2), m1, m2, s1, s2 in zip(
            self.cells, self.mu1, self.mu2, self.stderr1, self.stderr2
        ):
            buf.write(
                "%d %d %.17g %.17g %.17g %.17g\n" % (a1, a2, m1, m2, s1, s2)
            )
        tmp = str(path) + ".tmp"
        with open(tmp, "w") as fh:
            fh.write(buf.getvalue())
        os.replace(tmp, path)

    @classmethod
    def load(cls, path):
        meta = {}
        cells, rows = [], []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    for tok in line[1:].split():
                        if "=" in tok:
                            k, v = tok.split("=", 1)
                            meta[k] = v
                    continue
                parts = line.split()
                cells.append((int(parts[0]), int(parts[1])))
                rows.append([float(x) for x in parts[2:6]])
        arr = np.array(rows)
        return cls(
            case=meta["case"],
            tiers=int(meta["tiers"]),
            kappa=float(meta["kappa"]),
            n_samples=int(meta["n_samples"]),
            seed=int(meta["seed"]),
            min_ue_distance_factor=float(meta["min_ue_distance_factor"]),
            cells=tuple(cells),
            mu1=arr[:, 0],
            mu2=arr[:, 1],
            stderr1=arr[:, 2],
            stderr2=arr[:, 3],
        )


def _hexagon_samples(n, excl, rng):
    """Uniform points over the unit-radius hexagon minus the exclusion disk."""
    out = np.empty((n, 2))
    filled = 0
    while filled < n:
        m = max(int(1.5 * (n - filled)) + 16, 64)
        cand = rng.uniform(-1.0, 1.0, size=(m, 2))
        cand[:, 1] *= SQRT3 / 2.0
        x, y = cand[:, 0], cand[:, 1]
        ok = (
            (np.abs(SQRT3 * x + y) <= SQRT3)
            & (np.abs(SQRT3 * x - y) <= SQRT3)
            & (x * x + y * y >= excl * excl)
        )
        take = cand[ok][: n - filled]
        out[filled : filled + take.shape[0]] = take
        filled += take.shape[0]
    return out


def compute_moments_average(net, n_samples=1_000_000, rng=None, kappa=3.7):
    """Monte-Carlo moments for uniform UE placement, one batch per cell.

    rng may be a numpy Generator, a seed, or None (seed 0).  Each cell gets
    its own child stream, so results do not depend on evaluation order.
    """
    if n_samples < 10**4:
        raise ValueError("n_samples must be at least 1e4")
    if rng is None:
        rng = 0
    if not isinstance(rng, np.random.Generator):
        seed = int(rng)
        rng = np.random.default_rng(seed)
    else:
        seed = -1  # unknown entropy; table still records something
    streams = rng.spawn(net.n_cells)
    L = net.n_cells
    mu1 = np.ones(L)
    mu2 = np.ones(L)
    se1 = np.zeros(L)
    se2 = np.zeros(L)
    excl = net.min_ue_distance_factor
    for li, cell in enumerate(net.cells):
        if cell == (0, 0):
            continue  # ratio is identically 1 when serving and observing BS match
        b = bs_position(cell, 1.0)
        z = _hexagon_samples(n_samples, excl, streams[li])
        d_serv = np.hypot(z[:, 0], z[:, 1])
        d_obs = np.hypot(z[:, 0] + b[0], z[:, 1] + b[1])
        x = (d_serv / d_obs) ** kappa
        x2 = x * x
        mu1[li] = x.mean()
        mu2[li] = x2.mean()
        se1[li] = x.std(ddof=1) / math.sqrt(n_samples)
        se2[li] = x2.std(ddof=1) / math.sqrt(n_samples)
    return MomentTable(
        case="average",
        tiers=net.tiers,
        kappa=kappa,
        n_samples=int(n_samples),
        seed=seed,
        min_ue_distance_factor=excl,
        cells=net.cells,
        mu1=mu1,
        mu2=mu2,
        stderr1=se1,
        stderr2=se2,
    )


def _extremal_ratio(cell, case, boundary_resolution):
    """Pathloss ratio at the boundary point of `cell` extremal in distance to BS 0.

    best: the point furthest from BS 0; worst: the closest.  Dense sampling of
    the hexagon boundary picks the winning edge, then a bounded 1-D search
    refines the location along it.  Everything is in units of r.
    """
    b = bs_position(cell, 1.0)
    corners = hexagon_corners(1.0) + b  # absolute positions of cell's corners
    sign = -1.0 if case == "best" else 1.0  # minimize sign * distance

    def dist(p):
        return math.hypot(p[0], p[1])

    per_edge = max(boundary_resolution // 6, 4)
    best_val, best_point = None, None
    for e in range(6):
        c0, c1 = corners[e], corners[(e + 1) % 6]
        t = np.linspace(0.0, 1.0, per_edge + 1)
        pts = c0[None, :] + t[:, None] * (c1 - c0)[None, :]
        d = sign * np.hypot(pts[:, 0], pts[:, 1])
        i = int(np.argmin(d))
        lo = t[max(i - 1, 0)]
        hi = t[min(i + 1, per_edge)]
        res = minimize_scalar(
            lambda s: sign * dist(c0 + s * (c1 - c0)),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-14},
        )
        cand_t = res.x if res.fun < d[i] else t[i]
        cand_val = min(res.fun, d[i])
        if best_val is None or cand_val < best_val:
            best_val = cand_val
            best_point = c0 + cand_t * (c1 - c0)
    d_obs = dist(best_point)
    d_serv = math.hypot(best_point[0] - b[0], best_point[1] - b[1])
    return d_serv / d_obs


def compute_moments_extremal(net, case, boundary_resolution=4096, kappa=3.7):
    """Deterministic moments with every interfering UE at its extremal edge point."""
    if case not in ("best", "worst"):
        raise ValueError("case must be 'best' or 'worst'")
    if boundary_resolution < 10**3:
        raise ValueError("boundary_resolution must be at least 1e3")
    L = net.n_cells
    mu1 = np.ones(L)
    mu2 = np.ones(L)
    for li, cell in enumerate(net.cells):
        if cell == (0, 0):
            continue
        ratio = _extremal_ratio(cell, case, boundary_resolution)
        mu1[li] = ratio**kappa
        mu2[li] = ratio ** (2.0 * kappa)
    return MomentTable(
        case=case,
        tiers=net.tiers,
        kappa=kappa,
        n_samples=int(boundary_resolution),
        seed=0,
        min_ue_distance_factor=net.min_ue_distance_factor,
        cells=net.cells,
        mu1=mu1,
        mu2=mu2,
        stderr1=np.zeros(L),
        stderr2=np.zeros(L),
    )


def compute_moments(net, case, n_samples=1_000_000, boundary_resolution=4096,
                    rng=None, kappa=3.7):
    """Dispatch to the average or extremal computation based on `case`."""
    if case == "average":
        return compute_moments_average(net, n_samples, rng, kappa=kappa)
    return compute_moments_extremal(net, case, boundary_resolution, kappa=kappa)


def cache_filename(case, tiers, kappa, n_samples, seed):
    return "mu_%s_t%d_k%.10g_n%d_s%d.txt" % (case, tiers, kappa, n_samples, seed)


def load_or_compute(cache_dir, net, case, n_samples=1_000_000,
                    boundary_resolution=4096, seed=0, kappa=3.7):
    """Fetch a moment table from the cache directory, computing it on a miss."""
    n_key = n_samples if case == "average" else boundary_resolution
    s_key = seed if case == "average" else 0
    fname = cache_filename(case, net.tiers, kappa, n_key, s_key)
    path = os.path.join(cache_dir, fname)
    if os.path.exists(path):
        tab = MomentTable.load(path)
        if tab.cells == net.cells and tab.kappa == kappa:
            return tab
    tab = compute_moments(
        net, case, n_samples=n_samples, boundary_resolution=boundary_resolution,
        rng=seed, kappa=kappa,
    )
    os.makedirs(cache_dir, exist_ok=True)
    tab.save(path)
    return tab
