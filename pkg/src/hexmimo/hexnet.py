"""Hexagonal cell grid: geometry, UE placement, pathloss, and pilot reuse patterns.

Cells are indexed by integer coordinates (a1, a2) on the lattice spanned by
u1 = (3r/2, sqrt(3)r/2) and u2 = (0, sqrt(3)r), where r is the distance from a
cell center to its corners.  Both basis vectors have length sqrt(3)*r and are
60 degrees apart, so translates of the flat-top hexagon tile the plane.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

SQRT3 = math.sqrt(3.0)


def lattice_basis(r):
    """Columns are the two lattice generators u1, u2 for cell radius r."""
    return np.array([[1.5 * r, 0.0], [SQRT3 / 2.0 * r, SQRT3 * r]])


def bs_position(cell, r=1.0):
    """Cartesian position of the base station at lattice point cell=(a1, a2)."""
    a1, a2 = cell
    return np.array([1.5 * r * a1, SQRT3 * r * (0.5 * a1 + a2)])


def ring_index(cell):
    """Number of cell-to-cell hops from the origin cell (hex lattice distance)."""
    a1, a2 = cell
    return max(abs(a1), abs(a2), abs(a1 + a2))


def point_in_hexagon(xy, r):
    """True if xy lies in the flat-top hexagon centered at the origin.

    The hexagon has corners at distance r, at angles 0, 60, ..., 300 degrees,
    and apothem sqrt(3)r/2.  Boundary points count as inside.
    """
    x, y = xy[0], xy[1]
    lim = SQRT3 * r
    return (
        abs(y) <= 0.5 * lim + 1e-12 * r
        and abs(SQRT3 * x + y) <= lim + 1e-12 * r
        and abs(SQRT3 * x - y) <= lim + 1e-12 * r
    )


def hexagon_corners(r):
    """The six corners of the origin-centered hexagon, counterclockwise from (r, 0)."""
    ang = np.arange(6) * (math.pi / 3.0)
    return np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1)


@dataclass(frozen=True)
class HexNetwork:
    """A grid of hexagonal cells: the origin cell plus `tiers` surrounding rings.

    min_ue_distance_factor excludes a small disk around each serving BS so the
    unbounded pathloss model stays integrable.
    """

    tiers: int
    r: float = 1.0
    min_ue_distance_factor: float = 0.14
    cells: tuple = field(init=False)
    centers: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.tiers < 0:
            raise ValueError("tiers must be >= 0")
        if self.r <= 0:
            raise ValueError("cell radius must be positive")
        cells = [
            (a1, a2)
            for a1 in range(-self.tiers, self.tiers + 1)
            for a2 in range(-self.tiers, self.tiers + 1)
            if ring_index((a1, a2)) <= self.tiers
        ]
        cells.sort(key=lambda c: (ring_index(c), c))
        object.__setattr__(self, "cells", tuple(cells))
        object.__setattr__(
            self, "centers", np.array([bs_position(c, self.r) for c in cells])
        )

    @property
    def n_cells(self):
        return len(self.cells)

    def cell_index(self, cell):
        return self.cells.index(tuple(cell))


def sample_ue_position(cell, net, rng, size=None):
    """Draw UE positions uniformly over the given cell's hexagon.

    A disk of radius min_ue_distance_factor * r around the serving BS is
    excluded.  Positions are drawn in units of r and scaled afterwards, so the
    same rng state yields the same layout (up to scale) for any r.
    """
    n = 1 if size is None else int(size)
    out = np.empty((n, 2))
    excl = net.min_ue_distance_factor
    filled = 0
    while filled < n:
        m = max(2 * (n - filled), 16)
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
    out = bs_position(cell, net.r) + net.r * out
    return out[0] if size is None else out


def pathloss(bs_xy, ue_xy, C=1.0, kappa=3.7):
    """Distance-based average channel gain C * ||bs - ue||^(-kappa).

    Raises ValueError for coincident points, where the model diverges.
    """
    d = math.hypot(bs_xy[0] - ue_xy[0], bs_xy[1] - ue_xy[1])
    if d == 0.0:
        raise ValueError("pathloss undefined for coincident BS and UE positions")
    return C * d ** (-kappa)


def reuse_generator(beta):
    """Smallest (i, j) with i^2 + i*j + j^2 == beta, scanning i then j <= i.

    Returns None if beta is not expressible, i.e. not a valid reuse factor.
    """
    if beta < 1 or beta != int(beta):
        return None
    beta = int(beta)
    for i in range(int(math.isqrt(beta)) + 1):
        for j in range(i + 1):
            if i * i + i * j + j * j == beta:
                return (i, j)
    return None


@dataclass(frozen=True)
class PilotPlan:
    """Pilot reuse pattern: cells are colored so same-color cells share pilots.

    UE k of a cell with color c sends pilot number c*K + k out of B = beta*K
    orthogonal pilots.  Color 0 is the class containing the origin cell.
    """

    beta: int
    K: int
    generator: tuple
    colors: tuple  # color id per cell, aligned with net.cells

    @property
    def B(self):
        return self.beta * self.K

    def pilot_index(self, cell_idx, k):
        return self.colors[cell_idx] * self.K + k

    def copilot_cells(self, cell_idx):
        """Indices of all cells sharing the given cell's color (itself included)."""
        c = self.colors[cell_idx]
        return [i for i, ci in enumerate(self.colors) if ci == c]


@lru_cache(maxsize=64)
def _coloring(beta, cells):
    """Color index per cell for reuse factor beta (cached; K-independent)."""
    i, j = reuse_generator(beta)
    # reduce each cell modulo the sublattice W = [[i, -j], [j, i+j]] (det = beta)
    # using the exact integer inverse: a - W * floor(adj(W) a / beta)
    reps = []
    for a1, a2 in cells:
        t1 = ((i + j) * a1 + j * a2) // beta
        t2 = (-j * a1 + i * a2) // beta
        reps.append((a1 - (i * t1 - j * t2), a2 - (j * t1 + (i + j) * t2)))
    # color 0 is the origin's class; the rest get ids in sorted rep order
    uniq = sorted(set(reps))
    order = [(0, 0)] + [u for u in uniq if u != (0, 0)]
    color_of = {u: c for c, u in enumerate(order)}
    return tuple(color_of[rep] for rep in reps)


def make_pilot_plan(beta, net, K):
    """Color the network for pilot reuse factor beta and assign pilots to UEs.

    Valid reuse factors are beta = i^2 + i*j + j^2 for nonnegative integers
    (1, 3, 4, 7, 9, 12, 13, ...).  The color classes are the cosets of the
    sublattice spanned by (i, j) and (-j, i+j), which has index beta.
    """
    gen = reuse_generator(beta)
    if gen is None:
        raise ValueError(
            "invalid reuse factor %r: must equal i^2 + i*j + j^2 "
            "for integers i, j >= 0 (1, 3, 4, 7, 9, 12, ...)" % (beta,)
        )
    if K < 1:
        raise ValueError("K must be >= 1")
    beta = int(beta)
    colors = _coloring(beta, net.cells)
    return PilotPlan(beta=beta, K=int(K), generator=gen, colors=colors)
