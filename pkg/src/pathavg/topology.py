"""Network families: torus grids, random geometric graphs, and the virtual box partition.

Grid node ``(x, y)`` has id ``x + side * y``. Box ``(bx, by)`` on a box lattice
with ``m`` boxes per side has index ``bx + m * by``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import ReachabilityError


def wrap_step(d: int, side: int) -> int:
    """Signed shortest displacement on a ring of ``side`` sites.

    Ties (``|d| == side / 2``) resolve to the positive direction.
    """
    d %= side
    if 2 * d > side:
        return d - side
    return d


def torus_abs(d: int, side: int) -> int:
    d %= side
    return min(d, side - d)


def torus_l1(a, b, side: int) -> int:
    """Wrapped Manhattan distance between lattice points ``a`` and ``b``."""
    if side <= 0:
        raise ValueError(f"side must be positive, got {side}")
    return torus_abs(b[0] - a[0], side) + torus_abs(b[1] - a[1], side)


def torus_delta(p, q):
    """Per-axis wrapped difference |p - q| on the unit torus (arrays broadcast)."""
    d = np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float))
    return np.minimum(d, 1.0 - d)


def point_distance(p, q, torus_wrap=True):
    if torus_wrap:
        d = torus_delta(p, q)
    else:
        d = np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float))
    return np.sqrt(np.sum(d * d, axis=-1))


@dataclass(frozen=True)
class GridTopology:
    """4-connected ``side x side`` lattice on a torus."""

    side: int
    neighbors: np.ndarray = field(repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.side * self.side

    def node(self, x: int, y: int) -> int:
        return (x % self.side) + self.side * (y % self.side)

    def coords(self, i: int) -> tuple[int, int]:
        return i % self.side, i // self.side

    def distance(self, i: int, j: int) -> int:
        return torus_l1(self.coords(i), self.coords(j), self.side)

    @property
    def max_distance(self) -> int:
        return 2 * (self.side // 2)


def build_grid(side: int) -> GridTopology:
    if side < 2:
        raise ValueError(f"grid side must be >= 2, got {side}")
    ids = np.arange(side * side)
    x, y = ids % side, ids // side
    cand = np.stack(
        [
            (x + 1) % side + side * y,
            (x - 1) % side + side * y,
            x + side * ((y + 1) % side),
            x + side * ((y - 1) % side),
        ],
        axis=1,
    )
    if side == 2:
        # +1 and -1 coincide when wrapping on a ring of two
        cand = cand[:, [0, 2]]
    return GridTopology(side=side, neighbors=cand)


@dataclass(frozen=True)
class CompleteGraph:
    """Every node talks to every node.

    Standard gossip draws the partner uniformly from all ``n`` nodes, the node
    itself included (a self-draw is a no-op round), which gives
    ``E[W_ij] = 1/n**2`` off the diagonal.
    """

    n: int


def build_complete(n: int) -> CompleteGraph:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return CompleteGraph(n=n)


@dataclass(frozen=True)
class GeometricGraph:
    n: int
    c: float
    radius: float
    torus_wrap: bool
    seed: int | None
    positions: np.ndarray = field(repr=False, compare=False)
    neighbors: tuple = field(repr=False, compare=False)

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.neighbors])

    def edges(self) -> np.ndarray:
        """Undirected edge list ``(i, j)`` with ``i < j``, sorted."""
        rows = [
            np.stack([np.full(len(nb), i), nb], axis=1)[nb > i]
            for i, nb in enumerate(self.neighbors)
        ]
        if not rows:
            return np.empty((0, 2), dtype=np.int64)
        return np.concatenate(rows).astype(np.int64)

    def is_connected(self) -> bool:
        seen = np.zeros(self.n, dtype=bool)
        seen[0] = True
        stack = [0]
        while stack:
            u = stack.pop()
            nb = self.neighbors[u]
            new = nb[~seen[nb]]
            seen[new] = True
            stack.extend(new.tolist())
        return bool(seen.all())


def rgg_radius(n: int, c: float) -> float:
    return math.sqrt(c * math.log(n) / n)


def graph_from_positions(positions, radius, torus_wrap=True, c=float("nan"), seed=None):
    """Build the radius graph on fixed positions in ``[0, 1)^2``."""
    pos = np.ascontiguousarray(positions, dtype=float)
    n = len(pos)
    if torus_wrap and radius >= 0.5:
        raise ValueError(f"radius {radius:g} >= 0.5 exceeds half the torus")
    tree = cKDTree(pos, boxsize=1.0 if torus_wrap else None)
    pairs = tree.query_pairs(radius, output_type="ndarray").astype(np.int64)
    rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    order = np.lexsort((cols, rows))
    splits = np.cumsum(np.bincount(rows, minlength=n))[:-1]
    neighbors = tuple(np.split(cols[order], splits))
    return GeometricGraph(
        n=n, c=c, radius=radius, torus_wrap=torus_wrap, seed=seed,
        positions=pos, neighbors=neighbors,
    )


def build_rgg(n: int, c: float, torus_wrap: bool = True, seed: int = 0) -> GeometricGraph:
    """Random geometric graph G(n, r) with ``r = sqrt(c log n / n)``.

    Positions are i.i.d. uniform in ``[0, 1)^2`` from a PCG64 stream seeded
    with ``seed``; the same arguments always give the same graph.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if c <= 0:
        raise ValueError(f"c must be positive, got {c}")
    r = rgg_radius(n, c)
    if torus_wrap and r >= 0.5:
        raise ValueError(f"radius {r:g} >= 0.5 exceeds half the torus (n={n}, c={c})")
    rng = np.random.default_rng(seed)
    pos = rng.random((n, 2))
    return graph_from_positions(pos, r, torus_wrap=torus_wrap, c=c, seed=seed)


@dataclass(frozen=True)
class BoxGrid:
    graph: GeometricGraph = field(repr=False)
    alpha: float
    k: int
    boxes_per_side: int
    membership: np.ndarray = field(repr=False)
    occupancy: np.ndarray = field(repr=False)
    members: tuple = field(repr=False)

    @property
    def box_side(self) -> float:
        return 1.0 / self.boxes_per_side

    def box_coords(self, b: int) -> tuple[int, int]:
        return b % self.boxes_per_side, b // self.boxes_per_side

    def box_index(self, bx: int, by: int) -> int:
        m = self.boxes_per_side
        return (bx % m) + m * (by % m)

    def box_of_point(self, p) -> int:
        m = self.boxes_per_side
        bx = min(int(p[0] * m), m - 1)
        by = min(int(p[1] * m), m - 1)
        return bx + m * by

    def box_distance(self, a: int, b: int) -> int:
        return torus_l1(self.box_coords(a), self.box_coords(b), self.boxes_per_side)


def box_count(n: int, alpha: float) -> int:
    return math.ceil(math.sqrt(n / (alpha * math.log(n)))) ** 2


def partition_boxes(g: GeometricGraph, alpha: float) -> BoxGrid:
    """Tile the unit torus into ``k = ceil(sqrt(n / (alpha log n)))**2`` boxes."""
    if not g.torus_wrap:
        raise ValueError("box partition requires a graph on the torus")
    if alpha <= 2:
        raise ValueError(f"alpha must exceed 2, got {alpha}")
    if not g.c >= 5 * alpha:
        raise ReachabilityError(g.c, alpha)
    k = box_count(g.n, alpha)
    m = math.isqrt(k)
    cell = np.minimum((g.positions * m).astype(np.int64), m - 1)
    membership = cell[:, 0] + m * cell[:, 1]
    occupancy = np.bincount(membership, minlength=k)
    order = np.argsort(membership, kind="stable")
    splits = np.cumsum(occupancy)[:-1]
    members = tuple(np.split(order, splits))
    return BoxGrid(
        graph=g, alpha=alpha, k=k, boxes_per_side=m,
        membership=membership, occupancy=occupancy, members=members,
    )


@dataclass(frozen=True)
class RegularityReport:
    min_occupancy: int
    max_occupancy: int
    lower_threshold: float
    upper_threshold: float
    is_regular: bool
    failing_boxes: tuple = ()


def check_regularity(b: BoxGrid, n: int | None = None) -> RegularityReport:
    """Compare box occupancies with ``(alpha/2) log n`` and ``2 alpha log n``."""
    n = b.graph.n if n is None else n
    occ = np.asarray(b.occupancy)
    lo = b.alpha / 2 * math.log(n)
    hi = 2 * b.alpha * math.log(n)
    bad = np.flatnonzero((occ < lo) | (occ > hi))
    return RegularityReport(
        min_occupancy=int(occ.min()),
        max_occupancy=int(occ.max()),
        lower_threshold=lo,
        upper_threshold=hi,
        is_regular=bool(lo <= occ.min() and occ.max() <= hi),
        failing_boxes=tuple(int(i) for i in bad),
    )


# -- text format -----------------------------------------------------------

def export_topology(topo) -> str:
    if isinstance(topo, GridTopology):
        return f"grid {topo.side}\n"
    if isinstance(topo, GeometricGraph):
        seed = -1 if topo.seed is None else topo.seed
        lines = [f"rgg {topo.n} {topo.c!r} {int(topo.torus_wrap)} {seed}"]
        lines += [f"pos {i} {x:.17g} {y:.17g}" for i, (x, y) in enumerate(topo.positions)]
        return "\n".join(lines) + "\n"
    raise TypeError(f"cannot export {type(topo).__name__}")


def import_topology(text: str):
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty topology text")
    head = lines[0]
    if head[0] == "grid" and len(head) == 2:
        return build_grid(int(head[1]))
    if head[0] == "rgg" and len(head) == 5:
        n, c, torus, seed = int(head[1]), float(head[2]), head[3] == "1", int(head[4])
        pos = np.empty((n, 2))
        got = np.zeros(n, dtype=bool)
        for parts in lines[1:]:
            if parts[0] != "pos" or len(parts) != 4:
                raise ValueError(f"bad line: {' '.join(parts)}")
            i = int(parts[1])
            pos[i] = float(parts[2]), float(parts[3])
            got[i] = True
        if not got.all():
            raise ValueError(f"missing positions for {int((~got).sum())} nodes")
        return graph_from_positions(
            pos, rgg_radius(n, c), torus_wrap=torus, c=c,
            seed=None if seed < 0 else seed,
        )
    raise ValueError(f"unrecognised header: {' '.join(head)}")
