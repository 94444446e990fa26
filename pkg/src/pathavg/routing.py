"""Route construction: (horizontal, vertical) grid routes, random greedy
geographic routes, and box-greedy routes over the virtual box lattice."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import IrregularGraphError
from .topology import BoxGrid, GeometricGraph, GridTopology, torus_delta, wrap_step


class Direction(enum.Enum):
    HORIZONTAL_FIRST = "horizontal-first"
    VERTICAL_FIRST = "vertical-first"

    @classmethod
    def flip(cls, rng) -> "Direction":
        return cls.HORIZONTAL_FIRST if rng.random() < 0.5 else cls.VERTICAL_FIRST


@dataclass(frozen=True)
class Route:
    nodes: tuple

    @property
    def hop_count(self) -> int:
        return len(self.nodes) - 1

    def __len__(self):
        return len(self.nodes)


def lattice_hv_path(a, b, side: int, first: Direction) -> list[tuple[int, int]]:
    """Lattice points of the shortest one-turn route from ``a`` to ``b`` on a
    ``side x side`` torus, moving along ``first`` axis before the other."""
    x, y = a
    dx = wrap_step(b[0] - a[0], side)
    dy = wrap_step(b[1] - a[1], side)
    out = [(x, y)]
    sx = 1 if dx > 0 else -1
    sy = 1 if dy > 0 else -1
    if first is Direction.HORIZONTAL_FIRST:
        for _ in range(abs(dx)):
            x = (x + sx) % side
            out.append((x, y))
        for _ in range(abs(dy)):
            y = (y + sy) % side
            out.append((x, y))
    else:
        for _ in range(abs(dy)):
            y = (y + sy) % side
            out.append((x, y))
        for _ in range(abs(dx)):
            x = (x + sx) % side
            out.append((x, y))
    return out


def hv_route(g: GridTopology, src: int, dst: int, first: Direction) -> Route:
    pts = lattice_hv_path(g.coords(src), g.coords(dst), g.side, first)
    return Route(tuple(x + g.side * y for x, y in pts))


def hv_routes_batch(side: int, src, dst, horizontal_first):
    """Vectorised :func:`hv_route` for many (src, dst, direction) triples.

    Returns ``(nodes, lengths)`` where ``nodes`` has shape ``(B, L)`` with
    ``L = 2 * (side // 2) + 1`` and unused trailing slots set to -1.
    """
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    hf = np.broadcast_to(np.asarray(horizontal_first, dtype=bool), src.shape)
    sx, sy = src % side, src // side
    dx = (dst % side - sx) % side
    dy = (dst // side - sy) % side
    dx = np.where(2 * dx > side, dx - side, dx)
    dy = np.where(2 * dy > side, dy - side, dy)
    L = 2 * (side // 2) + 1
    t = np.arange(L)[None, :]
    ax, ay = np.abs(dx)[:, None], np.abs(dy)[:, None]
    gx, gy = np.sign(dx)[:, None], np.sign(dy)[:, None]
    # horizontal-first: x moves for t <= |dx|, then y moves
    xh = sx[:, None] + gx * np.minimum(t, ax)
    yh = sy[:, None] + gy * np.clip(t - ax, 0, ay)
    # vertical-first
    yv = sy[:, None] + gy * np.minimum(t, ay)
    xv = sx[:, None] + gx * np.clip(t - ay, 0, ax)
    h = hf[:, None]
    x = np.where(h, xh, xv) % side
    y = np.where(h, yh, yv) % side
    lengths = (ax + ay + 1).ravel()
    nodes = np.where(t < lengths[:, None], x + side * y, -1)
    return nodes, lengths


def greedy_route(g: GeometricGraph, src: int, target, rng) -> Route:
    """Random greedy geographic route from ``src`` toward the point ``target``.

    Each hop goes to a neighbour drawn uniformly among those strictly closer
    to the target; the route ends at the first node with no such neighbour.
    """
    target = np.asarray(target, dtype=float)
    pos = g.positions
    wrap = g.torus_wrap

    def dist(p):
        d = torus_delta(p, target) if wrap else np.abs(p - target)
        return np.sqrt(np.sum(d * d, axis=-1))

    cur = src
    dcur = dist(pos[cur])
    path = [cur]
    while True:
        nb = g.neighbors[cur]
        if len(nb) == 0:
            break
        dn = dist(pos[nb])
        closer = np.flatnonzero(dn < dcur)
        if len(closer) == 0:
            break
        pick = closer[rng.integers(len(closer))] if len(closer) > 1 else closer[0]
        cur = int(nb[pick])
        dcur = dn[pick]
        path.append(cur)
    return Route(tuple(path))


def box_route(b: BoxGrid, src: int, target, first: Direction, rng) -> Route:
    """Box-greedy route: follow the one-turn box-lattice route from the box of
    ``src`` to the box holding ``target``, picking one uniform occupant per box."""
    m = b.boxes_per_side
    start = b.box_coords(int(b.membership[src]))
    goal = b.box_coords(b.box_of_point(target))
    path = [src]
    for bx, by in lattice_hv_path(start, goal, m, first)[1:]:
        box = bx + m * by
        occ = b.members[box]
        if len(occ) == 0:
            raise IrregularGraphError(f"box {box} at ({bx}, {by}) is empty", boxes=[box])
        path.append(int(occ[rng.integers(len(occ))]))
    return Route(tuple(path))
