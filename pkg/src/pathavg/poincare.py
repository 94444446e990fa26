"""Canonical-path (travel agency) bounds on lambda2.

A road map fixes one path per ordered node pair over "flights", the pairs
(u, v) with P[u, v] > 0. Each path has resistance ``sum n / P[u, v]`` over
its hops; the load of a directed flight is the summed resistance of the
paths using it, divided by n^2, and kappa is the largest load. Then
``lambda2(P) <= 1 - 1/kappa``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InfiniteResistanceError, InvalidRoadmapError, IrregularGraphError
from .topology import BoxGrid, check_regularity, wrap_step


def midpoint_airport(i, j, side: int) -> tuple[int, int]:
    """Lattice point roughly halfway along the shortest route from ``i`` to ``j``."""
    out = []
    for a in range(2):
        d = wrap_step(j[a] - i[a], side)
        sign = 1 if d >= 0 else -1
        out.append((i[a] + sign * (abs(d) // 2)) % side)
    return tuple(out)


def _midpoints(xi, yi, xj, yj, side):
    """Vectorised :func:`midpoint_airport`."""
    def axis(a, b):
        d = (b - a) % side
        d = np.where(2 * d > side, d - side, d)
        return (a + np.sign(d) * (np.abs(d) // 2)) % side
    return axis(xi, xj), axis(yi, yj)


@dataclass(frozen=True)
class RoadMap:
    """One canonical path per ordered pair: ``(src, mid, dst)``, ``mid = -1``
    for a direct flight."""

    n: int
    src: np.ndarray
    mid: np.ndarray
    dst: np.ndarray

    def __len__(self):
        return len(self.src)

    def path(self, i: int, j: int) -> tuple:
        hit = np.flatnonzero((self.src == i) & (self.dst == j))
        if len(hit) != 1:
            raise KeyError((i, j))
        k = int(self.mid[hit[0]])
        return (i, j) if k < 0 else (i, k, j)

    def hops(self):
        """``(u, v, path_index)`` for every hop of every path."""
        direct = self.mid < 0
        idx = np.arange(len(self.src))
        two = ~direct
        u = np.concatenate([self.src[direct], self.src[two], self.mid[two]])
        v = np.concatenate([self.dst[direct], self.mid[two], self.dst[two]])
        p = np.concatenate([idx[direct], idx[two], idx[two]])
        return u, v, p

    def usage(self, directed: bool = True):
        """Per-flight path counts as ``(u, v, count)`` arrays over used flights."""
        u, v, _ = self.hops()
        if not directed:
            u, v = np.minimum(u, v), np.maximum(u, v)
        counts = np.bincount(u.astype(np.int64) * self.n + v, minlength=self.n * self.n)
        ids = np.flatnonzero(counts)
        return ids // self.n, ids % self.n, counts[ids]

    def max_congestion(self, directed: bool = True) -> int:
        return int(self.usage(directed)[2].max()) if len(self) else 0

    def is_complete(self) -> bool:
        n = self.n
        if len(self) != n * (n - 1):
            return False
        key = self.src.astype(np.int64) * n + self.dst
        return bool(np.all(self.src != self.dst)) and len(np.unique(key)) == n * (n - 1)


def _check_flights(rm: RoadMap, P):
    u, v, _ = rm.hops()
    bad = P[u, v] <= 0
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise InvalidRoadmapError(f"flight ({int(u[k])}, {int(v[k])}) has zero capacity")


def build_direct_roadmap(n: int) -> RoadMap:
    """Every pair flies direct; the natural road map on the complete graph."""
    i, j = np.divmod(np.arange(n * n), n)
    keep = i != j
    return RoadMap(n=n, src=i[keep], mid=np.full(keep.sum(), -1), dst=j[keep])


def build_grid_roadmap(side: int, P=None) -> RoadMap:
    """Two-hop road map on the torus grid through the midpoint airport.

    Pairs whose airport coincides with the source fly direct.
    """
    n = side * side
    i, j = np.divmod(np.arange(n * n), n)
    keep = i != j
    i, j = i[keep], j[keep]
    kx, ky = _midpoints(i % side, i // side, j % side, j // side, side)
    k = kx + side * ky
    k = np.where((k == i) | (k == j), -1, k)
    rm = RoadMap(n=n, src=i, mid=k, dst=j)
    if P is not None:
        _check_flights(rm, _entries(P))
    return rm


def _box_roadmap_chunks(b: BoxGrid):
    """Yield ``(src, mid, dst)`` arrays of the box road map, one source box at a time."""
    rep = check_regularity(b)
    if not rep.is_regular:
        raise IrregularGraphError(
            f"graph is not regular: occupancy in [{rep.min_occupancy}, {rep.max_occupancy}], "
            f"need [{rep.lower_threshold:.2f}, {rep.upper_threshold:.2f}]",
            boxes=rep.failing_boxes,
        )
    m = b.boxes_per_side
    members = [np.sort(a).astype(np.int64) for a in b.members]
    for bs in range(b.k):
        sx, sy = bs % m, bs // m
        A = members[bs]
        p = len(A)
        srcs, mids, dsts = [], [], []
        for bd in range(b.k):
            D = members[bd]
            q = len(D)
            if bs == bd:
                relay = members[b.box_index(sx, sy + 1)]
            else:
                kx, ky = midpoint_airport((sx, sy), (bd % m, bd // m), m)
                mb = kx + m * ky
                relay = None if mb == bs else members[mb]
            x, y = np.divmod(np.arange(p * q), q)
            if bs == bd:
                keep = x != y
                x, y = x[keep], y[keep]
            srcs.append(A[x])
            dsts.append(D[y])
            if relay is None:
                mids.append(np.full(len(x), -1, dtype=np.int64))
            else:
                mids.append(relay[(x + y) % len(relay)])
        yield np.concatenate(srcs), np.concatenate(mids), np.concatenate(dsts)


def build_box_roadmap(b: BoxGrid, P=None) -> RoadMap:
    """Two-hop road map over the box partition of a regular geometric graph.

    Cross-box pairs stop in the midpoint box of their boxes (direct when that
    is the source box); same-box pairs stop in the box directly above. Within
    a box pair, source ``x`` and destination ``y`` (positions in their boxes'
    id-sorted member lists) use relay ``(x + y) mod r`` of the relay box, so
    with equal occupancies every flight is used once per box pair.
    """
    parts = list(_box_roadmap_chunks(b))
    rm = RoadMap(
        n=b.graph.n,
        src=np.concatenate([c[0] for c in parts]),
        mid=np.concatenate([c[1] for c in parts]),
        dst=np.concatenate([c[2] for c in parts]),
    )
    if P is not None:
        _check_flights(rm, _entries(P))
    return rm


def box_roadmap_congestion(b: BoxGrid, directed: bool = True) -> int:
    """Max flight usage of :func:`build_box_roadmap` without holding all n^2 paths."""
    n = b.graph.n
    counts = np.zeros(n * n, dtype=np.int32)
    for src, mid, dst in _box_roadmap_chunks(b):
        rm = RoadMap(n=n, src=src, mid=mid, dst=dst)
        u, v, _ = rm.hops()
        if not directed:
            u, v = np.minimum(u, v), np.maximum(u, v)
        counts += np.bincount(u * n + v, minlength=n * n).astype(np.int32)
    return int(counts.max())


def box_congestion_cap(b: BoxGrid) -> int:
    occ = np.asarray(b.occupancy)
    return 9 * int(-(-occ.max() // occ.min()))


def _entries(P):
    return np.asarray(getattr(P, "entries", P), dtype=float)


def resistance(path, P) -> float:
    """Sum of ``n / P[u, v]`` over consecutive hops (uniform stationary law)."""
    M = _entries(P)
    n = M.shape[0]
    total = 0.0
    for u, v in zip(path[:-1], path[1:]):
        p = M[u, v]
        if p <= 0:
            raise InfiniteResistanceError(f"flight ({u}, {v}) has zero capacity")
        total += n / p
    return total


@dataclass(frozen=True)
class PoincareResult:
    kappa: float
    max_congestion: int
    max_resistance: float
    kappa_unordered: float
    max_congestion_unordered: int

    @property
    def lambda2_bound(self) -> float:
        return 1.0 - 1.0 / self.kappa


def path_resistances(rm: RoadMap, P) -> np.ndarray:
    M = _entries(P)
    n = rm.n
    direct = rm.mid < 0
    with np.errstate(divide="ignore"):
        first = M[rm.src, np.where(direct, rm.dst, rm.mid)]
        second = np.where(direct, np.inf, M[np.maximum(rm.mid, 0), rm.dst])
        if np.any(first <= 0) or np.any(second <= 0):
            raise InfiniteResistanceError("road map uses a flight with zero capacity")
        return n / first + np.where(direct, 0.0, n / second)


def flight_loads(rm: RoadMap, P, directed: bool = True):
    """``(u, v, usage, weighted_load)`` for every flight the road map uses."""
    res = path_resistances(rm, P)
    u, v, p = rm.hops()
    if not directed:
        u, v = np.minimum(u, v), np.maximum(u, v)
    ids = u.astype(np.int64) * rm.n + v
    uniq, inv, counts = np.unique(ids, return_inverse=True, return_counts=True)
    load = np.bincount(inv, weights=res[p]) / rm.n**2
    return uniq // rm.n, uniq % rm.n, counts, load


def kappa(rm: RoadMap, P) -> PoincareResult:
    """Poincare coefficient of a road map for a symmetric doubly stochastic ``P``.

    Flights are directed, matching the ordered-pair sum of the inequality.
    The unordered variant (both directions of a flight pooled) is reported
    alongside.
    """
    res = path_resistances(rm, P)
    _, _, cnt, load = flight_loads(rm, P, directed=True)
    _, _, cnt_u, load_u = flight_loads(rm, P, directed=False)
    return PoincareResult(
        kappa=float(load.max()),
        max_congestion=int(cnt.max()),
        max_resistance=float(res.max()),
        kappa_unordered=float(load_u.max()),
        max_congestion_unordered=int(cnt_u.max()),
    )


def write_congestion_csv(path, rm: RoadMap, P, directed: bool = True) -> None:
    u, v, cnt, load = flight_loads(rm, P, directed=directed)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["flight_u", "flight_v", "usage", "weighted_load"])
        for row in zip(u.tolist(), v.tolist(), cnt.tolist(), load.tolist()):
            w.writerow([row[0], row[1], row[2], f"{row[3]:.17g}"])
