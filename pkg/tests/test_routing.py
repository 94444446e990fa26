import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pathavg.errors import IrregularGraphError
from pathavg.gossip import _grid_path
from pathavg.routing import (
    Direction,
    box_route,
    greedy_route,
    hv_route,
    hv_routes_batch,
    lattice_hv_path,
)
from pathavg.topology import (
    build_grid,
    build_rgg,
    graph_from_positions,
    partition_boxes,
    point_distance,
    torus_l1,
)

H, V = Direction.HORIZONTAL_FIRST, Direction.VERTICAL_FIRST


def test_hv_route_tie_breaks_positive():
    g = build_grid(4)
    r = hv_route(g, g.node(0, 0), g.node(2, 1), H)
    assert [g.coords(i) for i in r.nodes] == [(0, 0), (1, 0), (2, 0), (2, 1)]


def test_hv_route_wraps():
    g = build_grid(4)
    r = hv_route(g, 0, g.node(3, 0), H)
    assert [g.coords(i) for i in r.nodes] == [(0, 0), (3, 0)]


def test_hv_route_trivial():
    g = build_grid(5)
    r = hv_route(g, 7, 7, V)
    assert r.nodes == (7,)
    assert r.hop_count == 0


@given(side=st.integers(2, 15), a=st.integers(0, 224), b=st.integers(0, 224), hf=st.booleans())
def test_hv_route_properties(side, a, b, hf):
    g = build_grid(side)
    src, dst = a % g.n, b % g.n
    r = hv_route(g, src, dst, H if hf else V)
    nodes = r.nodes
    assert nodes[0] == src and nodes[-1] == dst
    assert r.hop_count == g.distance(src, dst)
    assert len(set(nodes)) == len(nodes)
    assert all(g.distance(u, v) == 1 for u, v in zip(nodes, nodes[1:]))
    # one turn at most: the moving axis changes at most once
    axes = [0 if g.coords(u)[1] == g.coords(v)[1] else 1 for u, v in zip(nodes, nodes[1:])]
    assert sum(1 for p, q in zip(axes, axes[1:]) if p != q) <= 1
    if axes:
        assert axes[0] == (0 if hf else 1) or g.coords(src)[0 if hf else 1] == g.coords(dst)[0 if hf else 1]
    assert tuple(_grid_path(src, dst, side, hf)) == nodes


@given(side=st.integers(2, 12), seed=st.integers(0, 2**32 - 1))
def test_batch_matches_scalar(side, seed):
    rng = np.random.default_rng(seed)
    g = build_grid(side)
    src = rng.integers(g.n, size=20)
    dst = rng.integers(g.n, size=20)
    hf = rng.random(20) < 0.5
    nodes, lengths = hv_routes_batch(side, src, dst, hf)
    for k in range(20):
        want = hv_route(g, int(src[k]), int(dst[k]), H if hf[k] else V).nodes
        assert lengths[k] == len(want)
        assert tuple(nodes[k, : lengths[k]].tolist()) == want
        assert np.all(nodes[k, lengths[k]:] == -1)


def test_greedy_single_node():
    g = graph_from_positions(np.array([[0.3, 0.3]]), 0.1, True)
    assert greedy_route(g, 0, (0.8, 0.8), np.random.default_rng(0)).nodes == (0,)


def test_greedy_collinear_chain():
    xs = np.round(np.arange(1, 10) * 0.1, 10)
    pos = np.stack([xs, np.full(9, 0.5)], axis=1)
    g = graph_from_positions(pos, 0.15, torus_wrap=False)
    r = greedy_route(g, 0, (0.9, 0.5), np.random.default_rng(0))
    assert r.nodes == tuple(range(9))


@given(seed=st.integers(0, 10_000))
def test_greedy_strictly_approaches_target(seed):
    g = build_rgg(300, 4.5, True, seed % 7)
    rng = np.random.default_rng(seed)
    target = rng.random(2)
    src = int(rng.integers(g.n))
    r = greedy_route(g, src, target, rng).nodes
    d = point_distance(g.positions[list(r)], target)
    assert np.all(np.diff(d) < 0)
    for u, v in zip(r, r[1:]):
        assert v in g.neighbors[u]
    # stops at a local minimum
    last = r[-1]
    nb = g.neighbors[last]
    if len(nb):
        assert np.all(point_distance(g.positions[nb], target) >= d[-1])


def test_greedy_is_uniform_among_closer():
    # node 0 at centre, three neighbours all closer to the target
    pos = np.array([[0.5, 0.5], [0.55, 0.5], [0.55, 0.52], [0.55, 0.48]])
    g = graph_from_positions(pos, 0.06, torus_wrap=False)
    rng = np.random.default_rng(1)
    firsts = [greedy_route(g, 0, (0.9, 0.5), rng).nodes[1] for _ in range(6000)]
    counts = np.bincount(firsts, minlength=4)[1:]
    # 3-sigma band around 2000 each
    assert np.all(np.abs(counts - 2000) < 3 * math.sqrt(6000 * (1 / 3) * (2 / 3)))


def _regular_box_grid():
    g = build_rgg(1000, 25.0, True, 2)
    return partition_boxes(g, 2.5)


def test_box_route_same_box():
    b = _regular_box_grid()
    src = int(b.members[0][0])
    m = b.boxes_per_side
    target = (0.5 / m, 0.5 / m)
    assert box_route(b, src, target, H, np.random.default_rng(0)).nodes == (src,)


def test_box_route_forced_sequence():
    pos = []
    m = 3
    for by in range(m):
        for bx in range(m):
            for t in range(4):
                pos.append(((bx + 0.2 + 0.2 * t) / m, (by + 0.5) / m))
    g = graph_from_positions(np.array(pos), 0.45, True, c=1e9)
    from pathavg.topology import BoxGrid

    memb = np.array([i // 4 for i in range(36)])
    members = tuple(np.arange(4 * k, 4 * k + 4) for k in range(9))
    b = BoxGrid(graph=g, alpha=2.5, k=9, boxes_per_side=3, membership=memb,
                occupancy=np.full(9, 4), members=members)
    r = box_route(b, 0, (1.5 / 3, 1.5 / 3), H, np.random.default_rng(0))
    assert [b.membership[i] for i in r.nodes] == [0, 1, 4]


def test_box_route_empty_box_raises():
    from pathavg.topology import BoxGrid

    g = graph_from_positions(np.array([[0.1, 0.1], [0.9, 0.9]]), 0.3, True, c=1e9)
    b = BoxGrid(graph=g, alpha=2.5, k=4, boxes_per_side=2, membership=np.array([0, 3]),
                occupancy=np.array([1, 0, 0, 1]), members=(np.array([0]), np.array([], int),
                                                           np.array([], int), np.array([1])))
    with pytest.raises(IrregularGraphError):
        box_route(b, 0, (0.9, 0.1), H, np.random.default_rng(0))


def test_box_route_validity_audit():
    g = build_rgg(2000, 25.0, True, 108)
    b = partition_boxes(g, 2.5)
    rng = np.random.default_rng(3)
    for _ in range(10_000):
        src = int(rng.integers(g.n))
        target = rng.random(2)
        first = H if rng.random() < 0.5 else V
        r = box_route(b, src, target, first, rng).nodes
        boxes = [int(b.membership[i]) for i in r]
        assert boxes[-1] == b.box_of_point(target)
        for u, v, bu, bv in zip(r, r[1:], boxes, boxes[1:]):
            assert b.box_distance(bu, bv) == 1
            assert point_distance(g.positions[u], g.positions[v]) <= g.radius
        assert len(r) - 1 == torus_l1(b.box_coords(boxes[0]), b.box_coords(boxes[-1]), b.boxes_per_side)
