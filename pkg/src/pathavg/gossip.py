"""Gossip rounds for the five protocols, error traces, and consensus time/cost."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConvergedError, NoDecayError
from .routing import Direction, box_route, greedy_route
from .topology import BoxGrid, CompleteGraph, GeometricGraph, GridTopology


class Protocol(enum.Enum):
    STANDARD = "standard"
    GEOGRAPHIC = "geographic"
    PATH_GREEDY = "path-greedy"
    PATH_HV = "path-hv"
    PATH_BOX = "path-box"


_COMPATIBLE = {
    Protocol.STANDARD: (GridTopology, GeometricGraph, CompleteGraph),
    Protocol.GEOGRAPHIC: (GridTopology, GeometricGraph),
    Protocol.PATH_GREEDY: (GeometricGraph,),
    Protocol.PATH_HV: (GridTopology,),
    Protocol.PATH_BOX: (BoxGrid,),
}


def check_compatible(protocol: Protocol, topology) -> None:
    protocol = Protocol(protocol)
    if not isinstance(topology, _COMPATIBLE[protocol]):
        allowed = ", ".join(t.__name__ for t in _COMPATIBLE[protocol])
        raise ValueError(
            f"protocol {protocol.value!r} needs one of [{allowed}], "
            f"got {type(topology).__name__}"
        )


def node_count(topology) -> int:
    if isinstance(topology, BoxGrid):
        return topology.graph.n
    return topology.n


class UniformSource:
    """Buffered uniform draws from a numpy ``Generator``.

    Exposes the two methods the routing code calls (``random`` and
    ``integers(k)``) so it can stand in for the generator in hot loops.
    ``integers(k)`` is ``floor(u * k)``.
    """

    def __init__(self, rng, chunk: int = 16384):
        self._rng = rng
        self._chunk = chunk
        self._buf = []
        self._pos = 0

    def random(self) -> float:
        if self._pos >= len(self._buf):
            self._buf = self._rng.random(self._chunk).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def integers(self, k: int) -> int:
        return int(self.random() * k)

    def point(self) -> tuple[float, float]:
        return self.random(), self.random()


def trial_seed(base_seed: int, trial: int) -> np.random.SeedSequence:
    """Independent per-trial stream: SeedSequence hash of (base_seed, trial)."""
    return np.random.SeedSequence([int(base_seed), int(trial)])


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator from an int or a SeedSequence."""
    return np.random.Generator(np.random.PCG64(seed))


def _as_source(rng):
    if isinstance(rng, np.random.Generator):
        return UniformSource(rng)
    return rng


def _grid_path(i: int, j: int, side: int, horizontal_first: bool) -> list:
    """Node ids of the one-turn torus route; same output as ``hv_route``."""
    x0, y0 = i % side, i // side
    dx = (j % side - x0) % side
    dy = (j // side - y0) % side
    if 2 * dx > side:
        dx -= side
    if 2 * dy > side:
        dy -= side
    sx = 1 if dx > 0 else -1
    sy = 1 if dy > 0 else -1
    if horizontal_first:
        out = [(x0 + sx * t) % side + side * y0 for t in range(abs(dx) + 1)]
        x1 = (x0 + dx) % side
        out += [x1 + side * ((y0 + sy * t) % side) for t in range(1, abs(dy) + 1)]
    else:
        out = [x0 + side * ((y0 + sy * t) % side) for t in range(abs(dy) + 1)]
        y1 = (y0 + dy) % side
        out += [(x0 + sx * t) % side + side * y1 for t in range(1, abs(dx) + 1)]
    return out


def make_sampler(protocol: Protocol, topology):
    """Return ``sample(rng) -> (S, R)``: the averaging set and one-hop messages
    of one round. ``rng`` may be a Generator or a :class:`UniformSource`."""
    protocol = Protocol(protocol)
    check_compatible(protocol, topology)

    if protocol is Protocol.STANDARD:
        if isinstance(topology, CompleteGraph):
            n = topology.n

            def sample(rng):
                i = rng.integers(n)
                j = rng.integers(n)
                return ((i,), 0) if i == j else ((i, j), 2)

        else:
            n = topology.n
            nbrs = topology.neighbors

            def sample(rng):
                i = rng.integers(n)
                nb = nbrs[i]
                if len(nb) == 0:
                    return (i,), 0
                return (i, int(nb[rng.integers(len(nb))])), 2

        return sample

    if isinstance(topology, GridTopology):
        n = topology.n
        side = topology.side

        def grid_route(rng):
            i = rng.integers(n)
            j = rng.integers(n)
            return _grid_path(i, j, side, rng.random() < 0.5)

        if protocol is Protocol.GEOGRAPHIC:
            def sample(rng):
                r = grid_route(rng)
                if len(r) == 1:
                    return r, 0
                return (r[0], r[-1]), 2 * (len(r) - 1)
        else:
            def sample(rng):
                r = grid_route(rng)
                return r, 2 * (len(r) - 1)
        return sample

    if isinstance(topology, GeometricGraph):
        n = topology.n

        def rgg_route(rng):
            i = rng.integers(n)
            target = (rng.random(), rng.random())
            return greedy_route(topology, i, target, rng).nodes

        if protocol is Protocol.GEOGRAPHIC:
            def sample(rng):
                r = rgg_route(rng)
                if len(r) == 1:
                    return r, 0
                return (r[0], r[-1]), 2 * (len(r) - 1)
        else:
            def sample(rng):
                r = rgg_route(rng)
                return r, 2 * (len(r) - 1)
        return sample

    # box-path averaging
    b = topology
    n = b.graph.n

    def sample(rng):
        i = rng.integers(n)
        target = (rng.random(), rng.random())
        first = Direction.HORIZONTAL_FIRST if rng.random() < 0.5 else Direction.VERTICAL_FIRST
        r = box_route(b, i, target, first, rng).nodes
        return r, 2 * (len(r) - 1)

    return sample


@dataclass
class GossipState:
    x: np.ndarray
    x0_sum: float
    t: int = 0
    total_messages: int = 0

    @classmethod
    def start(cls, x0) -> "GossipState":
        x = np.array(x0, dtype=float)
        return cls(x=x, x0_sum=float(x.sum()))

    @property
    def error(self) -> float:
        if len(self.x) == 0:
            return 0.0
        return float(np.linalg.norm(self.x - self.x0_sum / len(self.x)))


@dataclass(frozen=True)
class RoundRecord:
    averaging_set_size: int
    messages: int
    nodes: tuple = field(default=(), repr=False)


def apply_average(state: GossipState, S) -> GossipState:
    """Replace the estimate of every node in ``S`` with their mean (in place)."""
    idx = np.unique(np.asarray(list(S), dtype=np.int64))
    if len(idx) == 0:
        raise ValueError("averaging set must be nonempty")
    if len(idx) > 1:
        state.x[idx] = state.x[idx].mean()
    return state


def averaging_matrix(S, n: int) -> sp.csr_matrix:
    """The round's W(t): 1/|S| on S x S, identity elsewhere."""
    idx = np.unique(np.asarray(list(S), dtype=np.int64))
    diag = np.ones(n)
    diag[idx] = 0.0
    W = sp.diags(diag, format="coo")
    rows = np.repeat(idx, len(idx))
    cols = np.tile(idx, len(idx))
    block = sp.coo_matrix((np.full(len(rows), 1.0 / len(idx)), (rows, cols)), shape=(n, n))
    return (W + block).tocsr()


def gossip_round(state: GossipState, protocol: Protocol, topology, rng) -> RoundRecord:
    S, R = make_sampler(protocol, topology)(_as_source(rng))
    apply_average(state, S)
    state.t += 1
    state.total_messages += R
    return RoundRecord(averaging_set_size=len(set(S)), messages=R, nodes=tuple(S))


@dataclass(frozen=True)
class ErrorTrace:
    t: np.ndarray
    err: np.ndarray
    cum_messages: np.ndarray

    @property
    def rounds(self) -> int:
        return int(self.t[-1])

    @property
    def mean_messages(self) -> float:
        return float(self.cum_messages[-1]) / self.rounds if self.rounds else 0.0

    def write_csv(self, path, stride: int = 1) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "err_l2", "cum_messages"])
            for k in range(0, len(self.t), stride):
                w.writerow([int(self.t[k]), f"{self.err[k]:.17g}", int(self.cum_messages[k])])


def run_trial(
    x0,
    protocol: Protocol,
    topology,
    rounds: int,
    seed=0,
    record_every: int = 1,
    stop_below: float | None = None,
) -> ErrorTrace:
    """Run ``rounds`` gossip rounds from ``x0`` and record the l2 error.

    The error and the cumulative message count are recorded at ``t = 0`` and
    every ``record_every`` rounds after. With ``stop_below`` set, the run ends
    at the first recorded round whose error is at most
    ``stop_below * ||eps(0)||``.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    sample = make_sampler(protocol, topology)
    src = UniformSource(make_rng(seed))
    # plain floats beat numpy fancy indexing for the short sets of one round
    x = np.array(x0, dtype=float).tolist()
    n = len(x)
    ave = math.fsum(x) / n if n else 0.0

    def err():
        return float(np.linalg.norm(np.array(x) - ave)) if n else 0.0

    ts, es, cs = [0], [err()], [0]
    floor = None if stop_below is None else stop_below * es[0]
    cum = 0
    for t in range(1, rounds + 1):
        S, R = sample(src)
        cum += R
        k = len(S)
        if k == 2:
            a, b = S
            v = 0.5 * (x[a] + x[b])
            x[a] = v
            x[b] = v
        elif k > 2:
            v = sum([x[i] for i in S]) / k
            for i in S:
                x[i] = v
        if t % record_every == 0 or t == rounds:
            ts.append(t)
            es.append(err())
            cs.append(cum)
            if floor is not None and es[-1] <= floor:
                break
    return ErrorTrace(t=np.array(ts), err=np.array(es), cum_messages=np.array(cs, dtype=np.int64))


def estimate_tc(trace: ErrorTrace, burn_in: int = 500, window_end: int = 1750) -> float:
    """Consensus time from the least-squares slope of log error over a window."""
    if not 0 <= burn_in < window_end:
        raise ValueError(f"need 0 <= burn_in < window_end, got {burn_in}, {window_end}")
    if window_end > trace.rounds:
        raise ValueError(f"window_end {window_end} beyond trace length {trace.rounds}")
    sel = (trace.t >= burn_in) & (trace.t <= window_end)
    t, e = trace.t[sel], trace.err[sel]
    if len(t) < 2:
        raise ValueError("fewer than two recorded points in the window")
    if np.any(e <= 0):
        raise ConvergedError("error reached zero inside the window")
    slope = np.polyfit(t.astype(float), np.log(e), 1)[0]
    if not slope < 0:
        raise NoDecayError(f"log-error slope {slope:g} is not negative")
    return -1.0 / slope


def auto_window(trace: ErrorTrace, start_ratio: float = 1e-2, end_ratio: float = 1e-7):
    """Pick ``(burn_in, window_end)``: the first recorded rounds at which the error
    has dropped below ``start_ratio`` and ``end_ratio`` of its initial value."""
    e0 = trace.err[0]
    below_start = np.flatnonzero(trace.err <= start_ratio * e0)
    below_end = np.flatnonzero(trace.err <= end_ratio * e0)
    if len(below_start) == 0:
        raise NoDecayError(f"error never fell below {start_ratio:g} of its initial value")
    lo = int(trace.t[below_start[0]])
    hi = int(trace.t[below_end[0]]) if len(below_end) else trace.rounds
    if hi <= lo:
        hi = trace.rounds
    return lo, hi


def consensus_cost(tc: float, mean_R: float) -> float:
    if tc <= 0:
        raise ValueError("tc must be positive")
    if mean_R < 0:
        raise ValueError("mean_R must be nonnegative")
    return tc * mean_R


def initial_vector(n: int, rng, kind: str = "normal") -> np.ndarray:
    if kind == "normal":
        return rng.standard_normal(n)
    if kind == "impulse":
        x = np.zeros(n)
        if n:
            x[0] = 1.0
        return x
    raise ValueError(f"unknown initial vector kind {kind!r}")


def mean_messages(protocol: Protocol, topology, samples: int, seed=0) -> float:
    """Monte Carlo estimate of E[R] over ``samples`` rounds (no averaging applied)."""
    sample = make_sampler(protocol, topology)
    src = UniformSource(make_rng(seed))
    total = 0
    for _ in range(samples):
        total += sample(src)[1]
    return total / samples


def loglog_slope(xs, ys):
    """OLS slope of log(ys) on log(xs) and its standard error."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    if len(lx) < 3:
        raise ValueError("need at least three points to fit a slope")
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, res, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    dof = len(lx) - 2
    s2 = float(resid @ resid) / dof if dof > 0 else 0.0
    se = math.sqrt(s2 / float(((lx - lx.mean()) ** 2).sum()))
    return float(coef[0]), se
