"""Experiment configuration and the runs behind the command-line tool.

Seeding: trial ``t`` of a run with base seed ``s`` simulates with the PCG64
stream of ``trial_seed(s, t)`` (``SeedSequence([s, t])``) and draws its
initial vector from ``SeedSequence([s, t, 1])``. Random geometric graphs use integer seeds
``s + t`` (or, with ``require_regular``, the ``t``-th regular graph seed at or
after ``s``).
"""

from __future__ import annotations

import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import gossip, poincare, spectral
from .gossip import Protocol
from .topology import (
    build_complete,
    build_grid,
    build_rgg,
    check_regularity,
    partition_boxes,
    box_count,
)


# slack for comparing an eigenvalue with its bound in floating point
BOUND_TOL = 1e-12


@dataclass
class ExperimentConfig:
    topology: dict = field(default_factory=lambda: {"kind": "grid", "side": 8})
    protocol: str = "path-hv"
    rounds: int = 2000
    base_seed: int = 0
    trials: int = 1
    alpha: float = 2.5
    require_regular: bool = False
    window: object = "auto"  # "auto" or [burn_in, window_end]
    stop_below: float | None = None
    record_every: int = 1
    x0: str = "normal"
    epsilons: list = field(default_factory=lambda: [1e-2, 1e-3])
    spectrum_mode: str = "exact"  # exact | mc | complete
    mc_samples: int = 1_000_000
    sizes: list = field(default_factory=list)
    route_samples: int = 1000
    trace_stride: int = 1
    compare_mc: bool = False
    out: str = "out"

    def __post_init__(self):
        Protocol(self.protocol)
        kind = self.topology.get("kind")
        if kind not in ("grid", "rgg", "complete"):
            raise ValueError(f"unknown topology kind {kind!r}")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.window != "auto":
            lo, hi = self.window
            if not 0 <= lo < hi:
                raise ValueError(f"bad window {self.window}")
            self.window = [int(lo), int(hi)]
        proto = Protocol(self.protocol)
        needs = {
            Protocol.PATH_HV: ("grid",),
            Protocol.PATH_GREEDY: ("rgg",),
            Protocol.PATH_BOX: ("rgg",),
            Protocol.GEOGRAPHIC: ("grid", "rgg"),
            Protocol.STANDARD: ("grid", "rgg", "complete"),
        }[proto]
        if kind not in needs:
            raise ValueError(f"protocol {proto.value!r} cannot run on a {kind} topology")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def with_size(self, size) -> "ExperimentConfig":
        topo = dict(self.topology)
        topo["side" if topo["kind"] == "grid" else "n"] = size
        return dataclasses.replace(self, topology=topo)


def _regular_positions(n, c, alpha, seed):
    """Regularity of the graph ``build_rgg(n, c, True, seed)`` from its positions alone."""
    pos = np.random.default_rng(seed).random((n, 2))
    m = math.isqrt(box_count(n, alpha))
    cell = np.minimum((pos * m).astype(np.int64), m - 1)
    occ = np.bincount(cell[:, 0] + m * cell[:, 1], minlength=m * m)
    lo, hi = alpha / 2 * math.log(n), 2 * alpha * math.log(n)
    return bool(lo <= occ.min() and occ.max() <= hi)


def find_regular_seeds(n, c, alpha, count, start=0, limit=100_000):
    """First ``count`` integer seeds ``>= start`` whose graphs pass the regularity check."""
    found = []
    s = start
    while len(found) < count:
        if s - start >= limit:
            raise RuntimeError(f"only {len(found)} regular graphs in {limit} seeds (n={n})")
        if _regular_positions(n, c, alpha, s):
            found.append(s)
        s += 1
    return found


def graph_seeds(cfg: ExperimentConfig):
    t = cfg.topology
    if cfg.require_regular:
        return find_regular_seeds(t["n"], t["c"], cfg.alpha, cfg.trials, start=cfg.base_seed)
    return [cfg.base_seed + i for i in range(cfg.trials)]


def build_topology(cfg: ExperimentConfig, graph_seed=None):
    t = cfg.topology
    kind = t["kind"]
    if kind == "grid":
        return build_grid(int(t["side"]))
    if kind == "complete":
        return build_complete(int(t["n"]))
    g = build_rgg(int(t["n"]), float(t["c"]), bool(t.get("torus", True)), int(graph_seed))
    if Protocol(cfg.protocol) is Protocol.PATH_BOX:
        return partition_boxes(g, cfg.alpha)
    return g


def _size(cfg):
    t = cfg.topology
    return int(t["side"]) ** 2 if t["kind"] == "grid" else int(t["n"])


def run_one(cfg: ExperimentConfig, trial: int, graph_seed=None):
    """One seeded trial: returns ``(row, trace)``."""
    topo = build_topology(cfg, graph_seed)
    n = _size(cfg)
    x0 = gossip.initial_vector(
        n, gossip.make_rng(np.random.SeedSequence([cfg.base_seed, trial, 1])), cfg.x0
    )
    stop = cfg.stop_below
    if stop is None and cfg.window == "auto":
        stop = 1e-7
    trace = gossip.run_trial(
        x0, cfg.protocol, topo, cfg.rounds,
        seed=gossip.trial_seed(cfg.base_seed, trial),
        record_every=cfg.record_every, stop_below=stop,
    )
    if cfg.window == "auto":
        lo, hi = gossip.auto_window(trace)
    else:
        lo, hi = cfg.window
    tc = gossip.estimate_tc(trace, lo, hi)
    mean_r = trace.mean_messages
    row = {
        "trial": trial,
        "graph_seed": -1 if graph_seed is None else int(graph_seed),
        "rounds": trace.rounds,
        "burn_in": lo,
        "window_end": hi,
        "tc": tc,
        "mean_R": mean_r,
        "cc": gossip.consensus_cost(tc, mean_r),
    }
    return row, trace


def _run_one_star(args):
    return run_one(*args)


def _jobs(cfg: ExperimentConfig):
    seeds = graph_seeds(cfg) if cfg.topology["kind"] == "rgg" else [None] * cfg.trials
    return [(cfg, i, seeds[i]) for i in range(cfg.trials)]


def _run_jobs(jobs, threads):
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(_run_one_star, jobs))
    return [run_one(*j) for j in jobs]


def simulate(cfg: ExperimentConfig, threads: int = 1):
    """All trials of ``cfg``; rows and traces come back in trial order."""
    results = _run_jobs(_jobs(cfg), threads)
    return [r[0] for r in results], [r[1] for r in results]


def aggregate(rows, keys=("tc", "mean_R", "cc")):
    out = {}
    for k in keys:
        v = np.array([r[k] for r in rows], dtype=float)
        out[k + "_mean"] = float(v.mean())
        out[k + "_std"] = float(v.std(ddof=1)) if len(v) > 1 else 0.0
    return out


def mean_hops(cfg: ExperimentConfig, samples: int, graph_seed=None, seed=0) -> float:
    """Mean route hop count for path protocols (half the mean message count)."""
    topo = build_topology(cfg, graph_seed)
    return gossip.mean_messages(cfg.protocol, topo, samples, seed) / 2


def spectrum(cfg: ExperimentConfig):
    """Expected matrix and spectral summary per ``cfg.spectrum_mode``."""
    mode = cfg.spectrum_mode
    if mode == "complete":
        E = spectral.exact_ew_standard(build_complete(int(cfg.topology["n"])))
    elif mode == "exact":
        if cfg.topology["kind"] == "complete" or Protocol(cfg.protocol) is Protocol.STANDARD:
            E = spectral.exact_ew_standard(build_topology(cfg, cfg.base_seed))
        elif Protocol(cfg.protocol) is Protocol.PATH_HV:
            E = spectral.exact_ew_grid(int(cfg.topology["side"]))
        else:
            raise ValueError(f"no exact E[W] for protocol {cfg.protocol!r}; use mode 'mc'")
    elif mode == "mc":
        topo = build_topology(cfg, graph_seeds(dataclasses.replace(cfg, trials=1))[0]
                              if cfg.topology["kind"] == "rgg" else None)
        E = spectral.mc_ew(cfg.protocol, topo, cfg.mc_samples, seed=cfg.base_seed)
    else:
        raise ValueError(f"unknown spectrum mode {mode!r}")
    res = spectral.lambda2(E)
    return E, res


def mc_deviation(cfg: ExperimentConfig, E) -> float:
    """Largest entrywise gap between ``E`` and a Monte Carlo estimate of the same matrix."""
    topo = build_topology(cfg, cfg.base_seed)
    M = spectral.mc_ew(cfg.protocol, topo, cfg.mc_samples, seed=cfg.base_seed + 1)
    return float(np.abs(M.entries - E.entries).max())


def spectrum_rows(cfg: ExperimentConfig, E, res):
    rows = [
        ("n", E.n),
        ("provenance", E.provenance),
        ("stochastic_residual", E.stochastic_residual()),
        ("lambda2", res.lambda2),
        ("min_eigenvalue", res.min_eigenvalue),
        ("spectral_gap", res.spectral_gap),
    ]
    if res.lambda2 < 1:
        for eps in cfg.epsilons:
            tb = spectral.time_bounds(res.lambda2, eps)
            rows.append(("tc_upper", tb.tc_upper))
            rows.append(("tc_upper_loose", tb.tc_upper_loose))
            rows.append((f"tave_upper[eps={eps:g}]", tb.tave_upper))
            rows.append((f"tave_upper_loose[eps={eps:g}]", tb.tave_upper_loose))
    seen, out = set(), []
    for k, v in rows:
        if k not in seen:
            seen.add(k)
            out.append((k, v))
    return out


def poincare_report(cfg: ExperimentConfig):
    """Road map, kappa, true lambda2 and congestion for grid, complete, or box setups."""
    kind = cfg.topology["kind"]
    if kind == "complete":
        n = int(cfg.topology["n"])
        E = spectral.exact_ew_standard(build_complete(n))
        rm = poincare.build_direct_roadmap(n)
        cap = 1
    elif kind == "grid":
        side = int(cfg.topology["side"])
        E = spectral.exact_ew_grid(side)
        rm = poincare.build_grid_roadmap(side, E)
        cap = 8
    else:
        cfg = dataclasses.replace(cfg, protocol="path-box")
        seed = graph_seeds(dataclasses.replace(cfg, trials=1))[0]
        b = build_topology(cfg, seed)
        rep = check_regularity(b)
        if not rep.is_regular:
            from .errors import IrregularGraphError
            raise IrregularGraphError(
                f"graph seed {seed} is irregular; failing boxes {list(rep.failing_boxes)}",
                boxes=rep.failing_boxes,
            )
        E = spectral.mc_ew(Protocol.PATH_BOX, b, cfg.mc_samples, seed=cfg.base_seed)
        rm = poincare.build_box_roadmap(b, E)
        cap = poincare.box_congestion_cap(b)
    res = spectral.lambda2(E)
    pr = poincare.kappa(rm, E)
    summary = [
        ("n", E.n),
        ("kappa", pr.kappa),
        ("lambda2_bound", pr.lambda2_bound),
        ("lambda2", res.lambda2),
        ("min_eigenvalue", res.min_eigenvalue),
        ("tightness", (1 - pr.lambda2_bound) / (1 - res.lambda2) if res.lambda2 < 1 else float("nan")),
        ("valid", res.lambda2 <= pr.lambda2_bound + BOUND_TOL and res.min_eigenvalue > 0),
        ("max_congestion", pr.max_congestion),
        ("congestion_cap", cap),
        ("max_congestion_unordered", pr.max_congestion_unordered),
        ("kappa_unordered", pr.kappa_unordered),
        ("max_resistance", pr.max_resistance),
    ]
    return summary, rm, E


def sweep(cfg: ExperimentConfig, threads: int = 1):
    """Per-size aggregates plus fitted log-log slopes against n."""
    if len(cfg.sizes) < 3:
        raise ValueError("a sweep needs at least three sizes to fit slopes")
    cells = [cfg.with_size(size) for size in cfg.sizes]
    jobs = [job for c in cells for job in _jobs(c)]
    # every (size, seed) cell runs independently; results keep job order
    results = iter(_run_jobs(jobs, threads))
    per_size = []
    for size, c in zip(cfg.sizes, cells):
        rows = [next(results)[0] for _ in range(c.trials)]
        agg = aggregate(rows)
        n = _size(c)
        agg.update({"size": size, "n": n, "trials": len(rows)})
        agg["hops_mean"] = agg["mean_R_mean"] / 2
        if (
            c.topology["kind"] == "grid"
            and Protocol(c.protocol) is Protocol.PATH_HV
            and n <= spectral.DENSE_MAX_NODES
        ):
            lam = spectral.lambda2(spectral.exact_ew_grid(int(size))).lambda2
            agg["relaxation"] = 1 / (1 - lam)
        else:
            agg["relaxation"] = float("nan")
        per_size.append(agg)
    ns = [a["n"] for a in per_size]
    slopes = []
    for metric in ("tc_mean", "cc_mean", "hops_mean", "relaxation"):
        ys = [a[metric] for a in per_size]
        if all(np.isfinite(ys)) and all(y > 0 for y in ys):
            s, se = gossip.loglog_slope(ns, ys)
            slopes.append((metric, s, se))
    return per_size, slopes
