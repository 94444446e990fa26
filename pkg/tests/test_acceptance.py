"""Acceptance suite: one check per criterion, each at its stated tolerance.

Every check prints ``PASS``/``FAIL`` with its measured numbers (collected and
repeated in the pytest terminal summary). Run standalone with
``python3 tests/test_acceptance.py`` to get just those lines.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from pathavg.experiments import ExperimentConfig, find_regular_seeds, sweep
from pathavg.gossip import (
    Protocol,
    UniformSource,
    auto_window,
    averaging_matrix,
    estimate_tc,
    initial_vector,
    loglog_slope,
    make_rng,
    make_sampler,
    mean_messages,
    run_trial,
    trial_seed,
)
from pathavg.poincare import box_congestion_cap, box_roadmap_congestion, build_direct_roadmap, build_grid_roadmap, kappa
from pathavg.spectral import exact_ew_grid, exact_ew_standard, lambda2, lemma1_bounds, mc_ew
from pathavg.topology import build_complete, build_grid, build_rgg, check_regularity, partition_boxes

RESULTS: dict[str, str] = {}


def report(key, ok, detail, elapsed, limit):
    in_time = elapsed <= limit
    ok = ok and in_time
    line = f"{'PASS' if ok else 'FAIL'} {key}: {detail} [{elapsed:.1f}s / limit {limit}s]"
    RESULTS[key] = line
    print(line)
    return ok


def criterion_1():
    """Every realised W(t) is a symmetric, doubly stochastic projection."""
    t0 = time.time()
    rgg = build_rgg(300, 4.5, True, 0)
    boxes = partition_boxes(build_rgg(1000, 25.0, True, 2), 2.5)
    combos = [
        (Protocol.STANDARD, build_grid(6)),
        (Protocol.STANDARD, build_complete(30)),
        (Protocol.STANDARD, rgg),
        (Protocol.GEOGRAPHIC, build_grid(6)),
        (Protocol.GEOGRAPHIC, rgg),
        (Protocol.PATH_HV, build_grid(6)),
        (Protocol.PATH_GREEDY, rgg),
        (Protocol.PATH_BOX, boxes),
    ]
    per = 10_000 // len(combos)
    worst = 0.0
    for k, (proto, topo) in enumerate(combos):
        sample = make_sampler(proto, topo)
        src = UniformSource(make_rng(k))
        n = boxes.graph.n if proto is Protocol.PATH_BOX else topo.n
        one = np.ones(n)
        for _ in range(per):
            W = averaging_matrix(sample(src)[0], n)
            worst = max(
                worst,
                abs(W - W.T).max(),
                np.abs(W @ one - 1).max(),
                np.abs(W.T @ one - 1).max(),
                abs(W @ W - W).max(),
            )
    ok = worst <= 1e-12
    return report("C1 matrix law", ok, f"{per * len(combos)} rounds over {len(combos)} protocol/topology pairs, "
                  f"worst violation {worst:.3g} (tol 1e-12)", time.time() - t0, 60)


def criterion_2():
    """Monte Carlo E[W] against enumeration, and enumeration against the route-count formula."""
    t0 = time.time()
    side = 4
    E = exact_ew_grid(side).entries
    M = mc_ew(Protocol.PATH_HV, build_grid(side), 10**6, seed=0).entries
    mc_dev = float(np.abs(M - E).max())
    g = build_grid(side)
    f_dev = 0.0
    for i in range(g.n):
        for j in range(g.n):
            if i != j:
                f_dev = max(f_dev, abs(E[i, j] - lemma1_bounds(g.distance(i, j), side)[0]))
    ok_mc = mc_dev <= 5e-4
    ok_f = f_dev <= 1e-12
    return report("C2 oracle equivalence", ok_mc and ok_f,
                  f"MC(1e6, seed 0) max dev {mc_dev:.3g} (tol 5e-4) {'ok' if ok_mc else 'FAIL'}; "
                  f"formula max dev {f_dev:.3g} (tol 1e-12) {'ok' if ok_f else 'FAIL'}",
                  time.time() - t0, 120)


def criterion_3():
    """Exact off-diagonal entries inside the closed-form bracket."""
    t0 = time.time()
    bad, total, worst = 0, 0, 0.0
    for side in (4, 6, 8, 10):
        E = exact_ew_grid(side).entries
        g = build_grid(side)
        bounds = {l: lemma1_bounds(l, side) for l in range(1, g.max_distance + 1)}
        for i in range(g.n):
            for j in range(g.n):
                if i == j:
                    continue
                _, lo, hi = bounds[g.distance(i, j)]
                v = E[i, j]
                miss = max(lo - v, v - hi, 0.0)
                total += 1
                if miss > 1e-12:
                    bad += 1
                    worst = max(worst, miss * side**4)
    ok = bad == 0
    return report("C3 entry bracket", ok, f"{bad}/{total} entries outside [lower, upper] "
                  f"(worst miss {worst:.3g}/n^2)", time.time() - t0, 60)


def criterion_4():
    """Poincare bound valid on grids; exact on the complete graph."""
    t0 = time.time()
    notes, ok = [], True
    for side in range(4, 13):
        E = exact_ew_grid(side)
        r = lambda2(E)
        rm = build_grid_roadmap(side, E)
        pr = kappa(rm, E)
        good = r.min_eigenvalue > 0 and r.lambda2 <= pr.lambda2_bound and pr.max_congestion <= 8
        ok &= good
        notes.append(f"s{side}:cong={pr.max_congestion}")
    for n in (5, 10, 20):
        E = exact_ew_standard(build_complete(n))
        pr = kappa(build_direct_roadmap(n), E)
        lam = lambda2(E).lambda2
        good = (
            math.isclose(pr.kappa, n, rel_tol=1e-12)
            and abs(pr.lambda2_bound - lam) <= 1e-12
            and abs(lam - (1 - 1 / n)) <= 1e-12
        )
        ok &= good
        notes.append(f"K{n}:kappa={pr.kappa:.15g}")
    return report("C4 Poincare validity", ok, " ".join(notes), time.time() - t0, 300)


def criterion_5():
    """Relaxation time grows like sqrt(n)."""
    t0 = time.time()
    sides = (4, 6, 8, 10, 12, 16)
    relax = [1 / (1 - lambda2(exact_ew_grid(s)).lambda2) for s in sides]
    slope, se = loglog_slope([s * s for s in sides], relax)
    ok = abs(slope - 0.5) <= 0.15
    return report("C5 relaxation scaling", ok, f"slope {slope:.3f} +/- {se:.3f} (target 0.5 +/- 0.15); "
                  f"1/(1-l2) = {', '.join(f'{r:.1f}' for r in relax)}", time.time() - t0, 600)


def criterion_6():
    """Every simulated T_c on the side-8 grid stays under 2/(1 - lambda2)."""
    t0 = time.time()
    lam = lambda2(exact_ew_grid(8)).lambda2
    bound = 2 / (1 - lam)
    g = build_grid(8)
    tcs = []
    for s in range(20):
        x0 = initial_vector(64, make_rng(np.random.SeedSequence([0, s, 1])))
        tr = run_trial(x0, Protocol.PATH_HV, g, 100_000, seed=trial_seed(0, s),
                       stop_below=1e-7)
        tcs.append(estimate_tc(tr, *auto_window(tr)))
    ok = max(tcs) <= bound
    return report("C6 simulation vs spectrum", ok, f"max T_c {max(tcs):.2f}, mean {np.mean(tcs):.2f}, "
                  f"bound {bound:.2f}", time.time() - t0, 300)


def _grid_sweep(protocol):
    cfg = ExperimentConfig(topology={"kind": "grid", "side": 8}, protocol=protocol, rounds=50_000_000,
                           trials=10, sizes=[8, 12, 16, 20, 24], record_every=16)
    _, slopes = sweep(cfg)
    return {m: (s, se) for m, s, se in slopes}["cc_mean"]


def criterion_7():
    """Consensus-cost exponents on grids for the three protocols."""
    t0 = time.time()
    targets = {"path-hv": 1.0, "standard": 2.0, "geographic": 1.5}
    ok, notes = True, []
    for proto, want in targets.items():
        s, se = _grid_sweep(proto)
        good = abs(s - want) <= 0.2
        ok &= good
        notes.append(f"{proto} {s:.3f}+/-{se:.3f} (target {want} +/- 0.2){'' if good else ' FAIL'}")
    return report("C7 grid cost slopes", ok, "; ".join(notes), time.time() - t0, 1800)


def criterion_8():
    """Greedy hop count against sqrt(n / log n)."""
    t0 = time.time()
    ns = (500, 1000, 2000, 4000)
    xs, hops = [], []
    for n in ns:
        g = build_rgg(n, 4.5, True, 0)
        hops.append(mean_messages(Protocol.PATH_GREEDY, g, 1000, seed=n) / 2)
        xs.append(math.sqrt(n / math.log(n)))
    slope, se = loglog_slope(xs, hops)
    lin = np.polyfit(xs, hops, 1)
    ok = abs(slope - 1) <= 0.15
    return report("C8 greedy hop scaling", ok,
                  f"log-log slope {slope:.3f} +/- {se:.3f} (target 1 +/- 0.15); "
                  f"hops {', '.join(f'{h:.2f}' for h in hops)}; linear fit {lin[0]:.3f}x + {lin[1]:.2f}",
                  time.time() - t0, 300)


def criterion_9():
    """Box-path cost slope on regular graphs and road-map congestion per instance."""
    t0 = time.time()
    sizes = [1000, 2000, 4000]
    cfg = ExperimentConfig(topology={"kind": "rgg", "n": 1000, "c": 25.0}, protocol="path-box",
                           rounds=50_000_000, trials=10, alpha=2.5, require_regular=True,
                           sizes=sizes, record_every=64)
    _, slopes = sweep(cfg)
    s, se = {m: (a, b) for m, a, b in slopes}["cc_mean"]
    cong_ok, worst = True, 0.0
    for n in sizes:
        for seed in find_regular_seeds(n, 25.0, 2.5, 10):
            b = partition_boxes(build_rgg(n, 25.0, True, seed), 2.5)
            c, cap = box_roadmap_congestion(b), box_congestion_cap(b)
            worst = max(worst, c / cap)
            cong_ok &= c <= cap
    ok = abs(s - 1.0) <= 0.25 and cong_ok
    return report("C9 box-path cost and congestion", ok,
                  f"C_c slope {s:.3f} +/- {se:.3f} (target 1 +/- 0.25); "
                  f"max congestion/cap {worst:.2f} over 30 instances", time.time() - t0, 1800)


def criterion_10():
    """Share of regular graphs at the stated box density."""
    t0 = time.time()
    ok, notes = True, []
    for n in (1000, 3000):
        reg = sum(
            check_regularity(partition_boxes(build_rgg(n, 25.0, True, s), 2.5)).is_regular
            for s in range(50)
        )
        ok &= reg >= 45
        notes.append(f"n={n}: {reg}/50 regular")
    return report("C10 regularity rate", ok, "; ".join(notes) + " (need >= 45/50)", time.time() - t0, 120)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("check", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 11)])
def test_criterion(check):
    assert check()


if __name__ == "__main__":
    for check in CRITERIA:
        check()
