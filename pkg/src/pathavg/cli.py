"""Command-line runner: ``pathavg <subcommand> --config cfg.json --out DIR``.

Exit codes: 0 success, 2 config error, 3 numeric error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from pathlib import Path

from . import experiments, poincare
from .errors import NumericError
from .experiments import ExperimentConfig
from .topology import export_topology

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def fmt(v) -> str:
    """Locale-free CSV cell: 17 significant digits for floats."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return f"{v:.17g}"
    return str(v)


def write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def _prepare_out(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg.dump(out / "config.json")
    return out


SUMMARY_COLS = ("trial", "graph_seed", "rounds", "burn_in", "window_end", "tc", "mean_R", "cc")


def cmd_simulate(cfg: ExperimentConfig, threads: int) -> None:
    out = _prepare_out(cfg)
    rows, traces = experiments.simulate(cfg, threads=threads)
    for row, tr in zip(rows, traces):
        tr.write_csv(out / f"trace_{row['trial']:04d}.csv", stride=cfg.trace_stride)
    agg = experiments.aggregate(rows)
    table = [[r[c] for c in SUMMARY_COLS] for r in rows]
    blank = [""] * 5
    table.append(["mean"] + blank[:4] + [agg["tc_mean"], agg["mean_R_mean"], agg["cc_mean"]])
    table.append(["std"] + blank[:4] + [agg["tc_std"], agg["mean_R_std"], agg["cc_std"]])
    write_rows(out / "summary.csv", SUMMARY_COLS, table)
    print(f"{len(rows)} trials: T_c {agg['tc_mean']:.6g} +/- {agg['tc_std']:.3g}, "
          f"C_c {agg['cc_mean']:.6g} +/- {agg['cc_std']:.3g}")


def cmd_spectrum(cfg: ExperimentConfig, threads: int) -> None:
    out = _prepare_out(cfg)
    E, res = experiments.spectrum(cfg)
    rows = experiments.spectrum_rows(cfg, E, res)
    if cfg.compare_mc and cfg.spectrum_mode == "exact":
        rows.append(("mc_max_deviation", experiments.mc_deviation(cfg, E)))
    write_rows(out / "spectrum.csv", ("quantity", "value"), rows)
    for k, v in rows:
        print(f"{k}: {fmt(v)}")


def cmd_poincare(cfg: ExperimentConfig, threads: int) -> None:
    out = _prepare_out(cfg)
    summary, rm, E = experiments.poincare_report(cfg)
    write_rows(out / "poincare.csv", ("quantity", "value"), summary)
    poincare.write_congestion_csv(out / "congestion.csv", rm, E)
    for k, v in summary:
        print(f"{k}: {fmt(v)}")


SWEEP_COLS = ("size", "n", "trials", "tc_mean", "tc_std", "mean_R_mean", "mean_R_std",
              "cc_mean", "cc_std", "hops_mean", "relaxation")


def cmd_sweep(cfg: ExperimentConfig, threads: int) -> None:
    if len(cfg.sizes) < 3:
        raise ValueError("sweep needs at least three sizes in 'sizes'")
    out = _prepare_out(cfg)
    per_size, slopes = experiments.sweep(cfg, threads=threads)
    write_rows(out / "sweep.csv", SWEEP_COLS, [[a[c] for c in SWEEP_COLS] for a in per_size])
    write_rows(out / "slopes.csv", ("metric", "slope", "stderr"), slopes)
    for m, s, se in slopes:
        print(f"{m}: slope {s:.4f} +/- {se:.4f}")


def cmd_topo_export(cfg: ExperimentConfig, threads: int) -> None:
    out = _prepare_out(cfg)
    kind = cfg.topology["kind"]
    if kind == "complete":
        raise ValueError("complete graphs have no exportable topology")
    seed = experiments.graph_seeds(dataclasses.replace(cfg, trials=1))[0] if kind == "rgg" else None
    topo = experiments.build_topology(dataclasses.replace(cfg, protocol="standard"), seed)
    (out / "topology.txt").write_text(export_topology(topo))
    print(f"wrote {out / 'topology.txt'}")


COMMANDS = {
    "simulate": cmd_simulate,
    "spectrum": cmd_spectrum,
    "poincare": cmd_poincare,
    "sweep": cmd_sweep,
    "topo-export": cmd_topo_export,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pathavg", description="Gossip and path-averaging experiments.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="JSON config file (defaults apply to missing keys)")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--seed", type=int, help="base seed (overrides the config)")
    p.add_argument("--threads", type=int, default=1, help="worker processes for independent trials")
    return p


def load_config(args) -> ExperimentConfig:
    raw = {}
    if args.config:
        with open(args.config) as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ValueError("config must be a JSON object")
    if args.out is not None:
        raw["out"] = args.out
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        raw["base_seed"] = args.seed
    return ExperimentConfig.from_dict(raw)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args)
    except FileNotFoundError as e:
        print(f"error: cannot read config: {e}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TypeError, KeyError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        COMMANDS[args.command](cfg, args.threads)
    except (NumericError, ArithmeticError) as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TypeError, KeyError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
