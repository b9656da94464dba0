"""Command-line entry point: ``netprobe {generate,sample,run,sweep,report}``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .generators import build_oracle
from .graph import write_edge_list, write_label_map
from .harness import ExperimentConfig
from .samplers import SamplingError, sample

log = logging.getLogger("netprobe")


def _config_keys():
    cfg = ExperimentConfig()
    for section in ExperimentConfig.SECTIONS:
        for f in dataclasses.fields(getattr(cfg, section)):
            if f.name != "meta":
                yield section, f.name


def _add_config_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration")
    g.add_argument("--config", type=Path, help="INI file with [oracle] [sample] [policy] [learner] [run]")
    g.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override one key (repeatable)")
    for section, key in _config_keys():
        g.add_argument(f"--{section}.{key}", dest=f"cfg__{section}__{key}", metavar="V",
                       default=None, help=argparse.SUPPRESS)


def _build_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    for section, key in _config_keys():
        value = getattr(args, f"cfg__{section}__{key}")
        if value is not None:
            cfg.set(f"{section}.{key}", value)
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise SystemExit(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        cfg.set(key.strip(), value)
    return cfg


def _outdir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_generate(args) -> int:
    cfg = _build_config(args)
    oracle = build_oracle(cfg.oracle)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_edge_list(oracle, out)
    if oracle.labels is not None and args.labels:
        write_label_map(oracle, args.labels)
    print(f"{out}: {oracle.node_count} nodes, {oracle.edge_count} edges")
    return 0


def cmd_sample(args) -> int:
    cfg = _build_config(args)
    oracle = build_oracle(cfg.oracle)
    rng = np.random.default_rng(cfg.sample.seed)
    state = sample(oracle, cfg.sample, rng)
    out = _outdir(Path(args.out))
    nodes = state.initial_nodes
    (out / "sample_nodes.txt").write_text("".join(f"{u}\n" for u in nodes.tolist()))
    with open(out / "sample_edges.txt", "w") as fh:
        for u, v in sorted(state.observed_edges):
            fh.write(f"{u}\t{v}\n")
    print(f"{out}: {len(nodes)} nodes, {state.n_edges} edges "
          f"({state.n_edges / max(oracle.edge_count, 1):.2%} of oracle edges)")
    return 0


def cmd_run(args) -> int:
    cfg = _build_config(args)
    oracle = build_oracle(cfg.oracle)
    traces = harness.run_experiment(cfg, oracle, check=args.check)
    out = _outdir(Path(args.out))
    (out / "config.ini").write_text(cfg.to_ini())
    harness.write_results(traces, out / "results.csv")
    if cfg.policy.learned:
        harness.write_weights(traces, out / "weights.csv")
        harness.write_features(traces, out / "features.csv")
    summary = harness.aggregate(traces)
    harness.write_summary(summary, out / "summary.csv")
    for tr in traces:
        if tr.status != "complete":
            print(f"trial {tr.trial}: {tr.status}", file=sys.stderr)
    print(f"{cfg.policy.kind}: mean final cumulative reward {summary.final_mean:.2f} "
          f"(std {summary.final_std:.2f}, {len(traces)} trials)")
    return 0


def _parse_grid(text: str | None, cast):
    if text is None:
        return None
    return tuple(cast(x.strip()) for x in text.split(",") if x.strip())


def _k_item(x: str):
    return int(x) if x.isdigit() else x


def _eps_item(x: str):
    # "0.3" means decayed, "0.3c" constant
    if x.endswith("c"):
        return float(x[:-1]), False
    return float(x), True


def cmd_sweep(args) -> int:
    cfg = _build_config(args)
    oracle = build_oracle(cfg.oracle)
    k_grid = _parse_grid(args.k_grid, _k_item) or harness.DEFAULT_K_GRID
    eps_grid = _parse_grid(args.eps_grid, _eps_item) or harness.DEFAULT_EPS_GRID
    cells = harness.sweep(cfg, k_grid, eps_grid, oracle)
    out = _outdir(Path(args.out))
    (out / "config.ini").write_text(cfg.to_ini())
    harness.write_sweep(cells, out / "sweep.csv")
    ok = [c for c in cells if c.summary is not None]
    if ok:
        best = harness.best_cell(cells)
        print(f"best cell: k={best.k} epsilon0={best.epsilon0} decay={best.decay} "
              f"mean final cumulative reward {best.final_mean:.2f}")
    print(f"{len(ok)}/{len(cells)} cells completed")
    return 0 if ok else 1


def cmd_report(args) -> int:
    rows = [harness.gain_report(args.htr, base) for base in args.base]
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(("htr_file", "base_file", "c_htr", "c_base", "gain_percent"))
    for r in rows:
        writer.writerow([r["htr_file"], r["base_file"], repr(r["c_htr"]), repr(r["c_base"]),
                         repr(r["gain_percent"])])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netprobe", description="Budgeted network discovery simulator.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic oracle as an edge list")
    _add_config_args(p)
    p.add_argument("--out", required=True, help="edge list path")
    p.add_argument("--labels", help="label map path (FILE oracles with string labels)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("sample", help="write an initial sample's node and edge lists")
    _add_config_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("run", help="run one policy over several trials")
    _add_config_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--check", action="store_true", help="assert per-step invariants while running")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="NOL-HTR over a (k, epsilon) grid")
    _add_config_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--k-grid", help="comma list, e.g. 1,2,4,ln,log2")
    p.add_argument("--eps-grid", help="comma list; suffix c for constant, e.g. 0.1,0.3,0.3c")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="percent gain of one results file over baselines")
    p.add_argument("htr", help="results.csv of the learned policy")
    p.add_argument("base", nargs="+", help="results.csv of each baseline")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, SamplingError) as exc:
        print(f"netprobe: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
