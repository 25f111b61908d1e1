"""Command-line entry point: run a method-by-community-count experiment matrix
over an edge-list dataset and write a CSV of objective estimates."""
from __future__ import annotations

import argparse
import sys
from dataclasses import fields

from .experiment import ConfigError, ExperimentConfig, coerce_config_values, emit_csv, parse_config_file, run_experiment
from .graph import EdgeListError


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="influence-partition",
        description="Partition a directed influence graph into communities and "
                    "compare solvers by total within-community spread.",
    )
    p.add_argument("--config", help="key = value config file; flags below override it")
    p.add_argument("--dataset", help="edge-list path or bundled name (collab-379, vote-914)")
    p.add_argument("--weighting", choices=["explicit", "inverse_in_degree"])
    p.add_argument("--m", dest="m_values", help="comma-separated community counts, e.g. 1,2,3")
    p.add_argument("--method", dest="methods", help="comma-separated methods "
                   "(sandwich, upper, lower, greedy, random, samkcp, mamkcp)")
    p.add_argument("--delta-t", dest="delta_t", type=float, help="ascent step; 1/delta_t integral")
    p.add_argument("--theta", type=float, help="path-pruning threshold for the lower bound")
    p.add_argument("--mc-runs", dest="mc_runs", type=int, help="Monte-Carlo runs per estimate")
    p.add_argument("--grad-samples", dest="grad_samples", type=int, help="samples per gradient entry")
    p.add_argument("--seed", dest="master_seed", type=int, help="master seed")
    p.add_argument("--repetitions", type=int, help="repetitions per cell")
    p.add_argument("--out", dest="output", help="output CSV path")
    p.add_argument("--no-timing", action="store_true", help="write wall_ms as 0 for byte-stable output")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings: dict = {}
        if args.config:
            settings.update(parse_config_file(args.config))
        overrides = {}
        for name in ("dataset", "weighting", "m_values", "methods", "delta_t", "theta",
                     "mc_runs", "grad_samples", "master_seed", "repetitions", "output"):
            value = getattr(args, name)
            if value is not None:
                overrides[name] = value
        settings.update(coerce_config_values(overrides, source="<cli>"))
        if args.no_timing:
            settings["timing"] = False
        if "dataset" not in settings:
            raise ConfigError("a dataset is required (--dataset or config file)")
        known = {f.name for f in fields(ExperimentConfig)}
        cfg = ExperimentConfig(**{k: v for k, v in settings.items() if k in known})
        rows = run_experiment(cfg)
        emit_csv(rows, cfg.output)
    except (ConfigError, EdgeListError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(rows)} rows to {cfg.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
