"""Experiment driver: a (method, community-count, repetition) matrix over one
dataset, scored under the independent-cascade objective with shared
randomness, emitted as CSV.

Reruns with the same config are byte-identical when timing capture is off
(wall-clock is the one intrinsically nondeterministic column).
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

from .datasets import resolve_dataset
from .graph import InfluenceGraph, load_edge_list
from .objectives import Partition, evaluate_f, make_spread_model
from .optimizers import (
    ContinuousGreedyConfig,
    SandwichConfig,
    complete_assignment,
    continuous_greedy,
    derive,
    mamkcp,
    pipage_rounding,
    random_partition,
    randomized_rounding,
    samkcp,
    sandwich,
    simple_greedy,
)
from .mia import MiaSpread
from .rng import TAG_EXPERIMENT, TAG_PIPAGE, TAG_ROUND, child_seed

ALL_METHODS = ("sandwich", "upper", "lower", "greedy", "random", "samkcp", "mamkcp")


class ConfigError(ValueError):
    """Bad experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    weighting: str = "inverse_in_degree"
    m_values: tuple[int, ...] = (1, 2, 3)
    methods: tuple[str, ...] = ("sandwich", "random", "samkcp", "mamkcp")
    delta_t: float = 0.05
    theta: float = 0.1
    mc_runs: int = 500
    grad_samples: int = 100
    master_seed: int = 0
    repetitions: int = 5
    output: str = "results.csv"
    timing: bool = True

    def __post_init__(self) -> None:
        if not self.m_values or any(m < 1 for m in self.m_values):
            raise ConfigError("community counts must be >= 1")
        steps = round(1.0 / self.delta_t)
        if steps < 1 or abs(steps * self.delta_t - 1.0) > 1e-9:
            raise ConfigError("1/delta_t must be a positive integer")
        if self.mc_runs < 1 or self.grad_samples < 1:
            raise ConfigError("mc_runs and grad_samples must be >= 1")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        unknown = set(self.methods) - set(ALL_METHODS)
        if unknown:
            raise ConfigError(f"unknown methods {sorted(unknown)}; available: {ALL_METHODS}")
        if self.weighting not in ("explicit", "inverse_in_degree"):
            raise ConfigError(f"unknown weighting {self.weighting!r}")


@dataclass(frozen=True)
class ResultRow:
    method: str
    m: int
    repetition: int
    f_ic: float
    std_err: float
    wall_ms: float
    ratio_upper: float | None = None
    ratio_lower_value: float | None = None

    def __post_init__(self) -> None:
        if self.f_ic < -1e-9:
            raise ValueError("objective estimates are nonnegative")


_CONFIG_FIELDS = {
    "dataset": str,
    "weighting": str,
    "m_values": "int_list",
    "methods": "str_list",
    "delta_t": float,
    "theta": float,
    "mc_runs": int,
    "grad_samples": int,
    "master_seed": int,
    "repetitions": int,
    "output": str,
    "timing": "bool",
}


def parse_config_file(path) -> dict:
    """`key = value` lines; '#' comments; lists are comma-separated."""
    raw: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            raw[key.strip()] = value.strip()
    return coerce_config_values(raw, source=str(path))


def coerce_config_values(raw: dict, source: str = "<config>") -> dict:
    out = {}
    for key, value in raw.items():
        if key not in _CONFIG_FIELDS:
            raise ConfigError(f"{source}: unknown config key {key!r}")
        kind = _CONFIG_FIELDS[key]
        try:
            if kind == "int_list":
                out[key] = tuple(int(tok) for tok in str(value).split(",") if tok.strip())
            elif kind == "str_list":
                out[key] = tuple(tok.strip() for tok in str(value).split(",") if tok.strip())
            elif kind == "bool":
                out[key] = str(value).strip().lower() in ("1", "true", "yes", "on")
            else:
                out[key] = kind(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{source}: bad value for {key}: {value!r}") from exc
    return out


def _partition_for(method: str, g: InfluenceGraph, m: int, cfg: ExperimentConfig, seed: int):
    """Returns (partition, ratio_upper, ratio_lower_value)."""
    theta = cfg.theta
    if method == "sandwich":
        res = sandwich(g, m, SandwichConfig(delta_t=cfg.delta_t, C=cfg.grad_samples, r=cfg.mc_runs,
                                            theta=theta, seed=seed))
        return res.chosen, res.ratio_upper, res.ratio_lower_value
    if method == "upper":
        cg = ContinuousGreedyConfig(delta_t=cfg.delta_t, gradient_kind="lovasz", C=cfg.grad_samples,
                                    r=cfg.mc_runs, theta=theta, seed=seed)
        x = continuous_greedy(g, m, cg)
        part = complete_assignment(randomized_rounding(x, derive(seed, TAG_ROUND)), g, m, theta=theta)
        return part, None, None
    if method == "lower":
        cg = ContinuousGreedyConfig(delta_t=cfg.delta_t, gradient_kind="multilinear", C=cfg.grad_samples,
                                    r=cfg.mc_runs, theta=theta, seed=seed)
        x = continuous_greedy(g, m, cg)
        a = pipage_rounding(x, MiaSpread(g, theta=theta), C=cfg.grad_samples, seed=child_seed(seed, TAG_PIPAGE))
        return complete_assignment(a, g, m, theta=theta), None, None
    if method == "greedy":
        f_eval = make_spread_model(g, "ic_mc", r=cfg.mc_runs, theta=theta, seed=seed)
        return complete_assignment(simple_greedy(g, m, f_eval), g, m, theta=theta), None, None
    if method == "random":
        return random_partition(g.node_count, m, seed=seed), None, None
    if method == "samkcp":
        f_eval = make_spread_model(g, "ic_mc", r=cfg.mc_runs, theta=theta, seed=seed)
        return samkcp(g, m, f_eval, seed=seed), None, None
    if method == "mamkcp":
        f_eval = make_spread_model(g, "ic_mc", r=cfg.mc_runs, theta=theta, seed=seed)
        return mamkcp(g, m, f_eval, seed=seed), None, None
    raise ConfigError(f"unknown method {method!r}")


def run_experiment(cfg: ExperimentConfig, graph: InfluenceGraph | None = None) -> list[ResultRow]:
    """One row per (method, m, repetition); the objective is estimated with
    common random numbers across methods within each (m, repetition) cell."""
    g = graph if graph is not None else load_edge_list(resolve_dataset(cfg.dataset), weighting=cfg.weighting)
    rows: list[ResultRow] = []
    for m in cfg.m_values:
        for method in cfg.methods:
            midx = ALL_METHODS.index(method)
            for rep in range(cfg.repetitions):
                seed = child_seed(cfg.master_seed, TAG_EXPERIMENT, midx, m, rep)
                # scoring stream shared across methods AND m: paired comparisons
                eval_seed = child_seed(cfg.master_seed, TAG_EXPERIMENT, 10_000, rep)
                t0 = time.perf_counter()
                partition, ratio_up, ratio_low = _partition_for(method, g, m, cfg, seed)
                wall_ms = (time.perf_counter() - t0) * 1000.0 if cfg.timing else 0.0
                est = evaluate_f(g, partition.to_assignment(), "ic_mc", r=cfg.mc_runs,
                                 theta=cfg.theta, seed=eval_seed)
                rows.append(ResultRow(method=method, m=m, repetition=rep, f_ic=est.mean,
                                      std_err=est.std_error, wall_ms=wall_ms,
                                      ratio_upper=ratio_up, ratio_lower_value=ratio_low))
    rows.sort(key=lambda row: (row.method, row.m, row.repetition))
    return rows


CSV_HEADER = "method,m,repetition,f_ic,std_err,wall_ms,ratio_upper,ratio_lower_value"


def _fmt(value: float | None) -> str:
    if value is None:
        return ""
    return f"{value:.6g}"


def emit_csv(rows: list[ResultRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(",".join([
                row.method, str(row.m), str(row.repetition),
                _fmt(row.f_ic), _fmt(row.std_err), _fmt(row.wall_ms),
                _fmt(row.ratio_upper), _fmt(row.ratio_lower_value),
            ]) + "\n")


def read_csv(path) -> list[ResultRow]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError("unexpected CSV header")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            rows.append(ResultRow(
                method=parts[0], m=int(parts[1]), repetition=int(parts[2]),
                f_ic=float(parts[3]), std_err=float(parts[4]), wall_ms=float(parts[5]),
                ratio_upper=float(parts[6]) if parts[6] else None,
                ratio_lower_value=float(parts[7]) if parts[7] else None,
            ))
    return rows
