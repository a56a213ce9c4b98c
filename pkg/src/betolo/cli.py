"""Command-line entry point: run experiments, verify invariants, benchmark.

Exit codes: 0 success, 2 configuration error, 3 data error,
4 verification failure.

The config file is flat ``key = value`` text; ``#`` starts a comment.
Keys: algorithms (comma list), data (synthetic:<kind> or csv:<path>),
rounds, seed, depth, quantizer_axes, initial_wealth, eta, eta_grid,
lipschitz, dfeg_delta, dfeg_a, adanormal_a, adanormal_eps,
target_column, drop_columns, log1p_columns, log_columns.

All randomness flows from the single 64-bit seed through NumPy's
default_rng (PCG64).  Setting BETOLO_TRACE=1 makes the context-tree
engine append per-round diagnostics to BETOLO_TRACE_FILE.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from betolo.core_betting import log_kt_potential
from betolo.ctw import CtwOlo
from betolo.experiments import (
    ALGORITHMS,
    ConfigError,
    DataError,
    ExperimentConfig,
    ExperimentResult,
    PreprocessSpec,
    run_experiment,
)
from betolo.olo_engines import KtOlo
from betolo.oracle import explicit_mixture_potential, naive_ctw_replay

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_VERIFY = 4

_CONFIG_KEYS = {
    "algorithms",
    "data",
    "rounds",
    "seed",
    "depth",
    "quantizer_axes",
    "initial_wealth",
    "eta",
    "eta_grid",
    "lipschitz",
    "dfeg_delta",
    "dfeg_a",
    "adanormal_a",
    "adanormal_eps",
    "target_column",
    "drop_columns",
    "log1p_columns",
    "log_columns",
}


def _fmt(value: float) -> str:
    """Shortest decimal string that round-trips the float exactly."""
    return repr(float(value))


def parse_config_file(path: str) -> Dict[str, str]:
    try:
        with open(path) as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = value.strip()
    return values


def _parse_int(values: Dict[str, str], key: str) -> Optional[int]:
    if key not in values:
        return None
    try:
        return int(values[key])
    except ValueError:
        raise ConfigError(f"config key {key!r}: not an integer: {values[key]!r}") from None


def _parse_float(values: Dict[str, str], key: str) -> Optional[float]:
    if key not in values:
        return None
    try:
        return float(values[key])
    except ValueError:
        raise ConfigError(f"config key {key!r}: not a number: {values[key]!r}") from None


def _parse_int_list(values: Dict[str, str], key: str) -> Optional[Tuple[int, ...]]:
    if key not in values:
        return None
    text = values[key]
    if not text:
        return ()
    try:
        return tuple(int(part.strip()) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"config key {key!r}: not a comma list of integers") from None


def _parse_float_list(values: Dict[str, str], key: str) -> Optional[Tuple[float, ...]]:
    if key not in values:
        return None
    text = values[key]
    if not text:
        return ()
    try:
        return tuple(float(part.strip()) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"config key {key!r}: not a comma list of numbers") from None


def build_experiment_configs(
    values: Dict[str, str], seed_override: Optional[int] = None
) -> List[ExperimentConfig]:
    """Flat config dict -> one validated ExperimentConfig per algorithm."""
    for key in ("algorithms", "data", "rounds"):
        if key not in values:
            raise ConfigError(f"config key {key!r} is required")
    algorithms = [a.strip() for a in values["algorithms"].split(",") if a.strip()]
    if not algorithms:
        raise ConfigError("config key 'algorithms' must list at least one algorithm")
    seed = seed_override if seed_override is not None else _parse_int(values, "seed")
    if seed is None:
        raise ConfigError("a seed is required (config key 'seed' or --seed)")
    rounds = _parse_int(values, "rounds")
    assert rounds is not None
    depth = _parse_int(values, "depth")
    axes = _parse_int_list(values, "quantizer_axes")

    spec = None
    if values["data"].startswith("csv:"):
        target = _parse_int(values, "target_column")
        if target is None:
            raise ConfigError("csv data requires config key 'target_column'")
        spec = PreprocessSpec(
            target_column=target,
            drop_columns=_parse_int_list(values, "drop_columns") or (),
            log1p_columns=_parse_int_list(values, "log1p_columns") or (),
            log_columns=_parse_int_list(values, "log_columns") or (),
        )

    common = dict(
        data=values["data"],
        rounds=rounds,
        seed=seed,
        preprocess_spec=spec,
    )
    if depth is not None:
        common["depth"] = depth
    if axes is not None:
        if not axes:
            raise ConfigError("config key 'quantizer_axes' must not be empty")
        common["quantizer_axes"] = axes
    for key, parser in (
        ("initial_wealth", _parse_float),
        ("eta", _parse_float),
        ("lipschitz", _parse_float),
        ("dfeg_delta", _parse_float),
        ("dfeg_a", _parse_float),
        ("adanormal_a", _parse_float),
        ("adanormal_eps", _parse_float),
        ("eta_grid", _parse_float_list),
    ):
        value = parser(values, key)
        if value is not None:
            common[key] = value

    configs = []
    for algo in algorithms:
        config = ExperimentConfig(algorithm=algo, **common)
        config.config_id = _config_id(config)
        configs.append(config)
    return configs


def _config_id(config: ExperimentConfig) -> str:
    if config.algorithm == "kt":
        return "kt"
    axes = "-".join(str(a) for a in config.quantizer_axes)
    return f"{config.algorithm}_d{config.depth}_q{axes}"


def _write_trace(path: str, result: ExperimentResult) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["round", "cum_loss", "wealth", "algorithm", "config_id"])
        for rnd, cum_loss, wealth in result.rows:
            writer.writerow(
                [rnd, _fmt(cum_loss), _fmt(wealth), result.algorithm, result.config_id]
            )


def cmd_run(config_path: str, out_dir: str, seed: Optional[int]) -> int:
    values = parse_config_file(config_path)
    configs = build_experiment_configs(values, seed_override=seed)
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out_dir}: {exc}") from exc
    summary_rows = []
    for config in configs:
        result = run_experiment(config)
        trace_path = os.path.join(out_dir, f"{result.config_id}.csv")
        _write_trace(trace_path, result)
        final_wealth = result.rows[-1][2]
        eta = result.extras.get("eta")
        summary_rows.append(
            [
                result.config_id,
                result.algorithm,
                _fmt(result.final_loss),
                _fmt(final_wealth),
                _fmt(eta) if eta is not None else "",
            ]
        )
        print(
            f"{result.config_id}: rounds={len(result.rows)} "
            f"final_cum_loss={_fmt(result.final_loss)} wealth={_fmt(final_wealth)} "
            f"-> {trace_path}"
        )
    summary_path = os.path.join(out_dir, "summary.csv")
    with open(summary_path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["config_id", "algorithm", "final_cum_loss", "final_wealth", "eta"])
        writer.writerows(summary_rows)
    print(f"summary -> {summary_path}")
    return EXIT_OK


# ----------------------------------------------------------------- verify


@dataclass
class SuiteResult:
    name: str
    passed: bool
    max_error: float


def _ball_point(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    return v * rng.uniform() ** (1.0 / dim)


def _suite_potential_identities() -> SuiteResult:
    worst = 0.0
    for t in range(0, 41):
        for x in range(-t, t + 1):
            half_sum = np.logaddexp(
                log_kt_potential(t + 1, x + 1.0), log_kt_potential(t + 1, x - 1.0)
            ) - math.log(2.0)
            worst = max(worst, abs(log_kt_potential(t, float(x)) - half_sum))
            # One betting round at |g| = 1 multiplies the potential exactly.
            bet = (t + 1 + x) / (2.0 * (t + 1)) - (t + 1 - x) / (2.0 * (t + 1))
            for g in (1.0, -1.0):
                lhs = math.log1p(g * bet) + log_kt_potential(t, float(x))
                rhs = log_kt_potential(t + 1, x + g)
                worst = max(worst, abs(lhs - rhs))
    return SuiteResult("potential-identities", worst <= 1e-10, worst)


def _suite_kt_wealth_bound(rng: np.random.Generator) -> SuiteResult:
    worst = 0.0
    for _ in range(50):
        dim, rounds = 4, 200
        engine = KtOlo(dim=dim, initial_wealth=1.0)
        total = np.zeros(dim)
        for _ in range(rounds):
            g = _ball_point(rng, dim)
            engine.update(g)
            total += g
        floor = log_kt_potential(rounds, float(np.linalg.norm(total)))
        worst = max(worst, floor - math.log(engine.wealth))
    return SuiteResult("kt-wealth-lower-bound", worst <= 1e-9, max(worst, 0.0))


def _random_ctw_run(rng: np.random.Generator, depth: int, rounds: int, dim: int):
    contexts = [
        "".join(rng.choice(["0", "1"], size=depth)) if depth else ""
        for _ in range(rounds)
    ]
    gradients = [_ball_point(rng, dim) for _ in range(rounds)]
    return contexts, gradients


def _suite_ctw_vs_naive(rng: np.random.Generator, depth_limit: int) -> SuiteResult:
    worst_action, worst_potential = 0.0, 0.0
    for depth in range(1, min(depth_limit, 4) + 1):
        for _ in range(3):
            rounds, dim = 60, 2
            contexts, gradients = _random_ctw_run(rng, depth, rounds, dim)
            naive_actions, _, naive_logpsi = naive_ctw_replay(
                gradients, contexts, depth, dim, initial_wealth=1.0
            )
            engine = CtwOlo(depth=depth, dim=dim, initial_wealth=1.0)
            for t in range(rounds):
                action = engine.action(contexts[t])
                scale = max(1.0, float(np.linalg.norm(naive_actions[t])))
                worst_action = max(
                    worst_action,
                    float(np.linalg.norm(action - naive_actions[t])) / scale,
                )
                engine.update(contexts[t], gradients[t])
            worst_potential = max(
                worst_potential, abs(engine.tree.log_ctw_potential - naive_logpsi[-1])
            )
    passed = worst_action <= 1e-10 and worst_potential <= 1e-8
    return SuiteResult("ctw-vs-naive-oracle", passed, max(worst_action, worst_potential))


def _suite_ctw_vs_enumeration(rng: np.random.Generator, depth_limit: int) -> SuiteResult:
    worst = 0.0
    for depth in range(0, min(depth_limit, 3) + 1):
        rounds, dim = 50, 2
        contexts, gradients = _random_ctw_run(rng, depth, rounds, dim)
        engine = CtwOlo(depth=depth, dim=dim, initial_wealth=1.0)
        for t in range(rounds):
            engine.update(contexts[t], gradients[t])
        explicit = explicit_mixture_potential(gradients, contexts, depth)
        worst = max(worst, abs(engine.tree.log_ctw_potential - explicit))
    return SuiteResult("ctw-vs-tree-enumeration", worst <= 1e-8, worst)


def _suite_touch_count(rng: np.random.Generator) -> SuiteResult:
    worst = 0.0
    for depth in (0, 1, 3, 5):
        rounds = 40
        contexts, gradients = _random_ctw_run(rng, depth, rounds, 2)
        engine = CtwOlo(depth=depth, dim=2, initial_wealth=1.0)
        for t in range(rounds):
            engine.action(contexts[t])
            engine.update(contexts[t], gradients[t])
        per_round = engine.tree.node_touches / rounds
        worst = max(worst, abs(per_round - 2.0 * (depth + 1)))
    return SuiteResult("touches-per-round-2(D+1)", worst == 0.0, worst)


def run_verification(depth_limit: int = 3, seed: int = 0) -> List[SuiteResult]:
    rng = np.random.default_rng(seed)
    return [
        _suite_potential_identities(),
        _suite_kt_wealth_bound(rng),
        _suite_ctw_vs_naive(rng, depth_limit),
        _suite_ctw_vs_enumeration(rng, depth_limit),
        _suite_touch_count(rng),
    ]


def cmd_verify(depth_limit: int, seed: int) -> int:
    results = run_verification(depth_limit, seed)
    all_passed = True
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        print(f"{status} {result.name:30s} max_error={result.max_error:.3e}")
        all_passed &= result.passed
    if not all_passed:
        failing = ", ".join(r.name for r in results if not r.passed)
        print(f"verification FAILED: {failing}", file=sys.stderr)
        return EXIT_VERIFY
    print("verification passed")
    return EXIT_OK


# ------------------------------------------------------------------ bench


def cmd_bench(depth_grid: Sequence[int], rounds: int, with_naive: bool) -> int:
    rng = np.random.default_rng(0)
    print("depth,touches_per_round,seconds" + (",naive_seconds" if with_naive else ""))
    for depth in depth_grid:
        contexts, gradients = _random_ctw_run(rng, depth, rounds, 2)
        engine = CtwOlo(depth=depth, dim=2, initial_wealth=1.0)
        start = time.perf_counter()
        for t in range(rounds):
            engine.action(contexts[t])
            engine.update(contexts[t], gradients[t])
        elapsed = time.perf_counter() - start
        per_round = engine.tree.node_touches / rounds
        row = f"{depth},{_fmt(per_round)},{_fmt(elapsed)}"
        if with_naive:
            start = time.perf_counter()
            naive_ctw_replay(gradients, contexts, depth, 2, initial_wealth=1.0)
            row += f",{_fmt(time.perf_counter() - start)}"
        print(row)
    return EXIT_OK


# ------------------------------------------------------------------- main


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="betolo",
        description=(
            "Parameter-free online linear optimization with side information: "
            "run experiments, verify invariants against brute-force oracles, "
            "benchmark per-round cost."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the experiments described by a config file")
    run_p.add_argument("--config", required=True, help="flat key=value config file")
    run_p.add_argument("--out", required=True, help="output directory for trace CSVs")
    run_p.add_argument("--seed", type=int, default=None, help="overrides the config seed")

    verify_p = sub.add_parser("verify", help="run the invariant verification suites")
    verify_p.add_argument("--depth", type=int, default=3, help="max context depth checked")
    verify_p.add_argument("--seed", type=int, default=0)

    bench_p = sub.add_parser("bench", help="benchmark per-round node touches and time")
    bench_p.add_argument(
        "--depth-grid", required=True, help="comma-separated depths, e.g. 0,2,5"
    )
    bench_p.add_argument("--rounds", type=int, required=True)
    bench_p.add_argument(
        "--naive", action="store_true", help="also time the brute-force oracle"
    )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args.config, args.out, args.seed)
        if args.command == "verify":
            if args.depth < 0:
                raise ConfigError("--depth must be >= 0")
            return cmd_verify(args.depth, args.seed)
        if args.command == "bench":
            try:
                grid = [int(part) for part in args.depth_grid.split(",")]
            except ValueError:
                raise ConfigError(
                    f"--depth-grid: not a comma list of integers: {args.depth_grid!r}"
                ) from None
            if any(d < 0 for d in grid):
                raise ConfigError("--depth-grid entries must be >= 0")
            if args.rounds < 1:
                raise ConfigError("--rounds must be >= 1")
            return cmd_bench(grid, args.rounds, args.naive)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
