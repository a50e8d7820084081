"""Command line harness: entropy traces, verification suites, packing
census tables and mixture decompositions, all emitting CSV.

Exit codes: 0 success, 1 property failure, 2 invalid input, 3 budget
exhaustion with partial output. CSVs are comma separated with a header
row, newline line endings and UTF-8 text; identical configs and seeds
produce byte-identical files regardless of the thread count.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .combinatorics import packing_census, uniform_block_distribution
from .covers import cover_from_config
from .errors import CapacityError, ConfigError
from .estimators import (
    Budgets,
    TraceTruncated,
    decompose,
    h_c_trace,
    h_e_trace,
    h_minus_trace,
    h_plus_trace,
    write_trace_csv,
)
from .systems import MixtureSystem, system_from_config
from .verify import SUITE_NAMES, render_report, run_suite

SCHEMA_TEXT = """\
Configuration schema (JSON)

system: one of
  {"type": "bernoulli", "probs": [0.5, 0.5]}
  {"type": "markov", "matrix": [[0.9, 0.1], [0.5, 0.5]]}
  {"type": "mixture", "components": [<system>, ...], "weights": [0.5, 0.5]}
cover:
  {"depth": 2, "elements": [["00", "01", "10"], ["01", "10", "11"]]}
  Words are digit strings over the alphabet {0..M-1}.

entropy config fields (CLI flags override):
  estimators: subset of ["h_minus", "h_plus", "h_e", "h_c"] (default all)
  n_max: largest horizon (default 8)
  epsilons: list for h_e (default [0.25])
  depth: assignment depth for h_plus (default: cover depth)
  seed: root seed (default 0)
  threads: worker count (default 1)
  out: report directory (default "reports")
  budgets: {"exact_words": 20, "assignment_nodes": 2000000,
            "setcover_sets": 4096, "setcover_nodes": 10000000,
            "names": 16777216, "candidates": 4096}

decompose config fields:
  system (must be a mixture), cover, notion ("h_minus" | "h_plus"),
  n_values: [4, 8, 12], plus seed/out/budgets as above.

Example entropy config:
{
  "system": {"type": "bernoulli", "probs": [0.5, 0.5]},
  "cover": {"depth": 1, "elements": [["0"], ["1"]]},
  "estimators": ["h_minus", "h_e"],
  "n_max": 8,
  "epsilons": [0.25],
  "seed": 0
}
"""


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config: top level must be an object")
    return cfg


def _budgets_from(cfg: dict) -> Budgets:
    raw = cfg.get("budgets", {})
    if not isinstance(raw, dict):
        raise ConfigError("budgets: must be an object")
    known = {f for f in Budgets.__dataclass_fields__}
    for key in raw:
        if key not in known:
            raise ConfigError(f"budgets.{key}: unknown budget (choose from {sorted(known)})")
    try:
        return Budgets(**{k: int(v) for k, v in raw.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"budgets: {exc}") from exc


def _positive_int(cfg, key, default):
    value = cfg.get(key, default)
    if not isinstance(value, int) or value < 1:
        raise ConfigError(f"{key}: expected a positive integer, got {value!r}")
    return value


def _check_epsilons(values) -> list:
    out = []
    for e in values:
        e = float(e)
        if not (0.0 < e < 1.0):
            raise ConfigError(f"epsilons: {e} outside (0, 1)")
        out.append(e)
    return out


def _format(x: float) -> str:
    return f"{x:.9g}"


def _write_rows(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _cmd_entropy(args) -> int:
    cfg = _load_config(args.config)
    system = system_from_config(cfg.get("system"))
    cover = cover_from_config(cfg.get("cover"), system.alphabet_size)
    estimators = cfg.get("estimators", ["h_minus", "h_plus", "h_e", "h_c"])
    if not isinstance(estimators, list) or not estimators:
        raise ConfigError("estimators: must be a nonempty list")
    for name in estimators:
        if name not in ("h_minus", "h_plus", "h_e", "h_c"):
            raise ConfigError(f"estimators: unknown notion {name!r}")
    n_max = args.n_max if args.n_max is not None else _positive_int(cfg, "n_max", 8)
    epsilons = _check_epsilons(args.epsilon or cfg.get("epsilons", [0.25]))
    depth = args.depth if args.depth is not None else cfg.get("depth")
    if depth is not None and (not isinstance(depth, int) or depth < cover.depth):
        raise ConfigError(f"depth: must be an integer >= the cover depth {cover.depth}")
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    threads = args.threads if args.threads is not None else int(cfg.get("threads", 1))
    budgets = _budgets_from(cfg)
    if args.exact_node_budget is not None:
        budgets = Budgets(
            **{
                **{f: getattr(budgets, f) for f in Budgets.__dataclass_fields__},
                "assignment_nodes": args.exact_node_budget,
                "setcover_nodes": args.exact_node_budget,
            }
        )
    out_dir = Path(args.out or cfg.get("out", "reports"))
    out_dir.mkdir(parents=True, exist_ok=True)

    truncated = False
    summary = []

    def run_one(notion: str, epsilon=None):
        nonlocal truncated
        label = notion if epsilon is None else f"{notion}_eps{_format(epsilon)}"
        path = out_dir / f"{label}.csv"
        try:
            if notion == "h_minus":
                trace = h_minus_trace(
                    system, cover, n_max, budgets=budgets, seed=seed, threads=threads
                )
            elif notion == "h_plus":
                trace = h_plus_trace(
                    system, cover, n_max, depth=depth, budgets=budgets, seed=seed,
                    threads=threads,
                )
            elif notion == "h_e":
                trace = h_e_trace(
                    system, cover, epsilon, n_max, budgets=budgets, threads=threads
                )
            else:
                trace = h_c_trace(cover, n_max, budgets=budgets, threads=threads)
        except TraceTruncated as exc:
            truncated = True
            write_trace_csv(path, exc.records, notion=notion, truncated_at=exc.failed_n)
            last = exc.records[-1].value_bits if exc.records else float("nan")
            summary.append(
                [notion, "" if epsilon is None else _format(epsilon), n_max, _format(last),
                 "truncated"]
            )
            return
        write_trace_csv(path, trace)
        method = trace.records[-1].method if trace.records else ""
        summary.append(
            [notion, "" if epsilon is None else _format(epsilon), n_max,
             _format(trace.extrapolated), method]
        )

    for notion in estimators:
        if notion == "h_e":
            for epsilon in epsilons:
                run_one(notion, epsilon)
        else:
            run_one(notion)

    _write_rows(
        out_dir / "summary.csv",
        ("notion", "epsilon", "n_max", "estimate_bits", "method"),
        summary,
    )
    return 3 if truncated else 0


def _cmd_verify(args) -> int:
    if args.instances < 0:
        raise ConfigError("instances: must be >= 0")
    results = run_suite(args.suite, args.seed, args.instances)
    report = render_report(results, args.suite, args.seed, args.instances)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(report, encoding="utf-8")
    sys.stdout.write(report)
    return 0 if all(r.passed for r in results) else 1


def _parse_mu(spec: str, alphabet: int, block_length: int):
    if spec == "uniform":
        return uniform_block_distribution(alphabet, block_length)
    try:
        probs = json.loads(spec)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"mu: expected 'uniform' or a JSON list, got {spec!r}") from exc
    if not isinstance(probs, list) or len(probs) != alphabet**block_length:
        raise ConfigError(
            f"mu: expected {alphabet**block_length} probabilities in block-index order"
        )
    mu = {}
    for idx, p in enumerate(probs):
        block = []
        v = idx
        for _ in range(block_length):
            v, s = divmod(v, alphabet)
            block.append(s)
        mu[tuple(reversed(block))] = float(p)
    return mu


def _cmd_census(args) -> int:
    if args.alphabet < 2:
        raise ConfigError("alphabet: must be >= 2")
    if args.block_length < 1:
        raise ConfigError("block-length: must be >= 1")
    deltas = _check_epsilons(args.delta)
    mu = _parse_mu(args.mu, args.alphabet, args.block_length)
    out_dir = Path(args.out or "reports")
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    truncated = False
    for k in args.k:
        if k < args.block_length:
            raise ConfigError(f"k: {k} is below the block length {args.block_length}")
        for delta in deltas:
            try:
                count, bound = packing_census(
                    args.alphabet, args.block_length, k, delta, mu,
                    bits_budget=args.bits_budget,
                )
                ratio = count / bound if bound > 0 else 0.0
                rows.append([k, _format(delta), count, _format(bound), _format(ratio)])
            except CapacityError:
                truncated = True
                rows.append([k, _format(delta), "", "", ""])
    _write_rows(out_dir / "census.csv", ("k", "delta", "exact_count", "bound", "ratio"), rows)
    return 3 if truncated else 0


def _cmd_decompose(args) -> int:
    cfg = _load_config(args.config)
    system = system_from_config(cfg.get("system"))
    if not isinstance(system, MixtureSystem):
        raise ConfigError("system.type: decompose needs a mixture system")
    cover = cover_from_config(cfg.get("cover"), system.alphabet_size)
    notion = args.notion or cfg.get("notion", "h_minus")
    if notion not in ("h_minus", "h_plus"):
        raise ConfigError(f"notion: expected h_minus or h_plus, got {notion!r}")
    n_values = args.n or cfg.get("n_values", [4, 8])
    if not isinstance(n_values, list) or not all(
        isinstance(n, int) and n >= 1 for n in n_values
    ):
        raise ConfigError("n_values: expected a list of positive integers")
    budgets = _budgets_from(cfg)
    out_dir = Path(args.out or cfg.get("out", "reports"))
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    truncated = False
    for n in sorted(set(n_values)):
        try:
            gap = decompose(system, cover, n, notion, budgets=budgets)
            rows.append(
                [notion, n, _format(gap.mixture_bits), _format(gap.weighted_bits),
                 _format(gap.gap_bits)]
            )
        except CapacityError:
            truncated = True
            rows.append([notion, n, "", "", ""])
    _write_rows(
        out_dir / "decompose.csv",
        ("notion", "n", "mixture_bits", "weighted_bits", "gap_bits"),
        rows,
    )
    return 3 if truncated else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coverentropy",
        description="Entropy of covers on full shifts: traces, verification, census.",
    )
    parser.add_argument(
        "--print-schema", action="store_true", help="print the config schema and exit"
    )
    sub = parser.add_subparsers(dest="command")

    entropy = sub.add_parser("entropy", help="run entropy traces from a config")
    entropy.add_argument("--config", required=True)
    entropy.add_argument("--n-max", type=int, default=None)
    entropy.add_argument("--epsilon", type=float, action="append", default=None)
    entropy.add_argument("--depth", type=int, default=None)
    entropy.add_argument("--seed", type=int, default=None)
    entropy.add_argument("--exact-node-budget", type=int, default=None)
    entropy.add_argument("--threads", type=int, default=None)
    entropy.add_argument("--out", default=None)

    verify = sub.add_parser("verify", help="run a property suite")
    verify.add_argument("--suite", required=True, choices=SUITE_NAMES + ("all",))
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--instances", type=int, default=100)
    verify.add_argument("--out", default=None)

    census = sub.add_parser("census", help="packed-word census table")
    census.add_argument("--alphabet", type=int, default=2)
    census.add_argument("--block-length", type=int, required=True)
    census.add_argument("--k", type=int, action="append", required=True)
    census.add_argument("--delta", type=float, action="append", required=True)
    census.add_argument("--mu", default="uniform")
    census.add_argument("--bits-budget", type=int, default=24)
    census.add_argument("--out", default=None)

    decomp = sub.add_parser("decompose", help="mixture vs weighted component values")
    decomp.add_argument("--config", required=True)
    decomp.add_argument("--notion", choices=("h_minus", "h_plus"), default=None)
    decomp.add_argument("--n", type=int, action="append", default=None)
    decomp.add_argument("--out", default=None)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_schema:
        sys.stdout.write(SCHEMA_TEXT)
        return 0
    if not args.command:
        parser.print_usage(sys.stderr)
        return 2
    handlers = {
        "entropy": _cmd_entropy,
        "verify": _cmd_verify,
        "census": _cmd_census,
        "decompose": _cmd_decompose,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
