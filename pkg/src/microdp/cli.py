"""Command-line entry points: `release`, `sweep` and a hidden `verify`."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .data import load_dataset, load_schema
from .harness import MechanismConfig, SweepSpec, run_release, run_sweep
from .mechanisms import METHODS, PrivacyBudget
from .oracle import (
    SensitivityProbe,
    exact_dp_ratio,
    exact_expmech_distribution,
    lemma1_check,
)
from .taxonomy import Taxonomy


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part]


def _float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="microdp",
        description="Differentially private tabular releases via microaggregation.",
    )
    sub = parser.add_subparsers(dest="command", metavar="{release,sweep}")

    rel = sub.add_parser("release", help="anonymize one dataset")
    rel.add_argument("--data", required=True, help="input CSV")
    rel.add_argument("--schema", required=True, help="schema file")
    rel.add_argument("--method", required=True, choices=METHODS)
    rel.add_argument("--k", type=int, default=1, help="cluster size (ignored by plain-laplace)")
    rel.add_argument("--epsilon", type=float, default=1.0, help="total privacy budget")
    rel.add_argument("--attrs", action="append", default=None,
                     help="comma-separated attribute subset (default: all)")
    rel.add_argument("--seed", type=int, default=0)
    rel.add_argument("--out", required=True, help="output CSV path")
    rel.add_argument("--no-clamp", action="store_true", help="do not clamp noisy values to the domain")

    swp = sub.add_parser("sweep", help="run a parameter grid")
    swp.add_argument("--data", required=True)
    swp.add_argument("--schema", required=True)
    swp.add_argument("--method", required=True,
                     help="comma-separated methods, e.g. ir-dp,plain-laplace")
    swp.add_argument("--k", type=_int_list, required=True, help="comma-separated cluster sizes")
    swp.add_argument("--epsilon", type=_float_list, required=True,
                     help="comma-separated budgets")
    swp.add_argument("--attrs", action="append", default=None,
                     help="comma-separated subset; repeat the flag for several subsets")
    swp.add_argument("--runs", type=int, default=10)
    swp.add_argument("--seed", type=int, default=0)
    swp.add_argument("--out", required=True, help="output CSV path")
    swp.add_argument("--no-clamp", action="store_true")

    ver = sub.add_parser("verify")
    ver.add_argument("--probes", type=int, default=200, help="random centroid-shift probes")
    ver.add_argument("--seed", type=int, default=0)

    return parser


def _cmd_release(args: argparse.Namespace) -> int:
    schema = load_schema(args.schema)
    data = load_dataset(args.data, schema)
    if args.attrs:
        names = [n for chunk in args.attrs for n in chunk.split(",") if n]
        data = data.subset(names)
    cfg = MechanismConfig(
        method=args.method,
        k=args.k,
        budget=PrivacyBudget(epsilon_total=args.epsilon, m=data.m),
        seed=args.seed,
        clamp=not args.no_clamp,
    )
    out_path, report = run_release(cfg, data, args.out)
    print(f"wrote {out_path} and {out_path.name}.report.json "
          f"(re={report.re_dataset:.6f}, jsd={report.jsd_dataset:.6f})")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    subsets = None
    if args.attrs:
        subsets = tuple(tuple(n for n in chunk.split(",") if n) for chunk in args.attrs)
    spec = SweepSpec(
        data_path=args.data,
        schema_path=args.schema,
        methods=tuple(m for m in args.method.split(",") if m),
        k_values=tuple(args.k),
        epsilon_values=tuple(args.epsilon),
        runs=args.runs,
        master_seed=args.seed,
        attribute_subsets=subsets,
        clamp=not args.no_clamp,
        out_path=args.out,
    )
    results = run_sweep(spec)
    failed = [c for c in results if c.status != "ok"]
    print(f"wrote {spec.out_path} ({len(results)} cells, {len(failed)} failed)")
    return 0 if not failed else 1


def _cmd_verify(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(args.seed)
    failures = 0

    worst = 0.0
    for _ in range(args.probes):
        k = int(rng.choice([2, 3, 5, 7]))
        n = int(rng.integers(max(k, 5), 51))
        if rng.random() < 0.5:
            column = rng.uniform(0.0, 100.0, size=n)
        else:
            centers = rng.uniform(0.0, 100.0, size=3)
            column = rng.choice(centers, size=n) + rng.normal(0.0, 1.0, size=n)
        probe = SensitivityProbe(column=tuple(column), k=k, delta_cap=50.0, grid_points=5)
        report = lemma1_check(probe)
        worst = max(worst, report.max_shift / report.bound)
        if not report.passed:
            failures += 1
    print(f"centroid-shift bound: {args.probes} probes, worst shift/bound = {worst:.6f} "
          f"-> {'ok' if failures == 0 else 'FAIL'}")

    tax = Taxonomy("root", {"x": "root", "y": "root", "a": "x", "b": "x", "c": "y"})
    cluster = ["a", "a", "b", "c"]
    exact = exact_expmech_distribution(tax, cluster, epsilon=2.0)
    from .mechanisms import exponential_mechanism_centroid

    draws = 20000
    counts: dict[str, int] = {}
    sampler_rng = np.random.default_rng([args.seed, 1])
    for _ in range(draws):
        label = exponential_mechanism_centroid(tax, cluster, 2.0, 1.0, sampler_rng)
        counts[label] = counts.get(label, 0) + 1
    bad = []
    for label, p in exact.items():
        observed = counts.get(label, 0)
        sigma = (draws * p * (1 - p)) ** 0.5
        if abs(observed - draws * p) > 4 * sigma + 1:
            bad.append(label)
    print(f"exponential mechanism: {draws} draws vs exact probabilities -> "
          f"{'ok' if not bad else 'FAIL ' + repr(bad)}")
    failures += len(bad)

    ratio = exact_dp_ratio(tax, ["a", "a", "b"], ["a", "b", "b"], epsilon=1.0)
    ok = ratio <= 1.0 + 1e-9
    print(f"exact DP ratio on neighbor clusters: {ratio:.6f} <= 1 -> {'ok' if ok else 'FAIL'}")
    failures += 0 if ok else 1

    return 0 if failures == 0 else 1


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    try:
        if args.command == "release":
            return _cmd_release(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_verify(args)
    except BrokenPipeError:
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary turns errors into diagnostics
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
