"""Batch command-line interface.

Subcommands:
  run     execute a plan file and export result tables
  pareto  trace the latency-EE region over a grid of trade-off weights
  oracle  exhaustive grid reference on a tiny instance
  export  convert a result file between CSV and JSON

The default output directory comes from --out, then the plan file, then the
RSMA_RIS_OUT environment variable, then ./results.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .harness import (
    ExperimentPlan,
    default_out_dir,
    export_results,
    load_plan,
    load_results,
    pareto_region,
    run_plan,
)
from .channels import generate_drop
from .harness import drop_rng
from .oracle import grid_oracle
from .optimizer import VariantSpec


def _apply_overrides(plan: ExperimentPlan, args: argparse.Namespace) -> ExperimentPlan:
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.drops is not None:
        updates["drops"] = args.drops
    if args.variants is not None:
        updates["variants"] = tuple(v.strip() for v in args.variants.split(","))
    if args.threads is not None:
        updates["threads"] = args.threads
    if args.out is not None:
        updates["out_dir"] = args.out
    return dataclasses.replace(plan, **updates) if updates else plan


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("plan", help="TOML plan file")
    p.add_argument("--seed", type=int, default=None, help="master seed override")
    p.add_argument("--drops", type=int, default=None, help="drops per point override")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--variants", default=None, help="comma-separated variant list")
    p.add_argument("--threads", type=int, default=None, help="worker processes")


def cmd_run(args: argparse.Namespace) -> int:
    plan = _apply_overrides(load_plan(args.plan), args)
    rows = run_plan(plan)
    out_dir = default_out_dir(plan)
    os.makedirs(out_dir, exist_ok=True)
    csv_path = export_results(rows, "csv", os.path.join(out_dir, "results.csv"),
                              with_timing=args.with_timing)
    json_path = export_results(rows, "json", os.path.join(out_dir, "results.json"),
                               with_timing=args.with_timing)
    done = sum(r.converged for r in rows)
    print(f"{len(rows)} rows ({done} converged) -> {csv_path}, {json_path}")
    return 0


def cmd_pareto(args: argparse.Namespace) -> int:
    plan = _apply_overrides(load_plan(args.plan), args)
    alphas = [float(a) for a in args.alphas.split(",")]
    out_dir = default_out_dir(plan)
    os.makedirs(out_dir, exist_ok=True)
    for variant in plan.variants:
        points = pareto_region(plan, variant, alphas)
        name = variant.lower().replace("-", "_") + "_pareto.csv"
        path = os.path.join(out_dir, name)
        with open(path, "w") as fh:
            fh.write("minmax_delay,maxmin_ee\n")
            for p in points:
                fh.write(f"{p.minmax_delay:.9g},{p.maxmin_ee:.9g}\n")
        print(f"{variant}: {len(points)} region points -> {path}")
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    plan = _apply_overrides(load_plan(args.plan), args)
    point = plan.points()[0]
    cfg = plan.scenario(point)
    rng, ident = drop_rng(plan.seed, args.drop_index, cfg.K)
    drop = generate_drop(cfg, plan.topology, rng, seed=ident)
    result = grid_oracle(cfg, drop, VariantSpec.parse(args.variant))
    payload = {
        "status": result.status,
        "objective": result.objective if result.status == "ok" else None,
        "drop_seed": ident,
        "variant": args.variant,
    }
    print(json.dumps(payload, indent=1, sort_keys=True))
    return 0 if result.status == "ok" else 1


def cmd_export(args: argparse.Namespace) -> int:
    rows_raw = load_results(args.input)
    from .harness import ResultRow

    rows = [
        ResultRow(**{k: v for k, v in raw.items() if k in ResultRow.__dataclass_fields__})
        for raw in rows_raw
    ]
    export_results(rows, args.format, args.output)
    print(f"{len(rows)} rows -> {args.output}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="rsma-ris",
        description="Latency/energy-efficiency optimizer for RIS-aided RSMA downlinks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a plan file")
    _add_common(p)
    p.add_argument("--with-timing", action="store_true",
                   help="append the wall_ms column (breaks byte-identical reruns)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("pareto", help="latency-EE region over trade-off weights")
    _add_common(p)
    p.add_argument("--alphas", default="0,0.25,0.5,0.75,1", help="ascending weight grid")
    p.set_defaults(func=cmd_pareto)

    p = sub.add_parser("oracle", help="grid reference on a tiny instance")
    _add_common(p)
    p.add_argument("--drop-index", type=int, default=0)
    p.add_argument("--variant", default="RIS-RSMA")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("export", help="convert a result file between formats")
    p.add_argument("input", help="existing results file (.csv or .json)")
    p.add_argument("--format", choices=("csv", "json"), required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_export)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
