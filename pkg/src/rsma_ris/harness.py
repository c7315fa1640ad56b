"""Experiment orchestration: plan ingestion (TOML), Monte Carlo execution
across sweep points / variants / drops with paired channel realizations,
Pareto-region construction over the latency weight, and CSV/JSON exporters.

Determinism: every random stream derives from the plan's master seed through
numpy SeedSequence chains keyed by (drop index, K, M), so identical plans
reproduce identical rows byte for byte, and all sweep points and variants of
a drop share the same channels (paired comparisons).
"""
from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import product
import numpy as np

from .channels import TopologyConfig, generate_drop, noise_power_w
from .metrics import metrics_report, reliability_split
from .model import ChannelDrop, DesignPoint, ScenarioConfig
from .optimizer import AoOptions, SolveTrace, VariantSpec, ao_solve

__all__ = [
    "ExperimentPlan",
    "ResultRow",
    "ParetoPoint",
    "load_plan",
    "run_plan",
    "pareto_region",
    "pareto_filter",
    "export_results",
    "load_results",
    "drop_rng",
]

SWEEP_AXES = ("P_db", "eps_total", "M", "alpha", "K")

CSV_COLUMNS = (
    "P_db", "eps_total", "M", "alpha", "K",
    "variant", "seed", "minmax_delay", "maxmin_ee", "objective",
    "iters", "converged",
)

# Canonical solve order: prerequisites (warm-start donors) come first.
_VARIANT_ORDER = (
    "No-RIS-SDMA", "No-RIS-RSMA", "RIS-SDMA", "RIS-RSMA",
    "RIS-Rand-SDMA", "RIS-Rand-RSMA",
)


@dataclass(frozen=True)
class ExperimentPlan:
    """A batch experiment: base scenario, sweep axes, variants, drop count."""

    K: int = 4
    N_bs: int = 2
    N_u: int = 2
    M: int = 20
    P_db: float = 10.0            # BS budget, dBW
    eps_total: float = 1e-5       # end-to-end decoding error budget
    n_p: int = 256
    n_c: int = 256
    l_bits: float = 256.0         # per-user message length, bits
    alpha: float = 1.0
    eta: float = 3.0
    P_s: float = 1.0
    noise_dbm: float = -100.0
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    sweep: dict = field(default_factory=dict)          # axis name -> value list
    variants: tuple[str, ...] = ("RIS-RSMA", "RIS-SDMA")
    drops: int = 50
    seed: int = 1
    delta: float = 1e-4
    max_iter: int = 40
    warm_start: bool = True
    threads: int = 1
    out_dir: str | None = None

    def __post_init__(self) -> None:
        if self.drops < 1:
            raise ValueError("drops must be >= 1")
        for axis, values in self.sweep.items():
            if axis not in SWEEP_AXES:
                raise ValueError(f"unknown sweep axis {axis!r} (allowed: {SWEEP_AXES})")
            if not values:
                raise ValueError(f"sweep axis {axis!r} has no values")
        for v in self.variants:
            VariantSpec.parse(v)

    def points(self) -> list[dict]:
        """Cartesian product of sweep axes over the base point."""
        axes = [a for a in SWEEP_AXES if a in self.sweep]
        base = {
            "P_db": self.P_db, "eps_total": self.eps_total, "M": self.M,
            "alpha": self.alpha, "K": self.K,
        }
        if not axes:
            return [base]
        out = []
        for combo in product(*(self.sweep[a] for a in axes)):
            pt = dict(base)
            pt.update(dict(zip(axes, combo)))
            out.append(pt)
        return out

    def scenario(self, point: dict) -> ScenarioConfig:
        """ScenarioConfig for one sweep point (dB -> linear happens here only)."""
        eps_c, eps_p = reliability_split(float(point["eps_total"]))
        K = int(point["K"])
        return ScenarioConfig(
            K=K,
            N_bs=self.N_bs,
            N_u=self.N_u,
            M=int(point["M"]),
            P=10.0 ** (float(point["P_db"]) / 10.0),
            sigma2=noise_power_w(self.noise_dbm),
            n_p=self.n_p,
            n_c=self.n_c,
            eps_p=eps_p,
            eps_c=eps_c,
            l=np.full(K, self.l_bits * math.log(2.0)),
            alpha=float(point["alpha"]),
            eta=self.eta,
            P_s=self.P_s,
        )


@dataclass(frozen=True)
class ResultRow:
    """One (sweep point, variant, drop) outcome."""

    P_db: float
    eps_total: float
    M: int
    alpha: float
    K: int
    variant: str
    seed: int
    minmax_delay: float
    maxmin_ee: float
    objective: float
    iters: int
    converged: bool
    wall_ms: float = 0.0
    verdict: str = ""


@dataclass(frozen=True)
class ParetoPoint:
    alpha: float
    minmax_delay: float
    maxmin_ee: float


def drop_rng(master_seed: int, drop_index: int, K: int) -> tuple[np.random.Generator, int]:
    """Channel rng for one drop, shared by all sweep points with the same K.

    Positions and direct links are drawn from dedicated streams inside
    `generate_drop`, so a drop's geometry is identical across M values too.
    """
    ss = np.random.SeedSequence([int(master_seed), int(drop_index), int(K)])
    ident = int(ss.generate_state(1)[0])
    return np.random.default_rng(ss), ident


def _solve_variants(
    plan: ExperimentPlan,
    cfg: ScenarioConfig,
    drop: ChannelDrop,
    drop_index: int,
    variants: list[str],
) -> dict[str, SolveTrace]:
    """All requested variants on one drop, warm-starting along the canonical order."""
    finals: dict[str, DesignPoint] = {}
    traces: dict[str, SolveTrace] = {}
    ordered = [v for v in _VARIANT_ORDER if v in variants]
    for label in ordered:
        spec = VariantSpec.parse(label)
        warm: list[DesignPoint] = []
        if plan.warm_start:
            if spec.rsma:
                donor = label.replace("RSMA", "SDMA")
                if donor in finals:
                    warm.append(finals[donor])
            if spec.ris_mode == "optimized":
                donor = label.replace("RIS-", "No-RIS-")
                if donor in finals:
                    warm.append(finals[donor])
        ss = np.random.SeedSequence(
            [plan.seed, drop_index, cfg.K, 1000 + _VARIANT_ORDER.index(label)]
        )
        options = AoOptions(
            rng=np.random.default_rng(ss),
            delta=plan.delta,
            max_iter=plan.max_iter,
            warm_starts=tuple(warm),
        )
        trace = ao_solve(cfg, drop, spec, options)
        finals[label] = trace.final_point
        traces[label] = trace
    return traces


def _run_point_drop(
    plan: ExperimentPlan, point: dict, drop_index: int
) -> list[ResultRow]:
    cfg = plan.scenario(point)
    rng, ident = drop_rng(plan.seed, drop_index, cfg.K)
    drop = generate_drop(cfg, plan.topology, rng, seed=ident)
    t0 = time.perf_counter()
    traces = _solve_variants(plan, cfg, drop, drop_index, list(plan.variants))
    rows = []
    for label in plan.variants:
        trace = traces[label]
        report = metrics_report(cfg, drop, trace.final_point)
        rows.append(
            ResultRow(
                P_db=float(point["P_db"]),
                eps_total=float(point["eps_total"]),
                M=int(point["M"]),
                alpha=float(point["alpha"]),
                K=int(point["K"]),
                variant=label,
                seed=ident,
                minmax_delay=float(np.max(report.delay)),
                maxmin_ee=float(np.min(report.ee)),
                objective=trace.objective,
                iters=trace.iterations,
                converged=trace.converged,
                wall_ms=(time.perf_counter() - t0) * 1e3 / max(len(plan.variants), 1),
                verdict=trace.verdict,
            )
        )
    return rows


def run_plan(plan: ExperimentPlan) -> list[ResultRow]:
    """Execute the full plan; rows come back canonically sorted.

    Per-drop failures (infeasible / degenerate verdicts) are retained as rows
    with their flags, never dropped.
    """
    tasks = [(point, d) for point in plan.points() for d in range(plan.drops)]
    if plan.threads > 1:
        with ProcessPoolExecutor(max_workers=plan.threads) as pool:
            chunks = list(pool.map(_run_point_drop, *zip(*[(plan, p, d) for p, d in tasks])))
    else:
        chunks = [_run_point_drop(plan, p, d) for p, d in tasks]
    rows = [r for chunk in chunks for r in chunk]
    order = {v: i for i, v in enumerate(_VARIANT_ORDER)}
    rows.sort(
        key=lambda r: (r.P_db, r.eps_total, r.M, r.alpha, r.K, order[r.variant], r.seed)
    )
    return rows


def pareto_region(
    plan: ExperimentPlan,
    variant: str,
    alpha_grid: list[float],
) -> list[ParetoPoint]:
    """Mean (min-max delay, max-min EE) per latency weight, sorted by weight."""
    if sorted(alpha_grid) != list(alpha_grid):
        raise ValueError("alpha_grid must be ascending")
    VariantSpec.parse(variant)
    out = []
    for alpha in alpha_grid:
        sub = replace(plan, sweep={}, alpha=float(alpha), variants=(variant,))
        rows = run_plan(sub)
        delays = np.array([r.minmax_delay for r in rows])
        ees = np.array([r.maxmin_ee for r in rows])
        finite = np.isfinite(delays)
        out.append(
            ParetoPoint(
                alpha=float(alpha),
                minmax_delay=float(delays[finite].mean()) if finite.any() else math.inf,
                maxmin_ee=float(ees.mean()),
            )
        )
    return out


def pareto_filter(points: list[ParetoPoint]) -> list[ParetoPoint]:
    """Nondominated subset (smaller delay and larger EE both count as better)."""
    keep = []
    for p in points:
        dominated = any(
            (q.minmax_delay <= p.minmax_delay and q.maxmin_ee >= p.maxmin_ee)
            and (q.minmax_delay < p.minmax_delay or q.maxmin_ee > p.maxmin_ee)
            for q in points
        )
        if not dominated:
            keep.append(p)
    return keep


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return f"{v:.9g}"
    return str(v)


def export_results(
    rows: list[ResultRow], fmt: str, path: str, with_timing: bool = False
) -> str:
    """Write rows to CSV or JSON with 9-significant-digit floats.

    The wall_ms column is appended only on request so identical reruns
    produce byte-identical data files.
    """
    cols = list(CSV_COLUMNS) + (["wall_ms"] if with_timing else [])
    try:
        if fmt == "csv":
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(cols)
                for r in rows:
                    writer.writerow([_fmt(getattr(r, c)) for c in cols])
        elif fmt == "json":
            payload = {
                "columns": cols,
                "rows": [
                    {
                        c: (None if isinstance(getattr(r, c), float) and math.isinf(getattr(r, c))
                            else _json_val(getattr(r, c)))
                        for c in cols
                    }
                    for r in rows
                ],
            }
            with open(path, "w") as fh:
                json.dump(payload, fh, indent=1, sort_keys=True)
                fh.write("\n")
        else:
            raise ValueError(f"unknown export format {fmt!r}")
    except OSError as exc:
        raise OSError(f"failed to write results to {path}: {exc}") from exc
    return path


def _json_val(v):
    if isinstance(v, bool):
        return v
    if isinstance(v, float):
        return float(f"{v:.9g}")
    return v


def load_results(path: str) -> list[dict]:
    """Read back an exported file (CSV or JSON) into row dictionaries."""
    if path.endswith(".json"):
        with open(path) as fh:
            payload = json.load(fh)
        rows = []
        for raw in payload["rows"]:
            rows.append({k: (math.inf if v is None else v) for k, v in raw.items()})
        return rows
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for raw in reader:
            row = {}
            for k, v in raw.items():
                if k in ("variant",):
                    row[k] = v
                elif k in ("M", "K", "iters", "seed"):
                    row[k] = int(v)
                elif k == "converged":
                    row[k] = v == "1"
                else:
                    row[k] = float(v)
            rows.append(row)
        return rows


# ---------------------------------------------------------------------------
# plan files

_SCENARIO_KEYS = {
    "K", "N_bs", "N_u", "M", "P_db", "eps_total", "n_p", "n_c",
    "l_bits", "alpha", "eta", "P_s", "noise_dbm",
}
_RUN_KEYS = {
    "variants", "drops", "seed", "delta", "max_iter", "warm_start", "threads", "out_dir",
}
_TOPOLOGY_KEYS = {
    "bs_xy", "ris_xy", "user_range_m", "user_sector_deg", "pl0_direct_db",
    "pl0_ris_db", "pl_exp_direct", "pl_exp_ris", "rician_k_db", "fading_scale",
    "antenna_spacing",
}


def load_plan(path: str) -> ExperimentPlan:
    """Parse a TOML plan file; unknown keys anywhere are errors."""
    try:
        import tomllib  # py311+
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        data = tomllib.load(fh)

    allowed_tables = {"scenario", "topology", "sweep", "run"}
    unknown = set(data) - allowed_tables
    if unknown:
        raise ValueError(f"unknown plan tables: {sorted(unknown)}")

    kwargs: dict = {}
    scenario = data.get("scenario", {})
    bad = set(scenario) - _SCENARIO_KEYS
    if bad:
        raise ValueError(f"unknown scenario keys: {sorted(bad)}")
    kwargs.update(scenario)

    topo_raw = data.get("topology", {})
    bad = set(topo_raw) - _TOPOLOGY_KEYS
    if bad:
        raise ValueError(f"unknown topology keys: {sorted(bad)}")
    topo_kwargs = {
        k: (tuple(v) if isinstance(v, list) else v) for k, v in topo_raw.items()
    }
    kwargs["topology"] = TopologyConfig(**topo_kwargs)

    sweep = data.get("sweep", {})
    bad = set(sweep) - set(SWEEP_AXES)
    if bad:
        raise ValueError(f"unknown sweep axes: {sorted(bad)}")
    kwargs["sweep"] = {k: list(v) for k, v in sweep.items()}

    run = data.get("run", {})
    bad = set(run) - _RUN_KEYS
    if bad:
        raise ValueError(f"unknown run keys: {sorted(bad)}")
    run = dict(run)
    if "variants" in run:
        run["variants"] = tuple(run["variants"])
    kwargs.update(run)

    return ExperimentPlan(**kwargs)


def default_out_dir(plan: ExperimentPlan) -> str:
    """Output directory: plan's own, else $RSMA_RIS_OUT, else ./results."""
    return plan.out_dir or os.environ.get("RSMA_RIS_OUT", "results")
