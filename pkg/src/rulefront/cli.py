"""Command-line interface.

Subcommands: ``simulate`` (write synthetic inputs), ``mine`` (list the
candidate rule pool), ``search`` (single trade-off value), ``frontier``
(full sweep + Pareto front), ``infer`` (split-sample evaluation and power
ranking), and ``oracle`` (exhaustive reference on small inputs).

Configuration comes from an optional YAML file plus flag overrides; the
resolved configuration is echoed into the output directory for provenance.
Outputs are deterministic given identical inputs and seed (no timestamps in
payloads). Exit codes: 0 success, 1 usage/config error, 2 data error,
3 search failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import pandas as pd
import yaml

from . import __version__
from .anneal import AnnealerConfig, run_restarts
from .errors import (
    BudgetExceededError,
    ConfigError,
    DataError,
    EmptyPoolError,
    InsufficientDataError,
    RuleFrontError,
    SearchError,
)
from .exhaustive import EnumerationBudget, exact_argmax, exact_front
from .frontier import (
    DEFAULT_ALPHA_GRID,
    DEFAULT_WEIGHT_GRID,
    point_from_ruleset,
    sweep,
)
from .inference import SplitPlan, diff_in_means, power_rank, split
from .mining import (
    DiscretizationSpec,
    RulePool,
    VariableSpec,
    cull,
    discretize,
    mine_rules,
)
from .model import coverage_of_ruleset
from .objective import LINEAR, Constraints, ObjectiveConfig
from .simulate import (
    ContinuousDgpSpec,
    DiscreteDgpSpec,
    gen_continuous,
    gen_discrete,
)

log = logging.getLogger("rulefront")

DEFAULT_CONFIG = {
    "input": None,
    "tau_column": "tau_hat",
    "outcome_column": None,
    "treatment_column": None,
    "columns": None,
    "constraints": {"l_max": 3, "c_max": 9, "n_rules_cap": None},
    "objective": {
        "alpha": 1.0,
        "kind": "multiplicative",
        "linear_weight": 0.5,
        "effect_term": "normalized-mean",
    },
    "annealer": {
        "n_iter": 5000,
        "q": 0.1,
        "fg_scale": 10.0,
        "fg_switch": 0.5,
        "eta": None,
        "t0_scale": 1.5,
        "t0_probes": 100,
        "restarts": 5,
    },
    "mining": {"min_support": 0.01, "n_rules": 500},
    "alpha_grid": list(DEFAULT_ALPHA_GRID),
    "weight_grid": list(DEFAULT_WEIGHT_GRID),
    "split": {"train_fraction": 0.7, "stratify": True},
    "seed": 0,
    "threads": 1,
}


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; the contract is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}") from exc


def resolve_config(args) -> dict:
    cfg = DEFAULT_CONFIG
    path = getattr(args, "config", None)
    if path:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                loaded = yaml.safe_load(fh) or {}
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a mapping")
        unknown = set(loaded) - set(DEFAULT_CONFIG)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = _deep_merge(cfg, loaded)

    overrides = {
        "input": getattr(args, "input", None),
        "tau_column": getattr(args, "tau_column", None),
        "outcome_column": getattr(args, "outcome_column", None),
        "treatment_column": getattr(args, "treatment_column", None),
        "seed": getattr(args, "seed", None),
        "threads": getattr(args, "threads", None),
        "alpha_grid": getattr(args, "alpha_grid", None),
        "weight_grid": getattr(args, "weight_grid", None),
    }
    nested = {
        ("constraints", "l_max"): getattr(args, "l_max", None),
        ("constraints", "c_max"): getattr(args, "c_max", None),
        ("objective", "alpha"): getattr(args, "alpha", None),
        ("objective", "kind"): getattr(args, "objective", None),
        ("objective", "effect_term"): getattr(args, "effect_term", None),
        ("annealer", "n_iter"): getattr(args, "n_iter", None),
        ("annealer", "restarts"): getattr(args, "restarts", None),
        ("annealer", "q"): getattr(args, "q", None),
        ("mining", "min_support"): getattr(args, "min_support", None),
        ("mining", "n_rules"): getattr(args, "n_rules", None),
        ("split", "train_fraction"): getattr(args, "train_fraction", None),
    }
    for key, value in overrides.items():
        if value is not None:
            cfg = _deep_merge(cfg, {key: value})
    for (section, key), value in nested.items():
        if value is not None:
            cfg = _deep_merge(cfg, {section: {key: value}})
    return cfg


def _build_constraints(cfg) -> Constraints:
    c = cfg["constraints"]
    return Constraints(
        l_max=int(c["l_max"]),
        c_max=int(c["c_max"]),
        n_rules_cap=None if c.get("n_rules_cap") is None else int(c["n_rules_cap"]),
    )


def _build_objective(cfg) -> ObjectiveConfig:
    o = cfg["objective"]
    return ObjectiveConfig(
        alpha=float(o["alpha"]),
        kind=o["kind"],
        linear_weight=float(o["linear_weight"]),
        effect_term_mode=o["effect_term"],
    )


def _build_annealer(cfg) -> AnnealerConfig:
    a = cfg["annealer"]
    return AnnealerConfig(
        n_iter=int(a["n_iter"]),
        q=float(a["q"]),
        fg_scale=float(a["fg_scale"]),
        fg_switch=float(a["fg_switch"]),
        eta=None if a.get("eta") is None else float(a["eta"]),
        t0_scale=float(a["t0_scale"]),
        t0_probes=int(a["t0_probes"]),
        seed=int(cfg["seed"]),
        restarts=int(a["restarts"]),
    )


def _variable_spec(decl) -> VariableSpec:
    if isinstance(decl, str):
        return VariableSpec(decl)
    if isinstance(decl, dict):
        kind = decl.get("type")
        if kind is None:
            raise ConfigError(f"column declaration missing 'type': {decl}")
        if kind == "ordinal" and "quantiles" in decl:
            return VariableSpec(kind, tuple(float(q) for q in decl["quantiles"]))
        return VariableSpec(kind)
    raise ConfigError(f"bad column declaration: {decl!r}")


def load_dataset(cfg):
    """Read the input CSV, drop incomplete rows over the declared columns,
    and discretize into a Dataset."""
    path = cfg.get("input")
    if not path:
        raise ConfigError("no input file configured (use --input or the config file)")
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError as exc:
        raise DataError(f"input file not found: {path}") from exc
    except pd.errors.ParserError as exc:
        raise DataError(f"cannot parse {path}: {exc}") from exc
    if frame.empty:
        raise DataError(f"input file {path} has no data rows")

    tau_col = cfg["tau_column"]
    y_col = cfg.get("outcome_column")
    d_col = cfg.get("treatment_column")
    special = [c for c in (tau_col, y_col, d_col) if c]
    for col in special:
        if col not in frame.columns:
            raise DataError(f"declared column {col!r} missing from {path}")

    declared = cfg.get("columns")
    if declared:
        spec = DiscretizationSpec(
            {name: _variable_spec(decl) for name, decl in declared.items()}
        )
    else:
        covariates = [c for c in frame.columns if c not in special]
        if not covariates:
            raise DataError("no covariate columns left after reserving tau/y/d")
        spec = DiscretizationSpec.infer(frame, covariates)

    used = list(spec.variables) + special
    for col in used:
        if col not in frame.columns:
            raise DataError(f"declared column {col!r} missing from {path}")
    complete = frame[used].notna().all(axis=1)
    dropped = int((~complete).sum())
    if dropped:
        log.info("dropped %d incomplete rows (of %d)", dropped, len(frame))
    frame = frame.loc[complete].reset_index(drop=True)
    if frame.empty:
        raise DataError("no complete-case rows remain")
    return discretize(frame, spec, tau_col, y_col, d_col), dropped


def _mined_pool(cfg, dataset) -> RulePool:
    constraints = _build_constraints(cfg)
    pool = mine_rules(dataset, constraints, float(cfg["mining"]["min_support"]))
    return cull(pool, int(cfg["mining"]["n_rules"]), dataset)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload):
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n",
        encoding="utf-8",
    )


def _echo_config(cfg, out: Path):
    (out / "config.yaml").write_text(
        yaml.safe_dump(cfg, sort_keys=True), encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    out = _out_dir(args)
    seed = 0 if args.seed is None else args.seed
    if args.dgp == "discrete":
        kwargs = {"n": args.n or 1000, "seed": seed, "noise_sd": args.noise_sd}
        if args.mu is not None:
            if len(args.mu) != 3:
                raise ConfigError("--mu needs exactly 3 values")
            spec = DiscreteDgpSpec(effects=tuple(args.mu), **kwargs)
        else:
            spec = DiscreteDgpSpec.preset(args.preset, **kwargs)
        sim = gen_discrete(spec)
    else:
        spec = ContinuousDgpSpec(
            n=args.n or 10_000, seed=seed, noise_sd=args.noise_sd, scale=args.scale
        )
        sim = gen_continuous(spec)
    frame = sim.frame.copy()
    frame["tau_hat"] = sim.tau_hat
    frame.to_csv(out / "data.csv", index=False)
    truth = dict(sim.truth)
    truth["seed"] = seed
    truth["n"] = len(frame)
    truth["true_tau"] = [float(v) for v in sim.tau_true]
    _write_json(out / "truth.json", truth)
    log.info("wrote %s and %s", out / "data.csv", out / "truth.json")
    return 0


def cmd_mine(args) -> int:
    cfg = resolve_config(args)
    out = _out_dir(args)
    _echo_config(cfg, out)
    dataset, _ = load_dataset(cfg)
    pool = _mined_pool(cfg, dataset)
    rows = [
        {
            "rule": str(rule),
            "length": rule.length,
            "support": int(pool.supports[i]),
            "support_rate": pool.supports[i] / dataset.n,
            "mean_tau": (
                pool.tau_sums[i] / pool.supports[i] if pool.supports[i] else ""
            ),
            "provenance": pool.provenance[i],
        }
        for i, rule in enumerate(pool.rules)
    ]
    pd.DataFrame(rows).to_csv(out / "pool.csv", index=False)
    log.info("mined %d rules -> %s", len(pool), out / "pool.csv")
    return 0


def cmd_search(args) -> int:
    cfg = resolve_config(args)
    out = _out_dir(args)
    _echo_config(cfg, out)
    dataset, _ = load_dataset(cfg)
    pool = _mined_pool(cfg, dataset)
    constraints = _build_constraints(cfg)
    objective_cfg = _build_objective(cfg)
    annealer_cfg = _build_annealer(cfg)
    best, chains = run_restarts(
        dataset, pool, annealer_cfg, constraints, objective_cfg,
        n_jobs=int(cfg["threads"]), record_trace=args.trace,
    )
    point = point_from_ruleset(
        best.ruleset, dataset, objective_cfg,
        alpha=objective_cfg.linear_weight
        if objective_cfg.kind == LINEAR
        else objective_cfg.alpha,
    )
    payload = {
        "rules": str(best.ruleset),
        "objective_kind": objective_cfg.kind,
        "alpha": objective_cfg.alpha,
        "objective": best.objective,
        "support_rate": point.support_rate,
        "effect": point.effect,
        "complexity": best.ruleset.complexity,
        "t0": best.t0,
        "seed": int(cfg["seed"]),
        "restarts": len(chains),
    }
    _write_json(out / "search.json", payload)
    if args.trace:
        records = [
            {
                "chain": c.seed,
                "iteration": r.iteration,
                "action": r.action,
                "neighborhood": r.neighborhood,
                "accepted": r.accepted,
                "objective": r.objective,
                "temperature": r.temperature,
                "n_rules": r.n_rules,
                "complexity": r.complexity,
                "rule_length": r.rule_length,
            }
            for c in chains
            for r in (c.trace or ())
        ]
        pd.DataFrame(records).to_csv(out / "trace.csv", index=False)
    log.info("best rule set: %s (F=%.6g)", best.ruleset, best.objective)
    return 0


def _sweep_grid(cfg):
    objective_cfg = _build_objective(cfg)
    if objective_cfg.kind == LINEAR:
        return objective_cfg, [float(v) for v in cfg["weight_grid"]]
    return objective_cfg, [float(v) for v in cfg["alpha_grid"]]


def _frontier_payload(result, objective_cfg, grid, cfg):
    return {
        "objective_kind": objective_cfg.kind,
        "effect_term": objective_cfg.effect_term_mode,
        "grid": list(grid),
        "seed": int(cfg["seed"]),
        "points": result.front.to_dicts(),
        "per_value": [
            {
                "value": r.alpha,
                "rules": None if r.failed else str(r.result.ruleset),
                "objective": None if r.failed else r.result.objective,
                "error": r.error,
            }
            for r in result.per_alpha
        ],
    }


def cmd_frontier(args) -> int:
    cfg = resolve_config(args)
    out = _out_dir(args)
    _echo_config(cfg, out)
    dataset, _ = load_dataset(cfg)
    pool = _mined_pool(cfg, dataset)
    constraints = _build_constraints(cfg)
    objective_cfg, grid = _sweep_grid(cfg)
    annealer_cfg = _build_annealer(cfg)
    result = sweep(
        dataset, pool, grid, annealer_cfg, constraints, objective_cfg,
        n_jobs=int(cfg["threads"]),
    )
    _write_json(
        out / "frontier.json", _frontier_payload(result, objective_cfg, grid, cfg)
    )
    pd.DataFrame(
        [
            {"support_rate": p.support_rate, "effect": p.effect, "split": "search"}
            for p in result.front
        ]
    ).to_csv(out / "frontier.csv", index=False)
    failed = [r for r in result.per_alpha if r.failed]
    for r in failed:
        log.warning("grid value %s failed: %s", r.alpha, r.error)
    log.info("front has %d points -> %s", len(result.front), out / "frontier.json")
    return 0


def cmd_infer(args) -> int:
    cfg = resolve_config(args)
    out = _out_dir(args)
    _echo_config(cfg, out)
    dataset, _ = load_dataset(cfg)
    if not dataset.has_outcome():
        raise DataError(
            "inference requires outcome and treatment columns "
            "(set outcome_column and treatment_column)"
        )
    plan = SplitPlan(
        train_fraction=float(cfg["split"]["train_fraction"]),
        seed=int(cfg["seed"]),
        stratify=bool(cfg["split"]["stratify"]),
    )
    train, test = split(dataset, plan)
    pool = _mined_pool(cfg, train)
    constraints = _build_constraints(cfg)
    objective_cfg, grid = _sweep_grid(cfg)
    annealer_cfg = _build_annealer(cfg)
    result = sweep(
        train, pool, grid, annealer_cfg, constraints, objective_cfg,
        n_jobs=int(cfg["threads"]),
    )
    front = result.front
    ranking = {
        r.point.fingerprint: r
        for r in power_rank(front, train, test.n, alpha_level=args.level,
                            sided=args.sided)
    }
    report = []
    plot_rows = []
    for point in front:
        try:
            train_test_stat = diff_in_means(
                point.ruleset, train, c=args.threshold, sided=args.sided
            )
            test_stat = diff_in_means(
                point.ruleset, test, c=args.threshold, sided=args.sided
            )
            test_effect = test_stat.estimate
            test_se = test_stat.std_error
            p_value = test_stat.p_value
            train_effect = train_test_stat.estimate
        except InsufficientDataError as exc:
            log.warning("skipping %s: %s", point.ruleset, exc)
            train_effect = test_effect = test_se = p_value = None
        row = ranking.get(point.fingerprint)
        report.append(
            {
                "rules": str(point.ruleset),
                "support_rate": point.support_rate,
                "train_effect": train_effect,
                "test_effect": test_effect,
                "test_se": test_se,
                "p_value": p_value,
                "power": None if row is None else row.power,
            }
        )
        test_cov = coverage_of_ruleset(point.ruleset, test)
        plot_rows.append(
            {"support_rate": point.support_rate, "effect": point.effect,
             "split": "train"}
        )
        if test_cov.popcount:
            plot_rows.append(
                {
                    "support_rate": test_cov.popcount / test.n,
                    "effect": float(test.tau[test_cov.bits].mean()),
                    "split": "test",
                }
            )
    pd.DataFrame(report).to_csv(out / "report.csv", index=False)
    pd.DataFrame(plot_rows).to_csv(out / "traintest.csv", index=False)
    payload = {
        "threshold": args.threshold,
        "sided": args.sided,
        "level": args.level,
        "train_n": train.n,
        "test_n": test.n,
        "report": report,
        "front": front.to_dicts(),
    }
    _write_json(out / "inference.json", payload)
    log.info("inference report for %d frontier points -> %s", len(front), out)
    return 0


def cmd_oracle(args) -> int:
    cfg = resolve_config(args)
    out = _out_dir(args)
    _echo_config(cfg, out)
    dataset, _ = load_dataset(cfg)
    pool = _mined_pool(cfg, dataset)
    constraints = _build_constraints(cfg)
    budget = EnumerationBudget(
        max_pool=args.max_pool,
        max_rules_per_set=args.max_rules_per_set,
        max_sets=args.max_sets,
    )
    if args.task == "front":
        front = exact_front(pool, dataset, constraints, budget)
        _write_json(out / "oracle_front.json", {"points": front.to_dicts()})
        log.info("exact front has %d points", len(front))
    else:
        objective_cfg, grid = _sweep_grid(cfg)
        rows = []
        for value in grid if args.full_grid else [None]:
            ocfg = objective_cfg
            if value is not None:
                ocfg = (
                    ocfg.with_linear_weight(value)
                    if ocfg.kind == LINEAR
                    else ocfg.with_alpha(value)
                )
            best, val = exact_argmax(pool, dataset, constraints, ocfg, budget)
            point = point_from_ruleset(best, dataset)
            rows.append(
                {
                    "value": ocfg.linear_weight if ocfg.kind == LINEAR else ocfg.alpha,
                    "rules": str(best),
                    "objective": val,
                    "support_rate": point.support_rate,
                    "effect": point.effect,
                }
            )
        _write_json(out / "oracle_argmax.json", {"results": rows})
    return 0


# ---------------------------------------------------------------------------
# wiring


def _add_common(p: argparse.ArgumentParser, with_data=True):
    p.add_argument("--out", default="rulefront-out", help="output directory")
    p.add_argument("--seed", type=int, default=None)
    if with_data:
        p.add_argument("--config", default=None, help="YAML config file")
        p.add_argument("--input", default=None, help="input CSV")
        p.add_argument("--tau-column", dest="tau_column", default=None)
        p.add_argument("--outcome-column", dest="outcome_column", default=None)
        p.add_argument("--treatment-column", dest="treatment_column", default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--l-max", dest="l_max", type=int, default=None)
        p.add_argument("--c-max", dest="c_max", type=int, default=None)
        p.add_argument("--min-support", dest="min_support", type=float, default=None)
        p.add_argument("--n-rules", dest="n_rules", type=int, default=None)
        p.add_argument("--n-iter", dest="n_iter", type=int, default=None)
        p.add_argument("--restarts", type=int, default=None)
        p.add_argument("--q", type=float, default=None)
        p.add_argument(
            "--objective", choices=["multiplicative", "linear"], default=None
        )
        p.add_argument(
            "--effect-term",
            dest="effect_term",
            choices=["normalized-mean", "paper-sum"],
            default=None,
        )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rulefront", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="generate synthetic input data")
    _add_common(p, with_data=False)
    p.add_argument("--dgp", choices=["discrete", "continuous"], required=True)
    p.add_argument("--preset", choices=["concave", "convex"], default="concave")
    p.add_argument("--mu", type=_float_list, default=None,
                   help="comma-separated effect magnitudes (discrete)")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--noise-sd", dest="noise_sd", type=float, default=0.0)
    p.add_argument("--scale", type=float, default=1.0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mine", help="list the candidate rule pool")
    _add_common(p)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("search", help="search at a single trade-off value")
    _add_common(p)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--trace", action="store_true", help="emit per-iteration trace CSV")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("frontier", help="sweep the trade-off and keep the front")
    _add_common(p)
    p.add_argument("--alpha-grid", dest="alpha_grid", type=_float_list, default=None)
    p.add_argument("--weight-grid", dest="weight_grid", type=_float_list, default=None)
    p.set_defaults(func=cmd_frontier)

    p = sub.add_parser("infer", help="split-sample inference and power ranking")
    _add_common(p)
    p.add_argument("--alpha-grid", dest="alpha_grid", type=_float_list, default=None)
    p.add_argument("--weight-grid", dest="weight_grid", type=_float_list, default=None)
    p.add_argument("--train-fraction", dest="train_fraction", type=float, default=None)
    p.add_argument("--threshold", type=float, default=0.0,
                   help="fixed threshold c for the test H0: effect = c")
    p.add_argument("--sided", choices=["two-sided", "greater", "less"],
                   default="two-sided")
    p.add_argument("--level", type=float, default=0.05)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("oracle", help="exhaustive reference on small inputs")
    _add_common(p)
    p.add_argument("--task", choices=["front", "argmax"], default="front")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--alpha-grid", dest="alpha_grid", type=_float_list, default=None)
    p.add_argument("--weight-grid", dest="weight_grid", type=_float_list, default=None)
    p.add_argument("--full-grid", dest="full_grid", action="store_true",
                   help="argmax at every grid value instead of the configured one")
    p.add_argument("--max-pool", dest="max_pool", type=int, default=64)
    p.add_argument("--max-rules-per-set", dest="max_rules_per_set", type=int,
                   default=6)
    p.add_argument("--max-sets", dest="max_sets", type=int, default=5_000_000)
    p.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(message)s"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("%s", exc)
        return 1
    except DataError as exc:
        log.error("%s", exc)
        return 2
    except (SearchError, EmptyPoolError, BudgetExceededError,
            InsufficientDataError) as exc:
        log.error("%s", exc)
        return 3
    except RuleFrontError as exc:  # residual package errors
        log.error("%s", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
