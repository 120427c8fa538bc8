"""Command line front end.

Subcommands:

    ci               confidence interval for an estimator on a data CSV
    simulate         Monte Carlo coverage study, reported as CSV + JSON
    truth            cross-checked true risk of the built-in generator
    generate         draw a synthetic dataset CSV from the generator
    seed-experiment  endpoint spread across repeated replicate draws

Each subcommand accepts ``--config FILE`` (flat JSON); explicit flags win
over config entries.  File outputs are paired with a ``*.config.json``
sidecar holding the resolved, seed-bearing configuration, which is enough
to reproduce the output byte for byte (execution details like worker
count do not influence results and are not part of it).

Exit codes: 0 success, 2 data/schema/config error, 3 estimator failure
after retries.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .errors import (CheapsubError, ConfigError, DataError, EstimatorFailure,
                     InfluenceUnavailable)
from .estimators import (LogisticCoefficientEstimator, LongitudinalDataset,
                         LongitudinalRiskEstimator, MeanEstimator)
from .intervals import (ALL_METHODS, CSV_COLUMNS, METHOD_ASYMPTOTIC_IF,
                        METHOD_CHEAP_BOOTSTRAP, METHOD_CHEAP_SUBSAMPLING,
                        METHOD_JACKKNIFE_LIMIT, asymptotic_if_ci,
                        cheap_bootstrap_ci, cheap_subsampling_ci,
                        jackknife_limit_ci)
from .resampling import DEFAULT_ETA, ReplicationPlan, n_rows, run_replications
from .simstudy import (BOOTSTRAP_STREAM_OFFSET, ScenarioSpec, generate_dgm,
                       run_coverage_study, run_seed_experiment, truth_oracle)

_EXIT_DATA = 2
_EXIT_ESTIMATOR = 3


def _write_csv_rows(stream, rows):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerows(rows)


def _emit_text(text, out_path):
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)


def _write_sidecar(out_path, config):
    if out_path is None:
        return
    with open(str(out_path) + ".config.json", "w") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _csv_text(rows) -> str:
    import io
    buf = io.StringIO()
    _write_csv_rows(buf, rows)
    return buf.getvalue()


def _load_config_file(path, allowed: set, command: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    declared = cfg.pop("command", None)
    if declared is not None and declared != command:
        raise ConfigError(f"config file {path} is for command {declared!r}, "
                          f"not {command!r}")
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        raise ConfigError(f"unknown config field(s) {unknown}; "
                          f"allowed: {sorted(allowed)}")
    return cfg


def _resolve(defaults: dict, args, command: str) -> dict:
    """defaults <- config file <- explicitly passed flags.

    Config keys equal the flag destinations, so an output's sidecar feeds
    straight back through --config and reproduces the run.
    """
    cfg = dict(defaults)
    path = getattr(args, "config", None)
    if path:
        cfg.update(_load_config_file(path, set(defaults), command))
    for key in defaults:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _parse_grid(value):
    if isinstance(value, (list, tuple)):
        return list(value)
    return [v for v in str(value).split(",") if v.strip()]


def _parse_methods(value) -> tuple:
    if isinstance(value, (list, tuple)):
        return tuple(value)
    return tuple(s.strip() for s in str(value).split(",") if s.strip())


def _read_values_csv(path) -> np.ndarray:
    """Single-column CSV of reals; an optional non-numeric header is skipped."""
    values = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if len(row) != 1:
                raise DataError(f"{path}:{lineno}: expected a single column")
            field = row[0].strip()
            try:
                values.append(float(field))
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise DataError(f"{path}:{lineno}: not a number: {field!r}") from None
    if not values:
        raise DataError(f"{path}: no numeric rows")
    return np.asarray(values, dtype=np.float64)


def _read_table_csv(path, outcome: str):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if outcome not in header:
            raise DataError(f"{path}: outcome column {outcome!r} not in header "
                            f"{header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    arr = np.asarray(rows, dtype=np.float64)
    y_col = header.index(outcome)
    features = [h for h in header if h != outcome]
    X = np.column_stack([np.ones(len(arr))]
                        + [arr[:, header.index(f)] for f in features])
    return X, arr[:, y_col], features


def cmd_ci(args) -> int:
    defaults = {
        "input": None, "estimator": "mean", "method": METHOD_CHEAP_SUBSAMPLING,
        "m": None, "eta": None, "B": 25, "alpha": 0.05, "seed": 0,
        "regime": 1, "targeting": True, "outcome": "y", "coef": None,
        "max_retries": 5, "workers": None,
    }
    cfg = _resolve(defaults, args, "ci")
    if getattr(args, "no_targeting", False):
        cfg["targeting"] = False
    if cfg["input"] is None:
        raise ConfigError("an input CSV is required (positional argument or "
                          "'input' config field)")
    if cfg["method"] not in ALL_METHODS:
        raise ConfigError(f"unknown method {cfg['method']!r}; "
                          f"choose from {list(ALL_METHODS)}")

    if cfg["estimator"] == "mean":
        data = _read_values_csv(cfg["input"])
        estimator = MeanEstimator()
    elif cfg["estimator"] == "longitudinal":
        data = LongitudinalDataset.from_csv(cfg["input"])
        estimator = LongitudinalRiskEstimator(regime=int(cfg["regime"]),
                                              targeting=bool(cfg["targeting"]))
    elif cfg["estimator"] == "logistic":
        X, y, features = _read_table_csv(cfg["input"], cfg["outcome"])
        coef = cfg["coef"] if cfg["coef"] is not None else (features[0] if features
                                                            else None)
        if coef is None or coef not in features:
            raise ConfigError(f"target coefficient {coef!r} not among feature "
                              f"columns {features}")
        data = (X, y)
        estimator = LogisticCoefficientEstimator(coef_index=1 + features.index(coef))
    else:
        raise ConfigError(f"unknown estimator {cfg['estimator']!r}; choose "
                          "from ['mean', 'longitudinal', 'logistic']")

    n = n_rows(data)
    alpha = float(cfg["alpha"])
    full = estimator.fit(data)

    method = cfg["method"]
    diagnostics = {"retries": 0, "realized_B": 0}
    if method == METHOD_ASYMPTOTIC_IF:
        interval = asymptotic_if_ci(full, n, alpha)
        resolved_m = None
    else:
        with_replacement = method == METHOD_CHEAP_BOOTSTRAP
        # an explicit m wins over the eta rule, so a sidecar carrying the
        # resolved m reproduces the run even when eta is also present
        plan = ReplicationPlan(
            master_seed=int(cfg["seed"]), B=int(cfg["B"]),
            m=int(cfg["m"]) if cfg["m"] is not None else None,
            eta=float(cfg["eta"]) if cfg["eta"] is not None else None,
            with_replacement=with_replacement,
            max_retries=int(cfg["max_retries"]),
            workers=cfg["workers"],
            stream_offset=BOOTSTRAP_STREAM_OFFSET if with_replacement else 0)
        rep = run_replications(data, estimator, plan)
        diagnostics = {"retries": rep.total_retries, "realized_B": rep.B}
        resolved_m = rep.m
        if method == METHOD_CHEAP_SUBSAMPLING:
            interval = cheap_subsampling_ci(full.point, rep.estimates, rep.m, n,
                                            alpha)
        elif method == METHOD_JACKKNIFE_LIMIT:
            interval = jackknife_limit_ci(full.point, rep.estimates, rep.m, n,
                                          alpha)
        else:
            interval = cheap_bootstrap_ci(full.point, rep.estimates, alpha, n=n)

    resolved = {k: cfg[k] for k in defaults}
    resolved.pop("workers")
    resolved["m"] = resolved_m
    resolved["command"] = "ci"

    if args.json:
        payload = {"config": resolved, "n": n,
                   "interval": interval.to_json_dict(),
                   "diagnostics": diagnostics}
        _emit_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    else:
        _emit_text(_csv_text([list(CSV_COLUMNS), interval.to_csv_row()]), args.out)
    _write_sidecar(args.out, resolved)
    return 0


def cmd_generate(args) -> int:
    defaults = {"n": 100, "seed": 0}
    cfg = _resolve(defaults, args, "generate")
    data = generate_dgm(int(cfg["n"]), int(cfg["seed"]))
    if args.out is None:
        data.to_csv(sys.stdout)
    else:
        data.to_csv(args.out)
    resolved = {"command": "generate", "n": int(cfg["n"]), "seed": int(cfg["seed"])}
    _write_sidecar(args.out, resolved)
    return 0


def cmd_truth(args) -> int:
    defaults = {"regime": 1, "mc_draws": 10_000_000, "seed": 0}
    cfg = _resolve(defaults, args, "truth")
    result = truth_oracle(int(cfg["regime"]), mc_draws=int(cfg["mc_draws"]),
                          seed=int(cfg["seed"]))
    payload = result.to_json_dict()
    payload["config"] = {"command": "truth", "regime": int(cfg["regime"]),
                         "mc_draws": int(cfg["mc_draws"]),
                         "seed": int(cfg["seed"])}
    _emit_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    _write_sidecar(args.out, payload["config"])
    return 0


def cmd_simulate(args) -> int:
    defaults = {
        "n": 500, "eta": DEFAULT_ETA, "m": None, "B": 25, "alpha": 0.05,
        "n_sim": 1000, "methods": ",".join(ALL_METHODS), "seed": 0,
        "estimator": "longitudinal", "regime": 1, "targeting": True,
        "max_retries": 5, "workers": None,
    }
    cfg = _resolve(defaults, args, "simulate")
    if getattr(args, "no_targeting", False):
        cfg["targeting"] = False
    spec = ScenarioSpec(
        n=int(cfg["n"]), eta=float(cfg["eta"]),
        m=int(cfg["m"]) if cfg["m"] is not None else None,
        B=int(cfg["B"]), alpha=float(cfg["alpha"]), n_sim=int(cfg["n_sim"]),
        methods=_parse_methods(cfg["methods"]), master_seed=int(cfg["seed"]),
        estimator=cfg["estimator"], regime=int(cfg["regime"]),
        targeting=bool(cfg["targeting"]), max_retries=int(cfg["max_retries"]))

    report = run_coverage_study(spec, workers=cfg["workers"],
                                keep_raw=args.raw_out is not None)

    resolved = {k: cfg[k] for k in defaults}
    resolved.pop("workers")
    resolved["m"] = spec.subsample_size
    resolved["methods"] = list(spec.methods)
    resolved["command"] = "simulate"

    csv_text = _csv_text(report.to_csv_rows())
    _emit_text(csv_text, args.out)
    if args.out is not None:
        json_path = str(args.out) + ".json"
        with open(json_path, "w") as fh:
            json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    _write_sidecar(args.out, resolved)
    if args.raw_out is not None:
        raw_rows = [list(report.RAW_COLUMNS)]
        for r in report.raw:
            raw_rows.append([str(r[0]), r[1]] +
                            [repr(float(v)) for v in r[2:5]] +
                            [str(int(r[5])), repr(float(r[6])), str(r[7])])
        with open(args.raw_out, "w", newline="") as fh:
            _write_csv_rows(fh, raw_rows)
        _write_sidecar(args.raw_out, resolved)
    return 0


def cmd_seed_experiment(args) -> int:
    defaults = {
        "n": 500, "eta_grid": "0.5,0.632,0.8,0.9", "b_grid": "5,20,100,200",
        "n_seeds": 10, "seed": 0, "estimator": "longitudinal", "regime": 1,
        "targeting": True, "alpha": 0.05, "max_retries": 5, "workers": None,
    }
    cfg = _resolve(defaults, args, "seed-experiment")
    if getattr(args, "no_targeting", False):
        cfg["targeting"] = False
    eta_grid = tuple(float(v) for v in _parse_grid(cfg["eta_grid"]))
    b_grid = tuple(int(v) for v in _parse_grid(cfg["b_grid"]))
    result = run_seed_experiment(
        n=int(cfg["n"]), eta_grid=eta_grid, B_grid=b_grid,
        n_seeds=int(cfg["n_seeds"]), master_seed=int(cfg["seed"]),
        estimator=cfg["estimator"], regime=int(cfg["regime"]),
        targeting=bool(cfg["targeting"]), alpha=float(cfg["alpha"]),
        max_retries=int(cfg["max_retries"]), workers=cfg["workers"])

    detail = [list(result.DETAIL_COLUMNS)]
    for eta, B, run, lower, upper in result.rows:
        detail.append([repr(eta), str(B), str(run), repr(lower), repr(upper)])
    _emit_text(_csv_text(detail), args.out)

    resolved = {"command": "seed-experiment", "n": int(cfg["n"]),
                "eta_grid": list(eta_grid), "b_grid": list(b_grid),
                "n_seeds": int(cfg["n_seeds"]), "seed": int(cfg["seed"]),
                "estimator": cfg["estimator"], "regime": int(cfg["regime"]),
                "targeting": bool(cfg["targeting"]), "alpha": float(cfg["alpha"]),
                "max_retries": int(cfg["max_retries"])}
    if args.out is not None:
        summary = [list(result.SUMMARY_COLUMNS)]
        for eta, B, umin, umax, urange, usd in result.summary_rows():
            summary.append([repr(eta), str(B), repr(umin), repr(umax),
                            repr(urange), repr(usd)])
        summary_path = str(args.out) + ".summary.csv"
        with open(summary_path, "w", newline="") as fh:
            _write_csv_rows(fh, summary)
        _write_sidecar(summary_path, resolved)
    _write_sidecar(args.out, resolved)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cheapsub",
        description="Subsampling-based confidence intervals and the "
                    "simulation harness around them.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="flat JSON config file; flags win")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--seed", type=int, help="master seed (default 0)")
        p.add_argument("--workers", type=int,
                       help="worker processes (default: available cores)")

    p = sub.add_parser("ci", help="confidence interval on a data CSV")
    p.add_argument("input", nargs="?", help="input data CSV")
    p.add_argument("--estimator", choices=["mean", "longitudinal", "logistic"],
                   help="estimator to run (default mean)")
    p.add_argument("--method", choices=list(ALL_METHODS),
                   help="interval method (default cheap-subsampling)")
    p.add_argument("--m", type=int, help="subsample size")
    p.add_argument("--eta", type=float,
                   help="subsample proportion, m = floor(eta*n) (default 0.632)")
    p.add_argument("--B", type=int, help="replications (default 25)")
    p.add_argument("--alpha", type=float, help="level (default 0.05)")
    p.add_argument("--regime", type=int, choices=[0, 1],
                   help="sustained treatment level (longitudinal)")
    p.add_argument("--no-targeting", action="store_true",
                   help="skip the targeting step (longitudinal)")
    p.add_argument("--outcome", help="outcome column (logistic, default y)")
    p.add_argument("--coef", help="target coefficient column (logistic)")
    p.add_argument("--max-retries", type=int, dest="max_retries",
                   help="replicate retry budget (default 5)")
    p.add_argument("--json", action="store_true",
                   help="emit JSON instead of a CSV row")
    add_common(p)
    p.set_defaults(func=cmd_ci)

    p = sub.add_parser("generate", help="draw a synthetic dataset CSV")
    p.add_argument("--n", type=int, help="records to draw (default 100)")
    add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("truth", help="cross-checked true risk (JSON)")
    p.add_argument("--regime", type=int, choices=[0, 1],
                   help="sustained treatment level (default 1)")
    p.add_argument("--mc-draws", type=int, dest="mc_draws",
                   help="simulation draws for the cross-check (default 1e7)")
    add_common(p)
    p.set_defaults(func=cmd_truth)

    p = sub.add_parser("simulate", help="Monte Carlo coverage study")
    p.add_argument("--n", type=int, help="sample size per simulated dataset")
    p.add_argument("--eta", type=float, help="subsample proportion")
    p.add_argument("--m", type=int, help="subsample size (overrides eta)")
    p.add_argument("--B", type=int, help="replications per interval")
    p.add_argument("--alpha", type=float, help="level (default 0.05)")
    p.add_argument("--n-sim", type=int, dest="n_sim",
                   help="simulation repetitions (default 1000)")
    p.add_argument("--methods",
                   help="comma-separated subset of: " + ",".join(ALL_METHODS))
    p.add_argument("--estimator", choices=["longitudinal", "mean"],
                   help="estimator under study (default longitudinal)")
    p.add_argument("--regime", type=int, choices=[0, 1],
                   help="sustained treatment level (default 1)")
    p.add_argument("--no-targeting", action="store_true",
                   help="skip the targeting step (longitudinal)")
    p.add_argument("--max-retries", type=int, dest="max_retries",
                   help="replicate retry budget (default 5)")
    p.add_argument("--raw-out", dest="raw_out",
                   help="also write per-simulation interval rows to this CSV")
    add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("seed-experiment",
                       help="endpoint spread across repeated replicate draws")
    p.add_argument("--n", type=int, help="sample size of the fixed dataset")
    p.add_argument("--eta-grid", dest="eta_grid",
                   help="comma-separated subsample proportions")
    p.add_argument("--b-grid", dest="b_grid",
                   help="comma-separated replication counts")
    p.add_argument("--n-seeds", type=int, dest="n_seeds",
                   help="repeated runs per cell (default 10)")
    p.add_argument("--estimator", choices=["longitudinal", "mean"],
                   help="estimator under study (default longitudinal)")
    p.add_argument("--regime", type=int, choices=[0, 1],
                   help="sustained treatment level (default 1)")
    p.add_argument("--no-targeting", action="store_true",
                   help="skip the targeting step (longitudinal)")
    p.add_argument("--alpha", type=float, help="level (default 0.05)")
    p.add_argument("--max-retries", type=int, dest="max_retries",
                   help="replicate retry budget (default 5)")
    add_common(p)
    p.set_defaults(func=cmd_seed_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_DATA
    except EstimatorFailure as exc:
        print(f"estimator failure: {exc}", file=sys.stderr)
        return _EXIT_ESTIMATOR
    except InfluenceUnavailable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_DATA
    except CheapsubError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
