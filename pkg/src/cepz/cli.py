"""Command line entry point.

    cepz <estimate|select|train|evaluate|pipeline|synth> --config FILE
         [--seed N] [--out DIR] [--jobs N]

Exit codes: 0 success, 2 validation error, 3 empty selection,
4 convergence failure. On failure a single JSON line is written to stderr.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__, _accel
from .config import ConfigError, PipelineConfig, load_config
from .dataset import ColumnRoles, Dataset, DatasetError, clean, load_csv, save_csv, split_hash, split_indices
from .regress import evaluate, model_from_json, model_to_json, train_forest, train_svr
from .select import SelectionReport, rank_features, select_threshold, select_top
from .synth import GaussianCopulaSpec, RegressionSpec, sample_gaussian_copula, sample_regression

__all__ = ["main", "CliError", "cmd_estimate", "cmd_select", "cmd_train", "cmd_evaluate",
           "cmd_pipeline", "cmd_synth"]

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_EMPTY_SELECTION = 3
EXIT_NOT_CONVERGED = 4

REPORT_SCHEMA_VERSION = 1


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


def _say(msg: str) -> None:
    print(msg, flush=True)


class _Timer:
    def __init__(self):
        self.stages = {}

    @contextmanager
    def stage(self, name):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.stages[name] = self.stages.get(name, 0.0) + time.perf_counter() - t0


# -- shared steps ---------------------------------------------------------


def _load(cfg: PipelineConfig, timer: _Timer):
    with timer.stage("load"):
        raw = load_csv(cfg.input_path(), cfg.has_header)
        if not cfg.target:
            raise ConfigError("config key 'target' is required")
        roles = ColumnRoles.resolve(raw, cfg.target, cfg.features, cfg.ignored)
    with timer.stage("clean"):
        d, removed = clean(raw, cfg.clean_policy(), roles.used)
    _say(f"loaded {raw.row_count} rows, {len(roles.features)} candidate features; "
         f"removed {removed} rows")
    return d, roles, {"rows_loaded": raw.row_count, "rows_removed": removed}


def _rank(d: Dataset, roles: ColumnRoles, cfg: PipelineConfig, timer: _Timer) -> SelectionReport:
    with timer.stage("estimate"):
        report = rank_features(d, roles.target, roles.features, cfg.estimator_params(), cfg.jobs)
    _say(f"estimated MI for {len(report.entries)} features on {d.row_count} rows")
    return report


def _apply_selection(report: SelectionReport, cfg: PipelineConfig) -> SelectionReport:
    if cfg.selection == "top_m":
        if cfg.top_m > len(report.entries):
            raise CliError(EXIT_VALIDATION, "validation",
                           f"top_m={cfg.top_m} exceeds the {len(report.entries)} candidate features")
        return select_top(report, cfg.top_m)
    chosen = select_threshold(report, cfg.threshold)
    if not chosen.selected:
        _write_ranking(chosen, cfg)
        best = report.entries[0][1]
        raise CliError(EXIT_EMPTY_SELECTION, "empty_selection",
                       f"no feature reaches threshold {cfg.threshold} (best score {best:.6g} nats)")
    return chosen


def _write_ranking(report: SelectionReport, cfg: PipelineConfig) -> None:
    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    (out / "ranking.json").write_text(report.to_json(), encoding="utf-8")
    (out / "ranking.csv").write_text(report.to_csv(), encoding="utf-8")


def _split(d: Dataset, cfg: PipelineConfig, timer: _Timer):
    with timer.stage("split"):
        train_rows, test_rows = split_indices(d.row_count, cfg.train_fraction, cfg.seed)
    return d.take(train_rows), d.take(test_rows), split_hash(train_rows, test_rows)


def _fit(train: Dataset, features, cfg: PipelineConfig):
    X = train.matrix(features)
    y = train.column(cfg.target)
    if cfg.model == "forest":
        return train_forest(X, y, cfg.forest_params(), feature_names=features)
    return train_svr(X, y, cfg.svr_params(), feature_names=features)


def _model_summary(model, features, report) -> dict:
    doc = {"features": list(features), "eval": report.to_dict()}
    if hasattr(model, "converged"):
        doc["converged"] = model.converged
        doc["n_iter"] = model.n_iter
        doc["n_support"] = int(model.coef.shape[0])
    else:
        doc["importance"] = dict(zip(features, model.importance.tolist()))
    return doc


def _versions() -> dict:
    import numba
    import scipy

    return {
        "cepz": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
        "kernels": "numba" if _accel.use_numba() else "numpy",
    }


def _dump(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, allow_nan=False) + "\n", encoding="utf-8")


# -- commands -------------------------------------------------------------


def cmd_estimate(cfg: PipelineConfig) -> SelectionReport:
    """Rank all candidate features of the cleaned input by MI with the target."""
    timer = _Timer()
    d, roles, _ = _load(cfg, timer)
    report = _rank(d, roles, cfg, timer)
    _write_ranking(report, cfg)
    _say(f"wrote {cfg.out_dir() / 'ranking.json'}")
    return report


def cmd_select(cfg: PipelineConfig) -> SelectionReport:
    """Rank features and keep those passing the configured selection rule."""
    timer = _Timer()
    d, roles, _ = _load(cfg, timer)
    report = _apply_selection(_rank(d, roles, cfg, timer), cfg)
    _write_ranking(report, cfg)
    _say(f"selected {len(report.selected)} features: {', '.join(report.selected)}")
    return report


def _training_features(train: Dataset, roles: ColumnRoles, cfg: PipelineConfig, timer: _Timer):
    if cfg.train_features == "all":
        return list(roles.features), None
    report = _apply_selection(_rank(train, roles, cfg, timer), cfg)
    _write_ranking(report, cfg)
    return list(report.selected), report


def cmd_train(cfg: PipelineConfig):
    """Fit one model on the training split and write ``model.json``."""
    timer = _Timer()
    d, roles, _ = _load(cfg, timer)
    train, _test, _h = _split(d, cfg, timer)
    features, _ = _training_features(train, roles, cfg, timer)
    with timer.stage("train"):
        model = _fit(train, features, cfg)
    path = cfg.out_dir() / "model.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model_to_json(model), encoding="utf-8")
    _say(f"trained {cfg.model} on {len(features)} features; wrote {path}")
    if getattr(model, "converged", True) is False:
        raise CliError(EXIT_NOT_CONVERGED, "not_converged",
                       f"SVR solver stopped after {model.n_iter} iterations without convergence")
    return model


def cmd_evaluate(cfg: PipelineConfig):
    """Score ``model.json`` on the test split defined by the config."""
    timer = _Timer()
    path = cfg.out_dir() / "model.json"
    try:
        model = model_from_json(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(EXIT_VALIDATION, "validation", f"cannot read model {path}: {exc}") from exc
    if not model.feature_names:
        raise CliError(EXIT_VALIDATION, "validation", f"{path} does not record its feature names")
    d, _roles, _ = _load(cfg, timer)
    _train, test, _h = _split(d, cfg, timer)
    report = evaluate(model.predict(test.matrix(model.feature_names)), test.column(cfg.target))
    out = cfg.out_dir()
    (out / "eval_report.json").write_text(report.to_json(), encoding="utf-8")
    (out / "eval_report.csv").write_text(report.to_csv(), encoding="utf-8")
    _say(f"test rmse {report.rmse:.6g} on {report.overall.count} rows")
    return report


def cmd_pipeline(cfg: PipelineConfig) -> dict:
    """Estimate, select, then train and test on selected vs. all features.

    Scores are estimated on the training split only, so the test rows never
    influence which features are chosen. Both models share one split.
    """
    timer = _Timer()
    d, roles, data_info = _load(cfg, timer)
    train, test, shash = _split(d, cfg, timer)
    report = _apply_selection(_rank(train, roles, cfg, timer), cfg)
    _write_ranking(report, cfg)
    _say(f"selected {len(report.selected)} features: {', '.join(report.selected)}")

    y_test = test.column(cfg.target)
    results = {}
    models = {}
    for name, features in (("selected", list(report.selected)), ("all", list(roles.features))):
        with timer.stage(f"train_{name}"):
            model = _fit(train, features, cfg)
        with timer.stage(f"evaluate_{name}"):
            ev = evaluate(model.predict(test.matrix(features)), y_test)
        models[name] = model
        results[name] = _model_summary(model, features, ev)
        _say(f"{cfg.model} on {name} features ({len(features)}): test rmse {ev.rmse:.6g}")

    out = cfg.out_dir()
    (out / "model.json").write_text(model_to_json(models["selected"]), encoding="utf-8")
    (out / "model_all.json").write_text(model_to_json(models["all"]), encoding="utf-8")
    doc = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "run_report",
        "config": cfg.to_dict(),
        "versions": _versions(),
        "data": {
            **data_info,
            "rows_clean": d.row_count,
            "n_train": train.row_count,
            "n_test": test.row_count,
            "split_hash": shash,
        },
        "selection": report.to_dict(),
        "model_type": cfg.model,
        "models": results,
        "timings": {k: round(v, 6) for k, v in timer.stages.items()},
    }
    _dump(out / "run_report.json", doc)
    _say(f"wrote {out / 'run_report.json'}")
    stalled = [n for n, m in models.items() if getattr(m, "converged", True) is False]
    if stalled:
        raise CliError(EXIT_NOT_CONVERGED, "not_converged",
                       f"SVR solver did not converge for model(s): {', '.join(stalled)}")
    return doc


def cmd_synth(cfg: PipelineConfig) -> Path:
    """Write a seeded synthetic CSV (regression table or Gaussian copula sample)."""
    if cfg.synth_kind == "regression":
        spec = RegressionSpec(cfg.synth_form, cfg.synth_noise_features, cfg.synth_noise_sd,
                              cfg.synth_offset)
        d = sample_regression(cfg.synth_rows, cfg.seed, spec)
    else:
        spec = GaussianCopulaSpec(np.array(cfg.synth_correlation), cfg.synth_rows, cfg.seed,
                                  cfg.synth_marginals)
        d = sample_gaussian_copula(spec)
    path = cfg.resolve(cfg.synth_output) if cfg.synth_output else cfg.out_dir() / "synth.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    save_csv(d, path)
    _say(f"wrote {d.row_count} rows x {len(d.column_names)} columns to {path}")
    return path


COMMANDS = {
    "estimate": cmd_estimate,
    "select": cmd_select,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "pipeline": cmd_pipeline,
    "synth": cmd_synth,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cepz", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or name).strip().split("\n")[0])
        p.add_argument("--config", required=True, help="flat TOML config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="override the output directory")
        p.add_argument("--jobs", type=int, help="cap on parallel estimation threads")
    return parser


def _fail(code: int, kind: str, message: str) -> int:
    line = json.dumps({"error": kind, "exit_code": code, "message": " ".join(str(message).split())})
    print(line, file=sys.stderr, flush=True)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        # a command-line --out is relative to the working directory
        out = str(Path(args.out).resolve()) if args.out is not None else None
        cfg = load_config(args.config, seed=args.seed, out=out, jobs=args.jobs)
        COMMANDS[args.command](cfg)
    except CliError as exc:
        return _fail(exc.code, exc.kind, str(exc))
    except (ConfigError, DatasetError, ValueError) as exc:
        return _fail(EXIT_VALIDATION, "validation", str(exc))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
