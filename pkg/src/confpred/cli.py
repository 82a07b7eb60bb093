"""Command-line front end.

Every subcommand reads its settings from flags, optionally on top of a JSON
config file (``--config``; flags win), runs one pipeline and writes CSV.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from functools import partial
from pathlib import Path

import numpy as np

from . import bayes
from .conformal import (
    KnnConformalClassifier,
    SmoothingTape,
    TransductiveClassifier,
    prediction_set,
    summarize,
)
from .core import ClassAlphabet, DataError, Dataset, NumericalError, check_epsilons
from .icp import (
    icp_fit,
    icp_p_table,
    icp_predict,
    kernel_ridge_learner,
    nearest_neighbour_learner,
)
from .io import CsvSchema, _to_dataset, emit_curves, read_table, write_table
from .kernels import Linear, parse_kernel
from .nonconformity import KnnConfig, RidgeConfig, knn_scores
from .protocol import calibration_report, parse_teacher, run_batch, run_online
from .rrcm import rrcm_predict
from .synthetic import gaussian_classes

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

COMMANDS = ("classify", "regress", "online", "batch", "icp", "bayes-compare")

DEFAULTS = {
    "data": None,
    "test": None,
    "measure": None,
    "k": 1,
    "ridge_a": 1.0,
    "kernel": "linear",
    "eps": [0.2, 0.05, 0.01],
    "smoothed": False,
    "seed": 0,
    "teacher": "immediate",
    "split_m": None,
    "out": None,
    "alphabet": None,
    "synthetic": None,
    "a_assumed": [1.0, 1000.0, 10000.0],
    "trials": 10,
    "train_size": 100,
    "test_size": 100,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="confpred", description="Conformal prediction experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file with default settings")
        p.add_argument("--data", help="training (or stream) CSV")
        p.add_argument("--test", help="test CSV; the label column may be absent")
        p.add_argument("--measure", choices=("knn", "ridge"))
        p.add_argument("--k", type=int)
        p.add_argument("--ridge-a", type=float, dest="ridge_a")
        p.add_argument("--kernel", help="linear | poly:DEGREE[:OFFSET] | rbf:GAMMA")
        p.add_argument("--eps", type=_floats, help="comma-separated significance levels")
        p.add_argument("--smoothed", action="store_true", default=None)
        p.add_argument("--seed", type=int)
        p.add_argument("--teacher", help="immediate | lazy:Q | slow:D | batch:L | explicit:N1,N2,...")
        p.add_argument("--split-m", type=int, dest="split_m")
        p.add_argument("--out", help="output CSV (a directory for bayes-compare)")
        p.add_argument("--alphabet", help="comma-separated class labels, in order")
        p.add_argument("--synthetic", type=int, help="use N synthetic examples instead of --data")
        p.add_argument("--a-assumed", type=_floats, dest="a_assumed")
        p.add_argument("--trials", type=int)
        p.add_argument("--train-size", type=int, dest="train_size")
        p.add_argument("--test-size", type=int, dest="test_size")
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge built-in defaults, the config file and explicit flags (in that order)."""
    settings = dict(DEFAULTS)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise DataError(f"cannot read config {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise DataError(f"config {args.config} is not valid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError(f"config {args.config} must hold a JSON object")
        for key, value in loaded.items():
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise UsageError(f"unknown config key {key!r}")
            settings[key] = value
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    settings["command"] = args.command
    for key in ("eps", "a_assumed"):
        if isinstance(settings[key], (int, float)):
            settings[key] = [settings[key]]
    if isinstance(settings["alphabet"], str):
        settings["alphabet"] = [s.strip() for s in settings["alphabet"].split(",") if s.strip()]
    try:
        settings["eps"] = list(check_epsilons(settings["eps"]))
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    return settings


# data loading -------------------------------------------------------------------


def _require(settings, key):
    if settings[key] is None:
        raise UsageError(f"--{key.replace('_', '-')} is required for {settings['command']}")
    return settings[key]


def _load_pair(settings, label_kind: str):
    """Training dataset, test objects, and test labels (None if the file has none)."""
    schema = CsvSchema(label_kind=label_kind)
    X_tr, lab_tr, features, label_col = read_table(_require(settings, "data"), schema)
    X_te, lab_te, _, _ = read_table(
        _require(settings, "test"),
        CsvSchema(label_kind, feature_columns=tuple(features), label_column=label_col),
        require_label=False,
    )
    alphabet = None
    if label_kind == "class":
        alphabet = settings["alphabet"] or sorted(
            {v for _, v in lab_tr} | {v for _, v in (lab_te or [])}
        )
    train = _to_dataset(X_tr, lab_tr, schema, settings["data"], alphabet)
    y_test = None
    if lab_te is not None:
        y_test = _to_dataset(X_te, lab_te, schema, settings["test"], alphabet).labels
    return train, X_te, y_test


def _load_stream(settings) -> Dataset:
    if settings["synthetic"] is not None:
        if settings["synthetic"] < 1:
            raise UsageError("--synthetic needs a positive size")
        return gaussian_classes(settings["synthetic"], seed=settings["seed"])
    schema = CsvSchema("class", alphabet=tuple(settings["alphabet"]) if settings["alphabet"] else None)
    X, labels, _, _ = read_table(_require(settings, "data"), schema)
    return _to_dataset(X, labels, schema, settings["data"])


def _kernel(settings):
    try:
        return parse_kernel(settings["kernel"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _knn_cfg(settings) -> KnnConfig:
    return KnnConfig(int(settings["k"]), _kernel(settings))


def _ridge_cfg(settings) -> RidgeConfig:
    kernel = _kernel(settings)
    # a linear kernel is the primal problem; solve it in feature space
    return RidgeConfig(float(settings["ridge_a"]), None if isinstance(kernel, Linear) else kernel)


def _eps_tag(e: float) -> str:
    return f"{e:g}"


def _knn_predictor(settings, alphabet: ClassAlphabet, dim: int):
    tape = SmoothingTape(settings["seed"]) if settings["smoothed"] else None
    return KnnConformalClassifier(_knn_cfg(settings), alphabet, dim, settings["smoothed"], tape)


# commands -----------------------------------------------------------------------


def cmd_classify(settings) -> str:
    train, X_test, y_test = _load_pair(settings, "class")
    eps = settings["eps"]
    alphabet = train.label_space
    if (settings["measure"] or "knn") == "knn":
        predictor = _knn_predictor(settings, alphabet, train.dim)
    else:
        raise UsageError("classify supports --measure knn only")
    for ex in train:
        predictor.learn(ex.object, ex.label)
    cols: dict[str, list] = {"row": list(range(1, len(X_test) + 1))}
    for Y in alphabet:
        cols[f"p_{Y}"] = []
    cols.update(prediction=[], confidence=[], credibility=[])
    for e in eps:
        cols[f"set_eps={_eps_tag(e)}"] = []
    errors = np.zeros(len(eps))
    for j, x in enumerate(X_test):
        table = predictor.p_values(x, index=len(train) + j)
        for Y in alphabet:
            cols[f"p_{Y}"].append(table[Y])
        s = summarize(table)
        cols["prediction"].append(s.prediction)
        cols["confidence"].append(s.confidence)
        cols["credibility"].append(s.credibility)
        for i, e in enumerate(eps):
            gamma = prediction_set(table, e)
            cols[f"set_eps={_eps_tag(e)}"].append("|".join(map(str, gamma)))
            if y_test is not None:
                errors[i] += y_test[j] not in gamma
    if y_test is not None:
        cols["true_label"] = list(y_test)
    out = _require(settings, "out")
    write_table(cols, out)
    msg = f"classify: {len(X_test)} test objects -> {out}"
    if y_test is not None and len(X_test):
        rates = ", ".join(f"eps={_eps_tag(e)}: err {errors[i] / len(X_test):.4f}" for i, e in enumerate(eps))
        msg += f"; {rates}"
    return msg


def cmd_regress(settings) -> str:
    train, X_test, y_test = _load_pair(settings, "real")
    eps = settings["eps"]
    cfg = _ridge_cfg(settings)
    cols: dict[str, list] = {"row": list(range(1, len(X_test) + 1))}
    for e in eps:
        cols[f"lower_eps={_eps_tag(e)}"] = []
        cols[f"upper_eps={_eps_tag(e)}"] = []
    covered = np.zeros(len(eps))
    for j, x in enumerate(X_test):
        preds = rrcm_predict(train, x, cfg, eps)
        for i, (e, pred) in enumerate(zip(eps, preds)):
            lo, hi = pred.hull if pred.hull is not None else (float("nan"), float("nan"))
            cols[f"lower_eps={_eps_tag(e)}"].append(lo)
            cols[f"upper_eps={_eps_tag(e)}"].append(hi)
            if y_test is not None:
                covered[i] += pred.hull is not None and lo <= y_test[j] <= hi
    if y_test is not None:
        cols["true_label"] = list(y_test)
    out = _require(settings, "out")
    write_table(cols, out)
    msg = f"regress: {len(X_test)} test objects -> {out}"
    if y_test is not None and len(X_test):
        msg += "; " + ", ".join(
            f"eps={_eps_tag(e)}: coverage {covered[i] / len(X_test):.4f}" for i, e in enumerate(eps)
        )
    return msg


def _ledger_summary(name, ledger, eps) -> str:
    if ledger.n == 0:
        return f"{name}: no predictions"
    parts = []
    for e in eps:
        r = calibration_report(ledger, e)
        parts.append(
            f"eps={_eps_tag(e)}: err {r.error_rate:.4f} mult {r.multiple_rate:.4f} emp {r.empty_rate:.4f}"
        )
    return f"{name}: {ledger.n} predictions; " + ", ".join(parts)


def cmd_online(settings) -> str:
    stream = _load_stream(settings)
    try:
        schedule = parse_teacher(settings["teacher"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    predictor = _knn_predictor(settings, stream.label_space, stream.dim)
    ledger = run_online(stream, predictor, settings["eps"], schedule)
    out = _require(settings, "out")
    if ledger.n:
        emit_curves(ledger.series(), out)
    return _ledger_summary("online", ledger, settings["eps"]) + f" -> {out}"


def cmd_batch(settings) -> str:
    if settings["synthetic"] is not None:
        stream = _load_stream(settings)
        l = settings["split_m"] if settings["split_m"] is not None else len(stream) // 2
        if not 0 <= l <= len(stream):
            raise UsageError("--split-m must lie between 0 and the stream size")
        train, test = stream.head(l), stream.tail(l)
    else:
        train, X_test, y_test = _load_pair(settings, "class")
        if y_test is None:
            raise DataError(f"{settings['test']}: batch evaluation needs test labels")
        test = Dataset(X_test, y_test, train.label_space, dim=train.dim)
    predictor = _knn_predictor(settings, train.label_space, train.dim)
    ledger = run_batch(train, test, predictor, settings["eps"])
    out = _require(settings, "out")
    if ledger.n:
        emit_curves(ledger.series(), out)
    return _ledger_summary("batch", ledger, settings["eps"]) + f" -> {out}"


def cmd_icp(settings) -> str:
    measure = settings["measure"] or "ridge"
    eps = settings["eps"]
    if measure == "ridge":
        train, X_test, y_test = _load_pair(settings, "real")
        model = icp_fit(train, settings["split_m"], kernel_ridge_learner(_ridge_cfg(settings)), "absolute")
    else:
        train, X_test, y_test = _load_pair(settings, "class")
        model = icp_fit(train, settings["split_m"], nearest_neighbour_learner(_kernel(settings)), "zero_one")
    cols: dict[str, list] = {"row": list(range(1, len(X_test) + 1)), "rule_prediction": []}
    if measure == "knn":
        for Y in train.label_space:
            cols[f"p_{Y}"] = []
    for e in eps:
        if measure == "ridge":
            cols[f"lower_eps={_eps_tag(e)}"] = []
            cols[f"upper_eps={_eps_tag(e)}"] = []
        else:
            cols[f"set_eps={_eps_tag(e)}"] = []
    misses = np.zeros(len(eps))
    for j, x in enumerate(X_test):
        cols["rule_prediction"].append(model.predict_label(x))
        if measure == "knn":
            table = icp_p_table(model, x)
            for Y in train.label_space:
                cols[f"p_{Y}"].append(table[Y])
        for i, e in enumerate(eps):
            gamma = icp_predict(model, x, e)
            if measure == "ridge":
                (lo, hi), = gamma.intervals
                cols[f"lower_eps={_eps_tag(e)}"].append(lo)
                cols[f"upper_eps={_eps_tag(e)}"].append(hi)
            else:
                cols[f"set_eps={_eps_tag(e)}"].append("|".join(map(str, gamma)))
            if y_test is not None:
                misses[i] += y_test[j] not in gamma
    if y_test is not None:
        cols["true_label"] = list(y_test)
    out = _require(settings, "out")
    write_table(cols, out)
    msg = f"icp: proper training {model.m}, calibration {model.n_calibration}, {len(X_test)} test objects -> {out}"
    if y_test is not None and len(X_test):
        msg += "; " + ", ".join(
            f"eps={_eps_tag(e)}: err {misses[i] / len(X_test):.4f}" for i, e in enumerate(eps)
        )
    return msg


def cmd_bayes_compare(settings) -> str:
    try:
        grid = bayes.ExperimentGrid(
            trials=int(settings["trials"]),
            train_size=int(settings["train_size"]),
            test_size=int(settings["test_size"]),
            a_values=tuple(settings["a_assumed"]),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    result = bayes.run_comparison(grid, bayes.LinearModelSpec(), settings["seed"])
    out = Path(_require(settings, "out"))
    tables = result.curve_tables()
    for stem, cols in tables.items():
        emit_curves(cols, out / f"{stem}.csv")
    i90 = int(np.argmin(np.abs(result.levels - 0.9)))
    parts = [
        f"a={a:g}: rrcm miss {result.rrcm[a].miss[i90]:.3f} width {result.rrcm[a].width[i90]:.3f}, "
        f"bayes miss {result.bayes[a].miss[i90]:.3f} width {result.bayes[a].width[i90]:.3f}"
        for a in grid.a_values
    ]
    return (
        f"bayes-compare: {result.n_predictions} predictions per a at level "
        f"{result.levels[i90]:.3f}; " + "; ".join(parts) + f" -> {out}"
    )


HANDLERS = {
    "classify": cmd_classify,
    "regress": cmd_regress,
    "online": cmd_online,
    "batch": cmd_batch,
    "icp": cmd_icp,
    "bayes-compare": cmd_bayes_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = resolve_config(args)
        print(HANDLERS[settings["command"]](settings))
    except UsageError as exc:
        print(f"confpred {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"confpred {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"confpred {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"confpred {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
