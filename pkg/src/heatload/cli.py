"""Command-line entry point: ``heatload <command> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 run failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import __version__
from .dataset import DEFAULT_SPLIT_SEED, DataError, Sample, fit_scaler, split
from .harness import (
    MODEL_NAMES,
    REFERENCE_BEST_POPULATION,
    SweepPlan,
    load_dataset,
    rank_models,
    replay,
    run_experiment,
    run_sweep,
    timing_csv,
    timing_table,
)
from .metrics import MetricReport, read_metrics_csv
from .mlp import N_WEIGHTS, TrainedModel, predict, reference_bbo_predictor
from .optim import ALGORITHMS, ConfigError, TrainConfig, load_params

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUN = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _bounds(text: str) -> tuple[float, float]:
    try:
        low, high = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected LOW,HIGH such as -10,10") from None
    if not low < high:
        raise argparse.ArgumentTypeError("need LOW < HIGH")
    return low, high


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated integers") from None


def _common(p, data=True, out=True):
    if data:
        p.add_argument("--data", help="dataset CSV (default: $HEATLOAD_DATA or data/ENB2012_data.csv)")
        p.add_argument("--split-seed", type=int, default=DEFAULT_SPLIT_SEED)
    if out:
        p.add_argument("--out", help="output file or directory")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="heatload", description="Metaheuristic-trained MLPs for building heating load.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train one algorithm and score it on the split")
    p.add_argument("algorithm", choices=sorted(ALGORITHMS) + ["lm"])
    p.add_argument("--pop", type=int, help="population size (default: the reference best size for the algorithm)")
    p.add_argument("--iters", type=int, default=1000, help="iterations, or epochs for lm")
    p.add_argument("--seed", type=int, nargs="+", default=[0])
    p.add_argument("--bounds", type=_bounds, default=(-10.0, 10.0))
    p.add_argument("--params", help="INI file with per-algorithm knobs")
    p.add_argument("--workers", type=int, default=1)
    _common(p)

    p = sub.add_parser("sweep", help="population-size sweep from a JSON plan")
    p.add_argument("plan", nargs="?", help="plan JSON; flags below fill in a plan when omitted")
    p.add_argument("--algorithms", help="comma-separated subset of " + ",".join(sorted(ALGORITHMS)))
    p.add_argument("--pop", type=_int_list, help="comma-separated population sizes")
    p.add_argument("--iters", type=int)
    p.add_argument("--seed", type=int, nargs="+")
    p.add_argument("--bounds", type=_bounds)
    p.add_argument("--workers", type=int, default=1)
    _common(p)

    p = sub.add_parser("evaluate", help="score a model file on the train and test rows")
    p.add_argument("model")
    _common(p, out=False)

    p = sub.add_parser("rank", help="criterion scores and ranks from a metrics CSV or run JSON files")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), default="csv")

    p = sub.add_parser("time", help="median wall time per algorithm and population size")
    p.add_argument("plan")
    p.add_argument("--workers", type=int, default=1)
    _common(p)

    p = sub.add_parser("predict", help="heating load for one building")
    p.add_argument("model")
    p.add_argument("features", nargs="*", type=float, metavar="X",
                   help="RC SA WA RA OH orientation GA GAD")

    p = sub.add_parser("reference", help="write the reference BBO network as a model file")
    _common(p)
    return parser


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _metrics_rows(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _flat(name: str, seed, train: MetricReport, test: MetricReport) -> dict:
    row = {"model": name}
    if seed is not None:
        row["seed"] = seed
    for rep in (train, test):
        for key in ("rmse", "mae", "r2", "mape", "n"):
            row[f"{rep.phase}_{key}"] = getattr(rep, key)
    return row


def _cmd_train(args) -> int:
    dataset = load_dataset(args.data)
    params = load_params(args.params).get(args.algorithm, {}) if args.params else {}
    pop = args.pop or REFERENCE_BEST_POPULATION.get(args.algorithm, 2)
    out_dir = Path(args.out) if args.out else None
    rows = []
    for seed in args.seed:
        cfg = TrainConfig(pop, args.iters, args.bounds, seed, N_WEIGHTS, params, args.workers)
        exp = run_experiment(args.algorithm, cfg, dataset, args.split_seed)
        rows.append(_flat(exp.name, seed, exp.train, exp.test) | {"status": exp.result.status})
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)
            stem = f"{args.algorithm}-pop{pop}-seed{seed}"
            (out_dir / f"{stem}.model.json").write_text(exp.model.to_json(indent=2))
            (out_dir / f"{stem}.run.json").write_text(json.dumps(exp.to_dict(), indent=2))
            (out_dir / f"{stem}.curve.csv").write_text(exp.result.curve_csv())
    _emit(_metrics_rows(rows, args.format), None)
    return EXIT_OK


def _plan_from_args(args) -> SweepPlan:
    data = json.loads(Path(args.plan).read_text()) if args.plan else {}
    if args.algorithms:
        data["algorithms"] = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    if args.pop:
        data["population_sizes"] = args.pop
    if args.iters:
        data["iterations"] = args.iters
    if args.seed:
        data["seeds"] = args.seed
    if args.bounds:
        data["bounds"] = list(args.bounds)
    data.setdefault("split_seed", args.split_seed)
    if "algorithms" not in data:
        data["algorithms"] = sorted(ALGORITHMS)
    return SweepPlan.from_dict(data)


def _cmd_sweep(args) -> int:
    plan = _plan_from_args(args)
    dataset = load_dataset(args.data)
    report = run_sweep(plan, dataset, args.out, args.workers)
    if args.format == "csv":
        text = report.curves_csv()
    else:
        text = json.dumps({"best_sizes": report.best_sizes,
                           "failures": [{k: c[k] for k in ("algorithm", "population_size", "seed", "error")}
                                        for c in report.failures]}, indent=2)
    _emit(text, None)
    return EXIT_RUN if report.failures else EXIT_OK


def _load_model(path: str) -> TrainedModel:
    try:
        return TrainedModel.from_json(Path(path).read_text())
    except FileNotFoundError:
        raise DataError(f"model file not found: {path}") from None
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"invalid model file {path}: {exc}") from None


def _cmd_evaluate(args) -> int:
    model = _load_model(args.model)
    dataset = load_dataset(args.data)
    reps = replay(model, dataset, split(dataset, seed=args.split_seed))
    name = MODEL_NAMES.get(model.provenance.get("algorithm", ""), Path(args.model).stem)
    _emit(_metrics_rows([_flat(name, None, reps["train"], reps["test"])], args.format), None)
    return EXIT_OK


def _read_reports(paths: list[str]) -> dict:
    reports = {}
    for path in paths:
        text = Path(path).read_text()
        if path.endswith(".csv"):
            reports.update(read_metrics_csv(text))
            continue
        data = json.loads(text)
        entries = data["models"].values() if "models" in data else [data]
        for entry in entries:
            reports[entry["name"]] = {ph: MetricReport.from_dict(entry[ph]) for ph in ("train", "test")}
    return reports


def _cmd_rank(args) -> int:
    try:
        reports = _read_reports(args.inputs)
    except (OSError, KeyError, ValueError) as exc:
        raise DataError(f"cannot read metric reports: {exc}") from None
    table = rank_models(reports)
    _emit(table.to_csv() if args.format == "csv" else table.to_json(indent=2), args.out)
    return EXIT_OK


def _cmd_time(args) -> int:
    plan = SweepPlan.from_json(Path(args.plan).read_text())
    dataset = load_dataset(args.data)
    report = run_sweep(plan, dataset, None, args.workers)
    rows = timing_table(report)
    _emit(timing_csv(rows) if args.format == "csv" else json.dumps(rows, indent=2), args.out)
    return EXIT_RUN if report.failures else EXIT_OK


def _cmd_predict(args) -> int:
    if len(args.features) != 8:
        raise UsageError(f"predict needs 8 feature values, got {len(args.features)}")
    model = _load_model(args.model)
    sample = Sample.from_features(args.features)
    sample.check(require_target=False)
    print(f"{predict(model, sample):.4f}")
    return EXIT_OK


def _cmd_reference(args) -> int:
    dataset = load_dataset(args.data)
    parts = split(dataset, seed=args.split_seed)
    model = reference_bbo_predictor(fit_scaler(dataset.subset(parts.train_indices)))
    _emit(model.to_json(indent=2), args.out)
    return EXIT_OK


COMMANDS = {
    "train": _cmd_train,
    "sweep": _cmd_sweep,
    "evaluate": _cmd_evaluate,
    "rank": _cmd_rank,
    "time": _cmd_time,
    "predict": _cmd_predict,
    "reference": _cmd_reference,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"heatload: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"heatload: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:
        print(f"heatload: run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())
