"""Command-line entry point: ``atfnb <command> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, evaluation, indexes, nb, pipeline
from .dataset import (DataError, DiscretizationMap, apply_discretization, chimerge_discretize,
                      impute_missing, imputation_values, load_csv, split, write_dataset_csv)
from .qsf import compare_qsf_sls, qsf
from .weighting import NAMED, SchemeSpec, resolve_scheme

EXIT_DATA = 2
EXIT_COMPUTE = 3

log = logging.getLogger("atfnb")


class ComputeError(RuntimeError):
    pass


def _beta(text: str):
    if text == "adaptive":
        return text
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError("beta must be 'adaptive' or a number in [0, 1]")
    return value


def _fraction(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError("fraction must lie in (0, 1)")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _class_column(text: str):
    return int(text) if text.lstrip("-").isdigit() else text


def _input_args(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--input", "-i", required=required, type=Path, help="CSV file with a header row")
    p.add_argument("--class-column", default="-1", type=_class_column,
                   help="class column name or index (default: last column)")
    p.add_argument("--missing", action="append", default=None,
                   help="missing-value marker; repeatable (default: empty cell and '?')")
    p.add_argument("--delimiter", default=",")


def _scheme_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algorithm", help=f"named algorithm, one of {', '.join(NAMED)}")
    p.add_argument("--scheme", choices=("uniform", "wnb", "cfw", "kl", "fusion"), default="fusion")
    p.add_argument("--ca", default="info_gain", choices=indexes.CA_INDEXES, help="class-attribute index")
    p.add_argument("--aa", default="pearson", choices=indexes.AA_INDEXES, help="attribute-attribute index")
    p.add_argument("--beta", default="adaptive", type=_beta, help="'adaptive' or a fixed value in [0, 1]")


def _spec(args) -> SchemeSpec:
    if args.algorithm:
        return resolve_scheme(args.algorithm)
    if args.scheme == "fusion":
        return SchemeSpec("fusion", args.ca, args.aa, args.beta)
    return SchemeSpec(args.scheme)


def _markers(args):
    return tuple(args.missing) if args.missing else ("", "?")


def _load(args, path=None, class_column="__args__", kinds=None):
    return load_csv(path or args.input, args.class_column if class_column == "__args__" else class_column,
                    _markers(args), args.delimiter, kinds)


def _prepare(raw, significance):
    fill = imputation_values(raw) if raw.has_missing() else {}
    raw = impute_missing(raw, fill or None)
    data, dmap = chimerge_discretize(raw, significance)
    return data, dmap, fill


def _config(args) -> dict:
    out = {}
    for k, v in vars(args).items():
        if k == "func":
            continue
        out[k] = str(v) if isinstance(v, Path) else v
    return out


def _write_json(doc: dict, path) -> None:
    text = json.dumps(doc, indent=2, default=_jsonable)
    if path is None or str(path) == "-":
        sys.stdout.write(text + "\n")
    else:
        Path(path).write_text(text + "\n")


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


# ---------------------------------------------------------------- commands

def cmd_discretize(args) -> int:
    raw = _load(args)
    data, dmap, _ = _prepare(raw, args.significance)
    out_csv = args.output or args.input.with_name(args.input.stem + ".disc.csv")
    out_map = args.map or Path(str(out_csv) + ".map.json")
    write_dataset_csv(data, out_csv, dmap.class_column)
    dmap.dump(out_map)
    print(json.dumps({"csv": str(out_csv), "map": str(out_map),
                      "bins": {a: dmap.bins(a) for a in dmap.cuts}}))
    return 0


def cmd_train(args) -> int:
    raw = _load(args)
    data, dmap, fill = _prepare(raw, args.significance)
    spec = _spec(args)
    t0 = time.perf_counter()
    try:
        fitted = pipeline.fit(data, spec)
        train_acc = fitted.accuracy(data)
    except DataError:
        raise
    except Exception as exc:
        raise ComputeError(str(exc)) from exc
    names = raw.names
    bundle = {
        "version": __version__,
        "config": _config(args),
        "imputation": {names[j]: v for j, v in fill.items()},
        "discretization": dmap.to_dict(),
        "frequency_model": fitted.model.to_dict(),
        **fitted.to_dict(),
        "training_accuracy": train_acc,
        "wall_time_ms": (time.perf_counter() - t0) * 1e3,
    }
    _write_json(bundle, args.output)
    if args.output and str(args.output) != "-":
        print(json.dumps({"model": str(args.output), "training_accuracy": train_acc, "beta": fitted.beta}))
    return 0


def cmd_predict(args) -> int:
    bundle = json.loads(Path(args.model).read_text())
    dmap = DiscretizationMap.from_dict(bundle["discretization"])
    model = nb.FrequencyModel.from_dict(bundle["frequency_model"])
    weights = np.asarray(bundle["weights"], dtype=float)
    with open(args.input, newline="") as fh:
        header = [h.strip() for h in next(csv.reader(fh, delimiter=args.delimiter), [])]
    labeled = dmap.class_column in header
    kinds = {a: ("numeric" if a in dmap.cuts else "categorical") for a in dmap.attributes}
    raw = _load(args, class_column=dmap.class_column if labeled else None, kinds=kinds)
    fill = bundle.get("imputation") or {}
    if raw.has_missing():
        names = raw.names
        raw = impute_missing(raw, {names.index(k): v for k, v in fill.items() if k in names})
        if raw.has_missing():
            raise DataError("input has missing values in columns that were complete at training time")
    data = apply_discretization(raw, dmap)
    pred = nb.predict_batch(model, weights, data.X)
    out = args.output or args.input.with_name(args.input.stem + ".pred.csv")
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "predicted"] + (["actual"] if labeled else []))
        for i, p in enumerate(pred):
            w.writerow([i, model.classes[p]] + ([data.classes[data.y[i]]] if labeled else []))
    result = {"predictions": str(out), "n": int(len(pred))}
    if labeled:
        result["accuracy"] = float(np.mean(pred == data.y))
    print(json.dumps(result))
    return 0


def _algorithms(names):
    return [resolve_scheme(n) for n in names]


def _fixture(text: str) -> Path:
    path = Path(text)
    if not path.exists() and text in ("table5", "table9", "table2_meta"):
        path = evaluation.fixture_path(text)
    return path


def cmd_benchmark(args) -> int:
    t0 = time.perf_counter()
    doc = {"version": __version__, "config": _config(args)}
    if args.from_fixture:
        means, algorithms = evaluation.load_fixture(_fixture(args.from_fixture))
        if args.algorithms:
            algorithms = args.algorithms
        report = evaluation.summarize(means, algorithms=algorithms, reference=args.reference,
                                      alpha=args.alpha, wilcoxon_crit=args.critical)
        failures = {}
    else:
        if not args.datasets:
            raise DataError("give --datasets or --from-fixture")
        datasets = [(Path(p).stem, _load(args, path=p)) for p in args.datasets]
        specs = _algorithms(args.algorithms or list(evaluation.DEFAULT_ALGORITHMS))
        run = evaluation.run_benchmark(datasets, specs, args.repeats, args.seed, args.train_fraction,
                                       args.significance, args.jobs)
        failures = run.failures
        if not run.records:
            raise ComputeError(f"every dataset failed: {failures}")
        report = evaluation.summarize(records=run.records, algorithms=[s.label for s in specs],
                                      reference=args.reference, alpha=args.alpha,
                                      train_frac=args.train_fraction, wilcoxon_crit=args.critical)
        doc["records"] = [r.to_dict() for r in run.records]
        if args.records:
            with open(args.records, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["dataset", "algorithm", "run_index", "seed", "accuracy", "beta_lo", "beta_hi"])
                for r in run.records:
                    lo, hi = r.beta_interval or ("", "")
                    w.writerow([r.dataset, r.algorithm, r.run_index, r.seed, repr(r.accuracy), lo, hi])
    if args.meta and args.reference in report.algorithms:
        meta = evaluation.load_meta(_fixture(args.meta))
        report.buckets = evaluation.bucket_analysis(report.means, meta, args.reference,
                                                    [a for a in evaluation.COMPARED if a in report.algorithms])
    doc["report"] = report.to_dict()
    doc["failures"] = failures
    doc["wall_time_ms"] = (time.perf_counter() - t0) * 1e3
    if args.format == "table":
        text = evaluation.render_text(report)
        if args.output:
            Path(args.output).write_text(text)
        else:
            sys.stdout.write(text)
    else:
        _write_json(doc, args.output)
    return 0


def cmd_compare(args) -> int:
    raw = _load(args)
    data, _, _ = _prepare(raw, args.significance)
    if args.train_fraction:
        data, _, _ = split(data, args.train_fraction, args.seed)
    ca = indexes.class_attribute_index(data, args.ca)
    aa = indexes.attribute_attribute_index(data, args.aa)
    result = compare_qsf_sls(data, ca, aa, args.step)
    _write_json({"version": __version__, "config": _config(args), **result}, args.output)
    return 0


def cmd_qsf(args) -> int:
    raw = _load(args)
    data, _, _ = _prepare(raw, args.significance)
    if args.train_fraction:
        data, _, _ = split(data, args.train_fraction, args.seed)
    t0 = time.perf_counter()
    ca = indexes.class_attribute_index(data, args.ca)
    aa = indexes.attribute_attribute_index(data, args.aa)
    result = qsf(data, ca, aa)
    ms = (time.perf_counter() - t0) * 1e3
    doc = {"version": __version__, "config": _config(args),
           **result.to_dict(with_intervals=args.dump_intervals), "wall_time_ms": ms}
    if args.dump_indexes:
        doc["indexes"] = {
            "ca": ca.to_dict(),
            "aa": aa.to_dict(),
            "ca_raw": {"name": args.ca, "values": indexes.class_attribute_values(data, args.ca).tolist()},
            "aa_pairs": {"name": args.aa, "matrix": indexes.pair_matrix(data, args.aa).tolist()},
        }
    _write_json(doc, args.output)
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="atfnb", description="Adaptive two-index fusion weighted naive Bayes")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discretize", help="impute and ChiMerge-discretize a CSV")
    _input_args(p)
    p.add_argument("--significance", type=float, default=0.05)
    p.add_argument("--output", "-o", type=Path)
    p.add_argument("--map", type=Path, help="where to write the discretization map JSON")
    p.set_defaults(func=cmd_discretize)

    p = sub.add_parser("train", help="fit a weighted naive Bayes model bundle")
    _input_args(p)
    _scheme_args(p)
    p.add_argument("--significance", type=float, default=0.05)
    p.add_argument("--output", "-o", type=Path, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict with a model bundle")
    p.add_argument("--model", "-m", required=True, type=Path)
    _input_args(p)
    p.add_argument("--output", "-o", type=Path)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("benchmark", help="repeated-split benchmark or fixture statistics")
    p.add_argument("--datasets", nargs="*", type=Path, default=[])
    p.add_argument("--class-column", default="-1", type=_class_column)
    p.add_argument("--missing", action="append", default=None)
    p.add_argument("--delimiter", default=",")
    p.add_argument("--from-fixture", help="accuracy table CSV, or 'table5' / 'table9' for the bundled ones")
    p.add_argument("--meta", help="dataset metadata CSV (or 'table2_meta') for the bucket analysis")
    p.add_argument("--algorithms", nargs="*", default=None)
    p.add_argument("--reference", default="ATFNB")
    p.add_argument("--repeats", type=_positive, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-fraction", type=_fraction, default=0.7)
    p.add_argument("--significance", type=float, default=0.05)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--critical", type=float, default=None, help="override the Wilcoxon critical value")
    p.add_argument("--jobs", type=_positive, default=1)
    p.add_argument("--format", choices=("json", "table"), default="json")
    p.add_argument("--records", type=Path, help="also write per-run records as CSV")
    p.add_argument("--output", "-o", type=Path)
    p.set_defaults(func=cmd_benchmark)

    for name, func, helptext in (("compare-qsf-sls", cmd_compare, "time QSF against the grid search"),
                                 ("qsf", cmd_qsf, "inspect the inferred switching-factor interval")):
        p = sub.add_parser(name, help=helptext)
        _input_args(p)
        p.add_argument("--ca", default="info_gain", choices=indexes.CA_INDEXES)
        p.add_argument("--aa", default="pearson", choices=indexes.AA_INDEXES)
        p.add_argument("--significance", type=float, default=0.05)
        p.add_argument("--train-fraction", type=_fraction, default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--output", "-o", type=Path)
        if name == "compare-qsf-sls":
            p.add_argument("--step", type=float, default=0.01)
        else:
            p.add_argument("--dump-indexes", action="store_true")
            p.add_argument("--dump-intervals", action="store_true")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DataError, KeyError, OSError) as exc:
        print(f"atfnb: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ComputeError, ValueError, ArithmeticError) as exc:
        print(f"atfnb: computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
