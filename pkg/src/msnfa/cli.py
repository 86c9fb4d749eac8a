"""Command-line entry point: fit / simulate / score / se / eval."""

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .ecm import FitConfig, default_d_floor, factor_scores
from .errors import AllStartsFailed, DataError, MissingColumn, MSNFAError, NumericalError
from .initialization import InitStrategy, multi_start_fit
from .io import (
    apply_standardization,
    load_csv,
    read_model_file,
    save_model,
    standardization_from_document,
    standardize,
    to_original_units,
)
from .model import Family, mixture_sample, param_count
from .inference import se_report
from .selection import adjusted_rand_index, classification_table, correct_classification_rate, criteria

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3
CRITERIA_COLUMNS = ["g", "q", "family", "loglik", "m", "BIC", "ICL", "AWE", "ENT", "ARI", "CCR"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _range(text):
    try:
        parts = [int(t) for t in text.split(":")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A or A:B, got {text!r}") from None
    if len(parts) == 1:
        parts *= 2
    if len(parts) != 2 or parts[0] < 1 or parts[1] < parts[0]:
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    return list(range(parts[0], parts[1] + 1))


def _families(text):
    if text == "both":
        return [Family.MFA, Family.MSNFA]
    try:
        return [Family(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown family {text!r}") from None


def _drop_list(values):
    out = []
    for v in values or []:
        out += [s for s in v.split(",") if s]
    return out


def _warn(msg):
    print(f"warning: {msg}", file=sys.stderr)


def build_parser():
    ap = _Parser(prog="msnfa", description="Mixtures of skew-normal factor analyzers")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    f = sub.add_parser("fit", help="fit a grid of (g, q) models")
    f.add_argument("--data", required=True)
    f.add_argument("--g", type=_range, required=True)
    f.add_argument("--q", type=_range, required=True)
    f.add_argument("--family", type=_families, default=[Family.MSNFA])
    f.add_argument("--standardize", action="store_true")
    f.add_argument("--starts", type=int, default=10)
    f.add_argument("--tol", type=float, default=1e-6)
    f.add_argument("--max-iter", type=int, default=5000)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out", help="best model (JSON)")
    f.add_argument("--assign", help="MAP labels and posteriors (CSV)")
    f.add_argument("--criteria", help="criteria table (TSV)")
    f.add_argument("--select", choices=["bic", "icl", "awe"], default="bic")
    f.add_argument("--label-column")
    f.add_argument("--drop", action="append", help="column(s) to ignore, comma separated")
    f.add_argument("--jobs", type=int, default=1)
    f.add_argument("--fa-method", choices=["pca", "ml"], default="pca")
    f.add_argument("--kmeans-restarts", type=int, default=5)
    f.add_argument("--original-units", action="store_true",
                   help="store the model mapped back to unstandardized columns")

    s = sub.add_parser("simulate", help="draw from a saved model")
    s.add_argument("--model", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    sc = sub.add_parser("score", help="factor scores")
    sc.add_argument("--model", required=True)
    sc.add_argument("--data", required=True)
    sc.add_argument("--out", required=True)
    sc.add_argument("--posterior-weights", action="store_true")
    sc.add_argument("--label-column")
    sc.add_argument("--drop", action="append")

    se = sub.add_parser("se", help="standard errors from the observed information")
    se.add_argument("--model", required=True)
    se.add_argument("--data", required=True)
    se.add_argument("--eta", type=float, default=1e-4)
    se.add_argument("--out", required=True)
    se.add_argument("--label-column")
    se.add_argument("--drop", action="append")

    ev = sub.add_parser("eval", help="compare two labelings")
    ev.add_argument("--truth", required=True, help="FILE:COLUMN")
    ev.add_argument("--pred", required=True, help="FILE:COLUMN")
    return ap


def _fit_one(args):
    X, g, q, family, config_kw, strategy = args
    config = FitConfig(family=family, **config_kw)
    try:
        return g, q, family, multi_start_fit(X, g, q, config, strategy), None
    except AllStartsFailed as err:
        return g, q, family, None, str(err).replace("\n", "; ")


def _fmt(x, digits):
    return "NA" if x is None else f"{x:.{digits}f}"


def _write_criteria(path, rows, failed):
    with open(path, "w") as fh:
        fh.write("\t".join(CRITERIA_COLUMNS) + "\n")
        for r in rows:
            vals = [str(r.g), str(r.q), r.family, _fmt(r.loglik, 4), str(r.m), _fmt(r.bic, 4),
                    _fmt(r.icl, 4), _fmt(r.awe, 4), _fmt(r.ent, 4), _fmt(r.ari, 3), _fmt(r.ccr, 3)]
            fh.write("\t".join(vals) + "\n")
        if failed:
            fh.write("# failed fits\n")
            for g, q, family, err in failed:
                fh.write(f"# g={g}\tq={q}\t{family.value}\t{err}\n")


def cmd_fit(a):
    ds = load_csv(a.data, a.label_column, _drop_list(a.drop))
    if a.standardize:
        ds = standardize(ds)
    n, p = ds.X.shape
    if a.starts < 1 or a.max_iter < 1 or not a.tol > 0 or a.jobs < 1:
        raise UsageError("--starts, --max-iter, --jobs must be >= 1 and --tol > 0")
    strategy = InitStrategy(kmeans_restarts=a.kmeans_restarts, fa_method=a.fa_method, seed=a.seed)
    config_kw = dict(tol=a.tol, max_iter=a.max_iter, n_starts=a.starts, seed=a.seed)
    tasks = []
    for family in a.family:
        for g in a.g:
            for q in a.q:
                if q >= p:
                    _warn(f"skipping q={q}: need q < p={p}")
                    continue
                if (p - q) ** 2 < p + q:
                    _warn(f"q={q} exceeds the identifiability bound (p-q)^2 >= p+q for p={p}")
                tasks.append((ds.X, g, q, family, config_kw, strategy))
    if not tasks:
        raise UsageError("no admissible (g, q) in the requested ranges")

    if a.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=a.jobs) as ex:
            outcomes = list(ex.map(_fit_one, tasks))
    else:
        outcomes = [_fit_one(t) for t in tasks]

    rows, fits, failed = [], [], []
    for g, q, family, res, err in outcomes:
        if res is None:
            failed.append((g, q, family, err))
            continue
        m = param_count(p, q, g, family)
        row = criteria(res.loglik, m, n, res.z_final, g=g, q=q, family=family.value)
        if ds.labels is not None:
            row.ari = adjusted_rand_index(ds.labels, res.map_labels)
            row.ccr = correct_classification_rate(ds.labels, res.map_labels)
        rows.append(row)
        fits.append(res)
        if not res.converged:
            _warn(f"g={g} q={q} {family.value}: stopped at max-iter without meeting tol")
    if a.criteria:
        _write_criteria(a.criteria, rows, failed)
    if not rows:
        raise AllStartsFailed([(f"g={g} q={q} {fam.value}", err) for g, q, fam, err in failed])

    k = int(np.argmax([getattr(r, a.select) for r in rows]))
    best, brow = fits[k], rows[k]
    print(f"selected g={brow.g} q={brow.q} family={brow.family} by {a.select.upper()}"
          f" (loglik={brow.loglik:.4f})")
    if a.out:
        model, units = best.model, "standardized" if a.standardize else "original"
        if a.original_units and a.standardize:
            model, units = to_original_units(model, ds.standardization_stats), "original"
        meta = dict(loglik=best.loglik, iterations=best.iterations, seed=a.seed, tol=a.tol,
                    converged=best.converged, start=best.start, n=n, select=a.select)
        save_model(a.out, model, meta, standardization=ds.standardization_stats, units=units,
                   column_names=ds.column_names)
    if a.assign:
        z = best.z_final
        with open(a.assign, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["row", "label"] + [f"post_{i}" for i in range(z.shape[0])])
            for j in range(z.shape[1]):
                w.writerow([j + 1, int(best.map_labels[j])] + [repr(float(v)) for v in z[:, j]])
    return EXIT_OK


def _model_data(a):
    model, doc = read_model_file(a.model)
    ds = load_csv(a.data, a.label_column, _drop_list(a.drop))
    X = ds.X
    if X.shape[1] != model.p:
        raise DataError(f"data has {X.shape[1]} columns, model expects p={model.p}")
    stats = standardization_from_document(doc)
    if stats is not None and doc.get("units") == "standardized":
        X = apply_standardization(X, stats)
    return model, X


def cmd_simulate(a):
    model, doc = read_model_file(a.model)
    if a.n < 1:
        raise UsageError("--n must be >= 1")
    X, labels = mixture_sample(model, a.n, a.seed)
    names = doc.get("column_names") or [f"y{k}" for k in range(model.p)]
    with open(a.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(names) + ["label"])
        for x, lab in zip(X, labels):
            w.writerow([repr(float(v)) for v in x] + [int(lab)])
    return EXIT_OK


def cmd_score(a):
    model, X = _model_data(a)
    F = factor_scores(model, X, weighting="posterior" if a.posterior_weights else "mixing")
    with open(a.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"f{k}" for k in range(model.q)])
        for row in F:
            w.writerow([repr(float(v)) for v in row])
    return EXIT_OK


def cmd_se(a):
    model, X = _model_data(a)
    rows = se_report(model, X, eta_step=a.eta, d_floor=default_d_floor(X))
    with open(a.out, "w") as fh:
        fh.write("parameter\tse\n")
        for name, _, s in rows:
            fh.write(f"{name}\t{'NA' if s is None else repr(s)}\n")
    return EXIT_OK


def _read_column(spec):
    path, sep, col = spec.rpartition(":")
    if not sep or not path:
        raise UsageError(f"expected FILE:COLUMN, got {spec!r}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or col not in reader.fieldnames:
            raise MissingColumn(f"column {col!r} not found in {path}")
        return [r[col].strip() for r in reader]


def cmd_eval(a):
    truth, pred = _read_column(a.truth), _read_column(a.pred)
    if len(truth) != len(pred):
        raise DataError(f"label files differ in length ({len(truth)} vs {len(pred)})")
    print(f"ARI\t{adjusted_rand_index(truth, pred):.3f}")
    print(f"CCR\t{correct_classification_rate(truth, pred):.3f}")
    table, t_lab, p_lab = classification_table(truth, pred)
    print("truth\\pred\t" + "\t".join(map(str, p_lab)))
    for lab, counts in zip(t_lab, table):
        print(f"{lab}\t" + "\t".join(map(str, counts)))
    return EXIT_OK


COMMANDS = dict(fit=cmd_fit, simulate=cmd_simulate, score=cmd_score, se=cmd_se, eval=cmd_eval)


def main(argv=None):
    try:
        a = build_parser().parse_args(argv)
        return COMMANDS[a.command](a)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataError, MSNFAError, OSError, ValueError) as err:
        print(f"data error: {err}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
