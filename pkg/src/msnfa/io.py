"""CSV ingestion, standardisation and JSON model files."""

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConstantColumn, InvariantViolation, MissingColumn, ParseError, SchemaError
from .model import Family, MsnfaModel, SnfaComponent

FORMAT_VERSION = 1


@dataclass
class Dataset:
    X: np.ndarray
    column_names: list
    labels: np.ndarray | None = None
    label_names: list | None = None
    standardized: bool = False
    standardization_stats: tuple | None = None  # (mean, sd) of the original columns

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]


def load_csv(path, label_column=None, drop_columns=()):
    """Read a header + comma-separated numeric table.

    Label values are coded 0, 1, ... in order of first appearance. Any cell in
    a retained column that does not parse as a finite number raises
    :class:`ParseError` with its 1-based data row.
    """
    drop = set(drop_columns or ())
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(0, None, "") from None
        for name in drop | ({label_column} if label_column else set()):
            if name not in header:
                raise MissingColumn(f"column {name!r} not found in {path}")
        keep = [k for k, h in enumerate(header) if h not in drop and h != label_column]
        lab_idx = header.index(label_column) if label_column else None
        rows, labels, codes = [], [], {}
        for r, rec in enumerate(reader, start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise ParseError(r, None, ",".join(rec))
            vals = []
            for k in keep:
                tok = rec[k].strip()
                try:
                    val = float(tok)
                except ValueError:
                    raise ParseError(r, header[k], tok) from None
                if not math.isfinite(val):
                    raise ParseError(r, header[k], tok)
                vals.append(val)
            rows.append(vals)
            if lab_idx is not None:
                key = rec[lab_idx].strip()
                labels.append(codes.setdefault(key, len(codes)))
    X = np.array(rows, dtype=float).reshape(len(rows), len(keep))
    return Dataset(
        X=X,
        column_names=[header[k] for k in keep],
        labels=np.array(labels, dtype=int) if lab_idx is not None else None,
        label_names=list(codes) if lab_idx is not None else None,
    )


def standardize(ds):
    """Columnwise (x - mean)/sd with the n - 1 divisor.

    Re-standardising composes the stored statistics so they always map back to
    the original columns.
    """
    mean = ds.X.mean(axis=0)
    sd = ds.X.std(axis=0, ddof=1)
    for name, s in zip(ds.column_names, sd):
        if not s > 0:
            raise ConstantColumn(f"column {name!r} is constant")
    X = (ds.X - mean) / sd
    if ds.standardized and ds.standardization_stats is not None:
        m0, s0 = ds.standardization_stats
        mean, sd = m0 + s0 * mean, s0 * sd
    return replace(ds, X=X, standardized=True, standardization_stats=(mean, sd))


def apply_standardization(X, stats):
    mean, sd = stats
    return (np.asarray(X, dtype=float) - mean) / sd


def to_original_units(model, stats):
    """Map a model fitted on standardised data back to the original columns."""
    mean, sd = (np.asarray(s, dtype=float) for s in stats)
    comps = [
        SnfaComponent(mean + sd * c.mu, sd[:, None] * c.B, sd**2 * c.d, c.lam) for c in model.components
    ]
    return MsnfaModel(model.weights, comps, model.family)


def model_document(model, fit_meta=None, standardization=None, units="standardized", column_names=None):
    doc = {
        "format_version": FORMAT_VERSION,
        "family": model.family.value,
        "g": model.g,
        "p": model.p,
        "q": model.q,
        "weights": model.weights.tolist(),
        "components": [
            {
                "mu": c.mu.tolist(),
                "B": c.B.tolist(),
                "d": c.d.tolist(),
                "lambda": c.lam.tolist(),
            }
            for c in model.components
        ],
        "units": units,
        "standardization": None
        if standardization is None
        else {"mean": np.asarray(standardization[0]).tolist(), "sd": np.asarray(standardization[1]).tolist()},
        "column_names": list(column_names) if column_names is not None else None,
        "fit": dict(fit_meta or {}),
    }
    return doc


def save_model(path, model, fit_meta=None, **kw):
    # json writes floats with repr(), which round-trips doubles exactly
    doc = model_document(model, fit_meta, **kw)
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")
    return doc


def _need(doc, key, path, kind=None):
    if not isinstance(doc, dict) or key not in doc:
        raise SchemaError(f"{path}.{key}" if path else key, "missing field")
    val = doc[key]
    if kind is not None and not isinstance(val, kind):
        raise SchemaError(f"{path}.{key}" if path else key, f"expected {kind}")
    return val


def _array(doc, key, path, shape):
    val = _need(doc, key, path)
    try:
        arr = np.array(val, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError(f"{path}.{key}", "not a numeric array") from None
    if arr.shape != shape:
        raise SchemaError(f"{path}.{key}", f"expected shape {shape}, got {arr.shape}")
    return arr


def model_from_document(doc):
    version = _need(doc, "format_version", "", int)
    if version != FORMAT_VERSION:
        raise SchemaError("format_version", f"unsupported version {version}")
    try:
        family = Family(_need(doc, "family", "", str))
    except ValueError:
        raise SchemaError("family", f"unknown family {doc['family']!r}") from None
    g, p, q = (_need(doc, k, "", int) for k in ("g", "p", "q"))
    weights = _array(doc, "weights", "", (g,))
    comps_doc = _need(doc, "components", "", list)
    if len(comps_doc) != g:
        raise SchemaError("components", f"expected {g} entries")
    comps = []
    for i, cd in enumerate(comps_doc):
        path = f"components[{i}]"
        mu = _array(cd, "mu", path, (p,))
        B = _array(cd, "B", path, (p, q))
        d = _array(cd, "d", path, (p,))
        lam = _array(cd, "lambda", path, (q,))
        try:
            comps.append(SnfaComponent(mu, B, d, lam))
        except ValueError as err:
            raise InvariantViolation(f"component {i}: {err}") from None
    try:
        return MsnfaModel(weights, comps, family)
    except ValueError as err:
        raise InvariantViolation(f"model: {err}") from None


def read_model_file(path):
    """Return ``(model, document)``."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise SchemaError("", f"not valid JSON: {err}") from None
    return model_from_document(doc), doc


def load_model(path):
    return read_model_file(path)[0]


def standardization_from_document(doc):
    st = doc.get("standardization")
    if not st:
        return None
    return np.array(st["mean"], dtype=float), np.array(st["sd"], dtype=float)


@dataclass
class FitMeta:
    loglik: float
    iterations: int
    seed: int
    tol: float
    converged: bool
    extra: dict = field(default_factory=dict)

    def as_dict(self):
        out = dict(loglik=self.loglik, iterations=self.iterations, seed=self.seed, tol=self.tol,
                   converged=self.converged)
        out.update(self.extra)
        return out
