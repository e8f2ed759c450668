"""File formats: dataset CSVs, model text files, JSON-lines reports and plot CSVs.

Dataset CSV
    UTF-8, LF line endings. Optional leading ``#`` lines carry a JSON
    metadata record. The header names a ``label`` column (values -1 or 1)
    and feature columns ``x1 .. xp`` in order. Floats are written with
    ``%.17g`` so they read back bit-exactly.

Model file
    Line 1 is ``CSVM-MODEL v1``. Line 2 is a JSON object holding the tool
    version, method, kernel, intercept, margin, thresholds, configuration,
    seed and PRNG id. The rest is a CSV block whose columns depend on the
    method: ``coef,label,weight,x1..xp`` (csvm), ``beta`` (logistic) or
    ``label,x1..xp`` (knn).

Reports
    One JSON object per line. Plot CSVs have the fixed columns of
    :data:`PLOT_COLUMNS` after a ``#`` metadata line.
"""
from __future__ import annotations

import csv
import json
import math
import os
import tempfile

import numpy as np

from . import __version__
from .baselines import KnnModel, LogisticModel
from .core import CsvmModel, Dataset
from .datagen import PRNG_ID
from .errors import DimensionError, MissingColumnsError, SchemaError
from .inference import Thresholds
from .kernel import KernelSpec

MODEL_MAGIC = "CSVM-MODEL v1"
TOOL_NAME = "csvm"
PLOT_COLUMNS = ("n", "method", "noncov_neg", "noncov_pos", "ambiguity",
                "stderr_noncov_neg", "stderr_noncov_pos", "stderr_ambiguity")


def tool_meta(**extra):
    """Provenance fields embedded in every output file."""
    return {"tool": TOOL_NAME, "version": __version__, "prng": PRNG_ID, **extra}


def _dumps(obj):
    return json.dumps(obj, sort_keys=True, allow_nan=True, separators=(",", ":"))


def write_atomic(path, text):
    """Write ``text`` to ``path`` through a temporary file in the same directory."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _rows_text(columns, fmt):
    lines = []
    for row in zip(*columns):
        lines.append(",".join(f % v for f, v in zip(fmt, row)))
    return "\n".join(lines) + ("\n" if lines else "")


# -- datasets --------------------------------------------------------------

def dataset_to_text(data, meta=None):
    p = data.p
    out = []
    if meta is not None:
        out.append("# " + _dumps(meta) + "\n")
    out.append(",".join(["label"] + [f"x{j + 1}" for j in range(p)]) + "\n")
    cols = [data.labels.astype(int)] + [data.features[:, j] for j in range(p)]
    out.append(_rows_text(cols, ["%d"] + ["%.17g"] * p))
    return "".join(out)


def write_dataset(path, data, meta=None):
    write_atomic(path, dataset_to_text(data, meta))


def _split_comments(lines):
    meta = None
    body = []
    for line in lines:
        if line.startswith("#"):
            if meta is None:
                try:
                    meta = json.loads(line[1:])
                except json.JSONDecodeError:
                    pass
            continue
        if line.strip():
            body.append(line)
    return meta, body


def parse_dataset(text, source="<string>"):
    """Parse dataset CSV text; returns ``(Dataset, metadata or None)``."""
    meta, body = _split_comments(text.splitlines())
    if not body:
        raise MissingColumnsError(f"{source}: no header row")
    header = [h.strip() for h in next(csv.reader([body[0]]))]
    if "label" not in header:
        raise MissingColumnsError(f"{source}: required column 'label' is missing")
    if header.count("label") > 1:
        raise SchemaError(f"{source}: duplicate 'label' column")
    li = header.index("label")
    feats = [h for i, h in enumerate(header) if i != li]
    if not feats:
        raise MissingColumnsError(f"{source}: no feature columns x1..xp")
    expected = [f"x{j + 1}" for j in range(len(feats))]
    if feats != expected:
        bad = next(h for h, e in zip(feats, expected) if h != e)
        raise SchemaError(f"{source}: feature columns must be x1..x{len(feats)} in order, found {bad!r}")
    rows = list(csv.reader(body[1:]))
    values = np.empty((len(rows), len(header)))
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise SchemaError(f"{source}: row {r + 1} has {len(row)} fields, expected {len(header)}")
        try:
            values[r] = [float(v) for v in row]
        except ValueError as exc:
            raise SchemaError(f"{source}: row {r + 1}: {exc}") from None
    if not np.all(np.isfinite(values)):
        raise SchemaError(f"{source}: non-finite values")
    labels = values[:, li]
    if not np.all(np.isin(labels, (-1.0, 1.0))):
        raise SchemaError(f"{source}: labels must be -1 or 1")
    X = np.delete(values, li, axis=1)
    return Dataset(X.reshape(len(rows), len(feats)), labels.astype(np.int8)), meta


def read_dataset(path, expected_p=None):
    with open(path, encoding="utf-8", newline="") as fh:
        data, meta = parse_dataset(fh.read(), source=os.fspath(path))
    if expected_p is not None and data.p != expected_p:
        raise DimensionError(f"{path}: {data.p} features, expected {expected_p}")
    return data, meta


# -- models ----------------------------------------------------------------

def _float_or_none(v):
    return None if v is None else float(v)


def model_to_text(model, thresholds=None, config=None, seed=None, extra=None):
    """Serialize a CSVM, logistic or kNN model to the versioned text format."""
    head = tool_meta(seed=seed, config=config)
    if thresholds is not None:
        head["thresholds"] = {"t_neg": thresholds.t_neg, "t_pos": thresholds.t_pos}
    if extra:
        head.update(extra)
    if isinstance(model, CsvmModel):
        keep = np.flatnonzero(model.coefficients != 0.0)
        head.update(method="csvm", kernel=model.kernel.to_dict(), intercept=model.intercept,
                    epsilon=model.epsilon, p=model.p, rows=int(keep.size))
        X = model.support_features[keep]
        cols = ([model.coefficients[keep], model.support_labels[keep].astype(int), model.weights_final[keep]]
                + [X[:, j] for j in range(model.p)])
        names = ["coef", "label", "weight"] + [f"x{j + 1}" for j in range(model.p)]
        fmt = ["%.17g", "%d", "%.17g"] + ["%.17g"] * model.p
    elif isinstance(model, LogisticModel):
        head.update(method="logistic", intercept=model.intercept, lam=model.lam, p=model.p,
                    rows=model.p, converged=model.converged)
        cols, names, fmt = [model.coef], ["beta"], ["%.17g"]
    elif isinstance(model, KnnModel):
        head.update(method="knn", k=model.k, p=model.p, rows=int(model.labels.size))
        cols = [model.labels.astype(int)] + [model.features[:, j] for j in range(model.p)]
        names = ["label"] + [f"x{j + 1}" for j in range(model.p)]
        fmt = ["%d"] + ["%.17g"] * model.p
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return MODEL_MAGIC + "\n" + _dumps(head) + "\n" + ",".join(names) + "\n" + _rows_text(cols, fmt)


def write_model(path, model, thresholds=None, config=None, seed=None, extra=None):
    write_atomic(path, model_to_text(model, thresholds, config, seed, extra))


def parse_model(text, source="<string>"):
    """Inverse of :func:`model_to_text`; returns ``(model, thresholds or None, header)``."""
    lines = text.splitlines()
    if len(lines) < 3 or lines[0].strip() != MODEL_MAGIC:
        raise SchemaError(f"{source}: not a model file (expected first line {MODEL_MAGIC!r})")
    try:
        head = json.loads(lines[1])
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{source}: bad metadata line: {exc}") from None
    names = lines[2].split(",")
    body = [ln for ln in lines[3:] if ln.strip()]
    try:
        table = np.array([[float(v) for v in ln.split(",")] for ln in body]).reshape(len(body), len(names))
        method = head["method"]
        p = int(head["p"])
        if len(body) != int(head["rows"]):
            raise SchemaError(f"{source}: expected {head['rows']} rows, found {len(body)}")
        if method == "csvm":
            if names != ["coef", "label", "weight"] + [f"x{j + 1}" for j in range(p)]:
                raise SchemaError(f"{source}: unexpected columns for a csvm model")
            model = CsvmModel(table[:, 0], head["intercept"], head["epsilon"], KernelSpec.from_dict(head["kernel"]),
                              table[:, 3:].reshape(len(body), p), table[:, 1].astype(np.int8), table[:, 2],
                              meta={"config": head.get("config")})
        elif method == "logistic":
            if names != ["beta"]:
                raise SchemaError(f"{source}: unexpected columns for a logistic model")
            model = LogisticModel(table[:, 0].copy(), float(head["intercept"]), float(head["lam"]), 0,
                                  float("nan"), bool(head.get("converged", True)))
        elif method == "knn":
            if names != ["label"] + [f"x{j + 1}" for j in range(p)]:
                raise SchemaError(f"{source}: unexpected columns for a knn model")
            model = KnnModel(table[:, 1:].reshape(len(body), p), table[:, 0].astype(np.int8), int(head["k"]))
        else:
            raise SchemaError(f"{source}: unknown method {method!r}")
    except (KeyError, ValueError, TypeError) as exc:
        raise SchemaError(f"{source}: malformed model file: {exc}") from None
    th = head.get("thresholds")
    thresholds = Thresholds(th["t_neg"], th["t_pos"]) if th else None
    return model, thresholds, head


def read_model(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_model(fh.read(), source=os.fspath(path))


# -- reports ---------------------------------------------------------------

def _clean(v):
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def jsonl_text(records):
    """One compact JSON object per line; NaN becomes ``null``."""
    return "".join(_dumps(_clean(r)) + "\n" for r in records)


def write_jsonl(path, records):
    write_atomic(path, jsonl_text(records))


def read_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def plot_csv_text(rows, meta=None):
    """Rows are mappings with the keys of :data:`PLOT_COLUMNS`."""
    out = []
    if meta is not None:
        out.append("# " + _dumps(_clean(meta)) + "\n")
    out.append(",".join(PLOT_COLUMNS) + "\n")
    for r in rows:
        vals = []
        for c in PLOT_COLUMNS:
            v = r[c]
            vals.append(str(v) if c in ("n", "method") else ("nan" if v is None else "%.17g" % v))
        out.append(",".join(vals) + "\n")
    return "".join(out)


def write_plot_csv(path, rows, meta=None):
    write_atomic(path, plot_csv_text(rows, meta))
