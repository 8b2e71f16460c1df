"""On-disk artifacts: versioned JSON model files and headed CSV tables.

Floats are written with ``repr`` so a file read back reproduces the exact
float64 values, and everything is emitted in a fixed order so identical
inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from pathlib import Path
from typing import Sequence

import numpy as np

from .classify import GdaModel, LrModel, ModelKind, SvmModel, model_kind
from .cluster import ClusterModel, CvCurve
from .errors import SchemaError, ValidationError
from .evaluate import ComparisonReport, TrialResult, TrialSummary
from .features import CompositionSample, StyleSource, column_names

FORMAT_VERSION = 1
CLUSTER_FORMAT = "playstyle.cluster-model"
CLASSIFIER_FORMAT = "playstyle.classifier"
MANIFEST_FORMAT = "playstyle.samples-manifest"
REPORT_FORMAT = "playstyle.comparison"
TRIAL_COLUMNS = ("model_kind", "feature_source", "trial", "seed", "train_acc", "test_acc", "wall_time")


def _num(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc.msg}", line=exc.lineno, source=str(path)) from exc


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _check_header(obj: dict, fmt: str, path) -> None:
    if not isinstance(obj, dict) or obj.get("format") != fmt:
        raise SchemaError(f"not a {fmt} file", source=str(path))
    if obj.get("version") != FORMAT_VERSION:
        raise SchemaError(
            f"unsupported {fmt} version {obj.get('version')!r} (expected {FORMAT_VERSION})",
            source=str(path),
        )


# ---------------------------------------------------------------------------
# cluster models


def save_cluster_model(path, model: ClusterModel, ranges, columns: Sequence[str]) -> None:
    """Model plus the normalization ranges needed to place new players."""
    ranges = np.asarray(ranges, dtype=np.float64)
    if ranges.shape != (model.dim, 2) or len(columns) != model.dim:
        raise ValidationError("normalization ranges do not match the model dimension")
    write_json(
        path,
        {
            "format": CLUSTER_FORMAT,
            "version": FORMAT_VERSION,
            "model": model.to_dict(),
            "normalization": {"columns": list(columns), "ranges": ranges.tolist()},
        },
    )


def load_cluster_model(path) -> tuple[ClusterModel, np.ndarray, tuple[str, ...]]:
    obj = read_json(path)
    _check_header(obj, CLUSTER_FORMAT, path)
    try:
        model = ClusterModel.from_dict(obj["model"])
        norm = obj["normalization"]
        ranges = np.array(norm["ranges"], dtype=np.float64)
        columns = tuple(norm["columns"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed cluster model: {exc}", source=str(path)) from exc
    if ranges.shape != (model.dim, 2):
        raise SchemaError("normalization ranges do not match centroids", source=str(path))
    return model, ranges, columns


def write_assignment(path, player_ids: Sequence[str], labels) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["player_id", "cluster_label"])
        for pid, lab in zip(player_ids, labels):
            w.writerow([pid, int(lab)])


# ---------------------------------------------------------------------------
# classifiers


def classifier_to_dict(model) -> dict:
    kind = model_kind(model)
    if kind is ModelKind.LR:
        params = {
            "theta": model.theta.tolist(),
            "epochs_run": model.epochs_run,
            "final_log_likelihood": model.final_log_likelihood,
            "learning_rate": model.learning_rate,
            "seed": model.seed,
        }
    elif kind is ModelKind.GDA:
        params = {
            "phi": model.phi,
            "mu0": model.mu0.tolist(),
            "mu1": model.mu1.tolist(),
            "sigma": model.sigma.tolist(),
            "ridge": model.ridge,
        }
    else:
        params = {
            "alphas": model.alphas.tolist(),
            "support": model.support.tolist(),
            "support_vectors": model.support_vectors.tolist(),
            "support_y": model.support_y.tolist(),
            "bias": model.bias,
            "C": model.C,
            "tol": model.tol,
            "converged": model.converged,
            "max_kkt_violation": model.max_kkt_violation,
            "passes": model.passes,
        }
    return {"kind": kind.value, "params": params}


def classifier_from_dict(obj: dict):
    kind = ModelKind(obj["kind"])
    p = obj["params"]
    arr = lambda key: np.array(p[key], dtype=np.float64)  # noqa: E731
    if kind is ModelKind.LR:
        return LrModel(arr("theta"), int(p["epochs_run"]), float(p["final_log_likelihood"]),
                       float(p["learning_rate"]), int(p["seed"]))
    if kind is ModelKind.GDA:
        return GdaModel(float(p["phi"]), arr("mu0"), arr("mu1"), arr("sigma"), float(p["ridge"]))
    sv = arr("support_vectors")
    return SvmModel(
        arr("alphas"),
        np.array(p["support"], dtype=np.int64),
        sv.reshape(len(p["alphas"]), -1) if sv.size == 0 else sv,
        arr("support_y"),
        float(p["bias"]),
        float(p["C"]),
        float(p["tol"]),
        bool(p["converged"]),
        float(p["max_kkt_violation"]),
        int(p["passes"]),
    )


def save_classifier(path, model, provenance: dict) -> None:
    """``provenance`` describes the features the model was trained on (the samples manifest)."""
    obj = {"format": CLASSIFIER_FORMAT, "version": FORMAT_VERSION, "features": provenance}
    obj.update(classifier_to_dict(model))
    write_json(path, obj)


def load_classifier(path):
    obj = read_json(path)
    _check_header(obj, CLASSIFIER_FORMAT, path)
    try:
        return classifier_from_dict(obj), obj.get("features", {})
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed classifier: {exc}", source=str(path)) from exc


# ---------------------------------------------------------------------------
# tables


def write_cv_curve(path, curve: CvCurve, param_name: str) -> None:
    """One row per grid value: mean held-out score, per-fold scores, chosen flag."""
    n_folds = len(curve.fold_scores[0]) if curve.fold_scores else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([param_name, "mean_score", "chosen"] + [f"fold{f}" for f in range(n_folds)])
        for g, value in enumerate(curve.grid):
            folds = curve.fold_scores[g] if curve.fold_scores else ()
            w.writerow(
                [_num(value), _num(curve.mean_scores[g]), int(value == curve.chosen)]
                + [_num(s) for s in folds]
            )


def read_cv_curve(path) -> CvCurve:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    body = rows[1:]
    cast = int if all("." not in r[0] and "e" not in r[0] for r in body) else float
    grid = tuple(cast(r[0]) for r in body)
    chosen = [g for g, r in zip(grid, body) if r[2] == "1"]
    return CvCurve(
        grid,
        tuple(float(r[1]) for r in body),
        chosen[0] if chosen else None,
        tuple(tuple(float(v) for v in r[3:]) for r in body),
    )


def write_pca_scores(path, scores, labels) -> None:
    scores = np.asarray(scores)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"pc{i + 1}" for i in range(scores.shape[1])] + ["cluster_label"])
        for row, lab in zip(scores, labels):
            w.writerow([_num(v) for v in row] + [int(lab)])


def manifest_path(samples_path) -> str:
    return os.fspath(samples_path) + ".manifest.json"


def write_samples(path, samples: Sequence[CompositionSample], k: int, provenance: dict) -> None:
    """Samples CSV (2k counts and ``label``) plus a sidecar manifest with k and the source."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(column_names(k) + ["label"])
        for s in samples:
            if len(s.x) != 2 * k:
                raise ValidationError(f"sample width {len(s.x)} does not match k={k}")
            w.writerow(list(s.x) + [s.y])
    manifest = {"format": MANIFEST_FORMAT, "version": FORMAT_VERSION, "k": int(k),
                "n_samples": len(samples)}
    manifest.update(provenance)
    write_json(manifest_path(path), manifest)


def read_samples(path) -> tuple[np.ndarray, np.ndarray, dict]:
    manifest = read_json(manifest_path(path))
    _check_header(manifest, MANIFEST_FORMAT, manifest_path(path))
    k = int(manifest["k"])
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != column_names(k) + ["label"]:
            raise SchemaError(f"header does not match k={k}", line=1, source=str(path))
        rows = []
        for lineno, row in enumerate(reader, start=2):
            try:
                vals = [int(v) for v in row]
            except ValueError as exc:
                raise ValidationError(f"non-integer field: {exc}", line=lineno, source=str(path)) from exc
            if len(vals) != 2 * k + 1:
                raise ValidationError(f"expected {2 * k + 1} fields, got {len(vals)}",
                                      line=lineno, source=str(path))
            rows.append(vals)
    if not rows:
        raise ValidationError("no samples", source=str(path))
    data = np.array(rows, dtype=np.int64)
    return data[:, :-1].astype(np.float64), data[:, -1], manifest


def write_trial_summaries(path, summaries: Sequence[TrialSummary]) -> None:
    """Per-trial rows for each (model, features) pair, followed by its mean row."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRIAL_COLUMNS)
        for s in summaries:
            for t in s.trials:
                w.writerow([s.model_kind.value, s.feature_source.value, t.trial, t.seed,
                            _num(t.train_acc), _num(t.test_acc), f"{t.wall_time:.6f}"])
            w.writerow([s.model_kind.value, s.feature_source.value, "mean", "",
                        _num(s.mean_train_acc), _num(s.mean_test_acc), f"{s.mean_wall_time:.6f}"])


def read_trial_summaries(path) -> list[TrialSummary]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        if tuple(next(reader, ())) != TRIAL_COLUMNS:
            raise SchemaError("not a trial summary table", line=1, source=str(path))
        groups: dict[tuple[str, str], list[TrialResult]] = {}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(TRIAL_COLUMNS):
                raise ValidationError("wrong number of fields", line=lineno, source=str(path))
            if row[2] == "mean":
                continue
            try:
                result = TrialResult(int(row[2]), int(row[3]), float(row[4]), float(row[5]), float(row[6]))
            except ValueError as exc:
                raise ValidationError(str(exc), line=lineno, source=str(path)) from exc
            groups.setdefault((row[0], row[1]), []).append(result)
    return [TrialSummary(ModelKind(k), StyleSource(s), tuple(ts)) for (k, s), ts in groups.items()]


def write_comparison(path, reports: dict[str, ComparisonReport], meta: dict) -> None:
    obj = {"format": REPORT_FORMAT, "version": FORMAT_VERSION, **meta,
           "models": {kind: r.to_dict() for kind, r in sorted(reports.items())}}
    write_json(path, obj)
