"""CSV and JSON readers/writers for points, signatures and models."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..geometry import PointBatch, Signature


class DataError(ValueError):
    """Malformed or inconsistent input file (CLI exit code 2)."""


def column_names(sig: Signature) -> list[str]:
    return [f"c{ci}_{d}" for ci, comp in enumerate(sig) for d in range(comp.ambient_dim)]


def load_signature(source) -> Signature:
    """Signature from a JSON file, a JSON string, a dict, or compact text like ``S2xH2``."""
    if isinstance(source, Signature):
        return source
    try:
        if isinstance(source, dict):
            return Signature.from_dict(source)
        text = str(source)
        p = Path(text)
        if p.suffix == ".json" or p.exists():
            try:
                text = p.read_text()
            except OSError as e:
                raise DataError(f"cannot read signature file {p}: {e}") from None
        text = text.strip()
        if text.startswith("{"):
            return Signature.from_dict(json.loads(text))
        return Signature.parse(text)
    except json.JSONDecodeError as e:
        raise DataError(f"signature: invalid JSON ({e})") from None
    except (ValueError, TypeError) as e:
        if isinstance(e, DataError):
            raise
        raise DataError(str(e)) from None


def write_points_csv(path, batch: PointBatch, labels=None) -> None:
    header = column_names(batch.signature)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header + (["label"] if labels is not None else []))
        for i, row in enumerate(batch.coords):
            vals = [repr(float(v)) for v in row]
            if labels is not None:
                lab = labels[i]
                vals.append(repr(float(lab)) if isinstance(lab, (float, np.floating)) else str(int(lab)))
            w.writerow(vals)


def read_points_csv(path, sig: Signature, check: bool = True):
    """Return (PointBatch, labels or None); labels are ints when all integral."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from None
    if not rows:
        raise DataError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    expected = column_names(sig)
    has_label = header[-1:] == ["label"]
    cols = header[:-1] if has_label else header
    if cols != expected:
        raise DataError(f"{path}: header {cols} does not match signature {sig} (expected {expected})")
    try:
        data = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(len(body), len(header))
    except ValueError as e:
        raise DataError(f"{path}: non-numeric value ({e})") from None
    coords = data[:, : len(expected)]
    batch = PointBatch(sig, coords)
    if check:
        bad = batch.violations()
        if bad:
            v = bad[0]
            raise DataError(f"{path}: {len(bad)} manifold violation(s); first at row {v.row}, "
                            f"component {v.component} ({v.constraint}, residual {v.residual:.3g})")
    labels = None
    if has_label:
        labels = data[:, -1]
        if np.all(labels == np.round(labels)):
            labels = labels.astype(np.int64)
    return batch, labels


def write_labels_csv(path, labels) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["prediction"])
        for v in labels:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else int(v)])


def read_edges_csv(path) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from None
    if rows and not rows[0][0].strip().lstrip("-").isdigit():
        rows = rows[1:]
    try:
        edges = np.array([[int(a), int(b)] for a, b in rows], dtype=np.int64).reshape(-1, 2)
    except ValueError as e:
        raise DataError(f"{path}: edge list must have two integer columns ({e})") from None
    return edges


def dump_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=None, sort_keys=False)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: invalid JSON ({e})") from None
