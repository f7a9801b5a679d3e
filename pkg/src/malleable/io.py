"""Reading joint distributions and writing byte-stable reports."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .dist import Alphabet, JointDistribution
from .errors import ValidationError

SIG_DIGITS = 12


def distribution_from_dict(obj: dict) -> JointDistribution:
    for key in ("alphabet_x", "alphabet_y", "pxy"):
        if key not in obj:
            raise ValidationError(f"missing field {key!r}")
    return JointDistribution(Alphabet(tuple(obj["alphabet_x"])), Alphabet(tuple(obj["alphabet_y"])),
                             obj["pxy"], obj.get("log_base", 2))


def distribution_to_dict(d: JointDistribution) -> dict:
    return {
        "alphabet_x": list(d.alphabet_x.symbols),
        "alphabet_y": list(d.alphabet_y.symbols),
        "pxy": d.pxy.tolist(),
        "log_base": d.log_base,
    }


def read_json(text: str) -> JointDistribution:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ValidationError("JSON input must be an object")
    return distribution_from_dict(obj)


def read_csv(text: str, log_base: float = 2.0) -> JointDistribution:
    """Header row holds Y labels (first cell ignored); first column holds X labels."""
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    if len(rows) < 2:
        raise ValidationError("CSV input needs a header row and at least one data row")
    labels_y = [c.strip() for c in rows[0][1:]]
    labels_x, matrix = [], []
    for r in rows[1:]:
        if len(r) != len(labels_y) + 1:
            raise ValidationError(f"CSV row {r!r} has {len(r) - 1} cells, expected {len(labels_y)}")
        labels_x.append(r[0].strip())
        try:
            matrix.append([float(c) for c in r[1:]])
        except ValueError as exc:
            raise ValidationError(f"non-numeric CSV cell: {exc}") from None
    return JointDistribution(Alphabet(tuple(labels_x)), Alphabet(tuple(labels_y)), matrix, log_base)


def load_distribution(path, log_base: float | None = None) -> JointDistribution:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    if path.suffix.lower() == ".csv":
        d = read_csv(text)
    else:
        d = read_json(text)
    if log_base is not None:
        d = d.with_base(log_base)
    return d


def fmt(x) -> str:
    """Format a number with 12 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return str(x)
    if x == 0:
        return "0"
    return format(x, f".{SIG_DIGITS}g")


def _round(obj):
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            return str(x)
        return float(format(x, f".{SIG_DIGITS}g")) + 0.0
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_round(obj), indent=2, sort_keys=True) + "\n"


def dumps_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) if isinstance(v, (int, float, np.number, bool, np.bool_)) else v
                    for v in r])
    return buf.getvalue()
