"""Reading score files and writing artifacts."""

import csv
import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .null_model import z_from_t
from .skewbeta import CDModel

__all__ = ["IngestError", "Sample", "ingest", "load_model", "save_model", "atomic_write"]


class IngestError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Sample:
    """Ingested values.

    ``values`` are on the analysis scale: z-scores for ``z`` and ``t``
    input (t statistics are converted), p-values for ``p``. ``raw`` keeps
    what was read.
    """

    values: np.ndarray
    kind: str
    df: float = None
    source: str = ""
    raw: np.ndarray = None

    @property
    def scale(self):
        return "p" if self.kind == "p" else "z"

    def summary(self):
        v = self.values
        return {"source": self.source, "kind": self.kind, "n": int(v.size),
                "min": float(v.min()), "median": float(np.median(v)), "max": float(v.max())}


def _parse_lines(lines):
    values = []
    header_seen = False
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        try:
            values.append(float(text))
        except ValueError:
            if not values and not header_seen:
                header_seen = True
                continue
            raise IngestError(f"cannot parse {text!r} as a number", lineno) from None
    return values


def _parse_csv(lines, column):
    data = [(n, ln) for n, ln in enumerate(lines, start=1)
            if ln.strip() and not ln.lstrip().startswith("#")]
    if not data:
        return []
    reader = csv.reader(ln for _, ln in data)
    header = [h.strip() for h in next(reader)]
    if column not in header:
        raise IngestError(f"column {column!r} not in header {header}", data[0][0])
    idx = header.index(column)
    values = []
    for (lineno, _), row in zip(data[1:], reader):
        try:
            values.append(float(row[idx]))
        except (ValueError, IndexError):
            raise IngestError(f"cannot parse column {column!r} as a number", lineno) from None
    return values


def ingest(path, kind, df=None, column=None):
    """Read one numeric value per line, or one named column of a CSV.

    Blank lines and ``#`` comments are skipped; a single non-numeric first
    line is taken as a header.
    """
    if kind not in ("z", "p", "t"):
        raise ValueError("kind must be 'z', 'p' or 't'")
    if kind == "t" and df is None:
        raise ValueError("t input needs --df")
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    values = _parse_csv(lines, column) if column else _parse_lines(lines)
    if not values:
        raise IngestError(f"{path}: no numeric values")
    raw = np.asarray(values, dtype=float)
    bad = np.nonzero(~np.isfinite(raw))[0]
    if bad.size:
        raise IngestError(f"{path}: non-finite value at entry {bad[0] + 1}")
    if kind == "p" and np.any((raw < 0) | (raw > 1)):
        raise IngestError(f"{path}: p-values must lie in [0, 1]")
    vals = np.asarray(z_from_t(raw, df), dtype=float) if kind == "t" else raw
    return Sample(vals, kind, df, str(path), raw)


def atomic_write(path, write):
    """Call ``write(fh)`` on a temp file and move it over ``path`` on success."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_model(model, path):
    atomic_write(path, lambda fh: fh.write(model.to_json(indent=2) + "\n"))


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return CDModel.from_dict(json.load(fh))
