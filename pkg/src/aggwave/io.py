"""CSV readers/writers and all-or-nothing output directories.

CSV conventions: comma separated, one header row, panels stored grid-major
(one row per grid point, one column per sample), floats written with 17
significant digits so values round-trip exactly.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "fmt",
    "read_matrix_csv",
    "write_matrix_csv",
    "matrix_csv",
    "commit_outputs",
]


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def read_matrix_csv(path, label_column: str | None = None) -> tuple[list[str], np.ndarray, list[str]]:
    """Read a numeric CSV.

    Returns ``(header, values, labels)``. When the first header cell equals
    ``label_column`` that column is returned as ``labels`` rather than
    parsed as numbers.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise InvalidInputError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    if not body:
        raise InvalidInputError(f"{path}: no data rows")
    labels: list[str] = []
    if label_column is not None and header and header[0].strip() == label_column:
        labels = [r[0] for r in body]
        header = header[1:]
        body = [r[1:] for r in body]
    width = len(header)
    values = np.empty((len(body), width))
    for i, row in enumerate(body):
        if len(row) != width:
            raise InvalidInputError(f"{path}: row {i + 2} has {len(row)} fields, header has {width}")
        try:
            values[i] = [float(v) for v in row]
        except ValueError:
            raise InvalidInputError(f"{path}: row {i + 2} contains a non-numeric value") from None
    if not np.all(np.isfinite(values)):
        raise InvalidInputError(f"{path}: contains non-finite values")
    return header, values, labels


def matrix_csv(header, values, labels=None, label_name: str = "t") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(([label_name] if labels is not None else []) + list(header))
    for i, row in enumerate(np.atleast_2d(values)):
        lead = [labels[i] if isinstance(labels[i], str) else fmt(labels[i])] if labels is not None else []
        w.writerow(lead + [fmt(v) for v in row])
    return buf.getvalue()


def write_matrix_csv(path, header, values, labels=None, label_name: str = "t") -> None:
    Path(path).write_text(matrix_csv(header, values, labels, label_name))


def commit_outputs(out_dir, files: dict[str, str]) -> list[str]:
    """Write every file or none.

    Contents are staged in temporary files inside ``out_dir`` and renamed
    into place only after all of them were written successfully.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=out, prefix=f".{name}.", suffix=".tmp")
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            staged.append((tmp, out / name))
    except BaseException:
        for tmp, _ in staged:
            Path(tmp).unlink(missing_ok=True)
        raise
    for tmp, dest in staged:
        os.replace(tmp, dest)
    return sorted(files)
