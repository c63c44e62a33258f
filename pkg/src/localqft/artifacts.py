"""CSV and JSON artifacts.

Files are written to a temporary file in the target directory and moved into place, so readers
never see a partial artifact. Floats are written with ``repr`` and keys keep insertion order, which
makes reruns of the same scenario byte-identical.
"""

import csv
import io
import json
import logging
import os
import tempfile
import typing as t

import numpy as np

from .errors import InvalidParameterError, ScenarioError
from .spectrum import StaticCurved1D, Tabulated1D


logger = logging.getLogger(__name__)


def write_atomic(path: str, text: str) -> str:
    """Write `text` to `path` through a temporary sibling file and return the path."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as stream:
            stream.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.debug("wrote %s", path)
    return path


def write_csv(path: str, rows: t.Sequence[t.Mapping[str, t.Any]]) -> str:
    """Write dict rows with the first row's keys as header."""
    buffer = io.StringIO()
    if rows:
        writer = csv.DictWriter(buffer, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows({key: _scalar(value) for key, value in row.items()} for row in rows)
    return write_atomic(path, buffer.getvalue())


def write_columns(path: str, columns: t.Mapping[str, np.ndarray]) -> str:
    """Write equal-length columns side by side."""
    names = list(columns)
    arrays = [np.asarray(columns[name]) for name in names]
    rows = [dict(zip(names, values)) for values in zip(*arrays)]
    return write_csv(path, rows)


def write_json(path: str, data: t.Any) -> str:
    return write_atomic(path, json.dumps(data, indent=2, default=_scalar) + "\n")


def _scalar(value: t.Any) -> t.Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return value


def read_potential_csv(path: str, walls: bool = False) -> t.Union[Tabulated1D, StaticCurved1D]:
    """
    Read a tabulated potential.

    Two columns ``x, V`` give a :class:`Tabulated1D`; four columns ``x, β, h, V`` give a
    :class:`StaticCurved1D`. A non-numeric first line is taken as a header and lines starting with
    ``#`` are ignored.
    """
    try:
        with open(path, encoding="utf-8", newline="") as stream:
            lines = [row for row in csv.reader(stream) if row and not row[0].startswith("#")]
    except OSError as exc:
        raise ScenarioError(f"cannot read potential table {path!r}: {exc}") from exc

    if lines and not _numeric(lines[0]):
        lines = lines[1:]
    try:
        table = np.array([[float(cell) for cell in row] for row in lines])
    except ValueError as exc:
        raise InvalidParameterError(f"potential table {path!r} is not numeric: {exc}") from exc

    if table.ndim != 2 or table.shape[1] not in (2, 4):
        raise InvalidParameterError(f"potential table {path!r} must have two or four columns")
    if table.shape[1] == 2:
        return Tabulated1D(table[:, 0], table[:, 1], walls=walls)
    potential = Tabulated1D(table[:, 0], table[:, 3], walls=walls)
    return StaticCurved1D(potential, table[:, 1], table[:, 2])


def _numeric(row: t.Sequence[str]) -> bool:
    try:
        for cell in row:
            float(cell)
    except ValueError:
        return False
    return True
