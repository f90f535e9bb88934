"""CSV readers and writers for channels, posterior grids and quantizers.

Channel CSV
    One row per input symbol, one column per output symbol.  A non-numeric
    first line is treated as a header and skipped.

Grid CSV
    First line ``n_inputs=X,n_outputs=Y``.  Then one row per atom: the
    posterior weight followed by the X*Y channel entries in row-major order.

Quantizer CSV
    Header ``kind,index,value`` and rows of kind ``level``, ``boundary`` or
    ``distortion``.
"""

import csv

import numpy as np

from .dmc import Dmc
from .feedback import LloydMaxQuantizer
from .outage import PosteriorGrid

__all__ = [
    "read_channel_csv",
    "write_channel_csv",
    "read_grid_csv",
    "write_grid_csv",
    "read_quantizer_csv",
    "write_quantizer_csv",
]


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]


def _is_numeric(row):
    try:
        [float(c) for c in row]
    except ValueError:
        return False
    return True


def read_channel_csv(path):
    rows = _rows(path)
    if rows and not _is_numeric(rows[0]):
        rows = rows[1:]
    if not rows:
        raise ValueError(f"{path}: no channel rows")
    try:
        return Dmc(np.array([[float(c) for c in row] for row in rows]))
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def write_channel_csv(path, channel):
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        for row in np.asarray(channel, dtype=float):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_grid_csv(path):
    rows = _rows(path)
    if not rows:
        raise ValueError(f"{path}: empty grid file")
    dims = {}
    for item in rows[0]:
        key, _, value = item.partition("=")
        dims[key.strip()] = value.strip()
    try:
        n_in, n_out = int(dims["n_inputs"]), int(dims["n_outputs"])
    except (KeyError, ValueError):
        raise ValueError(f"{path}: header must read n_inputs=X,n_outputs=Y") from None
    weights, channels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 1 + n_in * n_out:
            raise ValueError(f"{path}:{lineno}: expected {1 + n_in * n_out} fields, got {len(row)}")
        vals = [float(c) for c in row]
        weights.append(vals[0])
        channels.append(np.array(vals[1:]).reshape(n_in, n_out))
    return PosteriorGrid(weights=np.array(weights), channels=channels)


def write_grid_csv(path, grid):
    n_in, n_out = grid.channels[0].matrix.shape
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        fh.write(f"n_inputs={n_in},n_outputs={n_out}\n")
        for w, ch in zip(grid.weights, grid.channels):
            fh.write(",".join(repr(float(v)) for v in [w, *ch.matrix.ravel()]) + "\n")


def write_quantizer_csv(path, quantizer):
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        fh.write("kind,index,value\n")
        for i, v in enumerate(quantizer.levels_):
            fh.write(f"level,{i},{float(v)!r}\n")
        for i, v in enumerate(quantizer.boundaries_):
            fh.write(f"boundary,{i},{float(v)!r}\n")
        fh.write(f"distortion,0,{quantizer.distortion_!r}\n")


def read_quantizer_csv(path):
    """Rebuild a fitted quantizer from its CSV dump."""
    rows = _rows(path)
    if not rows or [c.strip() for c in rows[0]] != ["kind", "index", "value"]:
        raise ValueError(f"{path}: header must be kind,index,value")
    parts = {"level": {}, "boundary": {}, "distortion": {}}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 3 or row[0] not in parts:
            raise ValueError(f"{path}:{lineno}: malformed quantizer row")
        parts[row[0]][int(row[1])] = float(row[2])
    levels = np.array([parts["level"][i] for i in sorted(parts["level"])])
    if levels.size == 0 or np.any(np.diff(levels) <= 0):
        raise ValueError(f"{path}: levels must be nonempty and strictly ascending")
    q = LloydMaxQuantizer(n_levels=levels.size)
    q.levels_ = levels
    q.boundaries_ = 0.5 * (levels[1:] + levels[:-1])
    q.distortion_ = parts["distortion"].get(0, np.nan)
    q.distortion_history_ = [q.distortion_]
    q.n_iter_ = 0
    return q
