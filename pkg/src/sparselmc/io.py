"""CSV persistence for datasets, chains, latent draws and summaries.

Data files have the header ``x,y,v1,...,vp`` with one row per location; an
empty cell marks a missing value.  Chain files hold one
:class:`~sparselmc.mcmc.ChainRecord` per row with 17 significant digits so a
save/load round trip is exact.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .mcmc.records import ChainRecord
from .model import Locations, ObservedData

__all__ = [
    "DataFormatError",
    "load_dataset",
    "save_dataset",
    "save_matrix_csv",
    "load_matrix_csv",
    "ChainWriter",
    "save_chain",
    "load_chain",
    "LatentWriter",
    "load_latents",
    "write_key_values",
    "read_key_values",
]

FMT = "%.17g"


class DataFormatError(ValueError):
    """Malformed input file; the message names the line and column."""


def _num(x: float) -> str:
    return FMT % x


def _open_write(path):
    return open(path, "w", newline="", encoding="utf-8")


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        yield from enumerate(csv.reader(fh), start=1)


def load_dataset(path) -> tuple[Locations, ObservedData]:
    """Read a data CSV, returning locations and a p x n response with availability."""
    rows = _rows(path)
    try:
        _, header = next(rows)
    except StopIteration:
        raise DataFormatError(f"{path}: empty file") from None
    header = [h.strip() for h in header]
    if len(header) < 3 or header[:2] != ["x", "y"]:
        raise DataFormatError(f"{path}: line 1: header must be x,y,v1,...,vp")
    p = len(header) - 2
    pts, vals, avail = [], [], []
    for line, row in rows:
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != p + 2:
            raise DataFormatError(f"{path}: line {line}: expected {p + 2} fields, got {len(row)}")
        parsed = []
        for col, cell in enumerate(row, start=1):
            cell = cell.strip()
            if cell == "":
                if col <= 2:
                    raise DataFormatError(f"{path}: line {line}, column {col}: missing coordinate")
                parsed.append(None)
                continue
            try:
                x = float(cell)
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {line}, column {col}: cannot parse {cell!r}") from None
            if not math.isfinite(x):
                raise DataFormatError(f"{path}: line {line}, column {col}: non-finite value")
            parsed.append(x)
        pts.append(parsed[:2])
        vals.append([0.0 if c is None else c for c in parsed[2:]])
        avail.append([c is not None for c in parsed[2:]])
    if not pts:
        raise DataFormatError(f"{path}: no data rows")
    pts = np.array(pts)
    _, first, counts = np.unique(pts, axis=0, return_index=True, return_counts=True)
    if np.any(counts > 1):
        k = int(first[np.argmax(counts > 1)])
        raise DataFormatError(f"{path}: duplicate location {tuple(pts[k])} (line {k + 2})")
    locs = Locations(pts)
    return locs, ObservedData(np.array(vals).T, np.array(avail).T)


def save_dataset(path, locs: Locations, data: ObservedData) -> None:
    """Write locations and data, leaving unavailable cells empty."""
    with _open_write(path) as fh:
        w = _writer(fh)
        w.writerow(["x", "y"] + [f"v{j}" for j in range(1, data.p + 1)])
        for i in range(data.n):
            cells = [_num(c) for c in locs.points[i]]
            cells += [_num(data.y[j, i]) if data.avail[j, i] else "" for j in range(data.p)]
            w.writerow(cells)


def save_matrix_csv(path, header, rows) -> None:
    with _open_write(path) as fh:
        w = _writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([c if isinstance(c, str) else _num(c) for c in r])


def load_matrix_csv(path) -> tuple[list[str], np.ndarray]:
    rows = _rows(path)
    try:
        _, header = next(rows)
    except StopIteration:
        raise DataFormatError(f"{path}: empty file") from None
    out = []
    for line, row in rows:
        if not row:
            continue
        if len(row) != len(header):
            raise DataFormatError(
                f"{path}: line {line}: expected {len(header)} fields, got {len(row)}")
        try:
            out.append([float(c) for c in row])
        except ValueError as exc:
            raise DataFormatError(f"{path}: line {line}: {exc}") from None
    return [h.strip() for h in header], np.array(out, dtype=float).reshape(len(out), len(header))


class ChainWriter:
    """Incremental chain CSV writer, flushed every ``flush_every`` records."""

    def __init__(self, path, p: int, flush_every: int = 100):
        self.path = Path(path)
        self.p = p
        self.flush_every = flush_every
        self._fh = _open_write(self.path)
        self._w = _writer(self._fh)
        self._w.writerow(ChainRecord.header(p))
        self._fh.flush()
        self.count = 0

    def write(self, rec: ChainRecord) -> None:
        self._w.writerow([_num(x) for x in rec.to_row()])
        self.count += 1
        if self.count % self.flush_every == 0:
            self._fh.flush()

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def save_chain(path, records, p: int | None = None) -> None:
    records = list(records)
    if p is None:
        if not records:
            raise ValueError("p is required for an empty chain")
        p = records[0].p
    with ChainWriter(path, p) as w:
        for r in records:
            w.write(r)


def _p_from_width(width: int) -> int:
    # width = 2p^2 + 3p + 1
    p = int(round((-3 + math.sqrt(9 - 8 * (1 - width))) / 4))
    if p < 1 or 2 * p * p + 3 * p + 1 != width:
        raise DataFormatError(f"chain file has {width} columns, which fits no p")
    return p


def load_chain(path) -> list[ChainRecord]:
    header, arr = load_matrix_csv(path)
    p = _p_from_width(len(header))
    if header != ChainRecord.header(p):
        raise DataFormatError(f"{path}: line 1: unexpected chain header")
    return [ChainRecord.from_row(row, p) for row in arr]


class LatentWriter:
    """Latent draws, one row per retained iteration, ``V`` flattened row-major."""

    def __init__(self, path, p: int, n: int, flush_every: int = 100):
        self.shape = (p, n)
        self.flush_every = flush_every
        self._fh = _open_write(path)
        self._w = _writer(self._fh)
        self._w.writerow([f"v{j}_{i}" for j in range(1, p + 1) for i in range(1, n + 1)])
        self._fh.flush()
        self.count = 0

    def write(self, v) -> None:
        v = np.asarray(v, dtype=float)
        if v.shape != self.shape:
            raise ValueError(f"latent draw has shape {v.shape}, expected {self.shape}")
        self._w.writerow([_num(x) for x in v.ravel()])
        self.count += 1
        if self.count % self.flush_every == 0:
            self._fh.flush()

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def load_latents(path, p: int) -> list[np.ndarray]:
    header, arr = load_matrix_csv(path)
    if len(header) % p:
        raise DataFormatError(f"{path}: {len(header)} columns is not a multiple of p={p}")
    n = len(header) // p
    return [row.reshape(p, n) for row in arr]


def _fmt_value(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    arr = np.asarray(v)
    if arr.ndim == 0:
        x = arr.item()
        return str(x) if isinstance(x, (int, np.integer)) else _num(x)
    if arr.ndim == 1:
        return ", ".join(_fmt_value(x) for x in arr)
    return "; ".join(_fmt_value(r) for r in arr)


def write_key_values(path, items: dict) -> None:
    """Line-oriented ``key = value`` file; vectors use ',' and matrix rows ';'."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for k, v in items.items():
            fh.write(f"{k} = {_fmt_value(v)}\n")


def read_key_values(path) -> dict[str, str]:
    """Parse ``key = value`` lines; '#' starts a comment.  Values stay strings."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataFormatError(f"{path}: line {line_no}: expected 'key = value'")
            k, v = (s.strip() for s in line.split("=", 1))
            if not k:
                raise DataFormatError(f"{path}: line {line_no}: empty key")
            if k in out:
                raise DataFormatError(f"{path}: line {line_no}: duplicate key {k!r}")
            out[k] = v
    return out
