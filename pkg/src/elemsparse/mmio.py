"""Matrix Market I/O (``real general``, ``array`` and ``coordinate``) and
single-pass entry streams.

Indices are 1-based in files and 0-based everywhere else; the conversion
happens in this module only.
"""

import math
import os
from typing import Iterable, Iterator, Tuple

import numpy as np

from .matrix import as_matrix

Entry = Tuple[int, int, float]

HEADER = "%%MatrixMarket"


class MatrixMarketError(ValueError):
    pass


def _read_header(lines: Iterator[str], path) -> Tuple[str, Tuple[int, ...]]:
    try:
        banner = next(lines)
    except StopIteration:
        raise MatrixMarketError(f"{path}: empty file") from None
    parts = banner.split()
    if len(parts) != 5 or parts[0] != HEADER or parts[1].lower() != "matrix":
        raise MatrixMarketError(f"{path}: missing or malformed %%MatrixMarket header")
    layout, field, symmetry = (p.lower() for p in parts[2:])
    if layout not in ("array", "coordinate"):
        raise MatrixMarketError(f"{path}: unknown layout {layout!r}")
    if field not in ("real", "integer", "double"):
        raise MatrixMarketError(f"{path}: unsupported field {field!r} (real only)")
    if symmetry != "general":
        raise MatrixMarketError(f"{path}: unsupported symmetry {symmetry!r} (general only)")
    for line in lines:
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        try:
            size = tuple(int(tok) for tok in s.split())
        except ValueError:
            raise MatrixMarketError(f"{path}: bad size line {s!r}") from None
        expected = 2 if layout == "array" else 3
        if len(size) != expected:
            raise MatrixMarketError(f"{path}: bad size line {s!r}")
        if size[0] != size[1] or size[0] < 1:
            raise MatrixMarketError(f"{path}: matrix must be square, got {size[0]}x{size[1]}")
        return layout, size
    raise MatrixMarketError(f"{path}: missing size line")


def _data_lines(lines: Iterator[str]) -> Iterator[str]:
    for line in lines:
        s = line.strip()
        if s and not s.startswith("%"):
            yield s


def _iter_entries(lines: Iterator[str], layout, size, path) -> Iterator[Entry]:
    n = size[0]
    count = 0
    if layout == "array":
        total = n * n
        for s in _data_lines(lines):
            if count >= total:
                raise MatrixMarketError(f"{path}: more than {total} array entries")
            # array layout is column-major
            j, i = divmod(count, n)
            count += 1
            yield i, j, float(s)
    else:
        total = size[2]
        for s in _data_lines(lines):
            if count >= total:
                raise MatrixMarketError(f"{path}: more than {total} coordinate entries")
            tok = s.split()
            if len(tok) != 3:
                raise MatrixMarketError(f"{path}: bad entry line {s!r}")
            i, j = int(tok[0]) - 1, int(tok[1]) - 1
            if not (0 <= i < n and 0 <= j < n):
                raise MatrixMarketError(f"{path}: index ({tok[0]}, {tok[1]}) out of range")
            count += 1
            yield i, j, float(tok[2])
    if count != total:
        raise MatrixMarketError(f"{path}: expected {total} entries, found {count}")


def read_matrix(path) -> np.ndarray:
    """Read a square Matrix Market file into a dense array.

    Repeated coordinates in a ``coordinate`` file are summed.
    """
    with open(path) as fh:
        lines = iter(fh)
        layout, size = _read_header(lines, path)
        a = np.zeros((size[0], size[0]))
        for i, j, v in _iter_entries(lines, layout, size, path):
            a[i, j] += v
    try:
        return as_matrix(a)
    except ValueError as exc:
        raise MatrixMarketError(f"{path}: {exc}") from None


def _fmt(v: float) -> str:
    return repr(float(v))


def write_array(path, a) -> None:
    a = as_matrix(a)
    n = a.shape[0]
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{HEADER} matrix array real general\n{n} {n}\n")
        for v in a.ravel(order="F"):
            fh.write(_fmt(v) + "\n")


def write_coordinate(path, n: int, rows, cols, values) -> None:
    rows, cols, values = np.asarray(rows), np.asarray(cols), np.asarray(values)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{HEADER} matrix coordinate real general\n{n} {n} {len(values)}\n")
        for i, j, v in zip(rows.tolist(), cols.tolist(), values.tolist()):
            fh.write(f"{i + 1} {j + 1} {_fmt(v)}\n")


def write_dense_as_coordinate(path, a) -> None:
    a = as_matrix(a)
    rows, cols = np.nonzero(a)
    write_coordinate(path, a.shape[0], rows, cols, a[rows, cols])


class EntryStream:
    """A one-shot stream of ``(i, j, value)`` entries of an n-by-n matrix.

    Each entry is handed out exactly once and counted in :attr:`reads`;
    iterating a second time raises ``RuntimeError``. Out-of-range indices
    and repeated ``(i, j)`` keys raise ``ValueError``. Duplicate detection
    keeps a set of seen keys; pass ``check_duplicates=False`` to keep the
    adapter itself at constant memory.
    """

    def __init__(self, n: int, items: Iterable[Entry], check_duplicates: bool = True):
        if n < 1:
            raise ValueError("n must be positive")
        self.n = n
        self.reads = 0
        self._items = iter(items)
        self._consumed = False
        self._seen = set() if check_duplicates else None

    def __iter__(self) -> Iterator[Entry]:
        if self._consumed:
            raise RuntimeError("entry stream already consumed (one pass only)")
        self._consumed = True
        n, seen = self.n, self._seen
        for i, j, v in self._items:
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"entry index ({i}, {j}) out of range for n={n}")
            v = float(v)
            if not math.isfinite(v):
                raise ValueError(f"non-finite value at ({i}, {j})")
            if seen is not None:
                if (i, j) in seen:
                    raise ValueError(f"duplicate entry ({i}, {j}) in stream")
                seen.add((i, j))
            self.reads += 1
            yield i, j, v


def stream_dense(a, order=None) -> EntryStream:
    """Stream every entry of ``a`` (zeros included), row-major unless an
    explicit sequence of flat row-major positions is given."""
    a = as_matrix(a)
    n = a.shape[0]
    flat = a.ravel()
    positions = range(n * n) if order is None else order

    def items():
        for k in positions:
            i, j = divmod(int(k), n)
            yield i, j, flat[k]

    return EntryStream(n, items())


class MatrixMarketStream(EntryStream):
    """Entry stream over a Matrix Market file, parsed line by line.

    The file is opened once: the header is read here and the entries are
    read during the single iteration, after which the file is closed.
    :attr:`declared_entries` is the entry count the header promises.
    """

    def __init__(self, path, check_duplicates: bool = True):
        self.path = os.fspath(path)
        self._fh = open(self.path)
        try:
            lines = iter(self._fh)
            self.layout, size = _read_header(lines, self.path)
        except Exception:
            self._fh.close()
            raise
        self.declared_entries = size[0] ** 2 if self.layout == "array" else size[2]
        super().__init__(size[0], self._entries(lines, size), check_duplicates)

    def _entries(self, lines, size) -> Iterator[Entry]:
        try:
            yield from _iter_entries(lines, self.layout, size, self.path)
        finally:
            self._fh.close()

    def close(self) -> None:
        self._fh.close()
