"""Seeded Gaussian measurement matrices, sparse unit signals and clean responses.

Within one :class:`~robust_biht.rng.Rng` stream draws happen in call order,
so a trial that samples ``A``, then ``x``, then an initial estimate is a pure
function of its seed.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, ResourceError
from .linops import SparseUnitVector, _signs_unchecked
from .rng import Rng

__all__ = [
    "MeasurementMatrix",
    "sample_gaussian_matrix",
    "sample_sparse_unit",
    "clean_responses",
    "write_matrix_csv",
    "read_matrix_csv",
    "read_responses_csv",
    "CsvFormatError",
]

# entries, i.e. 8 * MAX_ENTRIES bytes
MAX_ENTRIES = 200_000_000


@dataclass(frozen=True, eq=False)
class MeasurementMatrix:
    rows: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        if self.rows.ndim != 2 or 0 in self.rows.shape:
            raise InvalidArgument("measurement matrix must be a non-empty 2-d array")
        if not np.all(np.isfinite(self.rows)):
            raise InvalidArgument("measurement matrix has non-finite entries")

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    @property
    def n(self) -> int:
        return self.rows.shape[1]


def as_matrix(A) -> np.ndarray:
    if isinstance(A, MeasurementMatrix):
        return A.rows
    arr = np.asarray(A, dtype=float)
    if arr.ndim != 2:
        raise InvalidArgument("A must be 2-d")
    return arr


def _stream(seed_or_rng) -> Rng:
    return seed_or_rng if isinstance(seed_or_rng, Rng) else Rng(seed_or_rng)


def sample_gaussian_matrix(m: int, n: int, seed) -> MeasurementMatrix:
    """i.i.d. N(0,1) entries filled in row-major order.

    ``seed`` may be an integer or an :class:`Rng` to continue an existing
    stream.
    """
    m, n = int(m), int(n)
    if m < 1 or n < 1:
        raise InvalidArgument("m and n must be positive")
    if m * n > MAX_ENTRIES:
        raise ResourceError(f"{m}x{n} matrix exceeds the {MAX_ENTRIES}-entry budget")
    rng = _stream(seed)
    rows = rng.normals(m * n).reshape(m, n)
    return MeasurementMatrix(rows, rng.seed if not isinstance(seed, Rng) else None)


def sample_sparse_unit(n: int, k: int, seed) -> SparseUnitVector:
    """Uniform ``k``-subset support, Gaussian values, normalized."""
    n, k = int(n), int(k)
    if k < 1 or k > n:
        raise InvalidArgument(f"need 1 <= k <= n, got k={k}, n={n}")
    rng = _stream(seed)
    supp = rng.subset(n, k)
    vals = rng.normals(k)
    norm = np.linalg.norm(vals)
    while norm == 0.0:  # pragma: no cover - probability zero
        vals = rng.normals(k)
        norm = np.linalg.norm(vals)
    vals = vals / norm
    return SparseUnitVector(n, tuple(supp), tuple(float(v) for v in vals))


def clean_responses(A, x) -> np.ndarray:
    """``sgn(Ax)`` with ``sgn(0) = +1``."""
    M = as_matrix(A)
    xv = x.dense() if isinstance(x, SparseUnitVector) else np.asarray(x, dtype=float)
    if xv.ndim != 1 or xv.size != M.shape[1]:
        raise InvalidArgument(f"signal dimension {xv.size} does not match A with n={M.shape[1]}")
    return _signs_unchecked(M @ xv)


class CsvFormatError(InvalidArgument):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def write_matrix_csv(A, path_or_file) -> None:
    """One row per line, 17 significant digits, ``.`` as decimal point."""
    M = as_matrix(A)
    lines = [",".join(format(v, ".17g") for v in row) for row in M]
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w", encoding="ascii", newline="") as fh:
            fh.write(text)


def _read_text(path_or_file) -> str:
    if hasattr(path_or_file, "read"):
        return path_or_file.read()
    with open(path_or_file, encoding="utf-8") as fh:
        return fh.read()


def read_matrix_csv(path_or_file) -> MeasurementMatrix:
    rows = []
    width = None
    for lineno, row in enumerate(csv.reader(io.StringIO(_read_text(path_or_file))), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise CsvFormatError("non-numeric entry", lineno) from None
        if not all(np.isfinite(vals)):
            raise CsvFormatError("non-finite entry", lineno)
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise CsvFormatError(f"expected {width} columns, found {len(vals)}", lineno)
        rows.append(vals)
    if not rows:
        raise CsvFormatError("empty matrix file")
    return MeasurementMatrix(np.array(rows, dtype=float))


def read_responses_csv(path_or_file) -> np.ndarray:
    """Responses as +1/-1 values, comma- or newline-separated."""
    out = []
    for lineno, row in enumerate(csv.reader(io.StringIO(_read_text(path_or_file))), start=1):
        for cell in row:
            cell = cell.strip()
            if not cell:
                continue
            try:
                v = float(cell)
            except ValueError:
                raise CsvFormatError(f"bad response {cell!r}", lineno) from None
            if v not in (1.0, -1.0):
                raise CsvFormatError(f"response {cell!r} is not +1 or -1", lineno)
            out.append(int(v))
    if not out:
        raise CsvFormatError("empty responses file")
    return np.array(out, dtype=np.int8)
