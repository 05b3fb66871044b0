"""Matrix ingestion and result persistence.

Dense CSV (comma-separated, no quoting, optional single header row
detected by a non-numeric first token) and MatrixMarket coordinate files
are read into dense :class:`~betanmf.core.DataMatrix` instances; sparse
inputs are densified, guarded by an entry-count limit.  Factors and
traces are written as CSV with 17 significant digits, enough for an
exact float64 round-trip.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.io import mmread

from .core import DataMatrix

#: Refuse to densify sparse inputs with more than this many entries.
DEFAULT_DENSIFY_LIMIT = 10**8

TRACE_HEADER = "iter,objective,seconds,kkt_w,kkt_h"


class MatrixParseError(ValueError):
    """Malformed matrix file; the message points at the offending spot."""


@dataclass
class MatrixFormat:
    """Input format selector: ``kind`` is "csv" or "mtx"."""

    kind: str
    densify_limit: int = DEFAULT_DENSIFY_LIMIT

    def __post_init__(self):
        if self.kind not in ("csv", "mtx"):
            raise ValueError(f"unknown matrix format {self.kind!r}")
        if self.densify_limit < 1:
            raise ValueError("densify_limit must be positive")


def load_matrix(path, fmt="csv", densify_limit=DEFAULT_DENSIFY_LIMIT):
    """Read a nonnegative matrix from disk.

    Parameters
    ----------
    path : str or Path
        File to read.
    fmt : str or MatrixFormat
        "csv" for dense comma-separated values, "mtx" for MatrixMarket.
    densify_limit : int
        Maximum number of dense entries allowed when densifying a
        sparse MatrixMarket file.

    Returns
    -------
    DataMatrix
        Dense matrix with a zero shift.
    """
    if not isinstance(fmt, MatrixFormat):
        fmt = MatrixFormat(str(fmt), densify_limit)
    if fmt.kind == "csv":
        values = _read_csv(path)
    else:
        values = _read_matrix_market(path, fmt.densify_limit)
    _reject_bad_values(values, path)
    return DataMatrix(values)


def _is_number(token):
    try:
        float(token)
    except ValueError:
        return False
    return True


def _read_csv(path):
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            tokens = line.split(",")
            if not rows and not _is_number(tokens[0].strip()):
                continue  # header row
            parsed = []
            for col, token in enumerate(tokens, start=1):
                token = token.strip()
                try:
                    parsed.append(float(token))
                except ValueError:
                    raise MatrixParseError(
                        f"{path}: cannot parse {token!r} at line {lineno}, "
                        f"column {col}"
                    ) from None
            if width is None:
                width = len(parsed)
            elif len(parsed) != width:
                raise MatrixParseError(
                    f"{path}: line {lineno} has {len(parsed)} values, "
                    f"expected {width}"
                )
            rows.append(parsed)
    if not rows:
        raise MatrixParseError(f"{path}: no data rows found")
    return np.array(rows, dtype=float)


def _read_matrix_market(path, densify_limit):
    shape = _peek_mm_shape(path)
    if shape[0] * shape[1] > densify_limit:
        raise MatrixParseError(
            f"{path}: densifying a {shape[0]} x {shape[1]} matrix would create "
            f"{shape[0] * shape[1]} entries, above the limit of {densify_limit}"
        )
    try:
        m = mmread(path)
    except Exception as exc:
        raise MatrixParseError(f"{path}: {exc}") from exc
    if hasattr(m, "toarray"):
        m = m.toarray()
    return np.asarray(m, dtype=float)


def _peek_mm_shape(path):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("%%MatrixMarket"):
            raise MatrixParseError(f"{path}: missing MatrixMarket header line")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line or line.startswith("%"):
                continue
            parts = line.split()
            if len(parts) < 2:
                raise MatrixParseError(
                    f"{path}: malformed size line at line {lineno}"
                )
            try:
                return int(parts[0]), int(parts[1])
            except ValueError:
                raise MatrixParseError(
                    f"{path}: malformed size line at line {lineno}"
                ) from None
    raise MatrixParseError(f"{path}: no size line found")


def _reject_bad_values(values, path):
    bad = ~np.isfinite(values)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise MatrixParseError(
            f"{path}: non-finite value {values[r, c]} at row {r + 1}, "
            f"column {c + 1}"
        )
    neg = values < 0.0
    if neg.any():
        r, c = np.argwhere(neg)[0]
        raise MatrixParseError(
            f"{path}: negative value {values[r, c]} at row {r + 1}, "
            f"column {c + 1}"
        )


def _write_csv(path, matrix):
    np.savetxt(path, matrix, fmt="%.17g", delimiter=",")


def save_factors(result, out_dir):
    """Write the factors of a fit as W.csv and H.csv under ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    _write_csv(os.path.join(out_dir, "W.csv"), result.factors.w)
    _write_csv(os.path.join(out_dir, "H.csv"), result.factors.h)


def save_trace(result, path):
    """Write the per-iteration trace as CSV, one row per outer iteration."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(TRACE_HEADER + "\n")
        for row in result.trace:
            fh.write(
                f"{row.iteration},{row.objective:.17g},{row.seconds:.17g},"
                f"{row.kkt_w:.17g},{row.kkt_h:.17g}\n"
            )


def load_factors(out_dir):
    """Read back factors written by :func:`save_factors` (exact round-trip)."""
    w = _read_csv(os.path.join(out_dir, "W.csv"))
    h = _read_csv(os.path.join(out_dir, "H.csv"))
    return w, h
