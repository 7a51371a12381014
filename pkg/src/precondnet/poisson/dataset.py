"""
Dataset persistence in the PMD1 text format.

Layout (UTF-8, LF line endings)::

    PMD1 <sample_count>
    sample <id> <height> <width>
    <row_0> <row_1> ... <row_{height-1}>      # '.' fluid, '#' solid
    matrix <n> <nnz>
    <i> <j> <value>                           # nnz lines, row-major
    rhs <n>
    <value>                                   # n lines

Values are written with 17 significant digits, so a save/load round trip is
bit-exact.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Sequence

import numpy as np

from ..core.config import FLOAT_FORMAT
from ..core.exceptions import DatasetParseError
from ..core.sparse import csr_from_arrays
from .assembly import PoissonSample
from .grid import OccupancyGrid

logger = logging.getLogger(__name__)

MAGIC = "PMD1"


def _fmt(value: float) -> str:
    return FLOAT_FORMAT % value


def save_dataset(samples: Sequence[PoissonSample], path: Path) -> None:
    """
    Write samples to a PMD1 file.

    Args:
        samples: Samples to persist (may be empty)
        path: Output file path
    """
    lines = [f"{MAGIC} {len(samples)}"]
    for sample in samples:
        if any(ch.isspace() for ch in sample.sample_id) or not sample.sample_id:
            raise ValueError(f"Sample id must be a non-empty token: {sample.sample_id!r}")
        grid = sample.grid
        lines.append(f"sample {sample.sample_id} {grid.height} {grid.width}")
        lines.append(" ".join(grid.to_rows()))
        A = sample.matrix
        lines.append(f"matrix {A.n_rows} {A.nnz}")
        lines.extend(
            f"{i} {j} {_fmt(v)}"
            for i, j, v in zip(A.row_indices, A.col_idx, A.values, strict=True)
        )
        lines.append(f"rhs {sample.n}")
        lines.extend(_fmt(v) for v in sample.rhs)

    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    logger.info(f"Wrote {len(samples)} samples to {path}")


class _LineReader:
    """Sequential line access with 1-based line numbers for error messages."""

    def __init__(self, lines: list[str]) -> None:
        self._lines = lines
        self.line_no = 0

    def next(self, expecting: str) -> str:
        if self.line_no >= len(self._lines):
            raise DatasetParseError(
                f"unexpected end of file, missing {expecting}", self.line_no + 1
            )
        line = self._lines[self.line_no]
        self.line_no += 1
        return line

    def header(self, keyword: str, n_fields: int, expecting: str) -> list[str]:
        """Read a '<keyword> f1 f2 ...' line and return the fields."""
        line = self.next(expecting)
        parts = line.split()
        if not parts or parts[0] != keyword or len(parts) != n_fields + 1:
            raise DatasetParseError(
                f"expected '{keyword}' header with {n_fields} fields, got {line!r}",
                self.line_no,
            )
        return parts[1:]

    def integer(self, token: str) -> int:
        try:
            value = int(token)
        except ValueError:
            raise DatasetParseError(f"invalid integer {token!r}", self.line_no) from None
        if value < 0:
            raise DatasetParseError(f"negative count {value}", self.line_no)
        return value

    def real(self, token: str) -> float:
        try:
            return float(token)
        except ValueError:
            raise DatasetParseError(f"invalid number {token!r}", self.line_no) from None


def _read_sample(reader: _LineReader, ordinal: int) -> PoissonSample:
    sample_id, h_tok, w_tok = reader.header(
        "sample", 3, f"'sample' header of sample {ordinal}"
    )
    height, width = reader.integer(h_tok), reader.integer(w_tok)

    rows = reader.next(f"grid rows of sample {sample_id}").split()
    if len(rows) != height or any(len(row) != width for row in rows):
        raise DatasetParseError(
            f"grid of sample {sample_id} must have {height} rows of {width} cells",
            reader.line_no,
        )
    try:
        grid = OccupancyGrid.from_rows(rows)
    except ValueError as e:
        raise DatasetParseError(str(e), reader.line_no) from None

    n_tok, nnz_tok = reader.header("matrix", 2, f"'matrix' section of sample {sample_id}")
    n, nnz = reader.integer(n_tok), reader.integer(nnz_tok)
    ii = np.empty(nnz, dtype=np.int64)
    jj = np.empty(nnz, dtype=np.int64)
    vv = np.empty(nnz, dtype=np.float64)
    for k in range(nnz):
        parts = reader.next(f"matrix entry {k} of sample {sample_id}").split()
        if len(parts) != 3:
            raise DatasetParseError("matrix entry needs '<i> <j> <value>'", reader.line_no)
        ii[k], jj[k] = reader.integer(parts[0]), reader.integer(parts[1])
        vv[k] = reader.real(parts[2])
    try:
        matrix = csr_from_arrays(ii, jj, vv, n, n)
    except ValueError as e:
        raise DatasetParseError(str(e), reader.line_no) from None

    (m_tok,) = reader.header("rhs", 1, f"'rhs' section of sample {sample_id}")
    m = reader.integer(m_tok)
    rhs = np.array(
        [reader.real(reader.next(f"rhs value {k} of sample {sample_id}").strip())
         for k in range(m)],
        dtype=np.float64,
    )
    try:
        return PoissonSample(sample_id=sample_id, grid=grid, matrix=matrix, rhs=rhs)
    except ValueError as e:
        raise DatasetParseError(str(e), reader.line_no) from None


def load_dataset(path: Path) -> list[PoissonSample]:
    """
    Read a PMD1 file.

    Raises:
        FileNotFoundError: If the file does not exist
        DatasetParseError: On malformed content, with the offending line number
    """
    if not Path(path).exists():
        raise FileNotFoundError(f"Dataset file not found: {path}")
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()

    reader = _LineReader(lines)
    magic, count_tok = (reader.next("'PMD1' header").split() + ["", ""])[:2]
    if magic != MAGIC:
        raise DatasetParseError(f"expected '{MAGIC} <count>' header", 1)
    count = reader.integer(count_tok)

    samples = [_read_sample(reader, k) for k in range(count)]
    if any(line.strip() for line in lines[reader.line_no :]):
        raise DatasetParseError("trailing content after last sample", reader.line_no + 1)

    logger.info(f"Loaded {len(samples)} samples from {path}")
    return samples
