"""
Sparse feature maps over matrix images.

A FeatureMap stores an explicit list of sites (pixel coordinates, sorted
row-major) and a (channels, sites) value array. Pixels that are not sites are
exactly zero. Convolutions compute on sites only, so the site set of every
layer is a pure function of the input sparsity pattern; this is what keeps a
learned preconditioner sparse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.sparse import CsrMatrix


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Multi-channel sparse image of size height x width."""

    height: int
    width: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        """Validate site coordinates (sorted, unique, in range) and value shape."""
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.float64)
        if rows.shape != cols.shape or rows.ndim != 1:
            raise ValueError("rows and cols must be 1-D arrays of equal length")
        if values.ndim != 2 or values.shape[1] != rows.size:
            raise ValueError(
                f"values must have shape (channels, {rows.size}), got {values.shape}"
            )
        if rows.size:
            if rows.min() < 0 or rows.max() >= self.height:
                raise ValueError("site row out of range")
            if cols.min() < 0 or cols.max() >= self.width:
                raise ValueError("site column out of range")
            keys = rows * self.width + cols
            if np.any(np.diff(keys) <= 0):
                raise ValueError("sites must be unique and sorted row-major")
        for array in (rows, cols, values):
            array.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "values", values)

    @property
    def channels(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_sites(self) -> int:
        return int(self.rows.size)

    @property
    def keys(self) -> np.ndarray:
        """Row-major linear index of every site."""
        return self.rows * self.width + self.cols

    def with_values(self, values: np.ndarray) -> FeatureMap:
        """Same sites, new values."""
        return FeatureMap(self.height, self.width, self.rows, self.cols, values)

    def site_mask(self) -> np.ndarray:
        """Boolean image of the structural sites."""
        mask = np.zeros((self.height, self.width), dtype=bool)
        mask[self.rows, self.cols] = True
        return mask

    def active_mask(self) -> np.ndarray:
        """Boolean image of the pixels carrying a nonzero value in any channel."""
        mask = np.zeros((self.height, self.width), dtype=bool)
        nonzero = np.any(self.values != 0.0, axis=0)
        mask[self.rows[nonzero], self.cols[nonzero]] = True
        return mask

    def to_dense(self) -> np.ndarray:
        """(channels, height, width) dense array, zero off the sites."""
        dense = np.zeros((self.channels, self.height, self.width))
        dense[:, self.rows, self.cols] = self.values
        return dense


def encode_input(A: CsrMatrix) -> FeatureMap:
    """
    Encode tril(A) and diag(A) as a two-channel feature map.

    Channel 0 holds the strictly lower entries at their (i, j) positions,
    channel 1 the diagonal values on the diagonal. Sites are the union of both
    supports.

    Raises:
        ValueError: If A is not square
    """
    if A.n_rows != A.n_cols:
        raise ValueError(f"encode_input needs a square matrix, got {A.shape}")
    lower = A.tril()
    rows = lower.row_indices
    cols = lower.col_idx
    values = np.zeros((2, rows.size))
    on_diag = rows == cols
    values[0, ~on_diag] = lower.values[~on_diag]
    values[1, on_diag] = lower.values[on_diag]
    return FeatureMap(A.n_rows, A.n_cols, rows, cols, values)


def dilate_keys(
    rows: np.ndarray, cols: np.ndarray, height: int, width: int, reach: int
) -> np.ndarray:
    """
    Sorted row-major keys of the down-right dilation by a (reach+1)^2 window.

    Each site (r, c) spreads to (r + a, c + b) for 0 <= a, b <= reach, clipped
    to the image; one 2x2 top-left-padded convolution is reach 1.
    """
    keys = []
    for a in range(reach + 1):
        for b in range(reach + 1):
            r, c = rows + a, cols + b
            keep = (r < height) & (c < width)
            keys.append(r[keep] * width + c[keep])
    if not keys:
        return np.zeros(0, dtype=np.int64)
    return np.unique(np.concatenate(keys))


def support_within_dilation(
    output: FeatureMap, source: FeatureMap, reach: int = 4
) -> bool:
    """True if every active pixel of ``output`` lies in the dilated site set of ``source``."""
    allowed = dilate_keys(source.rows, source.cols, source.height, source.width, reach)
    mask = output.active_mask()
    active_rows, active_cols = np.nonzero(mask)
    return bool(np.all(np.isin(active_rows * output.width + active_cols, allowed)))
