"""
Smoothed-aggregation algebraic multigrid, applied as one V-cycle.

Setup per level:
1. Strength graph: i ~ j (i != j) if |a_ij| > theta sqrt(a_ii a_jj)
2. Greedy root-node aggregation over the strength graph
3. Tentative prolongation = aggregate indicator, smoothed by one weighted
   Jacobi step: P = (I - w D^-1 A) T
4. Galerkin coarse operator A_c = P^T A P

The finest level is always coarsened once (unless aggregation degenerates);
coarsening continues while a level has more than ``max_coarse`` unknowns.
The coarsest level is solved with a dense Cholesky factorization.

Each application runs one V-cycle from a zero initial guess with one pre- and
one post-smoothing weighted Jacobi step, which makes M^-1 linear and
symmetric.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from ..core.config import AmgParams, check_dense_cap
from ..core.sparse import CsrMatrix
from .base import Preconditioner, PreconditionerKind

logger = logging.getLogger(__name__)

UNAGGREGATED = -1


@dataclass(frozen=True, eq=False)
class AmgLevel:
    """One level of the hierarchy; P is None on the coarsest level."""

    A: sp.csr_array
    inv_diag: np.ndarray
    weight: float
    P: Optional[sp.csr_array] = None
    R: Optional[sp.csr_array] = None

    @property
    def size(self) -> int:
        return int(self.A.shape[0])


@dataclass(frozen=True, eq=False)
class AmgHierarchy:
    """Multigrid hierarchy with a dense Cholesky factor of the coarsest level."""

    levels: tuple[AmgLevel, ...]
    coarse_factor: Optional[tuple[np.ndarray, bool]]

    @property
    def level_sizes(self) -> list[int]:
        return [level.size for level in self.levels]

    def v_cycle(self, b: np.ndarray, depth: int = 0) -> np.ndarray:
        """Approximate A^-1 b with one V-cycle starting from zero."""
        level = self.levels[depth]
        if level.P is None:
            if self.coarse_factor is None:
                # Single-level fallback: pre + post Jacobi only.
                return _smooth_twice(level, b)
            return scipy.linalg.cho_solve(self.coarse_factor, b)

        x = _jacobi(level, np.zeros_like(b), b)
        residual = b - level.A @ x
        x = x + level.P @ self.v_cycle(level.R @ residual, depth + 1)
        return _jacobi(level, x, b)


def _jacobi(level: AmgLevel, x: np.ndarray, b: np.ndarray) -> np.ndarray:
    scale = level.weight * level.inv_diag
    if b.ndim == 2:
        scale = scale[:, None]
    return x + scale * (b - level.A @ x)


def _smooth_twice(level: AmgLevel, b: np.ndarray) -> np.ndarray:
    x = _jacobi(level, np.zeros_like(b), b)
    return _jacobi(level, x, b)


def strength_graph(A: sp.csr_array, theta: float) -> sp.csr_array:
    """Symmetric strength-of-connection pattern, diagonal excluded."""
    coo = A.tocoo()
    diag = A.diagonal()
    off = coo.row != coo.col
    rows, cols, vals = coo.row[off], coo.col[off], coo.data[off]
    strong = np.abs(vals) > theta * np.sqrt(np.abs(diag[rows] * diag[cols]))
    n = A.shape[0]
    S = sp.csr_array(
        (np.ones(int(strong.sum())), (rows[strong], cols[strong])), shape=(n, n)
    )
    S.sort_indices()
    return S


def greedy_aggregation(S: sp.csr_array) -> np.ndarray:
    """
    Root-node aggregation in three passes.

    1. A node whose strong neighbours are all unaggregated becomes a root and
       takes them into its aggregate.
    2. Remaining nodes join the aggregate of an aggregated strong neighbour.
    3. Leftovers form new aggregates with their unaggregated neighbours.

    Returns:
        Aggregate index per node
    """
    n = S.shape[0]
    indptr, indices = S.indptr, S.indices
    agg = np.full(n, UNAGGREGATED, dtype=np.int64)
    n_agg = 0

    for i in range(n):
        neighbours = indices[indptr[i] : indptr[i + 1]]
        if agg[i] == UNAGGREGATED and np.all(agg[neighbours] == UNAGGREGATED):
            agg[i] = n_agg
            agg[neighbours] = n_agg
            n_agg += 1

    first_pass = agg.copy()
    for i in range(n):
        if agg[i] != UNAGGREGATED:
            continue
        neighbours = indices[indptr[i] : indptr[i + 1]]
        joined = first_pass[neighbours]
        joined = joined[joined != UNAGGREGATED]
        if joined.size:
            agg[i] = joined[0]

    for i in range(n):
        if agg[i] != UNAGGREGATED:
            continue
        neighbours = indices[indptr[i] : indptr[i + 1]]
        agg[i] = n_agg
        free = neighbours[agg[neighbours] == UNAGGREGATED]
        agg[free] = n_agg
        n_agg += 1

    return agg


def _jacobi_weight(A: sp.csr_array, inv_diag: np.ndarray, omega: float) -> float:
    """Weight omega * 2 / rho_hat, rho_hat the Gershgorin bound of D^-1 A."""
    row_sums = np.asarray(abs(A).sum(axis=1)).ravel()
    rho_hat = float(np.max(row_sums * np.abs(inv_diag)))
    return omega * 2.0 / rho_hat


def _make_level(A: sp.csr_array, omega: float) -> AmgLevel:
    diag = A.diagonal()
    if np.any(diag <= 0):
        raise ValueError("AMG needs a positive diagonal on every level")
    inv_diag = 1.0 / diag
    return AmgLevel(A=A, inv_diag=inv_diag, weight=_jacobi_weight(A, inv_diag, omega))


def build_hierarchy(A: CsrMatrix, params: AmgParams) -> AmgHierarchy:
    """Run the smoothed-aggregation setup."""
    current = sp.csr_array(A.scipy, copy=True)
    levels: list[AmgLevel] = []

    while len(levels) + 1 < params.max_levels:
        level = _make_level(current, params.omega)
        if levels and level.size <= params.max_coarse:
            levels.append(level)
            break
        agg = greedy_aggregation(strength_graph(current, params.theta))
        n_coarse = int(agg.max()) + 1 if agg.size else 0
        if n_coarse == 0 or n_coarse >= level.size:
            logger.debug(f"Aggregation degenerate at size {level.size}, stopping")
            levels.append(level)
            break

        n = level.size
        T = sp.csr_array((np.ones(n), (np.arange(n), agg)), shape=(n, n_coarse))
        smoother = sp.eye_array(n, format="csr") - level.weight * (
            sp.diags_array(level.inv_diag) @ current
        )
        P = sp.csr_array(smoother @ T)
        R = sp.csr_array(P.T)
        levels.append(
            AmgLevel(A=current, inv_diag=level.inv_diag, weight=level.weight, P=P, R=R)
        )
        current = sp.csr_array(R @ current @ P)
        current.sum_duplicates()
        current.sort_indices()
    else:
        levels.append(_make_level(current, params.omega))

    coarse_factor = None
    if len(levels) > 1:
        coarsest = levels[-1].A
        check_dense_cap(coarsest.shape[0], "AMG coarsest level")
        coarse_dense = coarsest.toarray()
        coarse_factor = scipy.linalg.cho_factor(0.5 * (coarse_dense + coarse_dense.T), lower=True)

    return AmgHierarchy(levels=tuple(levels), coarse_factor=coarse_factor)


def amg_setup(A: CsrMatrix, params: Optional[AmgParams] = None) -> Preconditioner:
    """
    Build a smoothed-aggregation AMG preconditioner (one V-cycle per apply).

    Degenerate aggregation (no reduction in size) falls back to a
    single-level weighted Jacobi sweep pair.

    Args:
        A: SPD matrix
        params: Setup parameters (defaults: theta=0.08, omega=2/3, max_coarse=16)

    Returns:
        Preconditioner with deferred density and ``info['levels']`` sizes
    """
    params = params or AmgParams()
    start = time.perf_counter()
    hierarchy = build_hierarchy(A, params)
    setup_ms = (time.perf_counter() - start) * 1e3
    logger.debug(f"AMG hierarchy level sizes: {hierarchy.level_sizes}")

    return Preconditioner(
        kind=PreconditionerKind.AMG,
        n=A.n_rows,
        apply=hierarchy.v_cycle,
        density_hint=None,
        info={"levels": hierarchy.level_sizes},
        setup_time_ms=setup_ms,
    )
