"""Convergence and solution-quality diagnostics.

First-order (KKT) residuals measure distance to a critical point of the
objective under nonnegativity constraints; column matching compares two
factorizations up to the inherent permutation ambiguity; and the
operation-count model predicts how many multiplications, divisions and
additions the joint updates save over the block updates per outer
iteration.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import DataMatrix, elementwise_power

#: Largest rank for which the column assignment is solved by exhaustive
#: search; beyond this an optimal-assignment solver is used.
EXHAUSTIVE_MATCH_LIMIT = 8


@dataclass
class KktResiduals:
    """Normalized first-order residuals for the two factors."""

    res_w: float
    res_h: float


@dataclass
class SavingsReport:
    """Per-outer-iteration operation-count differences, block minus joint.

    Positive values mean the joint updates save that many operations.
    """

    mult_diff: int
    div_diff: int
    add_diff: int


def kkt_residuals_arrays(x, w, h, beta, kappa=0.0):
    """Residuals from raw arrays; ``x`` is the already-shifted data."""
    p = w @ h
    if kappa:
        p += kappa
    if beta == 2.0:
        grad_core = p - x
    else:
        grad_core = elementwise_power(p, beta - 2.0) * (p - x)
    grad_w = grad_core @ h.T
    grad_h = w.T @ grad_core
    res_w = float(np.abs(np.minimum(w, grad_w)).sum()) / (w.shape[0] * w.shape[1])
    res_h = float(np.abs(np.minimum(h, grad_h)).sum()) / (h.shape[0] * h.shape[1])
    return res_w, res_h


def kkt_residuals(data, factors, beta):
    """First-order optimality residuals of a factor pair.

    For each factor, the entrywise minimum of the factor and the partial
    gradient of the objective vanishes exactly at a KKT point; the
    residual is the l1 norm of that minimum divided by the factor's
    entry count.

    Parameters
    ----------
    data : DataMatrix or ndarray
        Observations (the shift, if any, is applied to both the data and
        the model product).
    factors : FactorPair
        Strictly positive factors.
    beta : float
        Divergence shape parameter.
    """
    if not isinstance(data, DataMatrix):
        data = DataMatrix(np.asarray(data, dtype=float))
    if data.shape != (factors.w.shape[0], factors.h.shape[1]):
        raise ValueError(
            f"dimension mismatch: data is {data.shape}, "
            f"model is {(factors.w.shape[0], factors.h.shape[1])}"
        )
    res_w, res_h = kkt_residuals_arrays(
        data.shifted(), factors.w, factors.h, beta, kappa=data.kappa
    )
    return KktResiduals(res_w, res_h)


def match_columns(wa, wb):
    """Match the columns of two same-shape factor matrices.

    Finds the permutation maximizing the total cosine similarity between
    matched columns (exhaustively for small ranks, by optimal assignment
    otherwise) and reports the worst matched pair.

    Returns
    -------
    (ndarray, float)
        ``perm`` such that column k of ``wa`` is matched to column
        ``perm[k]`` of ``wb``, and the maximum over matched pairs of the
        relative l2 column difference.
    """
    wa = np.asarray(wa, dtype=float)
    wb = np.asarray(wb, dtype=float)
    if wa.shape != wb.shape:
        raise ValueError(f"shape mismatch: {wa.shape} vs {wb.shape}")
    rank = wa.shape[1]
    norms_a = np.linalg.norm(wa, axis=0)
    norms_b = np.linalg.norm(wb, axis=0)
    similarity = (wa.T @ wb) / np.outer(
        np.maximum(norms_a, 1e-300), np.maximum(norms_b, 1e-300)
    )
    if rank <= EXHAUSTIVE_MATCH_LIMIT:
        best, best_score = None, -np.inf
        for cand in permutations(range(rank)):
            score = similarity[np.arange(rank), cand].sum()
            if score > best_score:
                best, best_score = cand, score
        perm = np.array(best)
    else:
        rows, cols = linear_sum_assignment(similarity, maximize=True)
        perm = cols[np.argsort(rows)]
    diffs = np.linalg.norm(wa - wb[:, perm], axis=0)
    scales = np.maximum(np.maximum(norms_a, norms_b[perm]), 1e-300)
    mismatch = float(np.max(diffs / scales))
    return perm, mismatch


def predicted_savings(n_rows, n_cols, rank, n_sub, beta):
    """Operation-count savings of the joint over the block updates.

    Counts are per outer iteration with ``n_sub`` inner sweeps on each
    factor for both families.  The exact beta = 0, 1, 2 rows apply when
    beta hits those values; otherwise the interval row (<1, within
    ]1,2[, or >2) applies.

    The division entry for beta < 1 is −L·K·(FK+KN) − FN; the leading
    rank factor breaks the −L(FK+KN) pattern of the neighboring rows
    but is intentional here, reproduced as published rather than
    silently corrected.
    """
    f, n, k, l_sub = int(n_rows), int(n_cols), int(rank), int(n_sub)
    if min(f, n, k, l_sub) < 1:
        raise ValueError("dimensions and sub-iteration count must be positive")
    fn, fk, kn, fnk = f * n, f * k, k * n, f * n * k
    if beta == 0.0:
        mult = (2 * l_sub - 1) * fnk + 2 * l_sub * fn
        div = 2 * (l_sub - 1) * fn - l_sub * (fk + kn)
        add = (2 * l_sub - 1) * fn * (k - 1)
    elif beta == 1.0:
        mult = (4 * l_sub - 3) * fnk
        div = (2 * l_sub - 1) * fn
        add = (4 * l_sub - 3) * fnk - (l_sub - 1) * (fn + fk + kn)
    elif beta == 2.0:
        mult = (2 * l_sub - 1) * fnk
        div = -l_sub * (fk + kn)
        add = (2 * l_sub - 1) * fn * (k - 1)
    elif 1.0 < beta < 2.0:
        mult = (2 * l_sub - 1) * fnk - l_sub * (fk + kn)
        div = -l_sub * (2 * fn - fk - kn)
        add = (2 * l_sub - 1) * fn * (k - 1)
    elif beta > 2.0:
        mult = (2 * l_sub - 1) * (fnk + fn)
        div = -l_sub * (fk + kn)
        add = (2 * l_sub - 1) * fn * (k - 1)
    else:
        mult = (2 * l_sub - 1) * fnk
        div = -l_sub * k * (fk + kn) - fn
        add = (2 * l_sub - 1) * fn * (k - 1)
    return SavingsReport(mult_diff=mult, div_diff=div, add_diff=add)
