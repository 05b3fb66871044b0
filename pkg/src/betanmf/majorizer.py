"""Joint auxiliary upper bound of the factorization objective.

The beta-divergence, as a function of its second argument, splits into a
convex part, a concave part and a constant.  Around a frozen pair of
factors the convex part is bounded through Jensen's inequality and the
concave part through its tangent, which yields a bound that is tight at
the freeze point and jointly majorizes the objective in both factors.

This module evaluates that bound directly (dense, O(FNK)) and probes its
partial gradients by central finite differences.  It exists for property
tests and gradient audits; the solver itself only uses the closed-form
updates derived from the bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DataMatrix,
    FactorPair,
    beta_divergence_elements,
    divergence_total,
)


@dataclass
class MajorizerAnchor:
    """Frozen factors and their cached (shifted) product.

    ``product`` must equal ``w @ h + kappa`` entrywise; build instances
    through :meth:`from_factors` to guarantee it.
    """

    w: np.ndarray
    h: np.ndarray
    product: np.ndarray
    kappa: float = 0.0

    def __post_init__(self):
        # Cheap structural checks only; entry positivity and product
        # freshness are scanned by validate() so that per-iteration
        # anchor construction stays off the F x N matrix.
        if self.w.shape[1] != self.h.shape[0]:
            raise ValueError("anchor factor dimensions disagree")
        if self.product.shape != (self.w.shape[0], self.h.shape[1]):
            raise ValueError("cached product has the wrong shape")
        if self.w.min() <= 0.0 or self.h.min() <= 0.0:
            raise ValueError("anchor factors must be strictly positive")

    @classmethod
    def from_factors(cls, w, h, kappa=0.0, counter=None):
        w = np.asarray(w, dtype=float)
        h = np.asarray(h, dtype=float)
        product = w @ h
        if kappa:
            product = product + kappa
        if counter is not None:
            counter.anchor_products += 1
        return cls(w=w, h=h, product=product, kappa=float(kappa))

    def validate(self, rtol=1e-12):
        """Check entry positivity and the cached product against a fresh
        multiplication."""
        if self.product.min() <= 0.0:
            raise ValueError("anchor product must be strictly positive")
        fresh = self.w @ self.h + self.kappa
        err = np.max(np.abs(self.product - fresh) / np.maximum(np.abs(fresh), 1e-300))
        if err > rtol:
            raise ValueError(f"cached product is stale (relative error {err:.3e})")


def _convex_part(x, y, beta):
    # Convex-in-y piece of d_beta(x | y).
    if beta == 0.0:
        return x / y
    if 1.0 <= beta <= 2.0:
        return beta_divergence_elements(x, y, beta)
    if beta > 2.0:
        return np.power(y, beta) / beta
    return -x * np.power(y, beta - 1.0) / (beta - 1.0)


def _concave_part(x, y, beta):
    if beta == 0.0:
        return np.log(y)
    if 1.0 <= beta <= 2.0:
        return np.zeros(np.broadcast_shapes(np.shape(x), np.shape(y)))
    if beta > 2.0:
        return -x * np.power(y, beta - 1.0) / (beta - 1.0)
    return np.power(y, beta) / beta


def _concave_slope(x, y, beta):
    # Derivative of the concave piece with respect to y.
    if beta == 0.0:
        return 1.0 / y
    if 1.0 <= beta <= 2.0:
        return np.zeros(np.broadcast_shapes(np.shape(x), np.shape(y)))
    if beta > 2.0:
        return -x * np.power(y, beta - 2.0)
    return np.power(y, beta - 1.0)


def _constant_part(x, beta):
    if beta == 0.0:
        return -(np.log(x) + 1.0)
    if 1.0 <= beta <= 2.0:
        return np.zeros(np.shape(x))
    return np.power(x, beta) / (beta * (beta - 1.0))


def split_divergence(x, y, beta):
    """Split d_beta(x | y) into its (convex, concave, constant) parts.

    The three parts sum back to the divergence; which terms are nonzero
    depends on the beta regime (the whole divergence is already convex
    in y for beta in [1, 2]).  Accepts scalars or same-shape arrays.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0.0):
        raise ValueError("second argument must be positive")
    if np.any(x < 0.0) or (beta <= 0.0 and np.any(x == 0.0)):
        raise ValueError(f"first argument outside the domain for beta={beta}")
    convex = _convex_part(x, y, beta)
    concave = _concave_part(x, y, beta)
    constant = _constant_part(x, beta)
    if x.ndim == 0:
        return float(convex), float(concave), float(constant)
    return convex, concave, constant


def _aux_value_raw(x, w, h, anchor, beta):
    # x: shifted data, (w, h): candidate factor arrays.
    vt = anchor.product
    # Jensen weights of the frozen components, one per rank-1 term.
    lam = (anchor.w[:, None, :] * anchor.h.T[None, :, :]) / vt[:, :, None]
    y = (w[:, None, :] * h.T[None, :, :]) / lam
    convex = np.sum(lam * _convex_part(x[:, :, None], y, beta), axis=2)
    if anchor.kappa > 0.0:
        # The shift acts as one extra frozen component; its Jensen term
        # is constant in (w, h) but keeps the bound tight.
        convex = convex + (anchor.kappa / vt) * _convex_part(x, vt, beta)
    p = w @ h
    if anchor.kappa:
        p = p + anchor.kappa
    tangent = _concave_part(x, vt, beta) + _concave_slope(x, vt, beta) * (p - vt)
    return float(np.sum(convex + tangent + _constant_part(x, beta)))


def aux_value(data, candidate, anchor, beta):
    """Evaluate the joint upper bound at a candidate pair of factors.

    Returns the bound built around ``anchor``; it equals
    ``objective(data, anchor_factors, beta)`` when the candidate is the
    anchor itself, and dominates the objective everywhere else.

    Parameters
    ----------
    data : DataMatrix or ndarray
        Observations.  A DataMatrix must carry the same shift as the
        anchor.
    candidate : FactorPair
        Point at which to evaluate the bound.
    anchor : MajorizerAnchor
        Freeze point defining the bound.
    beta : float
        Divergence shape parameter.
    """
    if isinstance(data, DataMatrix):
        if data.kappa != anchor.kappa:
            raise ValueError(
                f"data shift {data.kappa} differs from anchor shift {anchor.kappa}"
            )
        x = data.shifted()
    else:
        x = np.asarray(data, dtype=float)
        if anchor.kappa:
            x = x + anchor.kappa
    if x.shape != anchor.product.shape:
        raise ValueError("data shape does not match the anchor")
    if beta <= 0.0 and x.min() <= 0.0:
        raise ValueError(f"shifted data must be positive for beta={beta}")
    return _aux_value_raw(x, candidate.w, candidate.h, anchor, beta)


def aux_partial_gradient_fd(data, candidate, anchor, beta, step=None):
    """Central finite-difference partial gradients of the bound.

    Perturbs one candidate entry at a time; the default step for an
    entry of value v is 1e-6 * max(1, v), balancing truncation against
    round-off in 64-bit floats.

    Returns
    -------
    (ndarray, ndarray)
        Gradient estimates with respect to the first (F x K) and second
        (K x N) factor.
    """
    if isinstance(data, DataMatrix):
        if data.kappa != anchor.kappa:
            raise ValueError("data shift differs from anchor shift")
        x = data.shifted()
    else:
        x = np.asarray(data, dtype=float)
        if anchor.kappa:
            x = x + anchor.kappa
    w0 = candidate.w.copy()
    h0 = candidate.h.copy()

    def steps_for(m):
        if step is not None:
            return np.full_like(m, float(step))
        return 1e-6 * np.maximum(1.0, m)

    def grad_over(m, is_w):
        g = np.empty_like(m)
        hs = steps_for(m)
        for idx in np.ndindex(m.shape):
            saved = m[idx]
            dm = hs[idx]
            m[idx] = saved + dm
            up = (
                _aux_value_raw(x, m, h0, anchor, beta)
                if is_w
                else _aux_value_raw(x, w0, m, anchor, beta)
            )
            m[idx] = saved - dm
            down = (
                _aux_value_raw(x, m, h0, anchor, beta)
                if is_w
                else _aux_value_raw(x, w0, m, anchor, beta)
            )
            m[idx] = saved
            g[idx] = (up - down) / (2.0 * dm)
        return g

    grad_w = grad_over(w0, is_w=True)
    grad_h = grad_over(h0, is_w=False)
    return grad_w, grad_h


def majorization_gap(data, candidate, anchor, beta):
    """aux_value minus objective at the candidate; nonnegative up to rounding."""
    if isinstance(data, DataMatrix):
        x = data.shifted()
        kappa = data.kappa
    else:
        x = np.asarray(data, dtype=float)
        kappa = anchor.kappa
        if kappa:
            x = x + kappa
    bound = aux_value(data, candidate, anchor, beta)
    direct = divergence_total(x, candidate.product(kappa), beta)
    return bound - direct
