"""Multiplicative update kernels.

Two families are implemented:

* block updates, which rebuild the model product W @ H at every call and
  move one factor while the other is held fixed, and
* joint updates, which move a factor against a frozen anchor pair whose
  product is cached once per outer iteration.

Both are of the form ``X <- X * ratio ** gamma`` and preserve strict
positivity from positive starts whenever the (shifted) data is strictly
positive.  Matrix powers appearing in numerator and denominator are
computed once and reused, and the exponents 0 and 1 never materialize
(an all-ones operand collapses to a row or column sum), so the
simplified beta = 0, 1, 2 forms fall out of the general code path.

The ``fast_*`` kernels spell those simplified forms out literally as an
independent route; tests check the two routes agree.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import (
    DEFAULT_FLOOR,
    gamma_exponent,
    guarded_divide,
    power_pair,
)
from .majorizer import MajorizerAnchor


class Algorithm(str, Enum):
    BMM = "bmm"
    JMM = "jmm"


@dataclass
class OpCounter:
    """Instrumentation hooks for tests: counts products and kernel calls."""

    kernel_products: int = 0
    anchor_products: int = 0
    objective_products: int = 0
    w_updates: int = 0
    h_updates: int = 0

    def reset(self):
        self.kernel_products = 0
        self.anchor_products = 0
        self.objective_products = 0
        self.w_updates = 0
        self.h_updates = 0


@dataclass
class UpdateKind:
    """Which update family to run and how.

    ``use_fast_path=None`` resolves to True exactly when beta is 0, 1 or
    2.  ``heuristic_gamma_one`` replaces the update exponent by 1; it is
    off by default, and for the joint updates it empirically still
    decreases the objective but tends to end at worse solutions, so no
    descent guarantee is claimed for it.
    """

    algorithm: Algorithm
    use_fast_path: bool | None = None
    heuristic_gamma_one: bool = False

    def fast_path_enabled(self, beta):
        if self.use_fast_path is None:
            return beta in (0.0, 1.0, 2.0)
        return self.use_fast_path

    def exponent(self, beta):
        return 1.0 if self.heuristic_gamma_one else gamma_exponent(beta)


def chi1(m, m_tilde, beta):
    """First beta-dependent map of the moving factor in the joint updates.

    Entrywise m_tilde**(2-beta) / m**(1-beta) for beta <= 2, and m itself
    for beta > 2.
    """
    m, m_tilde = _check_same_shape(m, m_tilde)
    if beta >= 2.0:
        return m
    if beta == 1.0:
        return m_tilde
    if beta == 0.0:
        return (m_tilde * m_tilde) / m
    return np.power(m_tilde, 2.0 - beta) * np.power(m, beta - 1.0)


def chi2(m, m_tilde, beta):
    """Second beta-dependent map: m for beta < 1, m**beta / m_tilde**(beta-1) above."""
    m, m_tilde = _check_same_shape(m, m_tilde)
    if beta <= 1.0:
        return m
    if beta == 2.0:
        return (m * m) / m_tilde
    return np.power(m, beta) / np.power(m_tilde, beta - 1.0)


def _check_same_shape(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def _apply_exponent(ratio, gamma):
    if gamma == 1.0:
        return ratio
    if gamma == 0.5:
        return np.sqrt(ratio)
    return np.power(ratio, gamma)


def _times_ht(x, h, rows):
    # x @ h.T with x either a dense F x N matrix or None (all ones).
    if x is None:
        return np.broadcast_to(h.sum(axis=1), (rows, h.shape[0]))
    return x @ h.T


def _wt_times(w, x, cols):
    # w.T @ x with x either dense or None (all ones).
    if x is None:
        return np.broadcast_to(w.sum(axis=0)[:, None], (w.shape[1], cols))
    return w.T @ x


def _resolve_gamma(beta, gamma):
    return gamma_exponent(beta) if gamma is None else float(gamma)


def _product(w, h, kappa, counter, which):
    p = w @ h
    if kappa:
        p += kappa
    if counter is not None:
        counter.kernel_products += 1
        if which == "w":
            counter.w_updates += 1
        else:
            counter.h_updates += 1
    return p


def bmm_update_w(v, w, h, beta, *, kappa=0.0, gamma=None, floor=DEFAULT_FLOOR,
                 counter=None):
    """One block update of the first factor.

    ``v`` is the already-shifted data (V + kappa); the model product is
    rebuilt here, shifted by the same kappa.  Returns
    ``w * (((p**(beta-2) * v) @ h.T) / (p**(beta-1) @ h.T)) ** gamma``.
    """
    p = _product(w, h, kappa, counter, "w")
    low, high = power_pair(p, beta - 2.0)
    num = _times_ht(v if low is None else v * low, h, w.shape[0])
    den = _times_ht(high, h, w.shape[0])
    ratio = guarded_divide(num, den, floor)
    return w * _apply_exponent(ratio, _resolve_gamma(beta, gamma))


def bmm_update_h(v, w, h, beta, *, kappa=0.0, gamma=None, floor=DEFAULT_FLOOR,
                 counter=None):
    """One block update of the second factor (mirror of :func:`bmm_update_w`)."""
    p = _product(w, h, kappa, counter, "h")
    low, high = power_pair(p, beta - 2.0)
    num = _wt_times(w, v if low is None else v * low, h.shape[1])
    den = _wt_times(w, high, h.shape[1])
    ratio = guarded_divide(num, den, floor)
    return h * _apply_exponent(ratio, _resolve_gamma(beta, gamma))


def joint_bases(v, product, beta):
    """Anchor-constant pieces of the joint updates.

    Returns ``(v * product**(beta-2), product**(beta-1))`` with None
    standing for an all-ones matrix; both stay fixed across the
    sub-iterations of one outer iteration, so callers should compute
    them once and pass them to every kernel call against the same
    anchor.  The common exponents avoid spurious full-matrix passes.
    """
    if beta == 2.0:
        return v, product
    if beta == 1.0:
        return v / product, None
    if beta == 0.0:
        return v / (product * product), 1.0 / product
    low, high = power_pair(product, beta - 2.0)
    return (v if low is None else v * low), high


def jmm_update_w(v, anchor, h_current, beta, *, gamma=None, floor=DEFAULT_FLOOR,
                 counter=None, bases=None):
    """One joint update of the first factor against a frozen anchor.

    Returns ``anchor.w * ((num_base @ chi1(h, anchor.h).T) /
    (den_base @ chi2(h, anchor.h).T)) ** gamma`` where the bases are the
    anchor-constant matrices of :func:`joint_bases`.
    """
    if bases is None:
        bases = joint_bases(v, anchor.product, beta)
    num_base, den_base = bases
    if counter is not None:
        counter.w_updates += 1
    rows = anchor.w.shape[0]
    num = _times_ht(num_base, chi1(h_current, anchor.h, beta), rows)
    den = _times_ht(den_base, chi2(h_current, anchor.h, beta), rows)
    ratio = guarded_divide(num, den, floor)
    return anchor.w * _apply_exponent(ratio, _resolve_gamma(beta, gamma))


def jmm_update_h(v, anchor, w_current, beta, *, gamma=None, floor=DEFAULT_FLOOR,
                 counter=None, bases=None):
    """One joint update of the second factor (mirror of :func:`jmm_update_w`)."""
    if bases is None:
        bases = joint_bases(v, anchor.product, beta)
    num_base, den_base = bases
    if counter is not None:
        counter.h_updates += 1
    cols = anchor.h.shape[1]
    num = _wt_times(chi1(w_current, anchor.w, beta), num_base, cols)
    den = _wt_times(chi2(w_current, anchor.w, beta), den_base, cols)
    ratio = guarded_divide(num, den, floor)
    return anchor.h * _apply_exponent(ratio, _resolve_gamma(beta, gamma))


def _require_special_beta(beta):
    if beta not in (0.0, 1.0, 2.0):
        raise ValueError(f"specialized updates require beta in {{0, 1, 2}}, got {beta}")


def fast_bmm_update_w(v, w, h, beta, *, kappa=0.0, gamma=None,
                      floor=DEFAULT_FLOOR, counter=None):
    """Literal simplified block update of the first factor for beta in {0, 1, 2}."""
    _require_special_beta(beta)
    g = _resolve_gamma(beta, gamma)
    p = _product(w, h, kappa, counter, "w")
    rows = w.shape[0]
    if beta == 0.0:
        num = (v / (p * p)) @ h.T
        den = (1.0 / p) @ h.T
    elif beta == 1.0:
        num = (v / p) @ h.T
        den = np.broadcast_to(h.sum(axis=1), (rows, h.shape[0]))
    else:
        num = v @ h.T
        den = p @ h.T
    return w * _apply_exponent(guarded_divide(num, den, floor), g)


def fast_bmm_update_h(v, w, h, beta, *, kappa=0.0, gamma=None,
                      floor=DEFAULT_FLOOR, counter=None):
    """Literal simplified block update of the second factor for beta in {0, 1, 2}."""
    _require_special_beta(beta)
    g = _resolve_gamma(beta, gamma)
    p = _product(w, h, kappa, counter, "h")
    cols = h.shape[1]
    if beta == 0.0:
        num = w.T @ (v / (p * p))
        den = w.T @ (1.0 / p)
    elif beta == 1.0:
        num = w.T @ (v / p)
        den = np.broadcast_to(w.sum(axis=0)[:, None], (h.shape[0], cols))
    else:
        num = w.T @ v
        den = w.T @ p
    return h * _apply_exponent(guarded_divide(num, den, floor), g)


def fast_jmm_update_w(v, anchor, h_current, beta, *, gamma=None,
                      floor=DEFAULT_FLOOR, counter=None, bases=None):
    """Literal simplified joint update of the first factor for beta in {0, 1, 2}.

    ``bases`` takes the anchor-constant pair of :func:`joint_bases`; when
    given, the data/anchor ratios are not recomputed, which is where the
    joint scheme saves work across sub-iterations.
    """
    _require_special_beta(beta)
    g = _resolve_gamma(beta, gamma)
    if counter is not None:
        counter.w_updates += 1
    vt, ht = anchor.product, anchor.h
    rows = anchor.w.shape[0]
    if beta == 0.0:
        num_base = v / (vt * vt) if bases is None else bases[0]
        den_base = 1.0 / vt if bases is None else bases[1]
        num = num_base @ ((ht * ht) / h_current).T
        den = den_base @ h_current.T
    elif beta == 1.0:
        num_base = v / vt if bases is None else bases[0]
        num = num_base @ ht.T
        den = np.broadcast_to(h_current.sum(axis=1), (rows, ht.shape[0]))
    else:
        num = v @ h_current.T
        den = vt @ ((h_current * h_current) / ht).T
    return anchor.w * _apply_exponent(guarded_divide(num, den, floor), g)


def fast_jmm_update_h(v, anchor, w_current, beta, *, gamma=None,
                      floor=DEFAULT_FLOOR, counter=None, bases=None):
    """Literal simplified joint update of the second factor for beta in {0, 1, 2}."""
    _require_special_beta(beta)
    g = _resolve_gamma(beta, gamma)
    if counter is not None:
        counter.h_updates += 1
    vt, wt = anchor.product, anchor.w
    cols = anchor.h.shape[1]
    if beta == 0.0:
        num_base = v / (vt * vt) if bases is None else bases[0]
        den_base = 1.0 / vt if bases is None else bases[1]
        num = ((wt * wt) / w_current).T @ num_base
        den = w_current.T @ den_base
    elif beta == 1.0:
        num_base = v / vt if bases is None else bases[0]
        num = wt.T @ num_base
        den = np.broadcast_to(w_current.sum(axis=0)[:, None], (wt.shape[1], cols))
    else:
        num = w_current.T @ v
        den = ((w_current * w_current) / wt).T @ vt
    return anchor.h * _apply_exponent(guarded_divide(num, den, floor), g)


def fast_path_update(v, beta, kind, *, target, w=None, h=None, anchor=None,
                     kappa=0.0, floor=DEFAULT_FLOOR, counter=None):
    """Dispatch to the specialized beta in {0, 1, 2} kernel.

    ``target`` selects which factor is produced ("w" or "h").  Block
    updates take the current pair (w, h); joint updates take the anchor
    plus the current value of the factor that is *not* updated.
    """
    _require_special_beta(beta)
    if target not in ("w", "h"):
        raise ValueError(f"target must be 'w' or 'h', got {target!r}")
    gamma = 1.0 if kind.heuristic_gamma_one else None
    if kind.algorithm == Algorithm.BMM:
        if w is None or h is None:
            raise ValueError("block updates need both current factors")
        fn = fast_bmm_update_w if target == "w" else fast_bmm_update_h
        return fn(v, w, h, beta, kappa=kappa, gamma=gamma, floor=floor,
                  counter=counter)
    if anchor is None:
        raise ValueError("joint updates need an anchor")
    if target == "w":
        if h is None:
            raise ValueError("updating w needs the current h")
        return fast_jmm_update_w(v, anchor, h, beta, gamma=gamma, floor=floor,
                                 counter=counter)
    if w is None:
        raise ValueError("updating h needs the current w")
    return fast_jmm_update_h(v, anchor, w, beta, gamma=gamma, floor=floor,
                             counter=counter)


__all__ = [
    "Algorithm",
    "OpCounter",
    "UpdateKind",
    "MajorizerAnchor",
    "chi1",
    "chi2",
    "joint_bases",
    "bmm_update_w",
    "bmm_update_h",
    "jmm_update_w",
    "jmm_update_h",
    "fast_bmm_update_w",
    "fast_bmm_update_h",
    "fast_jmm_update_w",
    "fast_jmm_update_h",
    "fast_path_update",
]
