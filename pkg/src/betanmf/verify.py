"""Randomized self-checks of the library's structural guarantees.

Each suite draws random instances and checks one property the update
machinery is supposed to satisfy: the joint bound majorizes the
objective and is tight at its anchor, one sweep of joint updates never
increases the bound, full outer iterations of either family never
increase the objective, the specialized beta in {0, 1, 2} kernels agree
with the general ones, the first joint and block updates of the first
factor coincide, and positivity is preserved.  The first failing
instance, if any, is serialized for replay.
"""

from __future__ import annotations

import numpy as np

from . import updates as _updates
from .core import FactorPair, divergence_total
from .majorizer import MajorizerAnchor, aux_value
from .solver import init_factors

DEFAULT_BETA_GRID = (-0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0)


def _random_instance(rng, n_rows=6, n_cols=5, rank=3):
    v = rng.uniform(0.1, 3.0, size=(n_rows, n_cols))
    w = rng.uniform(0.1, 2.0, size=(n_rows, rank))
    h = rng.uniform(0.1, 2.0, size=(rank, n_cols))
    return v, w, h


def _relative(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _max_relative(a, b):
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def check_majorization(rng, trials, beta_grid):
    """Bound >= objective everywhere; bound == objective at the anchor."""
    for t in range(trials):
        for beta in beta_grid:
            v, wt, ht = _random_instance(rng)
            wc = rng.uniform(0.1, 2.0, size=wt.shape)
            hc = rng.uniform(0.1, 2.0, size=ht.shape)
            anchor = MajorizerAnchor.from_factors(wt, ht)
            obj_cand = divergence_total(v, wc @ hc, beta)
            bound = aux_value(v, FactorPair(wc, hc), anchor, beta)
            if bound < obj_cand - 1e-9 * (1.0 + abs(obj_cand)):
                return _fail("majorization violated", trial=t, beta=beta,
                             v=v, anchor_w=wt, anchor_h=ht, w=wc, h=hc,
                             bound=bound, objective=obj_cand)
            obj_anchor = divergence_total(v, wt @ ht, beta)
            tight = aux_value(v, FactorPair(wt, ht), anchor, beta)
            if _relative(tight, obj_anchor) > 1e-9:
                return _fail("tightness violated", trial=t, beta=beta,
                             v=v, anchor_w=wt, anchor_h=ht,
                             bound=tight, objective=obj_anchor)
    return None


def check_bound_descent(rng, trials, beta_grid):
    """One sweep of joint updates does not increase the bound."""
    for t in range(trials):
        for beta in beta_grid:
            v, wt, ht = _random_instance(rng, 8, 6, 3)
            anchor = MajorizerAnchor.from_factors(wt, ht)
            before = aux_value(v, FactorPair(wt, ht), anchor, beta)
            w1 = _updates.jmm_update_w(v, anchor, ht, beta)
            h1 = _updates.jmm_update_h(v, anchor, w1, beta)
            after = aux_value(v, FactorPair(w1, h1), anchor, beta)
            if after > before + 1e-9 * (1.0 + abs(before)):
                return _fail("bound increased after a joint sweep", trial=t,
                             beta=beta, v=v, anchor_w=wt, anchor_h=ht,
                             before=before, after=after)
    return None


def check_objective_descent(rng, trials, beta_grid):
    """One full outer iteration of either family does not increase the objective."""
    for t in range(trials):
        for beta in beta_grid:
            v, w, h = _random_instance(rng, 8, 6, 3)
            before = divergence_total(v, w @ h, beta)

            w_b = _updates.bmm_update_w(v, w, h, beta)
            h_b = _updates.bmm_update_h(v, w_b, h, beta)
            after_b = divergence_total(v, w_b @ h_b, beta)
            if after_b > before * (1.0 + 1e-10) + 1e-300:
                return _fail("objective increased after a block iteration",
                             trial=t, beta=beta, v=v, w=w, h=h,
                             before=before, after=after_b)

            anchor = MajorizerAnchor.from_factors(w, h)
            w_j = _updates.jmm_update_w(v, anchor, h, beta)
            h_j = _updates.jmm_update_h(v, anchor, w_j, beta)
            after_j = divergence_total(v, w_j @ h_j, beta)
            if after_j > before * (1.0 + 1e-10) + 1e-300:
                return _fail("objective increased after a joint iteration",
                             trial=t, beta=beta, v=v, w=w, h=h,
                             before=before, after=after_j)
    return None


def check_fast_paths(rng, trials, beta_grid):
    """Specialized kernels match the general ones for beta in {0, 1, 2}."""
    special = [b for b in beta_grid if b in (0.0, 1.0, 2.0)] or [0.0, 1.0, 2.0]
    for t in range(trials):
        for beta in special:
            v, w, h = _random_instance(rng)
            pairs = [
                ("block w", _updates.bmm_update_w(v, w, h, beta),
                 _updates.fast_bmm_update_w(v, w, h, beta)),
                ("block h", _updates.bmm_update_h(v, w, h, beta),
                 _updates.fast_bmm_update_h(v, w, h, beta)),
            ]
            anchor = MajorizerAnchor.from_factors(w, h)
            h_cur = rng.uniform(0.1, 2.0, size=h.shape)
            w_cur = rng.uniform(0.1, 2.0, size=w.shape)
            pairs.append(
                ("joint w", _updates.jmm_update_w(v, anchor, h_cur, beta),
                 _updates.fast_jmm_update_w(v, anchor, h_cur, beta)))
            pairs.append(
                ("joint h", _updates.jmm_update_h(v, anchor, w_cur, beta),
                 _updates.fast_jmm_update_h(v, anchor, w_cur, beta)))
            for name, general, fast in pairs:
                err = _max_relative(fast, general)
                if err > 1e-12:
                    return _fail(f"fast path disagrees ({name})", trial=t,
                                 beta=beta, v=v, w=w, h=h, error=err)
    return None


def check_w_coincidence(rng, trials, beta_grid):
    """First joint update of the first factor equals the block update."""
    for t in range(trials):
        for beta in beta_grid:
            v, w, h = _random_instance(rng)
            anchor = MajorizerAnchor.from_factors(w, h)
            block = _updates.bmm_update_w(v, w, h, beta)
            joint = _updates.jmm_update_w(v, anchor, h, beta)
            err = _max_relative(joint, block)
            if err > 1e-14:
                return _fail("first-factor updates do not coincide", trial=t,
                             beta=beta, v=v, w=w, h=h, error=err)
    return None


def check_positivity(rng, trials, beta_grid):
    """Updates keep strictly positive factors strictly positive."""
    for t in range(trials):
        for beta in beta_grid:
            v, w, h = _random_instance(rng)
            anchor = MajorizerAnchor.from_factors(w, h)
            outputs = [
                _updates.bmm_update_w(v, w, h, beta),
                _updates.bmm_update_h(v, w, h, beta),
                _updates.jmm_update_w(v, anchor, h, beta),
                _updates.jmm_update_h(v, anchor, w, beta),
            ]
            for out in outputs:
                if not np.isfinite(out).all() or out.min() <= 0.0:
                    return _fail("positivity lost", trial=t, beta=beta,
                                 v=v, w=w, h=h)
    return None


def _fail(message, **payload):
    return {"message": message, "payload": payload}


SUITES = [
    ("majorization", check_majorization),
    ("bound-descent", check_bound_descent),
    ("objective-descent", check_objective_descent),
    ("fast-path", check_fast_paths),
    ("w-coincidence", check_w_coincidence),
    ("positivity", check_positivity),
]


def run_property_suites(trials=25, beta_grid=DEFAULT_BETA_GRID, seed=0,
                        counterexample_path="verify-counterexample.npz"):
    """Run every suite; serialize the first failure for replay.

    Returns
    -------
    (bool, list[str])
        Overall pass flag and one printable line per suite.
    """
    if trials < 1:
        raise ValueError("trials must be a positive integer")
    beta_grid = tuple(float(b) for b in beta_grid)
    lines = []
    all_ok = True
    failure_saved = False
    for name, suite in SUITES:
        rng = np.random.default_rng(seed)
        failure = suite(rng, trials, beta_grid)
        if failure is None:
            lines.append(f"{name:<20} {trials:>4} trials  pass")
            continue
        all_ok = False
        lines.append(f"{name:<20} {trials:>4} trials  FAIL: {failure['message']}")
        if not failure_saved:
            arrays = {
                k: np.asarray(val)
                for k, val in failure["payload"].items()
                if isinstance(val, (np.ndarray, float, int))
            }
            arrays["suite"] = np.array(name)
            arrays["message"] = np.array(failure["message"])
            np.savez(counterexample_path, **arrays)
            lines.append(f"{'':<20} counterexample saved to {counterexample_path}")
            failure_saved = True
    return all_ok, lines


# init_factors is re-exported so replayed counterexamples can rebuild the
# exact starting point of a failing fit.
__all__ = ["DEFAULT_BETA_GRID", "SUITES", "run_property_suites", "init_factors"]
