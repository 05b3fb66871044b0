from itertools import permutations

import numpy as np
import pytest

from betanmf import (
    DataMatrix,
    FactorPair,
    kkt_residuals,
    match_columns,
    predicted_savings,
)

from conftest import random_instance


def test_kkt_zero_at_exact_fit(rng):
    _, w, h = random_instance(rng, 5, 4, 2)
    v = w @ h
    res = kkt_residuals(v, FactorPair(w, h), 1.0)
    assert res.res_w == pytest.approx(0.0, abs=1e-12)
    assert res.res_h == pytest.approx(0.0, abs=1e-12)


def test_kkt_scalar_example():
    res = kkt_residuals(
        np.array([[2.0]]),
        FactorPair(np.array([[1.0]]), np.array([[1.0]])),
        2.0,
    )
    assert res.res_w == 1.0
    assert res.res_h == 1.0


def test_kkt_respects_shift(rng):
    v, w, h = random_instance(rng)
    v[0, 0] = 0.0
    res = kkt_residuals(DataMatrix(v, 0.1), FactorPair(w, h), 0.0)
    assert np.isfinite(res.res_w) and np.isfinite(res.res_h)
    assert res.res_w >= 0.0 and res.res_h >= 0.0


def test_kkt_dimension_mismatch(rng):
    pair = FactorPair(np.ones((3, 2)), np.ones((2, 4)))
    with pytest.raises(ValueError):
        kkt_residuals(np.ones((3, 5)), pair, 2.0)


def test_match_columns_identity(rng):
    w = rng.uniform(0.1, 1.0, size=(10, 4))
    w /= np.linalg.norm(w, axis=0)
    perm, mismatch = match_columns(w, w)
    assert list(perm) == [0, 1, 2, 3]
    assert mismatch == 0.0


def test_match_columns_recovers_swap(rng):
    w = rng.uniform(0.1, 1.0, size=(10, 4))
    w /= np.linalg.norm(w, axis=0)
    swapped = w[:, [1, 0, 2, 3]]
    perm, mismatch = match_columns(w, swapped)
    assert list(perm) == [1, 0, 2, 3]
    assert mismatch == 0.0


def test_match_columns_no_spurious_match_on_random_pairs(rng):
    for _ in range(10):
        wa = np.abs(rng.standard_normal((20, 3)))
        wb = np.abs(rng.standard_normal((20, 3)))
        wa /= np.linalg.norm(wa, axis=0)
        wb /= np.linalg.norm(wb, axis=0)
        _, mismatch = match_columns(wa, wb)
        assert mismatch > 0.1


def test_match_columns_agrees_with_exhaustive_search(rng):
    for rank in (2, 3, 4, 5, 6):
        wa = np.abs(rng.standard_normal((12, rank)))
        wb = np.abs(rng.standard_normal((12, rank)))
        perm, _ = match_columns(wa, wb)
        sim = (wa / np.linalg.norm(wa, axis=0)).T @ (
            wb / np.linalg.norm(wb, axis=0)
        )
        best = max(
            permutations(range(rank)),
            key=lambda p: sim[np.arange(rank), p].sum(),
        )
        assert sim[np.arange(rank), perm].sum() == pytest.approx(
            sim[np.arange(rank), best].sum(), rel=1e-12
        )


def test_match_columns_large_rank_uses_assignment_solver(rng):
    wa = np.abs(rng.standard_normal((30, 12)))
    perm, mismatch = match_columns(wa, wa[:, ::-1])
    assert list(perm) == list(range(11, -1, -1))
    assert mismatch == pytest.approx(0.0, abs=1e-12)


def test_match_columns_shape_mismatch():
    with pytest.raises(ValueError):
        match_columns(np.ones((4, 2)), np.ones((4, 3)))


def test_predicted_savings_kl_example():
    report = predicted_savings(2, 3, 4, 1, 1.0)
    assert (report.mult_diff, report.div_diff, report.add_diff) == (24, 6, 24)


def test_predicted_savings_quadratic_example():
    report = predicted_savings(1, 1, 1, 1, 2.0)
    assert (report.mult_diff, report.div_diff, report.add_diff) == (1, -2, 0)


@pytest.mark.parametrize("beta", [0.0, 1.0, 2.0])
def test_predicted_savings_positive_for_common_betas(beta):
    for shape in ((2, 3, 2), (10, 8, 4), (100, 50, 7)):
        f, n, k = shape
        report = predicted_savings(f, n, k, 1, beta)
        assert report.mult_diff > 0
        assert report.add_diff >= 0
        if k >= 2:
            assert report.add_diff > 0


def test_predicted_savings_linear_in_sub_iterations():
    for beta in (-0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0):
        reports = [predicted_savings(6, 5, 3, l, beta) for l in (1, 2, 3)]
        for attr in ("mult_diff", "div_diff", "add_diff"):
            a, b, c = (getattr(r, attr) for r in reports)
            assert c - b == b - a  # constant increments


def test_predicted_savings_interval_dispatch():
    # 1.5 uses the ]1,2[ row, not the beta=1 or beta=2 row
    mid = predicted_savings(4, 5, 3, 1, 1.5)
    exact1 = predicted_savings(4, 5, 3, 1, 1.0)
    exact2 = predicted_savings(4, 5, 3, 1, 2.0)
    assert mid.mult_diff not in (exact1.mult_diff,)
    assert mid.mult_diff == exact2.mult_diff - 1 * (4 * 3 + 3 * 5)
    # above-2 and below-1 rows
    above = predicted_savings(4, 5, 3, 1, 3.0)
    assert above.mult_diff == 4 * 5 * 3 + 4 * 5
    below = predicted_savings(4, 5, 3, 1, -0.5)
    assert below.mult_diff == 4 * 5 * 3


def test_predicted_savings_below_one_division_row_is_verbatim():
    # The leading rank factor in the division count is reproduced as
    # published, not "fixed" to match the neighboring rows.
    f, n, k, l = 4, 5, 3, 2
    report = predicted_savings(f, n, k, l, 0.5)
    assert report.div_diff == -l * k * (f * k + k * n) - f * n


def test_predicted_savings_validates_inputs():
    with pytest.raises(ValueError):
        predicted_savings(0, 5, 3, 1, 1.0)
    with pytest.raises(ValueError):
        predicted_savings(4, 5, 3, 0, 1.0)
