import numpy as np
import pytest

from betanmf import (
    Algorithm,
    DivergenceDomainError,
    OpCounter,
    SolverConfig,
    Termination,
    fit,
    init_factors,
    normalize,
    run_bmm,
    run_jmm,
    should_stop,
    synthetic_low_rank,
)
from betanmf.diagnostics import match_columns


def test_init_factors_deterministic():
    a = init_factors(3, 2, 2, seed=7)
    b = init_factors(3, 2, 2, seed=7)
    assert np.array_equal(a.w, b.w)
    assert np.array_equal(a.h, b.h)


def test_init_factors_shapes_and_positivity():
    pair = init_factors(3, 2, 2, seed=7)
    assert pair.w.shape == (3, 2)
    assert pair.h.shape == (2, 2)
    assert pair.w.min() > 0.0
    assert pair.h.min() > 0.0


def test_init_factors_seeds_differ():
    a = init_factors(4, 4, 2, seed=1)
    b = init_factors(4, 4, 2, seed=2)
    assert not np.array_equal(a.w, b.w)


def test_normalize_hand_example():
    from betanmf import FactorPair

    pair = FactorPair(np.array([[3.0], [4.0]]), np.array([[1.0, 1.0]]))
    out = normalize(pair)
    assert np.allclose(out.w, [[0.6], [0.8]], rtol=1e-15)
    assert np.allclose(out.h, [[5.0, 5.0]], rtol=1e-15)


def test_normalize_idempotent_and_product_preserving(rng):
    from betanmf import FactorPair

    w = rng.uniform(0.1, 2.0, size=(6, 4))
    h = rng.uniform(0.1, 2.0, size=(4, 5))
    pair = FactorPair(w, h)
    once = normalize(pair)
    twice = normalize(once)
    assert np.allclose(once.w, twice.w, rtol=1e-15, atol=1e-15)
    assert np.allclose(once.h, twice.h, rtol=1e-15, atol=1e-15)
    assert np.allclose(once.w @ once.h, w @ h, rtol=1e-12)
    assert np.allclose(np.linalg.norm(once.w, axis=0), 1.0, rtol=1e-14)


def test_should_stop_examples():
    assert should_stop(1.0, 0.999999, 1e-5) is True
    assert should_stop(1.0, 0.9, 1e-5) is False
    assert should_stop(1.0, 1.0, 1e-5) is True
    assert should_stop(0.0, 0.0, 1e-5) is True


def test_exact_fit_converges_at_second_outer_iteration():
    init = init_factors(5, 4, 2, seed=3)
    v = init.w @ init.h
    for algo, runner in ((Algorithm.BMM, run_bmm), (Algorithm.JMM, run_jmm)):
        config = SolverConfig(beta=2.0, rank=2, algorithm=algo, seed=3)
        result = runner(v, config)
        assert result.termination == Termination.CONVERGED
        assert result.iterations == 2
        assert len(result.trace) == 2


def test_monotone_trace_and_small_kkt_residuals():
    v = synthetic_low_rank(20, 15, 4, noise=0.05, seed=11)
    config = SolverConfig(beta=1.0, rank=4, algorithm=Algorithm.BMM, seed=5)
    result = run_bmm(v, config)
    objectives = [row.objective for row in result.trace]
    for prev, curr in zip(objectives, objectives[1:]):
        assert curr <= prev * (1.0 + 1e-10)
    assert result.termination == Termination.CONVERGED
    assert result.trace[-1].kkt_w <= 1e-1
    assert result.trace[-1].kkt_h <= 1e-1


@pytest.mark.parametrize("algo", [Algorithm.BMM, Algorithm.JMM])
@pytest.mark.parametrize("beta", [-0.5, 0.0, 1.0, 1.5, 2.0, 3.0])
def test_monotone_descent_across_betas(algo, beta):
    v = synthetic_low_rank(12, 10, 3, noise=0.1, seed=2)
    config = SolverConfig(
        beta=beta, rank=3, algorithm=algo, seed=1, kappa=0.0,
        max_outer_iters=60, tol=1e-300,
    )
    result = fit(v, config)
    objectives = [row.objective for row in result.trace]
    for prev, curr in zip(objectives, objectives[1:]):
        assert curr <= prev * (1.0 + 1e-10)


def test_more_inner_sweeps_cannot_worsen_block_fit():
    v = synthetic_low_rank(20, 15, 4, noise=0.05, seed=11)
    common = dict(beta=1.0, rank=4, algorithm=Algorithm.BMM, seed=5,
                  max_outer_iters=40, tol=1e-300)
    single = run_bmm(v, SolverConfig(**common))
    multi = run_bmm(v, SolverConfig(sub_iters_w=10, sub_iters_h=10, **common))
    assert multi.trace[-1].objective <= single.trace[-1].objective * (1.0 + 1e-6)


def test_joint_fit_insensitive_to_inner_sweeps():
    v = synthetic_low_rank(40, 30, 4, noise=0.05, seed=21)
    common = dict(beta=1.0, rank=4, algorithm=Algorithm.JMM, seed=8,
                  max_outer_iters=80, tol=1e-300)
    l1 = run_jmm(v, SolverConfig(sub_iters=1, **common))
    l10 = run_jmm(v, SolverConfig(sub_iters=10, **common))
    a, b = l1.trace[-1].objective, l10.trace[-1].objective
    assert abs(a - b) / max(a, b) <= 1e-3


def test_reproducibility_is_bitwise():
    v = synthetic_low_rank(15, 12, 3, noise=0.1, seed=4)
    config = SolverConfig(beta=0.0, rank=3, algorithm=Algorithm.JMM, seed=9,
                          max_outer_iters=30, tol=1e-300)
    r1 = run_jmm(v, config)
    r2 = run_jmm(v, config)
    assert np.array_equal(r1.factors.w, r2.factors.w)
    assert np.array_equal(r1.factors.h, r2.factors.h)
    assert [t.objective for t in r1.trace] == [t.objective for t in r2.trace]


def test_anchor_product_computed_once_per_outer_iteration():
    v = synthetic_low_rank(10, 8, 3, noise=0.1, seed=1)
    for sub_iters in (1, 5):
        counter = OpCounter()
        config = SolverConfig(beta=1.5, rank=3, algorithm=Algorithm.JMM,
                              seed=2, sub_iters=sub_iters,
                              max_outer_iters=7, tol=1e-300)
        result = run_jmm(v, config, counter=counter)
        assert result.iterations == 7
        assert counter.anchor_products == 7
        assert counter.objective_products == 7


def test_sub_iteration_counts_honored():
    v = synthetic_low_rank(10, 8, 3, noise=0.1, seed=1)
    counter = OpCounter()
    config = SolverConfig(beta=1.5, rank=3, algorithm=Algorithm.JMM, seed=2,
                          sub_iters=4, max_outer_iters=5, tol=1e-300)
    run_jmm(v, config, counter=counter)
    assert counter.w_updates == 4 * 5
    assert counter.h_updates == 4 * 5

    counter = OpCounter()
    config = SolverConfig(beta=1.5, rank=3, algorithm=Algorithm.BMM, seed=2,
                          sub_iters_w=2, sub_iters_h=3, max_outer_iters=5,
                          tol=1e-300)
    run_bmm(v, config, counter=counter)
    assert counter.w_updates == 2 * 5
    assert counter.h_updates == 3 * 5
    # every block kernel call rebuilds the product
    assert counter.kernel_products == (2 + 3) * 5


@pytest.mark.parametrize("beta", [0.0, 1.0, 2.0])
def test_both_families_reach_the_same_solution(beta):
    # Sparse ground truth keeps the components well separated: dense
    # half-normal factors are so coherent that the minimizer position is
    # only loosely identified and the two families stop at visibly
    # different points of a near-flat valley.
    v = synthetic_low_rank(30, 24, 3, noise=0.05, seed=8, density=0.6)
    kwargs = dict(beta=beta, rank=3, seed=12, tol=1e-7, kappa=0.0,
                  max_outer_iters=6000)
    res_b = run_bmm(v, SolverConfig(algorithm=Algorithm.BMM, **kwargs))
    res_j = run_jmm(v, SolverConfig(algorithm=Algorithm.JMM, **kwargs))
    a, b = res_b.trace[-1].objective, res_j.trace[-1].objective
    assert abs(a - b) / max(a, b) <= 1e-3
    _, mismatch = match_columns(res_b.factors.w, res_j.factors.w)
    assert mismatch <= 1e-2


def test_final_factors_are_column_normalized():
    v = synthetic_low_rank(12, 9, 3, noise=0.1, seed=3)
    config = SolverConfig(beta=2.0, rank=3, algorithm=Algorithm.BMM, seed=4,
                          max_outer_iters=20, tol=1e-300)
    result = run_bmm(v, config)
    assert np.allclose(np.linalg.norm(result.factors.w, axis=0), 1.0, rtol=1e-12)


def test_trace_row_count_matches_iterations():
    v = synthetic_low_rank(10, 8, 2, noise=0.1, seed=5)
    config = SolverConfig(beta=2.0, rank=2, algorithm=Algorithm.JMM, seed=7,
                          max_outer_iters=9, tol=1e-300)
    result = run_jmm(v, config)
    assert result.termination == Termination.MAX_ITERS
    assert result.iterations == 9
    assert len(result.trace) == 9
    assert [row.iteration for row in result.trace] == list(range(1, 10))
    seconds = [row.seconds for row in result.trace]
    assert all(b >= a for a, b in zip(seconds, seconds[1:]))


def test_solver_rejects_zero_data_without_shift():
    v = np.array([[0.0, 1.0], [2.0, 3.0]])
    config = SolverConfig(beta=0.0, rank=1, algorithm=Algorithm.BMM, kappa=0.0)
    with pytest.raises(DivergenceDomainError):
        run_bmm(v, config)


def test_solver_auto_kappa_accepts_zero_data():
    v = np.array([[0.0, 1.0], [2.0, 3.0]])
    config = SolverConfig(beta=0.0, rank=1, algorithm=Algorithm.BMM,
                          max_outer_iters=10)
    result = run_bmm(v, config)
    assert len(result.trace) >= 1


def test_heuristic_gamma_one_still_descends_here():
    v = synthetic_low_rank(15, 12, 3, noise=0.05, seed=13)
    config = SolverConfig(beta=0.0, rank=3, algorithm=Algorithm.JMM, seed=3,
                          kappa=0.0, heuristic_gamma_one=True,
                          max_outer_iters=40, tol=1e-300)
    result = run_jmm(v, config)
    objectives = [row.objective for row in result.trace]
    for prev, curr in zip(objectives, objectives[1:]):
        assert curr <= prev * (1.0 + 1e-10)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(beta=1.0, rank=0, algorithm=Algorithm.BMM)
    with pytest.raises(ValueError):
        SolverConfig(beta=1.0, rank=2, algorithm=Algorithm.BMM, tol=0.0)
    with pytest.raises(ValueError):
        SolverConfig(beta=1.0, rank=2, algorithm=Algorithm.BMM, sub_iters=0)
    with pytest.raises(ValueError):
        run_jmm(np.ones((2, 2)),
                SolverConfig(beta=1.0, rank=1, algorithm=Algorithm.BMM))


def test_general_kernels_used_when_fast_path_disabled():
    v = synthetic_low_rank(10, 8, 2, noise=0.1, seed=5)
    base = dict(beta=1.0, rank=2, seed=7, max_outer_iters=15, tol=1e-300)
    fast = fit(v, SolverConfig(algorithm=Algorithm.JMM, **base))
    slow = fit(v, SolverConfig(algorithm=Algorithm.JMM, use_fast_path=False,
                               **base))
    assert np.allclose(fast.factors.w, slow.factors.w, rtol=1e-10)
    assert np.allclose(fast.factors.h, slow.factors.h, rtol=1e-10)
