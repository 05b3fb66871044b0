"""Multi-seed benchmark harness comparing the two update families.

For every seed, both families start from byte-identical half-normal
initial factors; the harness collects solver-loop seconds, final raw and
per-entry objectives, residuals and iteration counts per run, summarizes
them with mean / sample standard deviation / normal-approximation 95%
confidence intervals, and matches the two solutions column-wise per
seed.  Seeds can run in parallel worker processes; a single-job mode
guarantees sequential execution for clean timing.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import match_columns
from .solver import Algorithm, SolverConfig, fit


def summarize(values):
    """Mean, sample standard deviation and normal 95% confidence interval.

    The standard deviation uses the n-1 denominator (zero for a single
    value) and the interval is mean +/- 1.96 * std / sqrt(n).
    """
    values = [float(v) for v in values]
    if not values:
        raise ValueError("cannot summarize an empty sequence")
    n = len(values)
    mean = sum(values) / n
    if n == 1:
        return mean, 0.0, mean, mean
    std = math.sqrt(sum((v - mean) ** 2 for v in values) / (n - 1))
    half = 1.96 * std / math.sqrt(n)
    return mean, std, mean - half, mean + half


@dataclass
class SeedRun:
    """One fit's worth of benchmark measurements."""

    seed: int
    seconds: float
    objective: float
    objective_per_entry: float
    kkt_w: float
    kkt_h: float
    iterations: int
    termination: str


@dataclass
class AlgorithmStats:
    """Aggregate statistics for one update family across seeds."""

    mean_seconds: float
    std_seconds: float
    ci95_seconds: tuple[float, float]
    mean_objective: float
    mean_objective_per_entry: float
    mean_kkt_w: float
    mean_kkt_h: float
    runs: list[SeedRun] = field(default_factory=list)


@dataclass
class BenchReport:
    """Full comparison report.

    ``acceleration_pct`` is (mean block seconds - mean joint seconds) /
    mean block seconds as a percentage, present only when both families
    ran on identical seeds and data.  ``agreement`` holds the per-seed
    worst column mismatch between the two solutions.
    """

    shape: tuple[int, int]
    beta: float
    rank: int
    seeds: list[int]
    algorithms: dict[str, AlgorithmStats]
    acceleration_pct: float | None = None
    agreement: list[dict] | None = None

    def to_dict(self):
        return dataclasses.asdict(self)


def _run_one(args):
    values, algo, seed, config_kwargs = args
    config = SolverConfig(algorithm=Algorithm(algo), seed=seed, **config_kwargs)
    result = fit(values, config)
    last = result.trace[-1]
    per_entry = last.objective / (values.shape[0] * values.shape[1])
    run = SeedRun(
        seed=seed,
        seconds=last.seconds,
        objective=last.objective,
        objective_per_entry=per_entry,
        kkt_w=last.kkt_w,
        kkt_h=last.kkt_h,
        iterations=result.iterations,
        termination=result.termination.value,
    )
    return algo, run, result.factors.w


def run_bench(values, beta, rank, n_seeds=25, algorithms=("bmm", "jmm"),
              base_seed=0, jobs=1, **config_kwargs):
    """Run the seed-paired comparison and assemble a report.

    Parameters
    ----------
    values : ndarray
        Data matrix (already shifted data is not expected; pass the raw
        matrix and set ``kappa`` through ``config_kwargs``).
    beta, rank : float, int
        Divergence parameter and factorization rank.
    n_seeds : int
        Number of initializations; seeds are base_seed .. base_seed+n-1,
        shared across families so both consume identical initial factors.
    algorithms : sequence of str
        Subset of {"bmm", "jmm"}.
    jobs : int
        Worker processes; 1 runs everything sequentially in-process,
        which is the mode to use for timing comparisons.
    config_kwargs : dict
        Extra :class:`SolverConfig` fields (tol, kappa, sub_iters, ...).
    """
    values = np.asarray(values, dtype=float)
    algorithms = [Algorithm(a).value for a in algorithms]
    if n_seeds < 1:
        raise ValueError("need at least one seed")
    seeds = [base_seed + i for i in range(n_seeds)]
    config_kwargs = dict(config_kwargs, beta=beta, rank=rank)

    tasks = [(values, algo, seed, config_kwargs)
             for seed in seeds for algo in algorithms]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_one, tasks))
    else:
        outcomes = [_run_one(t) for t in tasks]

    runs = {algo: [] for algo in algorithms}
    final_w = {algo: {} for algo in algorithms}
    for algo, run, w in outcomes:
        runs[algo].append(run)
        final_w[algo][run.seed] = w

    stats = {}
    for algo in algorithms:
        rows = sorted(runs[algo], key=lambda r: r.seed)
        mean_s, std_s, lo, hi = summarize([r.seconds for r in rows])
        stats[algo] = AlgorithmStats(
            mean_seconds=mean_s,
            std_seconds=std_s,
            ci95_seconds=(lo, hi),
            mean_objective=float(np.mean([r.objective for r in rows])),
            mean_objective_per_entry=float(
                np.mean([r.objective_per_entry for r in rows])
            ),
            mean_kkt_w=float(np.mean([r.kkt_w for r in rows])),
            mean_kkt_h=float(np.mean([r.kkt_h for r in rows])),
            runs=rows,
        )

    acceleration = None
    agreement = None
    if "bmm" in stats and "jmm" in stats:
        acceleration = 100.0 * (
            (stats["bmm"].mean_seconds - stats["jmm"].mean_seconds)
            / stats["bmm"].mean_seconds
        )
        agreement = []
        for seed in seeds:
            _, mismatch = match_columns(final_w["bmm"][seed], final_w["jmm"][seed])
            agreement.append({"seed": seed, "mismatch": mismatch})

    return BenchReport(
        shape=(values.shape[0], values.shape[1]),
        beta=float(beta),
        rank=int(rank),
        seeds=seeds,
        algorithms=stats,
        acceleration_pct=acceleration,
        agreement=agreement,
    )


def format_report(report):
    """Human-readable summary table of a :class:`BenchReport`."""
    lines = []
    lines.append(
        f"data {report.shape[0]} x {report.shape[1]}, beta={report.beta:g}, "
        f"rank={report.rank}, seeds={len(report.seeds)}"
    )
    for algo, st in report.algorithms.items():
        lines.append(
            f"  {algo}: {st.mean_seconds:.3f}s (std {st.std_seconds:.3f}, "
            f"95% CI [{st.ci95_seconds[0]:.3f}, {st.ci95_seconds[1]:.3f}]), "
            f"objective {st.mean_objective:.6g} "
            f"({st.mean_objective_per_entry:.6g}/entry), "
            f"kkt ({st.mean_kkt_w:.3g}, {st.mean_kkt_h:.3g})"
        )
    if report.acceleration_pct is not None:
        lines.append(f"  joint-update acceleration: {report.acceleration_pct:.1f}%")
    if report.agreement is not None:
        worst = max(a["mismatch"] for a in report.agreement)
        lines.append(f"  worst per-seed column mismatch: {worst:.3g}")
    return "\n".join(lines)
