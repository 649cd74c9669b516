"""Monte-Carlo studies of coverage, interval width and estimate existence.

A study fixes a network size n, weight-class count q, a linear profile of
true parameters alpha*_i = (n - i + 1) L / n (1-based i), and a privacy
budget schedule.  Each replication samples a graph at the truth, releases
its degree sequence with calibrated symmetric noise, refits the parameters,
and records, for a set of tracked node pairs, whether the contrast interval
covers the true contrast, the interval's scale, and the standardized
contrast.  Replications whose estimate does not exist are tabulated
separately and excluded from the per-pair statistics.

Child seeds are derived by hashing (master_seed, replication index), so
replications are order-independent and results are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .estimator import (
    FitResult,
    contrast_ci,
    normal_quantile,
    solve,
    standardized_contrast,
)
from .mechanisms import calibrate, sample_noise
from .model import sample_graph

L_MODES = ("zero", "loglog", "sqrtlog")
EPS_MODES = ("fixed:<value>", "logn_over_n14", "logn_over_n12")


def profile_scale(l_mode: str, n: int) -> float:
    """Scale L of the linear truth profile: 0, log(log n) or sqrt(log n)."""
    if n < 3:
        raise ValueError("n must be >= 3.")
    if l_mode == "zero":
        return 0.0
    if l_mode == "loglog":
        return math.log(math.log(n))
    if l_mode == "sqrtlog":
        return math.sqrt(math.log(n))
    raise ValueError(f"unknown L mode {l_mode!r}; expected one of {L_MODES}.")


def epsilon_schedule(eps_mode: str, n: int) -> float:
    """Privacy budget for a given size: fixed:<v>, log(n)/n^(1/4) or log(n)/n^(1/2)."""
    if n < 3:
        raise ValueError("n must be >= 3.")
    if eps_mode.startswith("fixed:"):
        value = float(eps_mode.split(":", 1)[1])
        if value <= 0:
            raise ValueError("fixed epsilon must be > 0.")
        return value
    if eps_mode == "logn_over_n14":
        return math.log(n) / n**0.25
    if eps_mode == "logn_over_n12":
        return math.log(n) / n**0.5
    raise ValueError(
        f"unknown epsilon mode {eps_mode!r}; expected one of {EPS_MODES}."
    )


def truth_profile(n: int, scale: float) -> np.ndarray:
    """Linear truth alpha*_i = (n - i + 1) * scale / n for i = 1..n."""
    i = np.arange(1, n + 1)
    return (n - i + 1) * scale / n


def default_pairs(n: int) -> tuple[tuple[int, int], ...]:
    """Tracked node pairs (1-based): (1,2), (n//2, n//2+1), (n-1, n)."""
    return ((1, 2), (n // 2, n // 2 + 1), (n - 1, n))


@dataclass
class ExperimentSpec:
    """Configuration of one Monte-Carlo study.

    ``pairs`` holds 1-based node labels, matching the CSV output; they are
    converted internally.
    """

    n: int
    q: int
    l_mode: str = "zero"
    eps_mode: str = "fixed:2"
    reps: int = 10_000
    level: float = 0.95
    pairs: Optional[tuple[tuple[int, int], ...]] = None
    master_seed: int = 0

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1.")
        if not (0.0 < self.level < 1.0):
            raise ValueError("level must lie strictly in (0, 1).")
        # validate modes eagerly
        profile_scale(self.l_mode, max(self.n, 3))
        epsilon_schedule(self.eps_mode, max(self.n, 3))
        if self.pairs is None:
            self.pairs = default_pairs(self.n)
        self.pairs = tuple((int(i), int(j)) for i, j in self.pairs)
        for i, j in self.pairs:
            if i == j:
                raise ValueError(f"pair ({i},{j}) must have distinct nodes.")
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise ValueError(f"pair ({i},{j}) outside 1..{self.n}.")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "q": self.q,
            "l_mode": self.l_mode,
            "eps_mode": self.eps_mode,
            "reps": self.reps,
            "level": self.level,
            "pairs": [list(p) for p in self.pairs],
            "master_seed": self.master_seed,
        }


@dataclass
class PairSummary:
    """Per-pair aggregates over the converged replications.

    ``mean_length`` is the average interval scale
    z * (1/v_ii + 1/v_jj)^(1/2), i.e. the half-width of the reported
    interval (the interval is point +- this amount).
    """

    pair: tuple[int, int]
    coverage: float
    mean_length: float
    xi: list[float] = field(default_factory=list)


@dataclass
class ExperimentResult:
    """Aggregated output of :func:`run_experiment`."""

    spec: ExperimentSpec
    pairs: list[PairSummary]
    nonexistence: float
    reps_completed: int
    converged: int

    def csv_rows(self) -> list[str]:
        """One row per tracked pair: pair_i,pair_j,coverage,mean_len,nonexist,reps."""
        rows = []
        for p in self.pairs:
            rows.append(
                f"{p.pair[0]},{p.pair[1]},{p.coverage:.10g},"
                f"{p.mean_length:.10g},{self.nonexistence:.10g},"
                f"{self.reps_completed}"
            )
        return rows

    def pair_summary(self, pair: tuple[int, int]) -> PairSummary:
        for p in self.pairs:
            if p.pair == tuple(pair):
                return p
        raise KeyError(f"pair {pair} was not tracked.")


def child_seed(master_seed: int, *key: int) -> np.random.SeedSequence:
    """Deterministic per-replication seed, independent of execution order."""
    return np.random.SeedSequence(master_seed, spawn_key=tuple(key))


def _replicate(
    alpha_star: np.ndarray, q: int, mechanism, seed: np.random.SeedSequence
) -> FitResult:
    """One replication: sample graph, release degrees, fit."""
    rng = np.random.default_rng(seed)
    graph = sample_graph(alpha_star, q, rng)
    d = graph.degrees()
    e = sample_noise(mechanism, d.shape[0], rng)
    return solve(d + e, q)


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run the replication loop and aggregate coverage/length/existence.

    Deterministic given (spec, master_seed).  Nonexistent estimates count
    toward the nonexistence frequency and contribute nothing else.
    """
    scale = profile_scale(spec.l_mode, spec.n)
    eps = epsilon_schedule(spec.eps_mode, spec.n)
    alpha_star = truth_profile(spec.n, scale)
    mechanism = calibrate(eps)
    pairs0 = [(i - 1, j - 1) for i, j in spec.pairs]

    covered = np.zeros(len(pairs0), dtype=np.int64)
    length_sum = np.zeros(len(pairs0))
    xi_lists: list[list[float]] = [[] for _ in pairs0]
    converged = 0

    for rep in range(spec.reps):
        fit = _replicate(alpha_star, spec.q, mechanism, child_seed(spec.master_seed, rep))
        if not fit.converged:
            continue
        converged += 1
        for k, (i, j) in enumerate(pairs0):
            ci = contrast_ci(fit, i, j, spec.level)
            truth = alpha_star[i] - alpha_star[j]
            if abs(ci.point - truth) <= ci.half_width:
                covered[k] += 1
            length_sum[k] += ci.half_width
            xi_lists[k].append(standardized_contrast(fit, i, j, alpha_star))

    summaries = []
    for k, pair in enumerate(spec.pairs):
        if converged:
            coverage = covered[k] / converged
            mean_len = length_sum[k] / converged
        else:
            coverage = math.nan
            mean_len = math.nan
        summaries.append(
            PairSummary(
                pair=pair,
                coverage=float(coverage),
                mean_length=float(mean_len),
                xi=xi_lists[k],
            )
        )
    return ExperimentResult(
        spec=spec,
        pairs=summaries,
        nonexistence=(spec.reps - converged) / spec.reps,
        reps_completed=spec.reps,
        converged=converged,
    )


def qq_points(
    result: ExperimentResult, pair: tuple[int, int], min_count: int = 30
) -> list[tuple[float, float]]:
    """Normal QQ pairing of the standardized contrasts for one tracked pair.

    Returns (theoretical, empirical) rows: the k-th order statistic against
    the standard normal quantile at (k - 0.5) / m.
    """
    xi = sorted(result.pair_summary(pair).xi)
    m = len(xi)
    if m < min_count:
        raise ValueError(f"need at least {min_count} values, have {m}.")
    return [
        (normal_quantile((k - 0.5) / m), float(x)) for k, x in enumerate(xi, start=1)
    ]


@dataclass
class RateRow:
    """Median sup-norm estimation error at one network size."""

    n: int
    median_inf_error: float
    converged: int
    reps: int


def rate_study(
    n_list: Sequence[int],
    q: int,
    l_mode: str = "zero",
    eps_mode: str = "fixed:2",
    reps: int = 300,
    master_seed: int = 0,
) -> list[RateRow]:
    """Median of ||alpha_hat - alpha*||_inf over converged replications, per n.

    Child seeds hash (master_seed, n, replication), so adding sizes to
    ``n_list`` does not disturb existing entries.
    """
    sizes = list(n_list)
    if sizes != sorted(sizes):
        raise ValueError("n_list must be increasing.")
    rows = []
    for n in sizes:
        scale = profile_scale(l_mode, n)
        eps = epsilon_schedule(eps_mode, n)
        alpha_star = truth_profile(n, scale)
        mechanism = calibrate(eps)
        errors = []
        for rep in range(reps):
            fit = _replicate(
                alpha_star, q, mechanism, child_seed(master_seed, n, rep)
            )
            if fit.converged:
                errors.append(float(np.max(np.abs(fit.alpha_hat - alpha_star))))
        median = float(np.median(errors)) if errors else math.nan
        rows.append(
            RateRow(n=n, median_inf_error=median, converged=len(errors), reps=reps)
        )
    return rows
