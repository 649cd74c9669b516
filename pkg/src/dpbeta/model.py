"""Weighted random-graph model with one parameter per node.

Edge weights take values in {0, ..., q-1}. Each unordered pair (i, j) draws
its weight independently with

    P(a_ij = a) = exp(a * (alpha_i + alpha_j)) / sum_k exp(k * (alpha_i + alpha_j)),

so the degree sequence d_i = sum_{j != i} a_ij is sufficient for alpha.
This module provides the distribution itself, graph sampling, the expected
degree map, its Jacobian (which equals the covariance matrix of d), and the
log-likelihood.

All exponentials are evaluated after subtracting the largest exponent, so
every function here is safe for arbitrarily large |alpha_i + alpha_j|.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


def _as_alpha(alpha) -> np.ndarray:
    """Coerce a ParamVector or array-like to a 1-D float array."""
    if isinstance(alpha, ParamVector):
        return alpha.alpha
    arr = np.asarray(alpha, dtype=float)
    if arr.ndim != 1:
        raise ValueError("alpha must be a one-dimensional vector.")
    if not np.all(np.isfinite(arr)):
        raise ValueError("alpha must contain only finite values.")
    return arr


def _check_q(q: int) -> int:
    q = int(q)
    if q < 2:
        raise ValueError(f"q must be an integer >= 2, got {q}.")
    return q


@dataclass
class WeightedGraph:
    """Symmetric matrix of integer edge weights with zero diagonal.

    Parameters
    ----------
    weights:
        (n, n) integer array, symmetric, zero diagonal, entries in
        {0, ..., q-1}.
    q:
        Number of weight classes (>= 2).
    """

    weights: np.ndarray
    q: int

    def __post_init__(self):
        self.q = _check_q(self.q)
        w = np.asarray(self.weights)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("weights must be a square matrix.")
        if w.shape[0] < 2:
            raise ValueError("a graph needs at least 2 nodes.")
        if not np.issubdtype(w.dtype, np.integer):
            if not np.all(w == np.round(w)):
                raise ValueError("weights must be integers.")
            w = w.astype(np.int64)
        else:
            w = w.astype(np.int64)
        if np.any(np.diagonal(w) != 0):
            raise ValueError("self-loops are not allowed (nonzero diagonal).")
        if not np.array_equal(w, w.T):
            raise ValueError("weights must be symmetric.")
        if w.min() < 0 or w.max() > self.q - 1:
            raise ValueError(f"weights must lie in [0, {self.q - 1}].")
        self.weights = w

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def degrees(self) -> np.ndarray:
        """Row sums of the weight matrix, as integers."""
        return self.weights.sum(axis=1)

    def edge_count(self) -> int:
        """Number of unordered pairs with nonzero weight."""
        return int(np.count_nonzero(np.triu(self.weights, 1)))


@dataclass
class ParamVector:
    """Node parameter vector, optionally tagged with a feasibility bound.

    When ``q_bound`` is set, the vector is considered feasible if
    -q_bound <= alpha_i + alpha_j <= q_bound for every pair i < j.  The bound
    is metadata used by diagnostics; estimation never projects onto it.
    """

    alpha: np.ndarray
    q_bound: Optional[float] = None

    def __post_init__(self):
        arr = np.asarray(self.alpha, dtype=float)
        if arr.ndim != 1:
            raise ValueError("alpha must be a one-dimensional vector.")
        if not np.all(np.isfinite(arr)):
            raise ValueError("alpha must contain only finite values.")
        self.alpha = arr
        if self.q_bound is not None:
            self.q_bound = float(self.q_bound)
            if self.q_bound < 0:
                raise ValueError("q_bound must be >= 0.")

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    def in_box(self) -> bool:
        """Whether all pairwise sums lie inside the declared bound."""
        if self.q_bound is None:
            raise ValueError("no q_bound declared for this vector.")
        s = self.alpha[:, None] + self.alpha[None, :]
        iu = np.triu_indices(self.n, 1)
        pair_sums = s[iu]
        return bool(
            np.all(pair_sums >= -self.q_bound) and np.all(pair_sums <= self.q_bound)
        )


@dataclass
class DegreeSequence:
    """Integer degree sequence of a weighted graph."""

    d: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.d)
        if arr.ndim != 1:
            raise ValueError("d must be a one-dimensional vector.")
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(arr == np.round(arr)):
                raise ValueError("degrees must be integers.")
        self.d = arr.astype(np.int64)

    @property
    def n(self) -> int:
        return self.d.shape[0]


def _stable_exponents(s: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (shift, den) where den = sum_a exp(a*s - shift) in [1, q].

    shift = max_a (a*s) = (q-1) * max(s, 0), so no term overflows and the
    largest term is exactly 1.
    """
    shift = (q - 1) * np.maximum(s, 0.0)
    den = np.zeros_like(s, dtype=float)
    for a in range(q):
        den += np.exp(a * s - shift)
    return shift, den


def edge_weight_pmf(s: float, q: int) -> np.ndarray:
    """Probability vector of a single edge weight given the pair sum s.

    Parameters
    ----------
    s:
        The sum alpha_i + alpha_j for the pair. Must be finite.
    q:
        Number of weight classes.

    Returns
    -------
    Length-q vector p with p[a] proportional to exp(a*s); sums to 1.
    """
    q = _check_q(q)
    s = float(s)
    if not np.isfinite(s):
        raise ValueError("s must be finite.")
    exponents = np.arange(q) * s
    exponents -= exponents.max()
    w = np.exp(exponents)
    return w / w.sum()


def mean_weight(s: float, q: int) -> float:
    """Expected edge weight sum_a a * P(a_ij = a); strictly increasing in s."""
    p = edge_weight_pmf(s, q)
    return float(np.arange(q) @ p)


def _mean_weight_matrix(s: np.ndarray, q: int) -> np.ndarray:
    """Elementwise expected edge weight for a matrix of pair sums."""
    shift, den = _stable_exponents(s, q)
    num = np.zeros_like(s, dtype=float)
    for a in range(1, q):
        num += a * np.exp(a * s - shift)
    return num / den


def sample_graph(alpha, q: int, seed=None) -> WeightedGraph:
    """Draw a graph with independent multinomial edge weights.

    Pairs are enumerated in row-major i < j order, one uniform draw per
    pair, so identical seeds give identical graphs.

    Parameters
    ----------
    alpha:
        Node parameter vector (array-like or ParamVector).
    q:
        Number of weight classes.
    seed:
        Anything accepted by ``numpy.random.default_rng``.
    """
    a = _as_alpha(alpha)
    q = _check_q(q)
    n = a.shape[0]
    if n < 2:
        raise ValueError("need at least 2 nodes.")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, 1)
    s = a[iu] + a[ju]

    shift = (q - 1) * np.maximum(s, 0.0)
    pmf = np.empty((s.shape[0], q))
    for k in range(q):
        pmf[:, k] = np.exp(k * s - shift)
    pmf /= pmf.sum(axis=1, keepdims=True)
    cdf = np.cumsum(pmf, axis=1)
    cdf[:, -1] = 1.0  # guard against cumsum rounding below 1

    u = rng.random(s.shape[0])
    w = (u[:, None] >= cdf).sum(axis=1)

    weights = np.zeros((n, n), dtype=np.int64)
    weights[iu, ju] = w
    weights += weights.T
    return WeightedGraph(weights=weights, q=q)


def expected_degrees(alpha, q: int) -> np.ndarray:
    """Expected degree E(d_i) = sum_{j != i} mean_weight(alpha_i + alpha_j, q)."""
    a = _as_alpha(alpha)
    q = _check_q(q)
    s = a[:, None] + a[None, :]
    u = _mean_weight_matrix(s, q)
    np.fill_diagonal(u, 0.0)
    return u.sum(axis=1)


def degree_jacobian(alpha, q: int) -> np.ndarray:
    """Jacobian of the expected-degree map; also the covariance matrix of d.

    Off-diagonal entries equal

        v_ij = sum_{0 <= k < l <= q-1} (k-l)^2 exp((k+l)(alpha_i+alpha_j))
               / (sum_a exp(a(alpha_i+alpha_j)))^2,

    which is Var(a_ij); the diagonal carries the row sums
    v_ii = sum_{j != i} v_ij exactly.  The matrix is symmetric with strictly
    positive off-diagonal entries.
    """
    a = _as_alpha(alpha)
    q = _check_q(q)
    s = a[:, None] + a[None, :]
    shift, den = _stable_exponents(s, q)
    num = np.zeros_like(s)
    for k in range(q - 1):
        for l in range(k + 1, q):
            num += (k - l) ** 2 * np.exp((k + l) * s - 2.0 * shift)
    v = num / den**2
    np.fill_diagonal(v, 0.0)
    np.fill_diagonal(v, v.sum(axis=1))
    return v


def jacobian_entry_bounds(q_bound: float, q: int) -> tuple[float, float]:
    """Bounds (m, M) on off-diagonal Jacobian entries over the feasible box.

    m = 1 / (2 (1 + e^{q_bound})) and M = q^2 / 2; any parameter vector with
    all pairwise sums in [-q_bound, q_bound] yields m <= v_ij <= M.
    """
    q = _check_q(q)
    q_bound = float(q_bound)
    if q_bound < 0:
        raise ValueError("q_bound must be >= 0.")
    m = 1.0 / (2.0 * (1.0 + np.exp(q_bound)))
    big_m = q**2 / 2.0
    return m, big_m


def log_likelihood(graph: WeightedGraph, alpha) -> float:
    """Log-likelihood of alpha given the graph, up to an additive constant.

    Each unordered pair contributes a_ij (alpha_i + alpha_j) minus the
    log-partition term.  Diagnostic only: estimation works from degrees.
    """
    a = _as_alpha(alpha)
    if a.shape[0] != graph.n:
        raise ValueError(
            f"dimension mismatch: graph has {graph.n} nodes, alpha has {a.shape[0]}."
        )
    q = graph.q
    iu, ju = np.triu_indices(graph.n, 1)
    s = a[iu] + a[ju]
    w = graph.weights[iu, ju]

    exponents = np.arange(q)[None, :] * s[:, None]
    shift = exponents.max(axis=1)
    logz = shift + np.log(np.exp(exponents - shift[:, None]).sum(axis=1))
    return float(np.sum(w * s - logz))
