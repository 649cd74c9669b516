"""Root-finding estimator for node parameters from a noisy degree sequence.

The estimate solves the moment equations

    d_bar_i = sum_{j != i} mean_weight(alpha_i + alpha_j, q),  i = 1..n,

by damped Newton iteration.  The Jacobian of the expected-degree map is
symmetric positive definite on feasible problems, so each step is a dense
symmetric factorization.  Per-node precision comes from the plug-in
diagonal of the Jacobian at the solution, which backs normal-approximation
confidence intervals for single parameters and for contrasts.

An estimate can fail to exist: either some noisy degree falls outside the
open attainable range (detected before iterating) or the iteration fails to
find a root (no root, singular system, or iteration budget exhausted).
Both outcomes are reported as data, not raised.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .model import _as_alpha, _check_q, degree_jacobian, expected_degrees

STATUS_CONVERGED = "converged"
STATUS_INFEASIBLE = "nonexistent_infeasible_degree"
STATUS_DIVERGED = "nonexistent_diverged"

_MIN_STEP = 2.0**-40


def residual(alpha, d_bar, q: int) -> np.ndarray:
    """Moment-equation residual d_bar - E(d) at the given parameters."""
    a = _as_alpha(alpha)
    d_bar = np.asarray(d_bar, dtype=float)
    if d_bar.shape != a.shape:
        raise ValueError(
            f"length mismatch: alpha has {a.shape[0]} entries, "
            f"d_bar has {d_bar.shape[0]}."
        )
    return d_bar - expected_degrees(a, q)


@dataclass
class FitResult:
    """Outcome of one solve of the moment equations.

    ``status`` is one of "converged", "nonexistent_infeasible_degree" (some
    noisy degree outside the open range (0, (n-1)(q-1)); nothing was
    iterated) or "nonexistent_diverged" (no root found numerically).  The
    estimate and plug-in variances are present only when converged.
    """

    status: str
    n: int
    q: int
    tolerance: float
    iterations: int
    alpha_hat: Optional[np.ndarray] = None
    residual_inf: Optional[float] = None
    v_hat_diag: Optional[np.ndarray] = None
    infeasible_nodes: list[int] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == STATUS_CONVERGED

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "n": self.n,
            "q": self.q,
            "tolerance": self.tolerance,
            "iterations": self.iterations,
            "alpha_hat": None if self.alpha_hat is None else self.alpha_hat.tolist(),
            "residual_inf": self.residual_inf,
            "v_hat_diag": None if self.v_hat_diag is None else self.v_hat_diag.tolist(),
            "infeasible_nodes": list(self.infeasible_nodes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def solve(
    d_bar,
    q: int,
    init=None,
    tol: float = 1e-10,
    max_iter: int = 200,
    step_cap: float = 5.0,
) -> FitResult:
    """Solve the moment equations for the node parameters.

    Parameters
    ----------
    d_bar:
        Noisy degree sequence, length n >= 2.
    q:
        Weight-class count of the generating model.
    init:
        Starting point; defaults to the zero vector.
    tol:
        Convergence threshold on the sup norm of the residual.
    max_iter:
        Newton iteration budget.
    step_cap:
        Bound on the sup norm of one raw Newton step; keeps distant
        starting points from overshooting into regions where the Jacobian
        degenerates.

    Notes
    -----
    Each step solves V(alpha) delta = F(alpha) with a Cholesky
    factorization and applies alpha <- alpha + step * delta, halving step
    while the residual sup norm does not decrease.  Noisy degrees outside
    the open interval (0, (n-1)(q-1)) make the equations unsolvable, which
    is reported without iterating.
    """
    q = _check_q(q)
    d_bar = np.asarray(d_bar, dtype=float)
    if d_bar.ndim != 1 or d_bar.shape[0] < 2:
        raise ValueError("d_bar must be a vector of length >= 2.")
    if tol <= 0:
        raise ValueError("tol must be > 0.")
    n = d_bar.shape[0]
    dmax = (n - 1) * (q - 1)

    bad = np.where((d_bar <= 0) | (d_bar >= dmax))[0]
    if bad.size:
        return FitResult(
            status=STATUS_INFEASIBLE,
            n=n,
            q=q,
            tolerance=tol,
            iterations=0,
            infeasible_nodes=bad.tolist(),
        )

    alpha = np.zeros(n) if init is None else _as_alpha(init).copy()
    if alpha.shape[0] != n:
        raise ValueError("init must have the same length as d_bar.")

    f = d_bar - expected_degrees(alpha, q)
    fnorm = float(np.max(np.abs(f)))
    iterations = 0

    while fnorm > tol and iterations < max_iter:
        v = degree_jacobian(alpha, q)
        try:
            factor = cho_factor(v, lower=True, check_finite=False)
            delta = cho_solve(factor, f, check_finite=False)
        except (LinAlgError, ValueError):
            return _diverged(n, q, tol, iterations, fnorm)
        if not np.all(np.isfinite(delta)):
            return _diverged(n, q, tol, iterations, fnorm)
        dnorm = float(np.max(np.abs(delta)))
        if dnorm > step_cap:
            delta = delta * (step_cap / dnorm)

        step = 1.0
        accepted = False
        while step >= _MIN_STEP:
            cand = alpha + step * delta
            fc = d_bar - expected_degrees(cand, q)
            cnorm = float(np.max(np.abs(fc)))
            if cnorm < fnorm:
                alpha, f, fnorm = cand, fc, cnorm
                accepted = True
                break
            step *= 0.5
        if not accepted:
            return _diverged(n, q, tol, iterations, fnorm)
        iterations += 1

    if fnorm > tol:
        return _diverged(n, q, tol, iterations, fnorm)

    v_hat = np.diagonal(degree_jacobian(alpha, q)).copy()
    return FitResult(
        status=STATUS_CONVERGED,
        n=n,
        q=q,
        tolerance=tol,
        iterations=iterations,
        alpha_hat=alpha,
        residual_inf=fnorm,
        v_hat_diag=v_hat,
    )


def _diverged(n, q, tol, iterations, fnorm) -> FitResult:
    return FitResult(
        status=STATUS_DIVERGED,
        n=n,
        q=q,
        tolerance=tol,
        iterations=iterations,
        residual_inf=fnorm,
    )


# ---------------------------------------------------------------------------
# normal quantile (rational approximation, then one exact-CDF refinement)
# ---------------------------------------------------------------------------

_A = (
    -3.969683028665376e01,
    2.209460984245205e02,
    -2.759285104469687e02,
    1.383577518672690e02,
    -3.066479806614716e01,
    2.506628277459239e00,
)
_B = (
    -5.447609879822406e01,
    1.615858368580409e02,
    -1.556989798598866e02,
    6.680131188771972e01,
    -1.328068155288572e01,
)
_C = (
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e00,
    -2.549732539343734e00,
    4.374664141464968e00,
    2.938163982698783e00,
)
_D = (
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e00,
    3.754408661907416e00,
)


def normal_quantile(p: float) -> float:
    """Standard normal quantile for p in (0, 1).

    Rational approximation (relative error below 1.2e-9) polished with one
    Halley step against the exact erfc-based CDF.
    """
    p = float(p)
    if not (0.0 < p < 1.0):
        raise ValueError("p must lie strictly in (0, 1).")
    p_low = 0.02425
    if p < p_low:
        u = math.sqrt(-2.0 * math.log(p))
        x = (
            ((((_C[0] * u + _C[1]) * u + _C[2]) * u + _C[3]) * u + _C[4]) * u + _C[5]
        ) / ((((_D[0] * u + _D[1]) * u + _D[2]) * u + _D[3]) * u + 1.0)
    elif p <= 1.0 - p_low:
        u = p - 0.5
        r = u * u
        x = (
            (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5])
            * u
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
        )
    else:
        u = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -(
            ((((_C[0] * u + _C[1]) * u + _C[2]) * u + _C[3]) * u + _C[4]) * u + _C[5]
        ) / ((((_D[0] * u + _D[1]) * u + _D[2]) * u + _D[3]) * u + 1.0)

    err = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    grad = err * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
    return x - grad / (1.0 + x * grad / 2.0)


# ---------------------------------------------------------------------------
# confidence intervals and standardized contrasts
# ---------------------------------------------------------------------------


@dataclass
class ContrastCI:
    """Normal-approximation interval for alpha_i - alpha_j."""

    i: int
    j: int
    point: float
    half_width: float
    se: float
    level: float

    @property
    def lo(self) -> float:
        return self.point - self.half_width

    @property
    def hi(self) -> float:
        return self.point + self.half_width

    def csv_row(self) -> str:
        return (
            f"{self.i},{self.j},{self.point:.10g},{self.lo:.10g},"
            f"{self.hi:.10g},{self.se:.10g},{self.level:.10g}"
        )


@dataclass
class SingleCI:
    """Normal-approximation interval for a single alpha_i."""

    i: int
    point: float
    half_width: float
    se: float
    level: float

    @property
    def lo(self) -> float:
        return self.point - self.half_width

    @property
    def hi(self) -> float:
        return self.point + self.half_width

    def csv_row(self) -> str:
        return (
            f"{self.i},,{self.point:.10g},{self.lo:.10g},"
            f"{self.hi:.10g},{self.se:.10g},{self.level:.10g}"
        )


def _require_converged(fit: FitResult) -> None:
    if not fit.converged:
        raise ValueError(f"fit did not converge (status={fit.status}).")


def contrast_ci(fit: FitResult, i: int, j: int, level: float = 0.95) -> ContrastCI:
    """Interval alpha_hat_i - alpha_hat_j +- z * (1/v_ii + 1/v_jj)^(1/2)."""
    _require_converged(fit)
    if i == j:
        raise ValueError("contrast needs two distinct nodes.")
    if not (0.0 < level < 1.0):
        raise ValueError("level must lie strictly in (0, 1).")
    z = normal_quantile(1.0 - (1.0 - level) / 2.0)
    se = math.sqrt(1.0 / fit.v_hat_diag[i] + 1.0 / fit.v_hat_diag[j])
    point = float(fit.alpha_hat[i] - fit.alpha_hat[j])
    return ContrastCI(i=i, j=j, point=point, half_width=z * se, se=se, level=level)


def single_ci(fit: FitResult, i: int, level: float = 0.95) -> SingleCI:
    """Interval alpha_hat_i +- z / sqrt(v_ii)."""
    _require_converged(fit)
    if not (0.0 < level < 1.0):
        raise ValueError("level must lie strictly in (0, 1).")
    z = normal_quantile(1.0 - (1.0 - level) / 2.0)
    se = 1.0 / math.sqrt(fit.v_hat_diag[i])
    return SingleCI(
        i=i, point=float(fit.alpha_hat[i]), half_width=z * se, se=se, level=level
    )


def standardized_contrast(fit: FitResult, i: int, j: int, alpha_star) -> float:
    """Estimated contrast error scaled by its plug-in standard error.

    [alpha_hat_i - alpha_hat_j - (alpha_star_i - alpha_star_j)]
    / (1/v_ii + 1/v_jj)^(1/2); approximately standard normal for converged
    fits when the model holds.  Requires the true parameters, so this is a
    simulation-side quantity.
    """
    _require_converged(fit)
    if i == j:
        raise ValueError("contrast needs two distinct nodes.")
    truth = _as_alpha(alpha_star)
    num = (fit.alpha_hat[i] - fit.alpha_hat[j]) - (truth[i] - truth[j])
    den = math.sqrt(1.0 / fit.v_hat_diag[i] + 1.0 / fit.v_hat_diag[j])
    return float(num / den)


# ---------------------------------------------------------------------------
# theory-side diagnostics
# ---------------------------------------------------------------------------


@dataclass
class InverseApproxReport:
    """Gap between the exact Jacobian inverse and its diagonal surrogate."""

    max_entry_gap: float
    s_diag: np.ndarray
    inv_inf_norm: float


def inverse_approximation(alpha, q: int, max_n: int = 2000) -> InverseApproxReport:
    """Compare the exact inverse Jacobian with the diagonal approximation.

    Computes V^{-1} by dense inversion and S with S_ij = delta_ij / v_ii,
    returning the largest absolute entry of V^{-1} - S, the S diagonal, and
    the sup-norm (max absolute row sum) of V^{-1}.  Dense inversion caps the
    usable size; intended as a diagnostic at moderate n.
    """
    a = _as_alpha(alpha)
    if a.shape[0] > max_n:
        raise ValueError(f"n={a.shape[0]} too large for dense inversion cap {max_n}.")
    v = degree_jacobian(a, q)
    try:
        v_inv = np.linalg.inv(v)
    except np.linalg.LinAlgError as exc:
        raise ValueError("Jacobian is singular.") from exc
    s_diag = 1.0 / np.diagonal(v)
    gap = v_inv - np.diag(s_diag)
    return InverseApproxReport(
        max_entry_gap=float(np.max(np.abs(gap))),
        s_diag=s_diag,
        inv_inf_norm=float(np.max(np.abs(v_inv).sum(axis=1))),
    )


def degree_deviation_bound(n: int, q: int) -> float:
    """Threshold 2 (q-1) sqrt((n-1) log(n-1)) for noisy-degree deviations.

    With overwhelming probability the released degrees stay within this
    distance of their expectations, so larger observed deviations flag a
    fit worth inspecting.
    """
    q = _check_q(q)
    if n < 3:
        raise ValueError("n must be >= 3.")
    return 2.0 * (q - 1) * math.sqrt((n - 1) * math.log(n - 1))
