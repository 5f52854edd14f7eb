"""Hermite coefficients of ReLU and spectral statistics of the feature map.

The closed-form coefficients are evaluated in log space (k=40 already
overflows naive factorials). Their independent check integrates the defining
expectation with Gauss rules: a full-line Gauss-Hermite rule for the odd
part and, for even orders, a Gauss-Laguerre rule after the substitution
z^2 = 2v that turns the half-line integrand into a polynomial. Both rules
are then exact up to rounding, which is what lets the cross-check run at
1e-10 tolerance.

The remaining operations estimate or bound the smallest eigenvalue of the
expected feature Gram E_w[relu(Xw) relu(Xw)^T] and measure how initialization
norms concentrate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .data import (
    InitConfig,
    assumption_row_norm,
    gen_labels,
    init_params,
    sample_sphere_rows,
    stream_rng,
)
from . import network

__all__ = [
    "HermiteTable",
    "GramEstimate",
    "ThresholdReport",
    "ConcentrationReport",
    "hermite_relu",
    "hermite_quadrature",
    "decay_ratio_table",
    "build_hermite_table",
    "lambda_lower_bound",
    "khatri_rao_power_min_eig",
    "estimate_gram",
    "alpha_threshold_experiment",
    "concentration_report",
]


@dataclass
class HermiteTable:
    coefficients: dict[int, float]
    max_k: int


@dataclass
class GramEstimate:
    gram: np.ndarray
    lambda_hat: float
    stderr: float
    n_mc: int


@dataclass
class ThresholdReport:
    threshold: float
    pass_fraction: float
    lambda_hat: float
    alphas: np.ndarray


@dataclass
class ConcentrationReport:
    ratios: dict[str, np.ndarray]
    stats: dict[str, dict[str, float]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.stats:
            self.stats = {
                name: {
                    "min": float(np.min(vals)),
                    "median": float(np.median(vals)),
                    "max": float(np.max(vals)),
                }
                for name, vals in self.ratios.items()
            }


def hermite_relu(k: int) -> float:
    """k-th coefficient of ReLU in the orthonormal probabilists' Hermite basis.

    Closed form: 1/sqrt(2*pi) at k=0, 1/2 at k=1, zero at odd k >= 3, and
    (-1)^((k-2)/2) * (k-3)!! / sqrt(2*pi*k!) at even k (with (-1)!! = 1).
    """
    if k < 0:
        raise ValueError("order k must be nonnegative")
    if k == 0:
        return 1.0 / math.sqrt(2.0 * math.pi)
    if k == 1:
        return 0.5
    if k % 2 == 1:
        return 0.0
    # log((k-3)!!) for even k via (2m-1)!! = (2m)!/(2^m m!) with m = (k-2)/2.
    m = (k - 2) // 2
    log_dd = math.lgamma(k - 1) - m * math.log(2.0) - math.lgamma(k / 2)
    log_mu = -0.5 * math.log(2.0 * math.pi) + log_dd - 0.5 * math.lgamma(k + 1)
    sign = -1.0 if m % 2 == 1 else 1.0
    return sign * math.exp(log_mu)


def _hermite_normalized(z: np.ndarray, k: int) -> np.ndarray:
    """h_k(z)/sqrt(k!) by the stable normalized three-term recurrence."""
    z = np.asarray(z, dtype=float)
    h_prev = np.ones_like(z)
    if k == 0:
        return h_prev
    h_cur = z.copy()
    for j in range(1, k):
        h_next = (z * h_cur - math.sqrt(j) * h_prev) / math.sqrt(j + 1)
        h_prev, h_cur = h_cur, h_next
    return h_cur


def hermite_quadrature(k: int, n_nodes: int | None = None) -> float:
    """Quadrature evaluation of E[relu(g) h_k(g)] / sqrt(k!).

    Splits relu(z) = z/2 + |z|/2. The z/2 part is a full-line Gauss-Hermite
    integral of a polynomial; the |z|/2 part vanishes for odd k and for even
    k reduces, via z^2 = 2v, to a Gauss-Laguerre integral of a degree-k/2
    polynomial. Agrees with :func:`hermite_relu` to ~1e-10 for k <= 40.
    """
    if k < 0:
        raise ValueError("order k must be nonnegative")
    if n_nodes is None:
        n_nodes = k + 20
    if n_nodes < k + 10:
        raise ValueError(f"need at least {k + 10} nodes for order {k}")

    # Odd part: (1/2) E[g h_k(g)] / sqrt(k!), polynomial of degree k+1.
    x, w = np.polynomial.hermite_e.hermegauss(n_nodes)
    sym = 0.5 * float(np.sum(w * x * _hermite_normalized(x, k))) / math.sqrt(
        2.0 * math.pi
    )
    if k % 2 == 1:
        return sym
    # Even part: integral_0^inf z h_k(z) e^(-z^2/2) dz / sqrt(2 pi k!)
    #          = sum_i w_i h_k(sqrt(2 v_i)) / sqrt(2 pi k!)  (Gauss-Laguerre).
    v, wl = np.polynomial.laguerre.laggauss(n_nodes)
    half = float(np.sum(wl * _hermite_normalized(np.sqrt(2.0 * v), k))) / math.sqrt(
        2.0 * math.pi
    )
    return sym + half


def decay_ratio_table(k_max: int) -> list[tuple[int, float]]:
    """Rows (k, mu_k^2 * k^2.5) for even k in [2, k_max]."""
    if k_max < 2 or k_max % 2 != 0:
        raise ValueError("k_max must be an even integer >= 2")
    return [
        (k, hermite_relu(k) ** 2 * k**2.5) for k in range(2, k_max + 1, 2)
    ]


def build_hermite_table(max_k: int) -> HermiteTable:
    if max_k < 0:
        raise ValueError("max_k must be nonnegative")
    return HermiteTable(
        coefficients={k: hermite_relu(k) for k in range(max_k + 1)}, max_k=max_k
    )


def _check_sphere_rows(X: np.ndarray, radius: float) -> None:
    norms = np.linalg.norm(X, axis=1)
    if not np.allclose(norms, radius, rtol=1e-8, atol=1e-8 * max(radius, 1.0)):
        raise ValueError(f"input rows must have norm {radius}")


def lambda_lower_bound(X: np.ndarray, r: int) -> float:
    """Coherence-based lower bound on the minimum eigenvalue of the feature Gram.

    Returns mu_r^2 * (d0^r - N * max_{i != j} |<X_i, X_j>|^r) / d0^(r-1),
    floored at zero. Requires even r (odd orders have zero coefficient and a
    vacuous bound) and rows of norm sqrt(d0). Works from the N x N Gram of X
    without forming any Kronecker power.
    """
    X = linalg.as_matrix(X, "X")
    if r < 2 or r % 2 != 0:
        raise ValueError("r must be an even positive integer")
    n, d0 = X.shape
    _check_sphere_rows(X, math.sqrt(d0))
    gram = X @ X.T
    if n == 1:
        coherence = 0.0
    else:
        off = np.abs(gram - np.diag(np.diag(gram)))
        coherence = float(off.max())
    mu = hermite_relu(r)
    bound = mu**2 * (d0**r - n * coherence**r) / d0 ** (r - 1)
    return max(bound, 0.0)


def khatri_rao_power_min_eig(X: np.ndarray, r: int) -> float:
    """Minimum eigenvalue of the Gram of the r-fold rowwise Kronecker power.

    Uses the identity (X^[r])(X^[r])^T = (X X^T)^(elementwise r), avoiding
    the d0^r-column materialization.
    """
    X = linalg.as_matrix(X, "X")
    if r < 1:
        raise ValueError("r must be a positive integer")
    gram = (X @ X.T) ** r
    return float(np.linalg.eigvalsh(gram)[0])


def estimate_gram(
    X: np.ndarray, n_mc: int, seed: int = 0, *, n_blocks: int = 10, stream: tuple = ()
) -> GramEstimate:
    """Monte Carlo estimate of E_w[relu(Xw) relu(Xw)^T] and its smallest eigenvalue.

    The standard error of lambda_hat comes from a delete-one-block jackknife.
    """
    X = linalg.as_matrix(X, "X")
    if n_mc < 1:
        raise ValueError("n_mc must be >= 1")
    n, d0 = X.shape
    rng = stream_rng(seed, *stream)
    w = rng.standard_normal((d0, n_mc))
    z = np.maximum(X @ w, 0.0)
    total = z @ z.T
    gram = total / n_mc
    gram = 0.5 * (gram + gram.T)
    lam = float(np.linalg.eigvalsh(gram)[0])

    n_blocks = min(n_blocks, n_mc)
    bounds = np.linspace(0, n_mc, n_blocks + 1).astype(int)
    lam_loo = []
    for b in range(n_blocks):
        zb = z[:, bounds[b] : bounds[b + 1]]
        nb = bounds[b + 1] - bounds[b]
        if nb == n_mc:
            continue
        g = (total - zb @ zb.T) / (n_mc - nb)
        g = 0.5 * (g + g.T)
        lam_loo.append(np.linalg.eigvalsh(g)[0])
    if len(lam_loo) >= 2:
        lam_loo = np.array(lam_loo)
        m = len(lam_loo)
        stderr = math.sqrt((m - 1) / m * float(np.sum((lam_loo - lam_loo.mean()) ** 2)))
    else:
        stderr = 0.0
    return GramEstimate(gram=gram, lambda_hat=lam, stderr=stderr, n_mc=n_mc)


def alpha_threshold_experiment(
    n: int,
    d0: int,
    d1: int,
    beta_w: float,
    n_trials: int,
    seed: int = 0,
    *,
    n_mc: int = 20000,
) -> ThresholdReport:
    """Frequency of alpha_0 exceeding beta_w * sqrt(d1 * lambda_hat) / 2.

    Draws X once, estimates the feature-Gram floor by Monte Carlo, then
    samples fresh hidden weights n_trials times and measures the smallest
    singular value of relu(X W)^T each time.
    """
    X = sample_sphere_rows(n, d0, "sqrt_d0", seed, stream=(0,))
    est = estimate_gram(X, n_mc, seed, stream=(1,))
    threshold = beta_w * math.sqrt(max(d1 * est.lambda_hat, 0.0)) / 2.0
    alphas = np.empty(n_trials)
    for i in range(n_trials):
        rng = stream_rng(seed, 2, i)
        w = rng.standard_normal((d0, d1)) * beta_w
        hidden = np.maximum(X @ w, 0.0)
        alphas[i] = network.alpha0(hidden)
    frac = float(np.mean(alphas > threshold))
    return ThresholdReport(
        threshold=threshold, pass_fraction=frac, lambda_hat=est.lambda_hat, alphas=alphas
    )


def concentration_report(
    n: int,
    d0: int,
    d1: int,
    d2: int,
    config: InitConfig,
    n_trials: int,
    seed: int = 0,
) -> ConcentrationReport:
    """Normalized initialization statistics over independent trials.

    Ratios reported (one sample per trial):
      w_fro:   ||W0||_F / (beta_w sqrt(d0 d1))
      v_fro:   ||V0||_F / (beta_v sqrt(d1 d2))
      x_op:    ||X||_op / sqrt(max(N, d0))
      loss0:   L(theta0) / (||Y||_F^2 + beta_v^2 d2 ||W0||_F^2 ||X||_op^2 log N)
    """
    ratios = {name: np.empty(n_trials) for name in ("w_fro", "v_fro", "x_op", "loss0")}
    label_norm = assumption_row_norm(config.beta_w, config.beta_v, d0, d1, d2)
    for trial in range(n_trials):
        X = sample_sphere_rows(n, d0, "sqrt_d0", seed, stream=(trial, 0))
        if d2 == 1 and n % 2 == 0:
            Y = gen_labels(n, 1, "pm_one", seed, stream=(trial, 1))
        else:
            Y = gen_labels(n, d2, "scaled", seed, row_norm=label_norm, stream=(trial, 1))
        params = init_params(d0, d1, d2, config, stream=(trial, 2))
        w_fro = linalg.frobenius_norm(params.W)
        v_fro = linalg.frobenius_norm(params.V)
        x_op = linalg.operator_norm(X)
        loss0 = network.loss(X, Y, params)
        ratios["w_fro"][trial] = (
            w_fro / (config.beta_w * math.sqrt(d0 * d1)) if config.beta_w > 0 else np.nan
        )
        ratios["v_fro"][trial] = (
            v_fro / (config.beta_v * math.sqrt(d1 * d2)) if config.beta_v > 0 else np.nan
        )
        ratios["x_op"][trial] = x_op / math.sqrt(max(n, d0))
        denom = (
            float(np.sum(Y**2))
            + config.beta_v**2 * d2 * w_fro**2 * x_op**2 * math.log(n)
        )
        ratios["loss0"][trial] = loss0 / denom
    return ConcentrationReport(ratios=ratios)
