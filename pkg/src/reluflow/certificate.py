"""Initialization-time convergence certificates.

Everything here is a closed-form function of quantities measured at the
starting point: the loss, the smallest singular value of the transposed
hidden layer, and a handful of data/weight norms. The two headline checks
(`theorem_certificate` with threshold 1/8 and `lemma_condition` with
threshold 1) weight their terms differently and are reported side by side
without reconciliation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from . import linalg, network
from .data import Params

__all__ = [
    "Constants",
    "CertCheck",
    "Certificate",
    "WidthRequirement",
    "OneLayerCertificate",
    "compute_constants",
    "theorem_certificate",
    "lemma_condition",
    "predicted_bounds",
    "width_requirement",
    "k_star_bound",
    "one_layer_certificate",
    "evaluate_certificate",
]


@dataclass(frozen=True)
class Constants:
    """Scalars controlling the envelope inequality, measured at t = 0.

    a      -- square root of the initial loss
    alpha  -- smallest singular value of the transposed hidden layer H^T
    c      -- ||X||_op^2
    c1     -- 2*sqrt(2) * ||X||_op^2 * ||V0||_F
    c2     -- 2 * ||X||_op^3 * ||W0||_F
    """

    a: float
    alpha: float
    c: float
    c1: float
    c2: float
    x_op: float
    w0_fro: float
    v0_fro: float


@dataclass(frozen=True)
class CertCheck:
    value: float
    passes: bool
    reason: str = ""


@dataclass(frozen=True)
class Certificate:
    constants: Constants
    F_value: float
    theorem_passes: bool
    lemma_value: float
    lemma_passes: bool
    decay_rate: float
    confinement_radius: float
    loss0: float
    reason: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["constants"] = asdict(self.constants)
        return d


@dataclass(frozen=True)
class WidthRequirement:
    value: float
    d0_in_range: bool


@dataclass(frozen=True)
class OneLayerCertificate:
    beta0: float
    width_ok: bool
    condition_value: float
    loss0: float


def compute_constants(X: np.ndarray, Y: np.ndarray, params: Params) -> Constants:
    """Measure all certificate constants at the given starting point."""
    X = linalg.as_matrix(X, "X")
    Y = linalg.as_matrix(Y, "Y")
    cache = network.forward(X, params, Y)
    loss0 = 0.5 * float(np.sum(cache.residual**2))
    x_op = linalg.operator_norm(X)
    w0_fro = linalg.frobenius_norm(params.W)
    v0_fro = linalg.frobenius_norm(params.V)
    alpha = network.alpha0(cache.hidden)
    return Constants(
        a=math.sqrt(loss0),
        alpha=alpha,
        c=x_op**2,
        c1=2.0 * math.sqrt(2.0) * x_op**2 * v0_fro,
        c2=2.0 * x_op**3 * w0_fro,
        x_op=x_op,
        w0_fro=w0_fro,
        v0_fro=v0_fro,
    )


def _exp_factor(k: Constants) -> float:
    """exp(4*c*a^2/alpha^4), saturating to inf instead of raising on overflow."""
    arg = 4.0 * k.c * k.a**2 / k.alpha**4
    return math.inf if arg > 700.0 else math.exp(arg)


def theorem_certificate(k: Constants) -> CertCheck:
    """F = (a*c1/alpha^3 + a^2*c2/alpha^5) * exp(4*c*a^2/alpha^4), passes iff < 1/8."""
    if k.alpha <= 0.0:
        return CertCheck(value=math.inf, passes=False, reason="alpha_zero")
    lead = k.a * k.c1 / k.alpha**3 + k.a**2 * k.c2 / k.alpha**5
    f = lead * _exp_factor(k) if lead > 0.0 else 0.0
    return CertCheck(value=f, passes=f < 0.125)


def lemma_condition(k: Constants) -> CertCheck:
    """4*(a*c1/alpha^3 + 2*a^2*c2/alpha^5) * exp(4*c*a^2/alpha^4), passes iff < 1."""
    if k.alpha <= 0.0:
        return CertCheck(value=math.inf, passes=False, reason="alpha_zero")
    lead = 4.0 * (k.a * k.c1 / k.alpha**3 + 2.0 * k.a**2 * k.c2 / k.alpha**5)
    v = lead * _exp_factor(k) if lead > 0.0 else 0.0
    return CertCheck(value=v, passes=v < 1.0)


def predicted_bounds(k: Constants, theta0_norm: float, t) -> tuple[np.ndarray, float]:
    """Predicted loss bound a^2 * exp(-t*alpha^2) and confinement radius.

    The radius is u*||theta0||*e^u with u = 4*||X||_op*a/alpha^2. Returns the
    bound evaluated at t (scalar or array) and the radius.
    """
    if k.alpha <= 0.0:
        raise ValueError("predicted bounds require alpha > 0")
    t = np.asarray(t, dtype=float)
    loss_bound = k.a**2 * np.exp(-t * k.alpha**2)
    u = 4.0 * k.x_op * k.a / k.alpha**2
    radius = u * theta0_norm * math.exp(u) if u <= 700.0 else math.inf
    return loss_bound, radius


def width_requirement(
    n: int,
    d0: int,
    d2: int,
    rho: float,
    beta_w: float,
    delta0: float,
    c_delta: float = 1.0,
) -> WidthRequirement:
    """Required hidden width max(N, C * [d2*N^2.5/(d0*beta_w^2)]^(1/(1+rho)) * log^2 N).

    Natural logarithms throughout. When d0 falls outside [N^delta0, N] the
    value is still returned but flagged.
    """
    if n < 2:
        raise ValueError("need N >= 2")
    if beta_w <= 0:
        raise ValueError("beta_w must be positive")
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    in_range = n**delta0 <= d0 <= n
    bracket = (d2 * n**2.5) / (d0 * beta_w**2)
    value = max(float(n), c_delta * bracket ** (1.0 / (1.0 + rho)) * math.log(n) ** 2)
    return WidthRequirement(value=value, d0_in_range=bool(in_range))


def k_star_bound(
    n: int, b: int, eta: float, eps: float, decay_rate: float, loss0_bound: float
) -> int:
    """Iteration bound floor(1 + N/(eta*b) * max(0, log(loss0_bound/eps)/decay_rate))."""
    if eta <= 0 or b <= 0 or eps <= 0:
        raise ValueError("eta, b, eps must be positive")
    if decay_rate <= 0:
        raise ValueError("decay_rate must be positive")
    term = max(0.0, math.log(loss0_bound / eps) / decay_rate)
    return int(math.floor(1.0 + (n / (eta * b)) * term))


def one_layer_certificate(
    X: np.ndarray,
    y: np.ndarray,
    w0: np.ndarray,
    v: np.ndarray,
    rule: str = "zero",
    c_width: float = 1.0,
) -> OneLayerCertificate:
    """Certificate for training the hidden layer only (output weights fixed).

    beta0 is the smallest singular value of (X * (R0 diag(v)))^T where R0 is
    the initial activation selection and * the rowwise Kronecker product;
    it is computed from the N x N Gram (XX^T) ∘ (R0 diag(v) (R0 diag(v))^T)
    without materializing the product. The width check compares d1 against
    c_width * max(N log N / d0, N^5 / d0^4). Requires unit-norm input rows
    and a single output column.
    """
    X = linalg.as_matrix(X, "X")
    y = np.asarray(y, dtype=float).ravel()
    w0 = linalg.as_matrix(w0, "W0")
    v = np.asarray(v, dtype=float).ravel()
    n, d0 = X.shape
    d1 = w0.shape[1]
    if y.size != n:
        raise ValueError("y must have one entry per input row")
    if v.size != d1:
        raise ValueError("v must have one entry per hidden unit")
    row_norms = np.linalg.norm(X, axis=1)
    if not np.allclose(row_norms, 1.0, atol=1e-8):
        raise ValueError("one-layer certificate expects unit-norm input rows")

    pre = X @ w0
    r0 = network.selection_matrix(pre, rule)
    scaled = r0 * v[None, :]  # R0 diag(v)
    gram = (X @ X.T) * (scaled @ scaled.T)
    lam = float(np.linalg.eigvalsh(gram)[0])
    beta0 = math.sqrt(max(lam, 0.0))

    width_floor = c_width * max(n * math.log(n) / d0, n**5 / d0**4)
    width_ok = d1 >= width_floor

    loss0 = 0.5 * float(np.sum((y - np.maximum(pre, 0.0) @ v) ** 2))
    y_norm = float(np.linalg.norm(y))
    if beta0 > 0.0:
        condition = (y_norm / (beta0 * math.sqrt(d0 * d1))) * (
            math.sqrt(math.log(n))
            + (d1 * y_norm / math.sqrt(d0) * math.sqrt(loss0) / beta0**2) ** (1.0 / 3.0)
        )
    else:
        condition = math.inf
    return OneLayerCertificate(
        beta0=beta0, width_ok=bool(width_ok), condition_value=condition, loss0=loss0
    )


def evaluate_certificate(X: np.ndarray, Y: np.ndarray, params: Params) -> Certificate:
    """Bundle every certificate quantity for one starting point."""
    k = compute_constants(X, Y, params)
    thm = theorem_certificate(k)
    lem = lemma_condition(k)
    if k.alpha > 0.0:
        theta0_norm = float(np.linalg.norm(network.flatten_params(params)))
        _, radius = predicted_bounds(k, theta0_norm, 0.0)
        decay = k.alpha**2
    else:
        radius = math.inf
        decay = 0.0
    return Certificate(
        constants=k,
        F_value=thm.value,
        theorem_passes=thm.passes,
        lemma_value=lem.value,
        lemma_passes=lem.passes,
        decay_rate=decay,
        confinement_radius=radius,
        loss0=k.a**2,
        reason=thm.reason,
    )
