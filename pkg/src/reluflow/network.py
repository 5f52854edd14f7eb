"""One-hidden-layer ReLU network: forward pass, MSE loss, exact subgradients.

The model is Yhat = relu(X W) V with no biases. Losses are half squared
Frobenius residuals, optionally restricted to a batch of sample rows. At
kink points (preactivation exactly zero) the derivative of relu is selected
by a configurable rule; everywhere else it is the indicator of a positive
preactivation.

Parameter vectors flatten W column-by-column (input index fastest) followed
by V column-by-column, so subgradients and Jacobian rows are comparable
entry for entry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Params

__all__ = [
    "ForwardCache",
    "Subgradient",
    "ActivationPattern",
    "SELECTION_VALUES",
    "forward",
    "loss",
    "batch_loss",
    "subgradient",
    "activation_pattern",
    "jacobian",
    "flatten_params",
    "unflatten_params",
]

# Value assigned to relu' at an exactly-zero preactivation.
SELECTION_VALUES = {"zero": 0.0, "half": 0.5, "one": 1.0}

DEFAULT_ZERO_THRESHOLD = 1e-8


@dataclass
class ForwardCache:
    """All intermediate quantities of one forward pass."""

    preactivation: np.ndarray  # X W,        N x d1
    hidden: np.ndarray         # relu(X W),  N x d1
    output: np.ndarray         # hidden V,   N x d2
    residual: np.ndarray       # Y - output when labels were given, else -output


@dataclass
class Subgradient:
    gW: np.ndarray
    gV: np.ndarray
    selection_rule: str = "zero"


@dataclass
class ActivationPattern:
    mask: np.ndarray       # boolean N x d1, preactivation > 0
    zero_count: int        # entries with |preactivation| < threshold


def _check_dims(X: np.ndarray, params: Params, Y: np.ndarray | None = None) -> None:
    if X.ndim != 2:
        raise ValueError("X must be 2-dimensional")
    if X.shape[1] != params.d0:
        raise ValueError(
            f"X has {X.shape[1]} columns but W expects {params.d0} inputs"
        )
    if Y is not None:
        if Y.ndim != 2 or Y.shape[0] != X.shape[0] or Y.shape[1] != params.d2:
            raise ValueError(
                f"Y shape {Y.shape} incompatible with N={X.shape[0]}, d2={params.d2}"
            )


def forward(X: np.ndarray, params: Params, Y: np.ndarray | None = None) -> ForwardCache:
    """Evaluate the network; residual is Y - Yhat (or -Yhat without labels)."""
    X = np.asarray(X, dtype=float)
    _check_dims(X, params, Y)
    pre = X @ params.W
    hidden = np.maximum(pre, 0.0)
    out = hidden @ params.V
    residual = (Y - out) if Y is not None else -out
    return ForwardCache(preactivation=pre, hidden=hidden, output=out, residual=residual)


def loss(X: np.ndarray, Y: np.ndarray, params: Params) -> float:
    """Half squared Frobenius norm of the residual."""
    cache = forward(X, params, Y)
    return 0.5 * float(np.sum(cache.residual**2))


def _check_batch(A, n: int) -> np.ndarray:
    idx = np.asarray(A, dtype=int).ravel()
    if idx.size == 0:
        raise ValueError("batch index set must be nonempty")
    if idx.min() < 0 or idx.max() >= n:
        raise ValueError(f"batch indices out of range [0, {n})")
    return idx


def batch_loss(X: np.ndarray, Y: np.ndarray, params: Params, A) -> float:
    """Loss restricted to the sample rows in A; A = range(N) recovers `loss`."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    idx = _check_batch(A, X.shape[0])
    cache = forward(X[idx], params, Y[idx])
    return 0.5 * float(np.sum(cache.residual**2))


def selection_matrix(pre: np.ndarray, rule: str = "zero") -> np.ndarray:
    """relu' evaluated entrywise, with `rule` deciding the value at exact zeros."""
    if rule not in SELECTION_VALUES:
        raise ValueError(f"unknown selection rule {rule!r}")
    r = (pre > 0.0).astype(float)
    at_zero = SELECTION_VALUES[rule]
    if at_zero != 0.0:
        r[pre == 0.0] = at_zero
    return r


def subgradient(
    X: np.ndarray,
    Y: np.ndarray,
    params: Params,
    A=None,
    rule: str = "zero",
) -> Subgradient:
    """Ascent element of the batch-loss subdifferential.

    The returned (gW, gV) is the element selected by `rule`, oriented so a
    descent step is theta - eta * g:

        gW[:, j] = X^T diag(r[:, j]) (Yhat - Y) V[j, :]^T    (batch rows only)
        gV       = H^T (Yhat - Y)                            (batch rows only)
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    _check_dims(X, params, Y)
    if A is None:
        Xb, Yb = X, Y
    else:
        idx = _check_batch(A, X.shape[0])
        Xb, Yb = X[idx], Y[idx]
    cache = forward(Xb, params, Yb)
    r = selection_matrix(cache.preactivation, rule)
    err = -cache.residual  # Yhat - Y
    gW = Xb.T @ (r * (err @ params.V.T))
    gV = cache.hidden.T @ err
    return Subgradient(gW=gW, gV=gV, selection_rule=rule)


def activation_pattern(
    X: np.ndarray, params: Params, zero_threshold: float = DEFAULT_ZERO_THRESHOLD
) -> ActivationPattern:
    """Boolean sign pattern of the preactivation plus a numerical-zero count."""
    if zero_threshold <= 0:
        raise ValueError("zero_threshold must be positive")
    X = np.asarray(X, dtype=float)
    _check_dims(X, params)
    pre = X @ params.W
    return ActivationPattern(
        mask=pre > 0.0, zero_count=int(np.sum(np.abs(pre) < zero_threshold))
    )


def jacobian(X: np.ndarray, params: Params, rule: str = "zero") -> np.ndarray:
    """Differential of theta -> Yhat as an (N*d2) x D matrix.

    Row (i, m) (index i*d2 + m) holds the partials of Yhat[i, m]; columns
    follow the flattening of :func:`flatten_params`.
    """
    X = np.asarray(X, dtype=float)
    _check_dims(X, params)
    n, d0 = X.shape
    d1, d2 = params.d1, params.d2
    pre = X @ params.W
    hidden = np.maximum(pre, 0.0)
    r = selection_matrix(pre, rule)
    # d Yhat[i,m] / d W[k,j] = X[i,k] r[i,j] V[j,m]; column index j*d0 + k.
    jw = np.einsum("ik,ij,jm->imjk", X, r, params.V).reshape(n * d2, d1 * d0)
    # d Yhat[i,m] / d V[j,p] = H[i,j] [m == p]; column index p*d1 + j.
    jv = np.einsum("ij,mp->impj", hidden, np.eye(d2)).reshape(n * d2, d2 * d1)
    return np.concatenate([jw, jv], axis=1)


def alpha0(hidden: np.ndarray) -> float:
    """Smallest singular value of H^T in the sqrt(lambda_min(H H^T)) sense.

    Uses the N x N sample Gram, so a rank-deficient hidden layer (fewer
    units than samples) correctly yields zero rather than the smallest of
    the d1-many singular values.
    """
    hidden = np.asarray(hidden, dtype=float)
    if hidden.ndim != 2:
        raise ValueError("hidden layer must be a matrix")
    if not hidden.any():
        return 0.0
    gram = hidden @ hidden.T
    lam = float(np.linalg.eigvalsh(gram)[0])
    return float(np.sqrt(max(lam, 0.0)))


def flatten_params(params: Params) -> np.ndarray:
    """Stack W (column-major) then V (column-major) into one vector."""
    return np.concatenate([params.W.ravel(order="F"), params.V.ravel(order="F")])


def unflatten_params(theta: np.ndarray, d0: int, d1: int, d2: int) -> Params:
    """Inverse of :func:`flatten_params`."""
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.size != d0 * d1 + d1 * d2:
        raise ValueError("parameter vector has wrong length")
    w = theta[: d0 * d1].reshape((d0, d1), order="F")
    v = theta[d0 * d1 :].reshape((d1, d2), order="F")
    return Params(w.copy(), v.copy())
