"""Independent oracles used by the test suite.

Everything here is deliberately written in the most naive way possible
(scalar loops, textbook algorithms, straight-line arithmetic) so it shares
no code path with the package implementation it checks.
"""

from __future__ import annotations

import math

import numpy as np


def jacobi_singular_values(m, max_sweeps: int = 60, tol: float = 1e-14) -> np.ndarray:
    """All singular values by one-sided Jacobi rotations, descending order.

    Orthogonalizes the columns of the (tall) matrix; column norms at
    convergence are the singular values. Wide input is transposed first
    (the nonzero spectrum is shared).
    """
    a = np.array(m, dtype=float)
    if a.ndim != 2:
        raise ValueError("need a matrix")
    if a.shape[0] < a.shape[1]:
        a = a.T
    n = a.shape[1]
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = float(a[:, p] @ a[:, p])
                beta = float(a[:, q] @ a[:, q])
                gamma = float(a[:, p] @ a[:, q])
                if abs(gamma) <= tol * math.sqrt(alpha * beta) or gamma == 0.0:
                    continue
                off = max(off, abs(gamma) / math.sqrt(max(alpha * beta, 1e-300)))
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (
                    abs(zeta) + math.sqrt(1.0 + zeta * zeta)
                )
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                ap = a[:, p].copy()
                a[:, p] = c * ap - s * a[:, q]
                a[:, q] = s * ap + c * a[:, q]
        if off < tol:
            break
    sv = np.sort(np.linalg.norm(a, axis=0))[::-1]
    return sv


def scalar_forward(X, W, V):
    """Triple-loop forward pass: returns (preactivation, hidden, output)."""
    n, d0 = len(X), len(X[0])
    d1, d2 = len(V), len(V[0])
    pre = [[0.0] * d1 for _ in range(n)]
    for i in range(n):
        for j in range(d1):
            s = 0.0
            for k in range(d0):
                s += X[i][k] * W[k][j]
            pre[i][j] = s
    hid = [[max(v, 0.0) for v in row] for row in pre]
    out = [[0.0] * d2 for _ in range(n)]
    for i in range(n):
        for m in range(d2):
            s = 0.0
            for j in range(d1):
                s += hid[i][j] * V[j][m]
            out[i][m] = s
    return pre, hid, out


def scalar_loss(X, Y, W, V) -> float:
    _, _, out = scalar_forward(X, W, V)
    total = 0.0
    for i in range(len(X)):
        for m in range(len(Y[0])):
            total += (Y[i][m] - out[i][m]) ** 2
    return 0.5 * total


def fd_gradient(f, theta: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function of a vector."""
    g = np.zeros_like(theta)
    for i in range(theta.size):
        up = theta.copy()
        dn = theta.copy()
        up[i] += step
        dn[i] -= step
        g[i] = (f(up) - f(dn)) / (2.0 * step)
    return g


def fd_jacobian(f, theta: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central finite differences of a vector function of a vector."""
    f0 = f(theta)
    jac = np.zeros((f0.size, theta.size))
    for i in range(theta.size):
        up = theta.copy()
        dn = theta.copy()
        up[i] += step
        dn[i] -= step
        jac[:, i] = (f(up) - f(dn)) / (2.0 * step)
    return jac


# Straight-line re-evaluations of every certificate formula (math module
# only, no numpy, no shared helpers).


def formula_theorem(a, alpha, c, c1, c2):
    return (a * c1 / alpha**3 + a * a * c2 / alpha**5) * math.exp(
        4.0 * c * a * a / alpha**4
    )


def formula_lemma(a, alpha, c, c1, c2):
    return 4.0 * (a * c1 / alpha**3 + 2.0 * a * a * c2 / alpha**5) * math.exp(
        4.0 * c * a * a / alpha**4
    )


def formula_loss_bound(a, alpha, t):
    return a * a * math.exp(-t * alpha * alpha)


def formula_radius(a, alpha, x_op, theta_norm):
    u = 4.0 * x_op * a / (alpha * alpha)
    return u * theta_norm * math.exp(u)


def formula_width(n, d0, d2, rho, beta_w, c_delta):
    bracket = d2 * n**2.5 / (d0 * beta_w * beta_w)
    return max(float(n), c_delta * bracket ** (1.0 / (1.0 + rho)) * math.log(n) ** 2)


def formula_k_star(n, b, eta, eps, decay_rate, loss0_bound):
    inner = math.log(loss0_bound / eps) / decay_rate
    if inner < 0.0:
        inner = 0.0
    return math.floor(1.0 + (n / (eta * b)) * inner)


def envelope_closed_form(a, alpha, t):
    """Exact solution of y' = a exp(-alpha^2 t), y(0) = 0."""
    return a * (1.0 - math.exp(-(alpha**2) * t)) / alpha**2


def brute_khatri_rao(A, B) -> np.ndarray:
    """Row-wise Kronecker by explicit nested loops."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n, ca = A.shape
    _, cb = B.shape
    out = np.zeros((n, ca * cb))
    for i in range(n):
        for p in range(ca):
            for q in range(cb):
                out[i, p * cb + q] = A[i, p] * B[i, q]
    return out


def materialized_kr_power_gram(X, r: int) -> np.ndarray:
    """Gram of the r-fold rowwise Kronecker power, built row by explicit row."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    rows = []
    for i in range(n):
        k = X[i]
        for _ in range(r - 1):
            k = np.kron(k, X[i])
        rows.append(k)
    gram = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            gram[i, j] = gram[j, i] = float(rows[i] @ rows[j])
    return gram
