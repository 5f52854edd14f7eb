"""Dense matrix primitives shared by every other module.

Matrices are plain 2-d float64 numpy arrays (row-major). Every public
operation validates shape and finiteness up front so that NaN/Inf never
propagates silently into a certificate or a trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "as_matrix",
    "operator_norm",
    "frobenius_norm",
    "sigma_min",
    "gram_sigma_min",
    "khatri_rao",
    "check_product_norm_inequality",
    "check_diag_khatri_identity",
    "NormInequalityReport",
    "DiagKhatriReport",
]

# Relative tolerance used when a report compares two norm expressions.
REL_TOL = 1e-9


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-d float64 array, rejecting empty or non-finite input."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got ndim={a.ndim}")
    if a.size == 0:
        raise ValueError(f"{name} must be nonempty, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return a


def operator_norm(m) -> float:
    """Largest singular value (spectral norm)."""
    a = as_matrix(m)
    return float(np.linalg.svd(a, compute_uv=False)[0])


def frobenius_norm(m) -> float:
    """Square root of the sum of squared entries."""
    a = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains NaN or Inf entries")
    return float(np.linalg.norm(a))


def sigma_min(m) -> float:
    """Smallest singular value.

    For a wide matrix (rows < cols) this is the smallest of the rows-many
    singular values, matching sigma_min(A) = sqrt(lambda_min(A^T A)) applied
    to the thin side.
    """
    a = as_matrix(m)
    return float(np.linalg.svd(a, compute_uv=False)[-1])


def gram_sigma_min(m) -> float:
    """Smallest singular value via the small-side Gram matrix.

    Squares the condition number, so only suitable away from exact rank
    deficiency; used on hot paths (trajectory logging) where the matrix has
    one short side. Agrees with :func:`sigma_min` to ~1e-8 relative on
    reasonably conditioned input.
    """
    a = as_matrix(m)
    if a.shape[0] <= a.shape[1]:
        g = a @ a.T
    else:
        g = a.T @ a
    lam = float(np.linalg.eigvalsh(g)[0])
    return float(np.sqrt(max(lam, 0.0)))


def khatri_rao(a, b) -> np.ndarray:
    """Row-wise Kronecker product: row i of the result is A_i ⊗ B_i."""
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    if a.shape[0] != b.shape[0]:
        raise ValueError(
            f"row-count mismatch: A has {a.shape[0]} rows, B has {b.shape[0]}"
        )
    n = a.shape[0]
    return (a[:, :, None] * b[:, None, :]).reshape(n, a.shape[1] * b.shape[1])


@dataclass(frozen=True)
class NormInequalityReport:
    lhs: float
    rhs: float
    holds: bool


@dataclass(frozen=True)
class DiagKhatriReport:
    lhs: float
    rhs: float
    equal: bool


def check_product_norm_inequality(mats: Sequence[np.ndarray]) -> NormInequalityReport:
    """Check ||A_1 ... A_k||_F <= min_j ||A_j||_F * prod_{i != j} ||A_i||_op.

    The chain product must be well defined; a single matrix gives
    lhs = rhs = its Frobenius norm.
    """
    if len(mats) == 0:
        raise ValueError("need at least one matrix")
    mats = [as_matrix(m, f"A{i + 1}") for i, m in enumerate(mats)]
    prod = mats[0]
    for i, m in enumerate(mats[1:], start=2):
        if prod.shape[1] != m.shape[0]:
            raise ValueError(
                f"chain mismatch between factor {i - 1} ({prod.shape}) "
                f"and factor {i} ({m.shape})"
            )
        prod = prod @ m
    lhs = frobenius_norm(prod)
    fro = [frobenius_norm(m) for m in mats]
    op = [operator_norm(m) for m in mats]
    rhs = np.inf
    for j in range(len(mats)):
        cand = fro[j]
        for i in range(len(mats)):
            if i != j:
                cand *= op[i]
        rhs = min(rhs, cand)
    rhs = float(rhs)
    return NormInequalityReport(lhs=lhs, rhs=rhs, holds=lhs <= rhs + REL_TOL * rhs)


def check_diag_khatri_identity(a, b, x) -> DiagKhatriReport:
    """Check ||(A^T * B)^T x||_2 == ||A diag(x) B||_F (rowwise-Kronecker form)."""
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    x = np.asarray(x, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise ValueError("x contains NaN or Inf entries")
    if a.shape[1] != x.size or x.size != b.shape[0]:
        raise ValueError(
            f"A diag(x) B undefined for A {a.shape}, x ({x.size},), B {b.shape}"
        )
    lhs = float(np.linalg.norm(khatri_rao(a.T, b).T @ x))
    rhs = frobenius_norm(a @ np.diag(x) @ b)
    equal = abs(lhs - rhs) <= REL_TOL * max(1.0, rhs)
    return DiagKhatriReport(lhs=lhs, rhs=rhs, equal=equal)
