"""Experiment grid runner: convergence probability, zero-preactivation counts,
activation-pattern churn, and lazy-regime diagnostics.

Each run draws fresh data, trains by (full-batch by default) SGD until the
relative residual crosses a threshold or the iteration budget runs out, and
records the zero count of the final preactivation. Two setups are supported:
training both layers (Gaussian output weights of scale 1/sqrt(d1)) and
training the hidden layer only (output weights frozen at +/- 1/sqrt(d1)).
Given one master seed the whole grid is reproducible; runs share data across
setups so the comparison is paired.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import network
from .data import InitConfig, gen_labels, init_params, sample_sphere_rows
from .dynamics import SgdConfig, run_sgd
from .network import DEFAULT_ZERO_THRESHOLD

__all__ = [
    "GridSpec",
    "RunSummary",
    "CellResult",
    "CellEntry",
    "GridResult",
    "MetricSeries",
    "ModeComparison",
    "run_cell_once",
    "run_grid",
    "track_metrics",
    "compare_training_modes",
]


@dataclass
class GridSpec:
    """Grid configuration: dimensions swept, runs per cell, training setup.

    sgd.steps and sgd.seed are ignored (max_iters and the master seed rule);
    any sgd.batch_size >= N means full batch.
    """

    n_samples: int
    d0_values: list[int]
    d1_values: list[int]
    n_runs: int
    train_mode: str  # "both" | "w_only"
    sgd: SgdConfig
    convergence_threshold: float = 2.5e-3
    zero_threshold: float = DEFAULT_ZERO_THRESHOLD
    max_iters: int = 5000
    log_every: int = 50
    # The hidden-layer-only setup traditionally uses a different step size;
    # when unset, `sgd` applies to both setups.
    sgd_w_only: SgdConfig | None = None

    def __post_init__(self):
        if not self.d0_values or not self.d1_values:
            raise ValueError("d0_values and d1_values must be nonempty")
        if self.convergence_threshold <= 0 or self.zero_threshold <= 0:
            raise ValueError("thresholds must be positive")
        if self.train_mode not in ("both", "w_only"):
            raise ValueError(f"unknown train_mode {self.train_mode!r}")
        if self.n_runs < 1:
            raise ValueError("need at least one run per cell")

    def mode_sgd(self) -> SgdConfig:
        if self.train_mode == "w_only" and self.sgd_w_only is not None:
            return self.sgd_w_only
        return self.sgd

    def effective_batch(self) -> int:
        b = self.mode_sgd().batch_size
        if b <= 0 or b >= self.n_samples:
            return self.n_samples
        return b


@dataclass
class RunSummary:
    """One training run. `iterations` is the first logged iterate at which the
    relative residual crossed the threshold (max_iters when it never did);
    the run itself always executes the full budget, since the zero count
    keeps evolving after the loss has converged."""

    converged: bool
    final_loss: float
    final_zeros: int
    iterations: int
    final_rel_residual: float
    min_rel_residual: float


@dataclass
class CellResult:
    p_converge: float
    avg_final_zeros: float  # over converged runs; nan when none converged
    runs: list[RunSummary]


@dataclass
class CellEntry:
    d0: int
    d1: int
    result: CellResult


@dataclass
class GridResult:
    spec: GridSpec
    master_seed: int
    cells: list[CellEntry]

    def matrix(self, attr: str) -> np.ndarray:
        """Cell attribute as a d0 x d1 matrix in spec order."""
        lookup = {(c.d0, c.d1): getattr(c.result, attr) for c in self.cells}
        return np.array(
            [
                [lookup[(d0, d1)] for d1 in self.spec.d1_values]
                for d0 in self.spec.d0_values
            ],
            dtype=float,
        )


@dataclass
class MetricSeries:
    k: np.ndarray
    loss: np.ndarray
    zeros: np.ndarray
    hamming: np.ndarray
    delta_loss: np.ndarray
    delta_diff: np.ndarray | None  # None when differential tracking was off


@dataclass
class ModeComparison:
    ratios: dict[tuple[int, int], float]
    excluded: list[tuple[int, int]]
    median_ratio: float
    grid_w_only: GridResult
    grid_both: GridResult


def _make_run_inputs(
    n: int, d0: int, d1: int, mode: str, master_seed: int, cell: int, run: int
):
    """Data and initialization for one run; X, Y, W0 are shared across modes."""
    X = sample_sphere_rows(n, d0, "unit", master_seed, stream=(cell, run, 0))
    Y = gen_labels(n, 1, "pm_one", master_seed, stream=(cell, run, 1))
    if mode == "both":
        cfg = InitConfig(beta_w=1.0, beta_v=1.0 / math.sqrt(d1), seed=master_seed)
    else:
        cfg = InitConfig(
            beta_w=1.0,
            beta_v=0.0,
            scheme="fixed_v_signs",
            seed=master_seed,
            y_norm=float(np.linalg.norm(Y)),
            n_samples=n,
        )
    theta0 = init_params(d0, d1, 1, cfg, stream=(cell, run, 2))
    return X, Y, theta0


def run_cell_once(
    spec: GridSpec, d0: int, d1: int, master_seed: int, cell: int, run: int
) -> RunSummary:
    """One seeded training run of one grid cell."""
    n = spec.n_samples
    X, Y, theta0 = _make_run_inputs(n, d0, d1, spec.train_mode, master_seed, cell, run)
    y_norm = float(np.linalg.norm(Y))
    cfg = replace(
        spec.mode_sgd(), batch_size=spec.effective_batch(), steps=spec.max_iters,
        seed=master_seed,
    )
    train_layers = "both" if spec.train_mode == "both" else "w_only"
    log = run_sgd(
        X,
        Y,
        theta0,
        cfg,
        train_layers,
        thinning=spec.log_every,
        zero_threshold=spec.zero_threshold,
        rng_stream=(cell, run, 3),
    )
    rels = np.sqrt(2.0 * np.maximum(log.loss, 0.0)) / y_norm
    hits = np.nonzero(rels < spec.convergence_threshold)[0]
    return RunSummary(
        converged=hits.size > 0,
        final_loss=log.final_loss,
        final_zeros=int(log.zeros[-1]),
        iterations=int(log.k[hits[0]]) if hits.size else spec.max_iters,
        final_rel_residual=float(rels[-1]),
        min_rel_residual=float(rels.min()),
    )


def run_grid(spec: GridSpec, master_seed: int = 0) -> GridResult:
    """Run every (d0, d1) cell of the grid, n_runs independent runs each."""
    cells = []
    cell_index = 0
    for d0 in spec.d0_values:
        for d1 in spec.d1_values:
            runs = [
                run_cell_once(spec, d0, d1, master_seed, cell_index, r)
                for r in range(spec.n_runs)
            ]
            conv = [r for r in runs if r.converged]
            cells.append(
                CellEntry(
                    d0=d0,
                    d1=d1,
                    result=CellResult(
                        p_converge=len(conv) / len(runs),
                        avg_final_zeros=(
                            float(np.mean([r.final_zeros for r in conv]))
                            if conv
                            else float("nan")
                        ),
                        runs=runs,
                    ),
                )
            )
            cell_index += 1
    return GridResult(spec=spec, master_seed=master_seed, cells=cells)


def _jac_matvec(X, W, V, r, hidden, v_w, v_v):
    out = ((X @ v_w) * r) @ V
    if v_v is not None:
        out = out + hidden @ v_v
    return out


def _jac_rmatvec(X, V, r, hidden, u, with_v: bool):
    g_w = X.T @ (r * (u @ V.T))
    g_v = hidden.T @ u if with_v else None
    return g_w, g_v


def _opnorm_diff_matrix_free(X, states, rule, with_v, seed=0, iters=80):
    """Operator norm of J(state1) - J(state0) by power iteration.

    states = ((W0, V0), (W1, V1)); never materializes the Jacobians. With a
    single state, returns the norm of that Jacobian itself.
    """
    rng = np.random.default_rng(seed)
    mats = []
    for W, V in states:
        pre = X @ W
        hidden = np.maximum(pre, 0.0)
        mats.append((W, V, network.selection_matrix(pre, rule), hidden))
    d0, d1 = mats[0][0].shape
    d2 = mats[0][1].shape[1]

    def apply(v_w, v_v):
        out = _jac_matvec(X, mats[-1][0], mats[-1][1], mats[-1][2], mats[-1][3], v_w, v_v)
        if len(mats) == 2:
            out = out - _jac_matvec(
                X, mats[0][0], mats[0][1], mats[0][2], mats[0][3], v_w, v_v
            )
        return out

    def apply_t(u):
        gw, gv = _jac_rmatvec(X, mats[-1][1], mats[-1][2], mats[-1][3], u, with_v)
        if len(mats) == 2:
            gw0, gv0 = _jac_rmatvec(X, mats[0][1], mats[0][2], mats[0][3], u, with_v)
            gw = gw - gw0
            if with_v:
                gv = gv - gv0
        return gw, gv

    v_w = rng.standard_normal((d0, d1))
    v_v = rng.standard_normal((d1, d2)) if with_v else None
    norm = math.sqrt(
        float(np.sum(v_w**2)) + (float(np.sum(v_v**2)) if with_v else 0.0)
    )
    v_w /= norm
    if with_v:
        v_v /= norm
    sigma = 0.0
    for _ in range(iters):
        u = apply(v_w, v_v)
        g_w, g_v = apply_t(u)
        norm = math.sqrt(
            float(np.sum(g_w**2)) + (float(np.sum(g_v**2)) if with_v else 0.0)
        )
        if norm == 0.0:
            return 0.0
        new_sigma = math.sqrt(norm)
        v_w = g_w / norm
        if with_v:
            v_v = g_v / norm
        if abs(new_sigma - sigma) <= 1e-12 * max(new_sigma, 1.0):
            sigma = new_sigma
            break
        sigma = new_sigma
    return sigma


def track_metrics(
    X: np.ndarray,
    Y: np.ndarray,
    theta0,
    cfg: SgdConfig,
    log_every: int,
    *,
    train_layers: str = "both",
    zero_threshold: float = DEFAULT_ZERO_THRESHOLD,
    track_differential: bool = True,
    dense_budget: int = 50_000_000,
    matrix_free: bool = True,
) -> MetricSeries:
    """Per-logged-iterate loss, zeros, mask Hamming distance, and relative changes.

    delta_loss and delta_diff compare consecutive logged iterates (both are 0
    at the first entry). delta_diff measures the network differential with
    respect to the trainable parameters only; it uses dense Jacobians up to
    `dense_budget` entries and a matrix-free power iteration beyond that.
    """
    if log_every < 1:
        raise ValueError("log_every must be >= 1")
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    log = run_sgd(
        X,
        Y,
        theta0,
        cfg,
        train_layers,
        thinning=log_every,
        zero_threshold=zero_threshold,
        keep_params_every=log_every,
    )
    n, d2 = Y.shape
    d0, d1 = theta0.W.shape
    ks = [int(k) for k in log.k if int(k) in log.params]
    with_v = train_layers == "both"
    dim = d0 * d1 + (d1 * d2 if with_v else 0)
    dense = (n * d2) * dim <= dense_budget
    if track_differential and not dense and not matrix_free:
        raise MemoryError(
            f"dense Jacobian needs {(n * d2) * dim} entries (budget {dense_budget}); "
            "enable matrix_free or raise the budget"
        )

    def jac_opnorm(p):
        jac = network.jacobian(X, p, cfg.rule)
        return jac if with_v else jac[:, : d0 * d1]

    loss_vals, zero_vals, hamming, d_loss, d_diff = [], [], [], [], []
    prev_mask = None
    for k in ks:
        p = network.unflatten_params(log.params[k], d0, d1, d2)
        pre = X @ p.W
        # Churn metric uses the numerically-active indicator: units whose
        # preactivation is pinned within zero_threshold of the kink flip
        # sign at rounding level forever (the minima sit on region
        # boundaries), which would mask the actual region stabilization.
        mask = pre > zero_threshold
        hidden = np.maximum(pre, 0.0)
        lval = 0.5 * float(np.sum((Y - hidden @ p.V) ** 2))
        loss_vals.append(lval)
        zero_vals.append(int(np.sum(np.abs(pre) < zero_threshold)))
        # Pattern churn compares consecutive *logged* iterates.
        hamming.append(0 if prev_mask is None else int(np.sum(mask != prev_mask)))
        prev_mask = mask
        # Relative changes compare iterate k against its immediate
        # predecessor k-1 (and are thinned to the logged points).
        if k - 1 not in log.params:
            d_loss.append(0.0)
            if track_differential:
                d_diff.append(0.0)
            continue
        p_prev = network.unflatten_params(log.params[k - 1], d0, d1, d2)
        loss_prev = 0.5 * float(
            np.sum((Y - np.maximum(X @ p_prev.W, 0.0) @ p_prev.V) ** 2)
        )
        d_loss.append(abs(lval - loss_prev) / loss_prev if loss_prev > 0 else 0.0)
        if track_differential:
            if dense:
                j_prev = jac_opnorm(p_prev)
                j_cur = jac_opnorm(p)
                denom = float(np.linalg.svd(j_prev, compute_uv=False)[0])
                num = float(np.linalg.svd(j_cur - j_prev, compute_uv=False)[0])
            else:
                s_prev = (p_prev.W, p_prev.V)
                s_cur = (p.W, p.V)
                denom = _opnorm_diff_matrix_free(X, [s_prev], cfg.rule, with_v)
                num = _opnorm_diff_matrix_free(X, [s_prev, s_cur], cfg.rule, with_v)
            d_diff.append(num / denom if denom > 0 else 0.0)
    return MetricSeries(
        k=np.array(ks, dtype=int),
        loss=np.array(loss_vals),
        zeros=np.array(zero_vals, dtype=int),
        hamming=np.array(hamming, dtype=int),
        delta_loss=np.array(d_loss),
        delta_diff=np.array(d_diff) if track_differential else None,
    )


def _zeros_ratio(zw: float, zb: float) -> float:
    """w-only over both-layers zero count; equal counts (incl. 0/0) give 1."""
    if zw == zb:
        return 1.0
    if zb == 0:
        return math.inf
    return zw / zb


def compare_training_modes(spec: GridSpec, master_seed: int = 0) -> ModeComparison:
    """Zeros ratio (hidden-layer-only over both-layer training) per grid cell.

    Runs the grid in both setups on identical data, then forms the ratio of
    converged-run zero averages cell by cell. Cells where either setup has no
    converged run are excluded and flagged.
    """
    grid_w = run_grid(replace(spec, train_mode="w_only"), master_seed)
    grid_b = run_grid(replace(spec, train_mode="both"), master_seed)
    ratios: dict[tuple[int, int], float] = {}
    excluded = []
    for cw, cb in zip(grid_w.cells, grid_b.cells):
        key = (cw.d0, cw.d1)
        zw, zb = cw.result.avg_final_zeros, cb.result.avg_final_zeros
        if math.isnan(zw) or math.isnan(zb):
            excluded.append(key)
            continue
        ratios[key] = _zeros_ratio(zw, zb)
    median = float(np.median(list(ratios.values()))) if ratios else float("nan")
    return ModeComparison(
        ratios=ratios,
        excluded=excluded,
        median_ratio=median,
        grid_w_only=grid_w,
        grid_both=grid_b,
    )
