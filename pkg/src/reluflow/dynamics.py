"""Gradient-flow and SGD trajectory simulation plus inequality validation.

The continuous flow is approximated by forward Euler on the full-batch
subgradient; mini-batch SGD draws a uniform b-subset without replacement at
every step and supports a momentum buffer. Full-batch SGD with zero momentum
reproduces the Euler flow bit for bit (same code path, no sampling).

`validate_trajectory` replays the trajectory-level inequalities (loss decay
under the integrated spectral rate, the two increment bounds, and the scalar
envelope inequality) against a finely logged flow, with a multiplicative
slack absorbing quadrature and discretization error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg, network
from .certificate import Constants
from .data import Params, stream_rng
from .network import DEFAULT_ZERO_THRESHOLD

__all__ = [
    "SgdConfig",
    "TrajectoryLog",
    "Violation",
    "FlowSgdRow",
    "run_flow",
    "run_sgd",
    "interpolate",
    "flow_sgd_distance",
    "validate_trajectory",
]

DIVERGENCE_FACTOR = 1e6


@dataclass
class SgdConfig:
    eta: float
    batch_size: int
    steps: int
    momentum: float = 0.0
    seed: int = 0
    rule: str = "zero"

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not (0.0 <= self.momentum < 1.0):
            raise ValueError("momentum must lie in [0, 1)")
        if self.steps < 0:
            raise ValueError("steps must be nonnegative")


@dataclass
class TrajectoryLog:
    """Per-iterate record of one training run.

    Arrays are aligned: entry i describes iterate k[i] at time t[i] = k[i] *
    step_size. `params` maps an iterate index to its flattened parameter
    vector when parameter snapshots were requested.
    """

    step_size: float
    kind: str  # "flow" or "sgd"
    thinning: int
    k: np.ndarray
    t: np.ndarray
    loss: np.ndarray
    theta_dist: np.ndarray
    w_dist: np.ndarray
    alpha0: np.ndarray
    zeros: np.ndarray
    diverged: bool = False
    params: dict[int, np.ndarray] = field(default_factory=dict)
    final_params: Params | None = None

    @property
    def final_loss(self) -> float:
        return float(self.loss[-1])


@dataclass(frozen=True)
class Violation:
    inequality: str
    t: float
    lhs: float
    rhs: float


@dataclass(frozen=True)
class FlowSgdRow:
    eta: float
    sup_distance: float
    seed: int = 0


def _run(
    X: np.ndarray,
    Y: np.ndarray,
    theta0: Params,
    *,
    eta: float,
    steps: int,
    batch_size: int,
    momentum: float,
    train_layers: str,
    rule: str,
    thinning: int,
    zero_threshold: float,
    stop_loss: float,
    keep_params_every: int,
    rng: np.random.Generator | None,
    kind: str,
) -> TrajectoryLog:
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n = X.shape[0]
    if batch_size > n:
        raise ValueError(f"batch_size {batch_size} exceeds sample count {n}")
    if train_layers not in ("both", "w_only"):
        raise ValueError(f"unknown train_layers {train_layers!r}")
    if thinning < 1:
        raise ValueError("thinning must be >= 1")
    full_batch = batch_size == n

    W = theta0.W.copy()
    V = theta0.V.copy()
    W0, V0 = theta0.W, theta0.V
    buf_w = np.zeros_like(W)
    buf_v = np.zeros_like(V)

    ks, losses, tdists, wdists, alphas, zeros = [], [], [], [], [], []
    snapshots: dict[int, np.ndarray] = {}
    diverged = False
    loss0 = None

    def record(k: int, pre: np.ndarray, hidden: np.ndarray, lval: float) -> None:
        ks.append(k)
        losses.append(lval)
        dw = W - W0
        dv = V - V0
        wdist = float(np.linalg.norm(dw))
        tdists.append(math.sqrt(wdist**2 + float(np.linalg.norm(dv)) ** 2))
        wdists.append(wdist)
        alphas.append(network.alpha0(hidden))
        zeros.append(int(np.sum(np.abs(pre) < zero_threshold)))

    k = 0
    while True:
        pre = X @ W
        hidden = np.maximum(pre, 0.0)
        err = hidden @ V - Y  # Yhat - Y
        lval = 0.5 * float(np.sum(err**2))
        if loss0 is None:
            loss0 = lval
        logged = (k % thinning == 0) or k == steps
        if logged:
            record(k, pre, hidden, lval)
        if keep_params_every and (
            k % keep_params_every == 0
            or (k + 1) % keep_params_every == 0
            or k == steps
        ):
            snapshots[k] = np.concatenate([W.ravel(order="F"), V.ravel(order="F")])
        if not math.isfinite(lval) or lval > DIVERGENCE_FACTOR * max(loss0, 1e-300):
            diverged = True
            if not logged:
                record(k, pre, hidden, lval)
            break
        # Stopping criterion is evaluated at logged iterates only, so the
        # recorded criterion value always belongs to a logged step.
        if k >= steps or (logged and lval < stop_loss):
            if not logged:
                record(k, pre, hidden, lval)
            if keep_params_every and k not in snapshots:
                snapshots[k] = np.concatenate(
                    [W.ravel(order="F"), V.ravel(order="F")]
                )
            break

        if full_batch:
            r = network.selection_matrix(pre, rule)
            gW = X.T @ (r * (err @ V.T))
            gV = hidden.T @ err
        else:
            idx = rng.choice(n, size=batch_size, replace=False)
            Xb = X[idx]
            pre_b = Xb @ W
            hid_b = np.maximum(pre_b, 0.0)
            err_b = hid_b @ V - Y[idx]
            r = network.selection_matrix(pre_b, rule)
            gW = Xb.T @ (r * (err_b @ V.T))
            gV = hid_b.T @ err_b
        if train_layers == "w_only":
            gV = np.zeros_like(gV)
        buf_w = momentum * buf_w + gW
        buf_v = momentum * buf_v + gV
        W = W - eta * buf_w
        V = V - eta * buf_v
        k += 1

    return TrajectoryLog(
        step_size=eta,
        kind=kind,
        thinning=thinning,
        k=np.array(ks, dtype=int),
        t=np.array(ks, dtype=float) * eta,
        loss=np.array(losses),
        theta_dist=np.array(tdists),
        w_dist=np.array(wdists),
        alpha0=np.array(alphas),
        zeros=np.array(zeros, dtype=int),
        diverged=diverged,
        params=snapshots,
        final_params=Params(W.copy(), V.copy()),
    )


def run_flow(
    X: np.ndarray,
    Y: np.ndarray,
    theta0: Params,
    eta_ref: float,
    max_time: float,
    stop_loss: float = 0.0,
    *,
    thinning: int = 1,
    zero_threshold: float = DEFAULT_ZERO_THRESHOLD,
    rule: str = "zero",
    keep_params_every: int = 0,
) -> TrajectoryLog:
    """Forward-Euler gradient flow at resolution eta_ref, time t = k * eta_ref."""
    if eta_ref <= 0:
        raise ValueError("eta_ref must be positive")
    if max_time <= 0:
        raise ValueError("max_time must be positive")
    steps = int(math.ceil(max_time / eta_ref))
    return _run(
        X,
        Y,
        theta0,
        eta=eta_ref,
        steps=steps,
        batch_size=np.asarray(X).shape[0],
        momentum=0.0,
        train_layers="both",
        rule=rule,
        thinning=thinning,
        zero_threshold=zero_threshold,
        stop_loss=stop_loss,
        keep_params_every=keep_params_every,
        rng=None,
        kind="flow",
    )


def run_sgd(
    X: np.ndarray,
    Y: np.ndarray,
    theta0: Params,
    cfg: SgdConfig,
    train_layers: str = "both",
    *,
    thinning: int = 1,
    zero_threshold: float = DEFAULT_ZERO_THRESHOLD,
    stop_loss: float = 0.0,
    keep_params_every: int = 0,
    rng_stream: tuple = (),
) -> TrajectoryLog:
    """Mini-batch SGD with momentum; full batch at zero momentum equals the flow."""
    rng = stream_rng(cfg.seed, *rng_stream)
    return _run(
        X,
        Y,
        theta0,
        eta=cfg.eta,
        steps=cfg.steps,
        batch_size=cfg.batch_size,
        momentum=cfg.momentum,
        train_layers=train_layers,
        rule=cfg.rule,
        thinning=thinning,
        zero_threshold=zero_threshold,
        stop_loss=stop_loss,
        keep_params_every=keep_params_every,
        rng=rng,
        kind="sgd",
    )


def interpolate(log: TrajectoryLog, t: float) -> np.ndarray:
    """Piecewise-linear parameter point theta_k + (t/eta - k)(theta_{k+1} - theta_k).

    Requires parameter snapshots at the straddling iterates.
    """
    if not log.params:
        raise ValueError("log carries no parameter snapshots")
    eta = log.step_size
    if t < 0 or t > log.t[-1] + 1e-12 * max(eta, 1.0):
        raise ValueError(f"t={t} outside logged range [0, {log.t[-1]}]")
    s = t / eta
    k = int(math.floor(s + 1e-12))
    frac = s - k
    if frac <= 1e-12:
        if k in log.params:
            return log.params[k].copy()
        raise ValueError(f"iterate {k} not stored; log thinned across the pair")
    if k in log.params and (k + 1) in log.params:
        lo, hi = log.params[k], log.params[k + 1]
        return lo + frac * (hi - lo)
    raise ValueError(f"iterates {k},{k + 1} not stored; log thinned across the pair")


def flow_sgd_distance(
    X: np.ndarray,
    Y: np.ndarray,
    theta0: Params,
    etas: list[float],
    horizon: float,
    *,
    batch_size: int,
    momentum: float = 0.0,
    rule: str = "zero",
    seed: int = 0,
    n_seeds: int = 1,
    n_grid: int = 101,
    eta_ref: float | None = None,
) -> list[FlowSgdRow]:
    """Sup distance between interpolated SGD paths and the reference flow.

    SGD iterate time is rescaled by batch_size/N before comparison, so k
    SGD steps of size eta land at flow time k * eta * b / N. The reference
    flow runs at eta_ref <= min(etas)/100 and is computed once, then each
    (eta, batch-sampling seed) pair yields one row.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if not etas:
        raise ValueError("need at least one eta")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    n = X.shape[0]
    if eta_ref is None:
        eta_ref = min(etas) * (batch_size / n) / 100.0
    grid = np.linspace(0.0, horizon, n_grid)

    # Reference flow, capturing theta at the grid times.
    flow_steps = int(math.ceil(horizon / eta_ref))
    grid_steps = np.minimum(np.round(grid / eta_ref).astype(int), flow_steps)
    want = {}
    for gi, ks in enumerate(grid_steps):
        want.setdefault(int(ks), []).append(gi)
    flow_theta = np.empty((n_grid, theta0.dim))
    W = theta0.W.copy()
    V = theta0.V.copy()
    for k in range(flow_steps + 1):
        if k in want:
            vec = np.concatenate([W.ravel(order="F"), V.ravel(order="F")])
            for gi in want[k]:
                flow_theta[gi] = vec
        if k == flow_steps:
            break
        pre = X @ W
        hidden = np.maximum(pre, 0.0)
        err = hidden @ V - Y
        r = network.selection_matrix(pre, rule)
        W = W - eta_ref * (X.T @ (r * (err @ V.T)))
        V = V - eta_ref * (hidden.T @ err)

    rows = []
    for ei, eta in enumerate(etas):
        for si in range(n_seeds):
            rng = stream_rng(seed, ei, si)
            sgd_times = grid * (n / batch_size)  # grid mapped onto the SGD clock
            j_of_grid = np.floor(sgd_times / eta + 1e-12).astype(int)
            K = int(j_of_grid[-1]) + 1
            pending = {}
            for gi, j in enumerate(j_of_grid):
                pending.setdefault(int(j), []).append(gi)
            W = theta0.W.copy()
            V = theta0.V.copy()
            buf_w = np.zeros_like(W)
            buf_v = np.zeros_like(V)
            cur = np.concatenate([W.ravel(order="F"), V.ravel(order="F")])
            sup = 0.0
            with np.errstate(over="ignore", invalid="ignore"):
                for j in range(K + 1):
                    if j == K and j not in pending:
                        break
                    if batch_size < n:
                        idx = rng.choice(n, size=batch_size, replace=False)
                        Xb, Yb = X[idx], Y[idx]
                    else:
                        Xb, Yb = X, Y
                    pre_b = Xb @ W
                    hid_b = np.maximum(pre_b, 0.0)
                    err_b = hid_b @ V - Yb
                    rr = network.selection_matrix(pre_b, rule)
                    buf_w = momentum * buf_w + Xb.T @ (rr * (err_b @ V.T))
                    buf_v = momentum * buf_v + hid_b.T @ err_b
                    W = W - eta * buf_w
                    V = V - eta * buf_v
                    nxt = np.concatenate([W.ravel(order="F"), V.ravel(order="F")])
                    if not np.all(np.isfinite(nxt)):
                        # Diverged at this step size: infinite sup distance.
                        sup = math.inf
                        break
                    if j in pending:
                        for gi in pending[j]:
                            frac = sgd_times[gi] / eta - j
                            theta_bar = cur + frac * (nxt - cur)
                            sup = max(
                                sup, float(np.linalg.norm(theta_bar - flow_theta[gi]))
                            )
                    cur = nxt
            rows.append(FlowSgdRow(eta=eta, sup_distance=sup, seed=si))
    return rows


def validate_trajectory(
    log: TrajectoryLog, constants: Constants, slack: float = 1.05
) -> list[Violation]:
    """Check the four trajectory inequalities at every logged time.

    Returns the list of violations (empty when all hold). The log must be an
    unthinned flow so the trapezoid quadratures of sqrt(loss) and alpha0^2
    see every step.
    """
    if log.kind != "flow":
        raise ValueError("trajectory validation requires a full-batch flow log")
    if log.thinning != 1:
        raise ValueError(
            "trajectory validation requires an unthinned log (thinning=1); "
            f"got thinning={log.thinning}"
        )
    t = log.t
    sqrt_loss = np.sqrt(np.maximum(log.loss, 0.0))
    # Cumulative trapezoid of sqrt(loss) and of alpha0^2 on the logged grid.
    lbar = np.concatenate(
        [[0.0], np.cumsum(0.5 * (sqrt_loss[1:] + sqrt_loss[:-1]) * np.diff(t))]
    )
    a2 = log.alpha0**2
    int_a2 = np.concatenate(
        [[0.0], np.cumsum(0.5 * (a2[1:] + a2[:-1]) * np.diff(t))]
    )

    k = constants
    violations: list[Violation] = []

    # Loss decay under the integrated spectral rate.
    rhs = log.loss[0] * np.exp(-2.0 * int_a2) * slack
    for i in np.nonzero(log.loss > rhs)[0]:
        violations.append(Violation("prop21", float(t[i]), float(log.loss[i]), float(rhs[i])))

    # Parameter increment bound.
    coef = math.sqrt(2.0) * k.x_op * (k.w0_fro + k.v0_fro)
    rhs = coef * lbar * np.exp(math.sqrt(2.0) * k.x_op * lbar) * slack
    for i in np.nonzero(log.theta_dist > rhs)[0]:
        violations.append(Violation("eq5", float(t[i]), float(log.theta_dist[i]), float(rhs[i])))

    # Hidden-weight increment bound.
    lhs = k.x_op * log.w_dist
    rhs = 0.5 * (k.c1 * lbar + k.c2 * lbar**2) * np.exp(k.c * lbar**2) * slack
    for i in np.nonzero(lhs > rhs)[0]:
        violations.append(Violation("eq6", float(t[i]), float(lhs[i]), float(rhs[i])))

    # Scalar envelope inequality for the loss root.
    with np.errstate(over="ignore"):
        expo = (
            k.alpha * t * (k.c1 * lbar + k.c2 * lbar**2) * np.exp(k.c * lbar**2)
            - k.alpha**2 * t
        )
        rhs = k.a * np.exp(np.minimum(expo, 700.0)) * slack
    for i in np.nonzero(sqrt_loss > rhs)[0]:
        violations.append(Violation("eq9", float(t[i]), float(sqrt_loss[i]), float(rhs[i])))

    violations.sort(key=lambda v: v.t)
    return violations
