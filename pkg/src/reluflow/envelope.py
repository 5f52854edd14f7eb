"""Scalar envelope problem: integrate y' = a*exp(alpha*t*(c1*y + c2*y^2)*e^(c*y^2) - alpha^2*t).

The right-hand side is increasing in y, so the equality solution dominates
every solution of the corresponding differential inequality with the same
initial value; a bounded classification therefore transfers to the whole
family. Solutions either settle under the drive's exponential decay or run
away double-exponentially, which the integrator detects via a value
threshold and step-size collapse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EnvelopeParams",
    "Classification",
    "EnvelopeResult",
    "ClassifyReport",
    "SweepRow",
    "condition_value",
    "envelope_rhs",
    "integrate_envelope",
    "classify",
    "sweep_alpha",
    "default_horizon",
]

# Exponent cap keeping exp() inside float64 range; anything larger is
# treated as an overflow signal by the step controller.
_EXP_CAP = 700.0

BLOWUP_FACTOR = 1e6
STEP_COLLAPSE = 1e-14
PLATEAU_RHS = 1e-14


@dataclass(frozen=True)
class EnvelopeParams:
    a: float
    alpha: float
    c: float
    c1: float
    c2: float

    def __post_init__(self):
        for name in ("a", "alpha", "c", "c1", "c2"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")


@dataclass(frozen=True)
class Classification:
    kind: str                  # "bounded" or "blowup"
    sup_y: float | None = None
    t_blow: float | None = None


@dataclass
class EnvelopeResult:
    times: np.ndarray
    y: np.ndarray
    classification: Classification
    condition_value: float


@dataclass(frozen=True)
class ClassifyReport:
    classification: Classification
    condition_value: float
    condition_holds: bool
    bound_ok: bool | None       # sup_y <= 2a/alpha^2, only checked when condition holds
    derivative_ok: bool | None  # y'(t) <= a*exp(-alpha^2 t / 2) on the grid


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    condition_value: float
    kind: str
    sup_y: float | None
    t_blow: float | None


def condition_value(p: EnvelopeParams) -> float:
    """Boundedness condition 4*(a*c1/alpha^3 + 2*a^2*c2/alpha^5)*exp(4*c*a^2/alpha^4)."""
    if p.alpha <= 0:
        return math.inf
    arg = 4.0 * p.c * p.a**2 / p.alpha**4
    if arg > _EXP_CAP:
        return math.inf
    return (
        4.0
        * (p.a * p.c1 / p.alpha**3 + 2.0 * p.a**2 * p.c2 / p.alpha**5)
        * math.exp(arg)
    )


def envelope_rhs(t: float, y: float, p: EnvelopeParams) -> float:
    """Overflow-safe right-hand side; returns inf once the exponent escapes float64."""
    q = p.c * y * y
    if q > _EXP_CAP:
        return math.inf
    growth = p.alpha * t * (p.c1 * y + p.c2 * y * y) * math.exp(q)
    exponent = growth - p.alpha**2 * t
    if exponent > _EXP_CAP:
        return math.inf
    return p.a * math.exp(exponent)


def default_horizon(p: EnvelopeParams) -> float:
    """50 / alpha^2, long enough for the exp(-alpha^2 t) drive to die out."""
    if p.alpha <= 0:
        raise ValueError("default horizon needs alpha > 0")
    return 50.0 / p.alpha**2


# Cash-Karp embedded 4(5) tableau.
_CK_C = (0.0, 1 / 5, 3 / 10, 3 / 5, 1.0, 7 / 8)
_CK_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (3 / 10, -9 / 10, 6 / 5),
    (-11 / 54, 5 / 2, -70 / 27, 35 / 27),
    (1631 / 55296, 175 / 512, 575 / 13824, 44275 / 110592, 253 / 4096),
)
_CK_B5 = (37 / 378, 0.0, 250 / 621, 125 / 594, 0.0, 512 / 1771)
_CK_B4 = (2825 / 27648, 0.0, 18575 / 48384, 13525 / 55296, 277 / 14336, 1 / 4)


def _ck_step(t: float, y: float, h: float, p: EnvelopeParams):
    """One Cash-Karp step: returns (y_new, error, f0) or None on overflow.

    Propagates the 5th-order solution (local extrapolation); the 4th-order
    companion supplies the error estimate for step control.
    """
    k = [envelope_rhs(t, y, p)]
    if not math.isfinite(k[0]):
        return None
    for i in range(1, 6):
        yi = y + h * sum(a * kk for a, kk in zip(_CK_A[i], k))
        ki = envelope_rhs(t + _CK_C[i] * h, yi, p)
        if not math.isfinite(ki):
            return None
        k.append(ki)
    y4 = y + h * sum(b * kk for b, kk in zip(_CK_B4, k))
    y5 = y + h * sum(b * kk for b, kk in zip(_CK_B5, k))
    if not (math.isfinite(y4) and math.isfinite(y5)):
        return None
    return y5, abs(y5 - y4), k[0]


def _hermite_eval(ts, t0, y0, f0, t1, y1, f1):
    """Cubic Hermite interpolation of (t0,y0,f0)-(t1,y1,f1) at times ts."""
    h = t1 - t0
    s = (ts - t0) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def integrate_envelope(
    p: EnvelopeParams,
    horizon: float | None = None,
    rel_tol: float = 1e-8,
    n_grid: int = 512,
) -> EnvelopeResult:
    """Integrate the envelope equality on [0, horizon] with embedded step control.

    Propagates the 4th-order Cash-Karp solution with the 5th-order companion
    as error estimate, capping steps at horizon/256 so the dense cubic
    Hermite output stays accurate. Blow-up is declared when y exceeds
    1e6 * max(1, 2a/alpha^2) or the step collapses below 1e-14 * horizon;
    bounded when the horizon is reached or the right-hand side has died out
    and y plateaued.
    """
    if horizon is None:
        horizon = default_horizon(p)
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if n_grid < 2:
        raise ValueError("need at least two grid points")

    scale = max(1.0, 2.0 * p.a / p.alpha**2) if p.alpha > 0 else max(1.0, p.a)
    blow_level = BLOWUP_FACTOR * scale
    abs_tol = 1e-12 * scale
    # Cap steps well below the grid spacing so the cubic Hermite dense output
    # stays far inside the integration tolerance.
    h_max = horizon / 1024.0
    h_min = STEP_COLLAPSE * horizon

    grid = np.linspace(0.0, horizon, n_grid)
    y_grid = np.full(n_grid, np.nan)
    y_grid[0] = 0.0
    next_idx = 1

    t, y = 0.0, 0.0
    h = h_max / 16.0
    plateau_runs = 0
    cls: Classification | None = None
    cond = condition_value(p)

    while t < horizon:
        h = min(h, h_max, horizon - t)
        step = _ck_step(t, y, h, p)
        if step is None:
            # Overflowing stage: shrink; persistent collapse means runaway.
            h *= 0.25
            if h < h_min:
                cls = Classification(kind="blowup", t_blow=t)
                break
            continue
        y_prop, err, f0 = step
        tol = abs_tol + rel_tol * max(abs(y), abs(y_prop))
        if err > tol:
            h *= max(0.2, 0.9 * (tol / err) ** 0.2)
            if h < h_min:
                cls = Classification(kind="blowup", t_blow=t)
                break
            continue

        t_new, y_new = t + h, y_prop
        f1 = envelope_rhs(t_new, y_new, p)
        # Fill dense output over the accepted interval.
        while next_idx < n_grid and grid[next_idx] <= t_new + 1e-15 * horizon:
            y_grid[next_idx] = _hermite_eval(grid[next_idx], t, y, f0, t_new, y_new, f1)
            next_idx += 1

        if y_new > blow_level:
            cls = Classification(kind="blowup", t_blow=t_new)
            break
        if math.isfinite(f1) and f1 < PLATEAU_RHS * max(1.0, p.a):
            plateau_runs += 1
            if plateau_runs >= 2:
                # Drive is dead: y stays at its plateau for the rest of the horizon.
                y_grid[next_idx:] = y_new
                next_idx = n_grid
                t = horizon
                y = y_new
                break
        else:
            plateau_runs = 0

        t, y = t_new, y_new
        if err > 0:
            h = min(h_max, h * min(5.0, 0.9 * (tol / err) ** 0.2))
        else:
            h = h_max

    if cls is None:
        cls = Classification(kind="bounded", sup_y=float(np.nanmax(y_grid)))
        times, values = grid, y_grid
    elif cls.kind == "blowup":
        times, values = grid[:next_idx], y_grid[:next_idx]
    if cls.kind == "bounded" and cls.sup_y is None:
        cls = Classification(kind="bounded", sup_y=float(np.nanmax(values)))
    return EnvelopeResult(
        times=times, y=values, classification=cls, condition_value=cond
    )


def classify(
    p: EnvelopeParams, horizon: float | None = None, rel_tol: float = 1e-8
) -> ClassifyReport:
    """Integrate and, when the boundedness condition holds, verify its conclusions.

    With condition value < 1 the solution must stay below 2a/alpha^2 and its
    derivative below a*exp(-alpha^2 t/2) (both up to 1e-6 relative slack).
    """
    if p.alpha <= 0:
        raise ValueError("classification requires alpha > 0")
    res = integrate_envelope(p, horizon=horizon, rel_tol=rel_tol)
    cond = res.condition_value
    holds = cond < 1.0
    bound_ok = derivative_ok = None
    if holds:
        cap = 2.0 * p.a / p.alpha**2
        sup_y = float(np.nanmax(res.y))
        bound_ok = sup_y <= cap * (1.0 + 1e-6)
        rhs = np.array([envelope_rhs(t, y, p) for t, y in zip(res.times, res.y)])
        envelope_cap = p.a * np.exp(-p.alpha**2 * res.times / 2.0)
        derivative_ok = bool(np.all(rhs <= envelope_cap * (1.0 + 1e-6) + 1e-300))
    return ClassifyReport(
        classification=res.classification,
        condition_value=cond,
        condition_holds=holds,
        bound_ok=bound_ok,
        derivative_ok=derivative_ok,
    )


def sweep_alpha(
    p_template: EnvelopeParams,
    alpha_lo: float,
    alpha_hi: float,
    n_points: int,
    horizon: float | None = None,
    rel_tol: float = 1e-8,
) -> list[SweepRow]:
    """Integrate across an alpha range (other parameters fixed), low to high.

    With horizon=None each point uses its own default 50/alpha^2 window.
    """
    if n_points < 1 or alpha_hi < alpha_lo:
        raise ValueError("need a nonempty alpha range")
    alphas = np.linspace(alpha_lo, alpha_hi, n_points)
    rows = []
    for alpha in alphas:
        p = EnvelopeParams(
            a=p_template.a, alpha=float(alpha), c=p_template.c,
            c1=p_template.c1, c2=p_template.c2,
        )
        res = integrate_envelope(p, horizon=horizon, rel_tol=rel_tol)
        cls = res.classification
        rows.append(
            SweepRow(
                alpha=float(alpha),
                condition_value=res.condition_value,
                kind=cls.kind,
                sup_y=cls.sup_y,
                t_blow=cls.t_blow,
            )
        )
    return rows
