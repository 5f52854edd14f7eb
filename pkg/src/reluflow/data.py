"""Synthetic datasets and network initializations.

Inputs live on a sphere (radius sqrt(d0) or 1 depending on convention),
labels are balanced +/-1 or norm-controlled rows, and weights are Gaussian
with configurable per-layer scales. All randomness flows through a single
counter-based generator (Philox) keyed by (seed, stream ids), so any draw
is reproducible in isolation and streams never collide across grid cells.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Dataset",
    "InitConfig",
    "Params",
    "stream_rng",
    "sample_sphere_rows",
    "gen_labels",
    "init_params",
    "lecun_config",
    "assumption_row_norm",
    "save_dataset",
    "load_dataset",
]

SQRT_D0 = "sqrt_d0"
UNIT = "unit"
_CONVENTIONS = (SQRT_D0, UNIT)


def stream_rng(seed: int, *ids: int) -> np.random.Generator:
    """Independent Philox stream for (seed, *ids).

    Philox is a 64-bit counter-based generator; distinct id tuples give
    statistically independent streams for the same master seed.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(i) for i in ids))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class Dataset:
    """Input rows X (N x d0) on a sphere and label rows Y (N x d2)."""

    X: np.ndarray
    Y: np.ndarray
    row_norm_convention: str = SQRT_D0
    seed: int = 0

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.Y = np.asarray(self.Y, dtype=float)
        if self.X.ndim != 2 or self.Y.ndim != 2:
            raise ValueError("X and Y must be 2-dimensional")
        if self.X.shape[0] != self.Y.shape[0]:
            raise ValueError("X and Y must have the same number of rows")
        if self.row_norm_convention not in _CONVENTIONS:
            raise ValueError(f"unknown convention {self.row_norm_convention!r}")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d0(self) -> int:
        return self.X.shape[1]

    @property
    def d2(self) -> int:
        return self.Y.shape[1]


@dataclass
class InitConfig:
    """Weight initialization scales and scheme.

    beta_w, beta_v are the Gaussian standard deviations of the two layers
    under scheme 'gaussian_both'. Scheme 'fixed_v_signs' draws W as usual but
    pins the (single) output column to +/- y_norm / sqrt(N * d1), half of
    each sign; it requires `y_norm` and `n_samples` to be set and an even d1.
    rho records the width exponent of beta_v**2 = d1**(-rho) when meaningful.
    """

    beta_w: float
    beta_v: float
    rho: float = 0.0
    scheme: str = "gaussian_both"
    seed: int = 0
    y_norm: float | None = None
    n_samples: int | None = None

    def __post_init__(self):
        if self.beta_w < 0 or self.beta_v < 0:
            raise ValueError("beta_w and beta_v must be nonnegative")
        if self.scheme not in ("gaussian_both", "fixed_v_signs"):
            raise ValueError(f"unknown scheme {self.scheme!r}")


@dataclass
class Params:
    """Weight pair: W is d0 x d1, V is d1 x d2."""

    W: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=float)
        self.V = np.asarray(self.V, dtype=float)
        if self.W.ndim != 2 or self.V.ndim != 2:
            raise ValueError("W and V must be 2-dimensional")
        if self.W.shape[1] != self.V.shape[0]:
            raise ValueError(
                f"W cols ({self.W.shape[1]}) must equal V rows ({self.V.shape[0]})"
            )

    @property
    def d0(self) -> int:
        return self.W.shape[0]

    @property
    def d1(self) -> int:
        return self.W.shape[1]

    @property
    def d2(self) -> int:
        return self.V.shape[1]

    @property
    def dim(self) -> int:
        """Total parameter count d0*d1 + d1*d2."""
        return self.W.size + self.V.size

    def copy(self) -> "Params":
        return Params(self.W.copy(), self.V.copy())


def sample_sphere_rows(
    n: int, d0: int, convention: str = SQRT_D0, seed: int = 0, *, stream: tuple = ()
) -> np.ndarray:
    """N i.i.d. rows uniform on the sphere of the convention's radius.

    Sampling normalizes a standard Gaussian vector, which is exactly uniform
    on the sphere.
    """
    if n < 1 or d0 < 1:
        raise ValueError("n and d0 must be >= 1")
    if convention not in _CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    rng = stream_rng(seed, *stream)
    g = rng.standard_normal((n, d0))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    # A zero Gaussian row has probability zero; resample defensively anyway.
    while np.any(norms == 0.0):
        bad = norms[:, 0] == 0.0
        g[bad] = rng.standard_normal((int(bad.sum()), d0))
        norms = np.linalg.norm(g, axis=1, keepdims=True)
    radius = np.sqrt(d0) if convention == SQRT_D0 else 1.0
    return g / norms * radius


def gen_labels(
    n: int,
    d2: int,
    mode: str = "pm_one",
    seed: int = 0,
    *,
    row_norm: float | None = None,
    stream: tuple = (),
) -> np.ndarray:
    """Label matrix: balanced +/-1 column ('pm_one') or norm-pinned rows ('scaled').

    pm_one requires d2 = 1 and even N and assigns exactly N/2 entries of each
    sign via a seeded shuffle. scaled draws each row uniformly on the sphere
    of radius `row_norm` in R^{d2}.
    """
    if n < 1 or d2 < 1:
        raise ValueError("n and d2 must be >= 1")
    if mode == "pm_one":
        if d2 != 1:
            raise ValueError("pm_one labels require d2 = 1")
        if n % 2 != 0:
            raise ValueError("pm_one labels require even N")
        rng = stream_rng(seed, *stream)
        y = np.concatenate([np.ones(n // 2), -np.ones(n // 2)])
        return rng.permutation(y)[:, None]
    if mode == "scaled":
        if row_norm is None:
            raise ValueError("scaled labels require row_norm")
        rows = sample_sphere_rows(n, d2, UNIT, seed, stream=stream)
        return rows * float(row_norm)
    raise ValueError(f"unknown label mode {mode!r}")


def assumption_row_norm(
    beta_w: float, beta_v: float, d0: int, d1: int, d2: int
) -> float:
    """Label row norm beta_w * beta_v * sqrt(d0 * d1 * d2) used by scaled mode."""
    return float(beta_w * beta_v * np.sqrt(d0 * d1 * d2))


def init_params(
    d0: int, d1: int, d2: int, config: InitConfig, *, stream: tuple = ()
) -> Params:
    """Draw initial weights according to `config`."""
    if d0 < 1 or d1 < 1 or d2 < 1:
        raise ValueError("dimensions must be >= 1")
    rng = stream_rng(config.seed, *stream)
    w = rng.standard_normal((d0, d1)) * config.beta_w
    if config.scheme == "gaussian_both":
        v = rng.standard_normal((d1, d2)) * config.beta_v
        return Params(w, v)
    # fixed_v_signs
    if d2 != 1:
        raise ValueError("fixed_v_signs requires d2 = 1")
    if d1 % 2 != 0:
        raise ValueError("fixed_v_signs requires even d1")
    if config.y_norm is None or config.n_samples is None:
        raise ValueError("fixed_v_signs requires y_norm and n_samples on the config")
    mag = config.y_norm / np.sqrt(config.n_samples * d1)
    v = np.concatenate([np.full(d1 // 2, mag), np.full(d1 // 2, -mag)])
    v = rng.permutation(v)[:, None]
    return Params(w, v)


def lecun_config(d0: int, d1: int, seed: int = 0) -> InitConfig:
    """Fan-in scaling: beta_w**2 = 1/d0, beta_v**2 = 1/d1 (so rho = 1)."""
    return InitConfig(
        beta_w=1.0 / np.sqrt(d0), beta_v=1.0 / np.sqrt(d1), rho=1.0, seed=seed
    )


def save_dataset(ds: Dataset, csv_path: str | Path) -> tuple[Path, Path]:
    """Write one CSV row per sample (inputs then labels) plus a JSON header."""
    csv_path = Path(csv_path)
    json_path = csv_path.with_suffix(".json")
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(
            [f"x{i}" for i in range(ds.d0)] + [f"y{j}" for j in range(ds.d2)]
        )
        for xi, yi in zip(ds.X, ds.Y):
            writer.writerow([f"{v:.17g}" for v in xi] + [f"{v:.17g}" for v in yi])
    header = {
        "N": ds.n,
        "d0": ds.d0,
        "d2": ds.d2,
        "convention": ds.row_norm_convention,
        "seed": ds.seed,
    }
    with open(json_path, "w") as f:
        json.dump(header, f, indent=2, sort_keys=True)
        f.write("\n")
    return csv_path, json_path


def load_dataset(csv_path: str | Path) -> Dataset:
    """Read a dataset written by :func:`save_dataset`."""
    csv_path = Path(csv_path)
    json_path = csv_path.with_suffix(".json")
    with open(json_path) as f:
        header = json.load(f)
    d0, d2 = int(header["d0"]), int(header["d2"])
    rows = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    if rows.shape[1] != d0 + d2:
        raise ValueError(
            f"CSV has {rows.shape[1]} columns, header promises {d0}+{d2}"
        )
    return Dataset(
        X=rows[:, :d0],
        Y=rows[:, d0:],
        row_norm_convention=header["convention"],
        seed=int(header["seed"]),
    )
