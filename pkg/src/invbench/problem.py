"""Design space, analytic forward model, LHS sampling, and dataset IO.

The forward model is a smooth analytic stand-in for the CFD/acoustics
workflow: six normalized design parameters map to three performance labels
(unmixedness, relative pressure drop, thermoacoustic growth rate).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import RangeError

GENERATOR_VERSION = "synthetic-forward-v1"

# (name, lower, upper, is_integer); order fixed as (R_A, N_H, D_M, R_D, R_L, L_P)
PARAMETERS = (
    ("R_A", 0.63, 0.83, False),
    ("N_H", 2.0, 10.0, True),
    ("D_M", 20.0, 45.0, False),
    ("R_D", 0.35, 0.55, False),
    ("R_L", 4.0, 12.0, False),
    ("L_P", 200.0, 900.0, False),
)

PARAM_NAMES = tuple(p[0] for p in PARAMETERS)
NORM_NAMES = ("a", "h", "m", "d", "l", "p")
LABEL_NAMES = ("u_m", "dp", "g")
N_H_VALUES = np.arange(2, 11)  # 9 admissible hole counts
H_GRID = (N_H_VALUES - 2) / 8.0

CSV_HEADER = "a,h,m,d,l,p,u_m,dp,g"


def _fmt(x: float) -> str:
    return format(x, ".17g")


def snap_h(h):
    """Round normalized hole-count coordinate(s) onto the 9-value grid."""
    return np.clip(np.round(np.asarray(h, dtype=np.float64) * 8.0), 0, 8) / 8.0


def normalize(x) -> np.ndarray:
    """Physical design vector(s) -> unit cube. Accepts shape (6,) or (n, 6)."""
    x = np.asarray(x, dtype=np.float64)
    u = np.empty_like(x)
    for i, (name, lo, hi, is_int) in enumerate(PARAMETERS):
        col = x[..., i]
        if np.any(col < lo) or np.any(col > hi):
            raise RangeError(f"{name} outside [{lo}, {hi}]")
        if is_int and np.any(col != np.round(col)):
            raise RangeError(f"{name} must be integer")
        u[..., i] = (col - lo) / (hi - lo)
    return u


def denormalize(u) -> np.ndarray:
    """Unit cube -> physical units; the N_H coordinate is rounded to the grid."""
    u = np.asarray(u, dtype=np.float64)
    if np.any(u < 0) or np.any(u > 1):
        raise RangeError("normalized design outside [0,1]^6")
    x = np.empty_like(u)
    for i, (name, lo, hi, is_int) in enumerate(PARAMETERS):
        if is_int:
            x[..., i] = np.round(u[..., i] * (hi - lo) + lo)
        else:
            x[..., i] = u[..., i] * (hi - lo) + lo
    return x


def derived_geometry(x) -> dict:
    """Dependent geometry of a single physical design vector."""
    x = np.asarray(x, dtype=np.float64)
    normalize(x)  # range validation
    r_a, n_h, d_m, r_d, r_l, l_p = x
    l_m = d_m * r_l
    return {
        "L_M": l_m,
        "D_L": r_d * d_m,
        "L_L": 0.2 * l_m,
        "N_V": min(n_h / 2.0, 2.0),
        "L_C": 1000.0,
        "R_C": 4.0,
    }


def lhs_sample(n: int, dims: int, rng: np.random.Generator) -> np.ndarray:
    """Latin hypercube sample on [0,1]^dims: one point per marginal bin,
    uniform within bins, independent bin permutation per dimension."""
    if n < 1:
        raise ValueError("lhs_sample needs n >= 1")
    out = np.empty((n, dims))
    for j in range(dims):
        perm = rng.permutation(n)
        out[:, j] = (perm + rng.uniform(size=n)) / n
    return out


def forward_model(u, sigma: float = 0.0, rng: np.random.Generator | None = None) -> np.ndarray:
    """Labels (U_M, dp, G) for normalized design(s) ``u``; shape (6,) or (n, 6).

    Gaussian observation noise of standard deviation ``sigma`` is added per
    label when sigma > 0.
    """
    u = np.asarray(u, dtype=np.float64)
    if np.any(u < 0) or np.any(u > 1):
        raise RangeError("normalized design outside [0,1]^6")
    a, h, m, d, l, p = (u[..., i] for i in range(6))
    u_m = 0.02 + 0.16 * (1 - h) * (1 - 0.5 * l) * (0.6 + 0.4 * np.sin(np.pi * a) * (1 - d))
    dp = 0.030 + 0.015 * (1 - a) + 0.005 * d * (1 - a)
    g = np.tanh(3 * (m - 0.5) + (p - 0.5) + 0.3 * np.sin(2 * np.pi * l))
    y = np.stack([u_m, dp, g], axis=-1)
    if sigma > 0:
        if rng is None:
            raise ValueError("sigma > 0 requires an rng")
        y = y + rng.normal(0.0, sigma, size=y.shape)
    return y


@dataclass
class Dataset:
    """Paired normalized designs and labels plus generation metadata."""

    x: np.ndarray  # (n, 6) normalized designs
    y: np.ndarray  # (n, 3) labels
    seed: int | None = None
    sigma: float = 0.0
    version: str = GENERATOR_VERSION

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.x.shape[0] != self.y.shape[0]:
            raise ValueError("design/label counts differ")

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def metadata(self) -> dict:
        return {"seed": self.seed, "sigma": self.sigma, "n": len(self),
                "generator_version": self.version}


def make_dataset(n: int, sigma: float = 0.0, seed: int = 0) -> Dataset:
    """LHS designs on [0,1]^6 (hole-count coordinate snapped to its grid)
    labelled by the forward model; fully reproducible from ``seed``."""
    if n < 1:
        raise ValueError("make_dataset needs n >= 1")
    rng = np.random.default_rng(seed)
    x = lhs_sample(n, 6, rng)
    x[:, 1] = snap_h(x[:, 1])
    y = forward_model(x, sigma=sigma, rng=rng)
    return Dataset(x, y, seed=seed, sigma=sigma)


def save_dataset(ds: Dataset, csv_path, sidecar_path=None) -> None:
    csv_path = str(csv_path)
    if sidecar_path is None:
        sidecar_path = csv_path + ".meta.json"
    with open(csv_path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for xi, yi in zip(ds.x, ds.y):
            fh.write(",".join(_fmt(v) for v in (*xi, *yi)) + "\n")
    with open(sidecar_path, "w") as fh:
        json.dump(ds.metadata, fh, indent=2)


def load_dataset(csv_path, sidecar_path=None) -> Dataset:
    csv_path = str(csv_path)
    if sidecar_path is None:
        sidecar_path = csv_path + ".meta.json"
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    meta = {}
    try:
        with open(sidecar_path) as fh:
            meta = json.load(fh)
    except FileNotFoundError:
        pass
    return Dataset(data[:, :6], data[:, 6:9], seed=meta.get("seed"),
                   sigma=meta.get("sigma", 0.0),
                   version=meta.get("generator_version", GENERATOR_VERSION))
