"""Dataset ingestion, synthetic generators and train/test splits."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..gp_exact import Dataset, sample_prior_observations
from ..kernels import KernelSpec

__all__ = ["load_csv", "synth_generate", "synth_clustered", "train_test_split", "NAVAL_NOISE_STD"]

#: Observation noise standard deviation added to noiseless simulator data.
NAVAL_NOISE_STD = 0.0068


def load_csv(path, target_column, noise: float, add_noise_std: float | None = None, seed=None) -> Dataset:
    """Read a numeric CSV with a header row.

    ``X`` is standardised per column and ``y`` mean-centred; the
    transform is stored in ``meta``. Constant columns are centred only.

    Parameters
    ----------
    path : path-like
    target_column : str or int
        Header name or column index of the regression target.
    noise : float
        Noise variance for the returned dataset.
    add_noise_std : float, optional
        If given, add ``N(0, add_noise_std^2)`` noise to ``y`` before centring.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise ValueError(f"{path} has no data rows")
    header, body = rows[0], rows[1:]
    try:
        vals = np.array([[float(c) for c in r] for r in body])
    except ValueError as e:
        raise ValueError(f"{path}: non-numeric cell ({e})") from e
    if vals.ndim != 2 or vals.shape[1] != len(header):
        raise ValueError(f"{path}: ragged rows")
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"{path}: NaN or infinite cells")
    if isinstance(target_column, str):
        if target_column not in header:
            raise ValueError(f"no column named {target_column!r}")
        j = header.index(target_column)
    else:
        j = int(target_column)
        if not -len(header) <= j < len(header):
            raise ValueError(f"target column {j} out of range")
        j %= len(header)
    y = vals[:, j]
    X = np.delete(vals, j, axis=1)
    if add_noise_std:
        y = y + add_noise_std * np.random.default_rng(seed).standard_normal(y.shape)
    mu, sd = X.mean(axis=0), X.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    ym = y.mean()
    meta = {
        "source": str(path),
        "columns": [h for k, h in enumerate(header) if k != j],
        "target": header[j],
        "x_mean": mu.tolist(),
        "x_std": sd.tolist(),
        "y_mean": float(ym),
        "added_noise_std": add_noise_std,
    }
    return Dataset((X - mu) / sd, y - ym, noise, meta)


def synth_generate(spec: KernelSpec, N: int, D: int, beta2: float, noise: float, seed) -> Dataset:
    """``X ~ N(0, beta2 I)`` and ``y ~ N(0, Kff + noise I)``, deterministic per seed."""
    if spec.dim != D:
        raise ValueError("kernel dimension differs from D")
    if not (N >= 1 and beta2 > 0):
        raise ValueError("need N >= 1 and beta2 > 0")
    sx, sy = np.random.SeedSequence(seed).spawn(2)
    X = np.sqrt(beta2) * np.random.default_rng(sx).standard_normal((N, D))
    y = sample_prior_observations(spec, X, noise, sy)
    return Dataset(X, y, noise, {"generator": "gaussian", "beta2": beta2, "seed": seed})


def synth_clustered(
    spec: KernelSpec, N: int, D: int, noise: float, seed, k: int = 5, spread: float = 3.0, width: float = 0.3
) -> Dataset:
    """Inputs from a mixture of ``k`` isotropic Gaussians; ``y`` from the GP prior.

    Centres are uniform on ``[-spread, spread]^D`` and each component has
    standard deviation ``width``.
    """
    if spec.dim != D:
        raise ValueError("kernel dimension differs from D")
    sc, sx, sy = np.random.SeedSequence(seed).spawn(3)
    centres = np.random.default_rng(sc).uniform(-spread, spread, (k, D))
    rng = np.random.default_rng(sx)
    labels = rng.integers(k, size=N)
    X = centres[labels] + width * rng.standard_normal((N, D))
    y = sample_prior_observations(spec, X, noise, sy)
    return Dataset(X, y, noise, {"generator": "clustered", "k": k, "seed": seed})


def train_test_split(data: Dataset, seed, test_fraction: float = 0.1):
    """Seeded shuffle into train and test datasets (90/10 by default)."""
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    perm = np.random.default_rng(seed).permutation(data.n)
    n_test = max(1, int(round(test_fraction * data.n)))
    if n_test >= data.n:
        raise ValueError("too few points to split")
    te, tr = perm[:n_test], perm[n_test:]
    meta = dict(data.meta)
    return (
        Dataset(data.X[tr], data.y[tr], data.noise, {**meta, "split": "train"}),
        Dataset(data.X[te], data.y[te], data.noise, {**meta, "split": "test"}),
    )
