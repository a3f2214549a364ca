"""Exact Gaussian process regression, used as the reference solution."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .kernels import KernelSpec, gram, _as_points
from .linalg import LowerFactor, chol_jittered, logdet_from_factor

__all__ = [
    "Dataset",
    "DeskScaleError",
    "ExactPosterior",
    "DESK_GUARD",
    "log_marginal_likelihood",
    "exact_predict",
    "sample_prior_observations",
]

#: Largest N accepted by the O(N^3) reference computations.
DESK_GUARD = 4000

LOG2PI = np.log(2 * np.pi)


class DeskScaleError(ValueError):
    """Raised when an O(N^3) computation is requested above the size guard."""


def check_desk_scale(n: int, guard: int | None = DESK_GUARD):
    if guard is not None and n > guard:
        raise DeskScaleError(
            f"N={n} exceeds the desk-scale guard of {guard}; raise the guard explicitly"
        )


@dataclass(frozen=True)
class Dataset:
    """Regression data ``y = f(X) + noise`` with known noise variance.

    Attributes
    ----------
    X : ndarray, shape (N, D)
    y : ndarray, shape (N,)
    noise : float
        Noise variance ``sigma^2``.
    meta : dict
        Free-form provenance, e.g. the standardisation applied on load.
    """

    X: np.ndarray
    y: np.ndarray
    noise: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.y, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] < 1:
            raise ValueError("X must be a non-empty (N, D) array")
        if y.shape[0] != X.shape[0]:
            raise ValueError("X and y have different numbers of rows")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("data contains non-finite values")
        if not (np.isfinite(self.noise) and self.noise > 0):
            raise ValueError("noise variance must be positive")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "noise", float(self.noise))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]


def _factor_ky(data: Dataset, spec: KernelSpec, guard) -> LowerFactor:
    check_desk_scale(data.n, guard)
    Ky = gram(spec, data.X)
    Ky[np.diag_indices_from(Ky)] += data.noise
    # no jitter: the noise variance already bounds the conditioning
    return chol_jittered(Ky, schedule=(0.0,))


def log_marginal_likelihood(data: Dataset, spec: KernelSpec, guard=DESK_GUARD) -> float:
    """``log N(y | 0, Kff + sigma^2 I)``."""
    f = _factor_ky(data, spec, guard)
    alpha = scipy.linalg.solve_triangular(f.L, data.y, lower=True)
    return float(-0.5 * logdet_from_factor(f) - 0.5 * alpha @ alpha - 0.5 * data.n * LOG2PI)


@dataclass(frozen=True)
class ExactPosterior:
    """Cached factorisation of ``Kff + sigma^2 I`` for repeated prediction."""

    data: Dataset
    spec: KernelSpec
    factor: LowerFactor
    alpha: np.ndarray  # (Kff + sigma^2 I)^-1 y

    @classmethod
    def fit(cls, data: Dataset, spec: KernelSpec, guard=DESK_GUARD) -> "ExactPosterior":
        f = _factor_ky(data, spec, guard)
        alpha = scipy.linalg.cho_solve((f.L, True), data.y)
        return cls(data, spec, f, alpha)

    def predict(self, Xstar, full_cov: bool = True):
        Xstar = _as_points(Xstar, self.spec.dim)
        Ksf = gram(self.spec, Xstar, self.data.X)
        mean = Ksf @ self.alpha
        A = scipy.linalg.solve_triangular(self.factor.L, Ksf.T, lower=True)
        if not full_cov:
            return mean, self.spec.variance - np.sum(A**2, axis=0)
        cov = gram(self.spec, Xstar) - A.T @ A
        return mean, 0.5 * (cov + cov.T)


def exact_predict(data: Dataset, spec: KernelSpec, Xstar, guard=DESK_GUARD):
    """Posterior predictive mean and covariance of the latent function.

    Returns
    -------
    mean : ndarray, shape (n*,)
    cov : ndarray, shape (n*, n*)
    """
    return ExactPosterior.fit(data, spec, guard).predict(Xstar)


def sample_prior_observations(spec: KernelSpec, X, noise: float, seed) -> np.ndarray:
    """Draw ``y ~ N(0, Kff + sigma^2 I)``; deterministic given ``seed``."""
    X = _as_points(X, spec.dim)
    if not noise > 0:
        raise ValueError("noise variance must be positive")
    Ky = gram(spec, X)
    Ky[np.diag_indices_from(Ky)] += noise
    L = chol_jittered(Ky, schedule=(0.0,)).L
    rng = np.random.default_rng(seed)
    return L @ rng.standard_normal(X.shape[0])
