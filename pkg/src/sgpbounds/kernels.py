"""Stationary covariance functions: squared exponential and Matérn.

All kernels are written as ``k(x, x') = v * kappa(r)`` where ``r`` is a
scaled distance between the inputs and ``v`` is the signal variance.
The Matérn family uses the unscaled distance ``r = ||x - x'|| / l``, so
that ``nu = 1/2`` gives the exponential kernel ``v * exp(-r)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import gammaln, kv

__all__ = [
    "KernelSpec",
    "eval_kernel",
    "gram",
    "gram_log_param_grads",
    "spectral_density_matern",
]

FAMILIES = ("se", "se_ard", "matern")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and hyperparameters (noise is kept separately).

    Parameters
    ----------
    family : {"se", "se_ard", "matern"}
        Isotropic squared exponential, squared exponential with one
        lengthscale per dimension, or isotropic Matérn.
    variance : float
        Signal variance ``v``; ``k(x, x) = v``.
    lengthscales : sequence of float
        A single lengthscale for ``se`` and ``matern``, ``dim`` of them
        for ``se_ard``.
    dim : int
        Input dimension ``D``.
    nu : float, optional
        Matérn smoothness. Ignored by the SE families.
    """

    family: str
    variance: float
    lengthscales: tuple = field(default=(1.0,))
    dim: int = 1
    nu: float = 0.5

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        object.__setattr__(self, "lengthscales", tuple(float(x) for x in ls))
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError("dim must be a positive integer")
        object.__setattr__(self, "dim", int(self.dim))
        if not (np.isfinite(self.variance) and self.variance > 0):
            raise ValueError("variance must be positive")
        if not np.all(np.isfinite(ls)) or np.any(ls <= 0):
            raise ValueError("lengthscales must be positive")
        expected = self.dim if self.family == "se_ard" else 1
        if ls.size != expected:
            raise ValueError(
                f"{self.family} expects {expected} lengthscale(s), got {ls.size}"
            )
        if self.family == "matern" and not (np.isfinite(self.nu) and self.nu > 0):
            raise ValueError("nu must be positive")

    @classmethod
    def se(cls, variance=1.0, lengthscale=1.0, dim=1):
        return cls("se", variance, (lengthscale,), dim)

    @classmethod
    def se_ard(cls, variance, lengthscales):
        ls = tuple(np.atleast_1d(lengthscales).astype(float))
        return cls("se_ard", variance, ls, len(ls))

    @classmethod
    def matern(cls, nu, variance=1.0, lengthscale=1.0, dim=1):
        return cls("matern", variance, (lengthscale,), dim, nu)

    @property
    def lengthscale(self) -> float:
        """The isotropic lengthscale (first entry for ``se_ard``)."""
        return self.lengthscales[0]

    # Log-parameter vector used by the hyperparameter optimiser.
    def log_params(self) -> np.ndarray:
        return np.log(np.r_[self.variance, self.lengthscales])

    def with_log_params(self, theta) -> "KernelSpec":
        theta = np.asarray(theta, dtype=float)
        if theta.size != 1 + len(self.lengthscales):
            raise ValueError("wrong number of log-parameters")
        return KernelSpec(
            self.family,
            float(np.exp(theta[0])),
            tuple(np.exp(theta[1:])),
            self.dim,
            self.nu,
        )

    def to_dict(self) -> dict:
        d = {
            "family": self.family,
            "variance": self.variance,
            "lengthscales": list(self.lengthscales),
            "dim": self.dim,
        }
        if self.family == "matern":
            d["nu"] = self.nu
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        d = dict(d)
        ls = d.pop("lengthscales", d.pop("lengthscale", 1.0))
        return cls(
            family=d["family"],
            variance=float(d.get("variance", 1.0)),
            lengthscales=tuple(np.atleast_1d(ls).astype(float)),
            dim=int(d.get("dim", 1)),
            nu=float(d.get("nu", 0.5)),
        )


def _as_points(A, dim: int) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None] if dim == 1 else A[None, :]
    if A.ndim != 2 or A.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("non-finite coordinates")
    return A


def _sq_dist(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    # cdist works on differences, so close pairs keep full accuracy
    return cdist(A, B, "sqeuclidean")


def _matern_kappa(nu: float, r: np.ndarray) -> np.ndarray:
    """Unit-variance Matérn profile as a function of ``r = dist / l``."""
    if nu == 0.5:
        return np.exp(-r)
    if nu == 1.5:
        return (1.0 + r) * np.exp(-r)
    if nu == 2.5:
        return (1.0 + r + r**2 / 3.0) * np.exp(-r)
    out = np.ones_like(r)
    pos = r > 0
    rp = r[pos]
    # log of 2^(1-nu) / Gamma(nu) * r^nu, combined with K_nu for stability
    logc = (1.0 - nu) * np.log(2.0) - gammaln(nu) + nu * np.log(rp)
    out[pos] = np.exp(logc) * kv(nu, rp)
    # kv underflows to 0 for large r, which is the correct limit
    return np.nan_to_num(out, nan=0.0)


def _matern_dkappa_dr(nu: float, r: np.ndarray) -> np.ndarray:
    if nu == 0.5:
        return -np.exp(-r)
    if nu == 1.5:
        return -r * np.exp(-r)
    if nu == 2.5:
        return -(r / 3.0) * (1.0 + r) * np.exp(-r)
    raise NotImplementedError("analytic gradients need nu in {1/2, 3/2, 5/2}")


def _profile(spec: KernelSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    if spec.family == "matern":
        r = np.sqrt(_sq_dist(A, B)) / spec.lengthscale
        return _matern_kappa(spec.nu, r)
    ls = np.asarray(spec.lengthscales)
    return np.exp(-0.5 * _sq_dist(A / ls, B / ls))


def gram(spec: KernelSpec, A, B=None) -> np.ndarray:
    """Kernel matrix ``K[i, j] = k(A_i, B_j)``.

    Parameters
    ----------
    spec : KernelSpec
    A : array_like, shape (n, D)
    B : array_like, shape (m, D), optional
        Defaults to ``A``. When ``B`` is ``A`` the result is symmetrised
        and its diagonal set to ``v``.

    Returns
    -------
    ndarray, shape (n, m)
    """
    same = B is None or B is A
    A = _as_points(A, spec.dim)
    B = A if same else _as_points(B, spec.dim)
    K = spec.variance * _profile(spec, A, B)
    if same:
        K = 0.5 * (K + K.T)
        np.fill_diagonal(K, spec.variance)
    return K


def eval_kernel(spec: KernelSpec, x, xp) -> float:
    """Evaluate ``k(x, x')`` for a single pair of points."""
    x = _as_points(np.atleast_1d(x).reshape(1, -1), spec.dim)
    xp = _as_points(np.atleast_1d(xp).reshape(1, -1), spec.dim)
    if spec.family == "matern":
        # exact symmetry: the distance is computed from x - x'
        r = np.sqrt(np.sum((x - xp) ** 2)) / spec.lengthscale
        if r == 0:
            return float(spec.variance)
        return float(spec.variance * _matern_kappa(spec.nu, np.array([r]))[0])
    ls = np.asarray(spec.lengthscales)
    d2 = np.sum(((x - xp) / ls) ** 2)
    return float(spec.variance * np.exp(-0.5 * d2))


def gram_log_param_grads(spec: KernelSpec, A, B=None) -> list:
    """Derivatives of ``gram(spec, A, B)`` w.r.t. ``spec.log_params()``.

    Returns a list of matrices, the first for ``log v`` followed by one
    per log-lengthscale.
    """
    same = B is None or B is A
    A = _as_points(A, spec.dim)
    B = A if same else _as_points(B, spec.dim)
    K = gram(spec, A, B if not same else None)
    grads = [K]
    if spec.family == "matern":
        r = np.sqrt(_sq_dist(A, B)) / spec.lengthscale
        grads.append(-spec.variance * r * _matern_dkappa_dr(spec.nu, r))
    elif spec.family == "se":
        grads.append(K * _sq_dist(A, B) / spec.lengthscale**2)
    else:
        for d, l in enumerate(spec.lengthscales):
            diff2 = (A[:, d][:, None] - B[:, d][None, :]) ** 2 / l**2
            grads.append(K * diff2)
    return grads


def spectral_density_matern(spec: KernelSpec, omega) -> np.ndarray | float:
    """Spectral density of the Matérn kernel at frequency magnitude ``omega``.

    ``s(w) = v l^D Gamma(nu + D/2) / (pi^(D/2) Gamma(nu)) (1 + (l w)^2)^-(nu + D/2)``,
    normalised so that its Fourier transform is ``v * kappa(r)``.
    """
    if spec.family != "matern":
        raise ValueError("spectral density is only defined for the Matérn family")
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("omega must be nonnegative")
    D, nu, l = spec.dim, spec.nu, spec.lengthscale
    logc = (
        D * np.log(l)
        + gammaln(nu + D / 2)
        - (D / 2) * np.log(np.pi)
        - gammaln(nu)
    )
    s = spec.variance * np.exp(logc) * (1.0 + (l * omega) ** 2) ** (-(nu + D / 2))
    return float(s) if s.ndim == 0 else s
