"""Collapsed sparse variational GP regression and its KL certificates.

Every quantity is computed from the ``M x N`` matrix ``P = L^{-1} Kuf``
where ``L L^T = Kuu + eps I``, so that ``Qff = P^T P`` is never formed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, asdict
from typing import Callable

import numpy as np
import scipy.linalg
from scipy.linalg import solve_triangular

from .gp_exact import (
    DESK_GUARD,
    Dataset,
    check_desk_scale,
    log_marginal_likelihood,
)
from .kernels import KernelSpec, gram, _as_points
from .linalg import chol_jittered, default_jitter_schedule, sym_eig

__all__ = [
    "EigenBasis",
    "InducingSet",
    "SparsePosterior",
    "BoundReport",
    "compute_eigen_basis",
    "elbo",
    "fit",
    "sparse_predict",
    "trace_term",
    "upper_bound_u2",
    "upper_bound_u1",
    "operator_norm_term",
    "exact_kl",
    "lemma3_bound",
    "lemma3_bound_trace",
    "lemma4_interval",
    "marginal_moment_bounds",
    "bound_report",
]

LOG2PI = np.log(2 * np.pi)


@dataclass(frozen=True)
class EigenBasis:
    """Leading eigenpairs of ``gram(spec, X)`` for eigenfeature inducing variables."""

    X: np.ndarray
    eigvals: np.ndarray  # descending, length M
    eigvecs: np.ndarray  # (N, M)


def compute_eigen_basis(spec: KernelSpec, X, M: int, guard=DESK_GUARD) -> EigenBasis:
    X = _as_points(X, spec.dim)
    check_desk_scale(X.shape[0], guard)
    if not 1 <= M <= X.shape[0]:
        raise ValueError("need 1 <= M <= N for eigenfeatures")
    w, V = sym_eig(gram(spec, X))
    if w[M - 1] <= 0:
        raise ValueError(
            f"M={M} exceeds the numerical rank of the kernel matrix "
            f"(eigenvalue {w[M - 1]:.3g})"
        )
    return EigenBasis(X, w[:M].copy(), V[:, :M].copy())


@dataclass(frozen=True)
class InducingSet:
    """Inducing variables: either point locations or kernel eigenfeatures.

    Attributes
    ----------
    kind : {"points", "eigenfeatures"}
    Z : ndarray, optional
        Inducing inputs, shape ``(M, D)``, for ``kind="points"``.
    m : int
        Number of inducing variables.
    jitter : float
        ``eps`` added to the diagonal of ``Kuu``.
    basis : EigenBasis, optional
        Cached eigenpairs for ``kind="eigenfeatures"``; recomputed from the
        data when absent or built for different inputs.
    """

    kind: str
    m: int
    Z: np.ndarray | None = None
    jitter: float = 0.0
    basis: EigenBasis | None = None

    def __post_init__(self):
        if self.kind not in ("points", "eigenfeatures"):
            raise ValueError(f"unknown inducing kind {self.kind!r}")
        if self.m < 1:
            raise ValueError("need at least one inducing variable")
        if not self.jitter >= 0:
            raise ValueError("jitter must be nonnegative")

    @classmethod
    def points(cls, Z, jitter: float = 0.0) -> "InducingSet":
        Z = np.asarray(Z, dtype=float)
        if Z.ndim == 1:
            Z = Z[:, None]
        return cls("points", Z.shape[0], Z, float(jitter))

    @classmethod
    def eigenfeatures(cls, m: int, jitter: float = 0.0, basis=None) -> "InducingSet":
        return cls("eigenfeatures", int(m), None, float(jitter), basis)

    def with_jitter(self, jitter: float) -> "InducingSet":
        return InducingSet(self.kind, self.m, self.Z, float(jitter), self.basis)


@dataclass(frozen=True)
class _Core:
    L: np.ndarray  # chol of Kuu + eps I
    P: np.ndarray  # L^{-1} Kuf
    kdiag: np.ndarray
    jitter_used: float
    cross: Callable  # Xstar -> K_{*u}


def _jitter_schedule(eps: float, spec: KernelSpec) -> tuple:
    # start at the requested jitter; escalate only past it
    return (eps,) + tuple(j for j in default_jitter_schedule(spec.variance) if j > eps)


def _core(data: Dataset, spec: KernelSpec, ind: InducingSet) -> _Core:
    if data.dim != spec.dim:
        raise ValueError("data and kernel dimensions differ")
    kdiag = np.full(data.n, spec.variance)
    if ind.kind == "points":
        Z = _as_points(ind.Z, spec.dim)
        if Z.shape[0] > data.n:
            warnings.warn(f"M={Z.shape[0]} inducing points exceed N={data.n}")
        f = chol_jittered(gram(spec, Z), _jitter_schedule(ind.jitter, spec))
        P = solve_triangular(f.L, gram(spec, Z, data.X), lower=True)
        return _Core(f.L, P, kdiag, f.jitter_used, lambda Xs: gram(spec, Xs, Z))

    basis = ind.basis
    if (
        basis is None
        or basis.eigvals.size < ind.m
        or basis.X.shape != data.X.shape
        or not np.array_equal(basis.X, data.X)
    ):
        basis = compute_eigen_basis(spec, data.X, ind.m)
    lam = basis.eigvals[: ind.m]
    V = basis.eigvecs[:, : ind.m]
    # u_m = sum_n V[n, m] f(x_n) / lam_m  =>  Kuu = diag(1/lam), Kuf = V^T
    f = chol_jittered(np.diag(1.0 / lam), _jitter_schedule(ind.jitter, spec))
    P = solve_triangular(f.L, V.T, lower=True)
    Xtr = data.X

    def cross(Xs):
        return gram(spec, Xs, Xtr) @ V / lam

    return _Core(f.L, P, kdiag, f.jitter_used, cross)


def _gauss_terms(P: np.ndarray, y: np.ndarray, s: float):
    """``log det(s I + P^T P)`` and ``y^T (s I + P^T P)^{-1} y`` in O(N M^2)."""
    M, N = P.shape
    B = np.eye(M) + (P @ P.T) / s
    LB = scipy.linalg.cholesky(B, lower=True)
    c = solve_triangular(LB, P @ y, lower=True)
    logdet = N * np.log(s) + 2.0 * np.sum(np.log(np.diag(LB)))
    quad = (y @ y - (c @ c) / s) / s
    return float(logdet), float(quad)


def _trace(core: _Core) -> float:
    return float(np.sum(core.kdiag) - np.sum(core.P**2))


def _elbo(core: _Core, data: Dataset, t: float) -> float:
    logdet, quad = _gauss_terms(core.P, data.y, data.noise)
    return float(-0.5 * logdet - 0.5 * quad - 0.5 * data.n * LOG2PI - 0.5 * t / data.noise)


def _upper(core: _Core, data: Dataset, shift: float) -> float:
    logdet, _ = _gauss_terms(core.P, data.y, data.noise)
    _, quad = _gauss_terms(core.P, data.y, data.noise + max(shift, 0.0))
    return float(-0.5 * logdet - 0.5 * quad - 0.5 * data.n * LOG2PI)


def _zeta(core: _Core, data: Dataset, spec: KernelSpec, guard) -> float:
    check_desk_scale(data.n, guard)
    R = gram(spec, data.X) - core.P.T @ core.P
    return float(max(sym_eig(0.5 * (R + R.T), tol=np.inf)[0][0], 0.0))


def elbo(data: Dataset, spec: KernelSpec, ind: InducingSet) -> float:
    """Collapsed evidence lower bound with the optimal ``q(u)``.

    ``log N(y | 0, Qff + sigma^2 I) - Tr(Kff - Qff) / (2 sigma^2)``.
    """
    core = _core(data, spec, ind)
    return _elbo(core, data, _trace(core))


def trace_term(data: Dataset, spec: KernelSpec, ind: InducingSet) -> float:
    """``t = Tr(Kff - Qff)``."""
    return _trace(_core(data, spec, ind))


def upper_bound_u2(data: Dataset, spec: KernelSpec, ind: InducingSet) -> float:
    """Upper bound on the log marginal likelihood using the trace term.

    ``-1/2 log det(Qff + s I) - 1/2 y^T (Qff + (t + s) I)^{-1} y - N/2 log 2 pi``
    with ``s = sigma^2``.
    """
    core = _core(data, spec, ind)
    return _upper(core, data, _trace(core))


def operator_norm_term(data: Dataset, spec: KernelSpec, ind: InducingSet, guard=DESK_GUARD) -> float:
    """``zeta``, the largest eigenvalue of ``Kff - Qff``."""
    return _zeta(_core(data, spec, ind), data, spec, guard)


def upper_bound_u1(data: Dataset, spec: KernelSpec, ind: InducingSet, guard=DESK_GUARD) -> float:
    """Tighter upper bound using ``zeta`` in place of ``t``. O(N^3)."""
    core = _core(data, spec, ind)
    return _upper(core, data, _zeta(core, data, spec, guard))


def exact_kl(data: Dataset, spec: KernelSpec, ind: InducingSet, guard=DESK_GUARD) -> float:
    """KL from the sparse to the exact posterior: ``log p(y) - elbo``."""
    return float(log_marginal_likelihood(data, spec, guard) - elbo(data, spec, ind))


@dataclass(frozen=True)
class SparsePosterior:
    """Optimal Gaussian ``q(u) = N(mu_u, Sigma_u)`` and cached solves.

    The predictive distribution at ``x`` is
    ``mu(x) = k_xu Kuu^{-1} mu_u`` and
    ``k(x, x) + k_xu Kuu^{-1} (Sigma_u - Kuu) Kuu^{-1} k_ux``.
    """

    data: Dataset
    spec: KernelSpec
    inducing: InducingSet
    mu_u: np.ndarray
    sigma_u: np.ndarray
    jitter_used: float
    _core: _Core
    _LB: np.ndarray
    _c: np.ndarray

    def predict(self, Xstar, full_cov: bool = False):
        Xstar = _as_points(Xstar, self.spec.dim)
        A = solve_triangular(self._core.L, self._core.cross(Xstar).T, lower=True)
        Bx = solve_triangular(self._LB, A, lower=True)
        mean = Bx.T @ self._c
        if full_cov:
            cov = gram(self.spec, Xstar) - A.T @ A + Bx.T @ Bx
            return mean, 0.5 * (cov + cov.T)
        return mean, self.spec.variance - np.sum(A**2, axis=0) + np.sum(Bx**2, axis=0)

    def elbo_at(self, mu_u=None, sigma_u=None) -> float:
        """Uncollapsed ELBO for an arbitrary Gaussian ``q(u)``.

        Defaults to the stored optimum, where it equals the collapsed ELBO.
        """
        mu = self.mu_u if mu_u is None else np.asarray(mu_u, dtype=float)
        S = self.sigma_u if sigma_u is None else np.asarray(sigma_u, dtype=float)
        core, data = self._core, self.data
        L, P = core.L, core.P
        a = solve_triangular(L, mu, lower=True)
        St = solve_triangular(L, solve_triangular(L, S, lower=True).T, lower=True)
        St = 0.5 * (St + St.T)
        mean_f = P.T @ a
        var_f = core.kdiag - np.sum(P**2, axis=0) + np.sum(P * (St @ P), axis=0)
        s2 = data.noise
        ell = -0.5 * data.n * np.log(2 * np.pi * s2) - 0.5 * (
            np.sum((data.y - mean_f) ** 2) + np.sum(var_f)
        ) / s2
        sign, logdet_st = np.linalg.slogdet(St)
        if sign <= 0:
            raise ValueError("sigma_u is not positive definite")
        kl = 0.5 * (np.trace(St) + a @ a - mu.size - logdet_st)
        return float(ell - kl)


def fit(data: Dataset, spec: KernelSpec, ind: InducingSet) -> SparsePosterior:
    """Closed-form optimal variational distribution for Gaussian noise."""
    core = _core(data, spec, ind)
    s2 = data.noise
    M = core.P.shape[0]
    LB = scipy.linalg.cholesky(np.eye(M) + core.P @ core.P.T / s2, lower=True)
    c = solve_triangular(LB, core.P @ data.y, lower=True) / s2
    # Sigma_u = L B^{-1} L^T and mu_u = L B^{-1} P y / s2
    W = solve_triangular(LB, core.L.T, lower=True)  # LB^{-1} L^T
    sigma_u = W.T @ W
    mu_u = W.T @ c
    return SparsePosterior(
        data, spec, ind, mu_u, 0.5 * (sigma_u + sigma_u.T), core.jitter_used, core, LB, c
    )


def sparse_predict(post: SparsePosterior, Xstar, full_cov: bool = False):
    """Predictive mean and marginal variance (or covariance) of the latent ``f``."""
    return post.predict(Xstar, full_cov=full_cov)


def _check_nonneg(**kw):
    for k, v in kw.items():
        if not (np.isfinite(v) and v >= 0):
            raise ValueError(f"{k} must be finite and nonnegative, got {v}")


def lemma3_bound(t: float, zeta: float, y_norm_sq: float, noise: float) -> float:
    """KL upper bound ``(t + zeta ||y||^2 / (zeta + sigma^2)) / (2 sigma^2)``.

    Requires ``t >= zeta >= 0`` (up to roundoff).
    """
    _check_nonneg(t=t, zeta=zeta, y_norm_sq=y_norm_sq)
    if not noise > 0:
        raise ValueError("noise must be positive")
    if zeta > t * (1 + 1e-9) + 1e-12:
        raise ValueError("zeta cannot exceed the trace term")
    return (t + zeta * y_norm_sq / (zeta + noise)) / (2.0 * noise)


def lemma3_bound_trace(t: float, y_norm_sq: float, noise: float) -> float:
    """The same bound with ``zeta`` replaced by its upper bound ``t``."""
    return lemma3_bound(t, t, y_norm_sq, noise)


def lemma4_interval(t: float, noise: float):
    """``(t / (2 sigma^2), t / sigma^2)``, containing the expected KL when ``y`` follows the prior."""
    _check_nonneg(t=t)
    if not noise > 0:
        raise ValueError("noise must be positive")
    return t / (2.0 * noise), t / noise


def marginal_moment_bounds(gamma: float, sigma2: float):
    """Bounds on marginal mean and variance error implied by ``2 KL <= gamma``.

    Parameters
    ----------
    gamma : float
        Budget on twice the KL divergence, ``0 <= gamma <= 1/5``.
    sigma2 : float
        Standard deviation of the exact marginal.

    Returns
    -------
    mean_gap_bound : float
        ``sigma2 * sqrt(gamma)`` bounds ``|mu1 - mu2|``.
    var_ratio_bound : float
        ``sqrt(3 gamma)`` bounds ``|1 - sigma1^2 / sigma2^2|``.
    """
    if not 0 <= gamma <= 0.2:
        raise ValueError("gamma must lie in [0, 1/5]")
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    return sigma2 * np.sqrt(gamma), np.sqrt(3.0 * gamma)


@dataclass
class BoundReport:
    n: int
    m: int
    eps: float
    elbo: float
    u2: float
    t: float
    kl_u2: float
    u1: float | None = None
    zeta: float | None = None
    kl_u1: float | None = None
    exact_kl: float | None = None

    @property
    def kl_upper_u2(self) -> float:
        return self.kl_u2

    @property
    def kl_upper_u1(self):
        return self.kl_u1

    KEYS = ("n", "m", "eps", "elbo", "u1", "u2", "t", "zeta", "kl_u1", "kl_u2", "exact_kl")

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: d[k] for k in self.KEYS}


def bound_report(
    data: Dataset,
    spec: KernelSpec,
    ind: InducingSet,
    with_u1: bool = False,
    with_exact: bool = False,
    guard=DESK_GUARD,
) -> BoundReport:
    """ELBO, upper bounds and trace/operator-norm terms from one factorisation."""
    core = _core(data, spec, ind)
    t = _trace(core)
    lo = _elbo(core, data, t)
    u2 = _upper(core, data, t)
    rep = BoundReport(data.n, ind.m, core.jitter_used, lo, u2, t, u2 - lo)
    if with_u1:
        rep.zeta = _zeta(core, data, spec, guard)
        rep.u1 = _upper(core, data, rep.zeta)
        rep.kl_u1 = rep.u1 - lo
    if with_exact:
        rep.exact_kl = log_marginal_likelihood(data, spec, guard) - lo
    return rep
