"""Inducing-input selection methods.

Subset methods return indices into the training inputs; k-means returns
centroids. All methods are deterministic given their seed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist

from .kernels import KernelSpec, gram, _as_points
from .linalg import pivoted_partial_chol
from .sgpr import InducingSet, compute_eigen_basis

__all__ = [
    "SelectionResult",
    "select_uniform",
    "select_kmeanspp",
    "select_greedy_variance",
    "mdpp_acceptance",
    "mdpp_chain",
    "mdpp_exact_distribution",
    "mdpp_mixing_steps",
    "select_mdpp_mcmc",
    "ridge_leverage_scores_exact",
    "effective_dimension",
    "select_rls_fixed",
    "select_rls_adaptive",
    "rls_adaptive_size_bound",
    "eigenfeature_inducing",
]


@dataclass
class SelectionResult:
    """Selected inducing inputs.

    ``indices`` is ``None`` for methods that do not return training points.
    """

    indices: np.ndarray | None
    Z: np.ndarray
    method: str
    seed: int | None
    diagnostics: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.Z.shape[0]

    def inducing(self, jitter: float = 0.0) -> InducingSet:
        return InducingSet.points(self.Z, jitter)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "seed": self.seed,
            "m": self.m,
            "indices": None if self.indices is None else [int(i) for i in self.indices],
            "diagnostics": _jsonable(self.diagnostics),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _check_m(M: int, N: int):
    if not 1 <= M <= N:
        raise ValueError(f"need 1 <= M <= N, got M={M}, N={N}")


def _points(spec_or_dim, X):
    dim = spec_or_dim.dim if isinstance(spec_or_dim, KernelSpec) else spec_or_dim
    return _as_points(X, dim)


def select_uniform(X, M: int, seed=None) -> SelectionResult:
    """``M`` distinct training points uniformly at random."""
    X = np.asarray(X, dtype=float)
    X = X[:, None] if X.ndim == 1 else X
    _check_m(M, X.shape[0])
    idx = np.random.default_rng(seed).choice(X.shape[0], M, replace=False)
    return SelectionResult(idx, X[idx], "uniform", seed)


def select_kmeanspp(X, M: int, seed=None, iters: int = 25) -> SelectionResult:
    """k-means++ seeding followed by at most ``iters`` Lloyd iterations.

    The within-cluster sum of squares after seeding and after each
    iteration is recorded in ``diagnostics["sse"]``.
    """
    from sklearn.cluster import kmeans_plusplus

    X = np.asarray(X, dtype=float)
    X = X[:, None] if X.ndim == 1 else X
    _check_m(M, X.shape[0])
    rs = np.random.RandomState(np.random.default_rng(seed).integers(2**31 - 1))
    C, _ = kmeans_plusplus(X, M, random_state=rs)
    d2 = cdist(X, C, "sqeuclidean")
    labels = np.argmin(d2, axis=1)
    sse = [float(d2[np.arange(len(X)), labels].sum())]
    for _ in range(iters):
        newC = C.copy()
        for k in range(M):
            members = labels == k
            if members.any():  # empty clusters keep their centre
                newC[k] = X[members].mean(axis=0)
        C = newC
        d2 = cdist(X, C, "sqeuclidean")
        new_labels = np.argmin(d2, axis=1)
        sse.append(float(d2[np.arange(len(X)), new_labels].sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return SelectionResult(None, C, "kmeans", seed, {"sse": sse, "iterations": len(sse) - 1})


def select_greedy_variance(spec: KernelSpec, X, M: int) -> SelectionResult:
    """Repeatedly add the point with the largest conditional variance.

    Equivalent to the pivots of a pivoted partial Cholesky factorisation.
    Fewer than ``M`` points are returned (and ``diagnostics["exhausted"]``
    set) if every residual variance vanishes first.
    """
    X = _points(spec, X)
    _check_m(M, X.shape[0])
    pf = pivoted_partial_chol(spec, X, M)
    diag = {
        "exhausted": pf.exhausted,
        "trace": float(pf.residual_diag.sum()),
    }
    return SelectionResult(pf.pivots, X[pf.pivots], "greedy", None, diag)


# ---------------------------------------------------------------------------
# M-DPP sampling


def _det_ratio(Kinv: np.ndarray, kZj: np.ndarray, kjj: float, p: int) -> float:
    """``det K_{Z - z_p + j} / det K_Z`` from the inverse of ``K_Z``."""
    b = Kinv @ kZj
    cond_var = kjj - kZj @ b
    # removing z_p inflates the conditional variance of j by b_p^2 / Kinv_pp
    return max(float(cond_var * Kinv[p, p] + b[p] ** 2), 0.0)


def _inv_from_chol(K: np.ndarray) -> np.ndarray:
    L = scipy.linalg.cholesky(K, lower=True)
    Li = scipy.linalg.solve_triangular(L, np.eye(K.shape[0]), lower=True)
    return Li.T @ Li


def mdpp_acceptance(spec: KernelSpec, X, Z, i: int, j: int) -> float:
    """Probability of accepting the swap ``i -> j`` in the lazy M-DPP chain.

    ``1/2 min(1, det K_{Z'} / det K_Z)`` with ``Z' = Z - {i} + {j}``.

    Parameters
    ----------
    Z : sequence of int
        Current subset of indices into ``X``.
    i : int
        Index in ``Z`` to remove.
    j : int
        Index not in ``Z`` to add.
    """
    X = _points(spec, X)
    Z = [int(z) for z in Z]
    if i not in Z or j in Z:
        raise ValueError("need i in Z and j not in Z")
    try:
        Kinv = _inv_from_chol(gram(spec, X[Z]))
    except np.linalg.LinAlgError as exc:
        raise ValueError("K_Z is numerically singular") from exc
    kZj = gram(spec, X[Z], X[j : j + 1])[:, 0]
    ratio = _det_ratio(Kinv, kZj, spec.variance, Z.index(i))
    return 0.5 * min(1.0, ratio)


def mdpp_chain(spec: KernelSpec, X, M: int, T: int, seed=None, init=None):
    """Run the lazy swap chain, yielding ``(state, accepted)`` after every step.

    ``state`` is the sorted tuple of selected indices.

    The chain starts from the greedy (pivoted Cholesky) subset unless
    ``init`` is given. Each step proposes removing a uniform element of
    the current subset and adding a uniform element outside it.
    """
    X = _points(spec, X)
    N = X.shape[0]
    _check_m(M, N)
    rng = np.random.default_rng(seed)
    if init is None:
        pf = pivoted_partial_chol(spec, X, M)
        if pf.exhausted:
            raise ValueError("greedy initialisation found fewer than M independent points")
        Z = [int(p) for p in pf.pivots]
    else:
        Z = [int(p) for p in init]
    if M == N:
        for _ in range(T):
            yield tuple(sorted(Z)), False
        return
    inZ = np.zeros(N, dtype=bool)
    inZ[Z] = True
    Kinv = _inv_from_chol(gram(spec, X[Z]))
    accepted_since_refresh = 0
    for _ in range(T):
        p = int(rng.integers(M))
        j = int(rng.integers(N))
        while inZ[j]:
            j = int(rng.integers(N))
        u = rng.random()
        kZj = gram(spec, X[Z], X[j : j + 1])[:, 0]
        ratio = _det_ratio(Kinv, kZj, spec.variance, p)
        if u < 0.5 * min(1.0, ratio):
            # drop position p, then append j via a bordered inverse
            keep = np.arange(M) != p
            A = Kinv[np.ix_(keep, keep)] - np.outer(Kinv[keep, p], Kinv[p, keep]) / Kinv[p, p]
            k = kZj[keep]
            b = A @ k
            s = spec.variance - k @ b
            Kinv = np.empty((M, M))
            Kinv[:-1, :-1] = A + np.outer(b, b) / s
            Kinv[:-1, -1] = Kinv[-1, :-1] = -b / s
            Kinv[-1, -1] = 1.0 / s
            inZ[Z[p]] = False
            inZ[j] = True
            Z = [z for q, z in enumerate(Z) if q != p] + [j]
            accepted_since_refresh += 1
            if accepted_since_refresh >= 100:
                Kinv = _inv_from_chol(gram(spec, X[Z]))
                accepted_since_refresh = 0
            yield tuple(sorted(Z)), True
        else:
            yield tuple(sorted(Z)), False


def mdpp_exact_distribution(spec: KernelSpec, X, M: int) -> dict:
    """Exact M-DPP probabilities by enumerating all subsets (small N only)."""
    X = _points(spec, X)
    N = X.shape[0]
    if math.comb(N, M) > 200_000:
        raise ValueError("too many subsets to enumerate")
    K = gram(spec, X)
    dets = {S: max(np.linalg.det(K[np.ix_(S, S)]), 0.0) for S in itertools.combinations(range(N), M)}
    total = sum(dets.values())
    return {S: d / total for S, d in dets.items()}


def mdpp_mixing_steps(M: int, N: int, eps: float, rho0: float | None = None) -> float:
    """Planning value for the number of chain steps to reach TV distance ``eps``.

    ``2 M N (log log(1 / rho0) + log(2 / eps^2))`` where ``rho0`` is the
    initial state's probability; by default its guaranteed lower bound
    ``(M N)^-M`` for the greedy start.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if rho0 is None:
        log_inv_rho = M * math.log(M * N)
    else:
        log_inv_rho = -math.log(rho0)
    loglog = math.log(log_inv_rho) if log_inv_rho > 1 else 0.0
    return 2.0 * M * N * (loglog + math.log(2.0 / eps**2))


def select_mdpp_mcmc(spec: KernelSpec, X, M: int, T: int = 10_000, seed=None) -> SelectionResult:
    """Approximate M-DPP sample: final state of ``T`` steps of the swap chain."""
    X = _points(spec, X)
    if T < 0:
        raise ValueError("T must be nonnegative")
    _check_m(M, X.shape[0])
    state = tuple(sorted(int(p) for p in pivoted_partial_chol(spec, X, M).pivots))
    n_acc = 0
    for state, acc in mdpp_chain(spec, X, M, T, seed):
        n_acc += acc
    idx = np.array(state, dtype=int)
    diag = {
        "T": T,
        "accepted": n_acc,
        "acceptance_rate": n_acc / T if T else float("nan"),
        "planned_steps_eps_0.1": mdpp_mixing_steps(M, X.shape[0], 0.1),
    }
    return SelectionResult(idx, X[idx], "mdpp", seed, diag)


# ---------------------------------------------------------------------------
# Ridge leverage scores


def ridge_leverage_scores_exact(spec: KernelSpec, X, omega: float) -> np.ndarray:
    """``(k_nn - k_n^T (K + omega I)^{-1} k_n) / omega`` for every point."""
    if not omega > 0:
        raise ValueError("omega must be positive")
    X = _points(spec, X)
    K = gram(spec, X)
    c = scipy.linalg.cho_factor(K + omega * np.eye(len(K)), lower=True)
    # diag(K (K + wI)^{-1}) = 1 - omega diag((K + wI)^{-1})
    Kinv_diag = np.diag(scipy.linalg.cho_solve(c, np.eye(len(K))))
    return 1.0 - omega * Kinv_diag


def effective_dimension(eigs, omega: float) -> float:
    """``sum(lam / (lam + omega))``, the sum of the ridge leverage scores."""
    eigs = np.asarray(eigs, dtype=float)
    if not omega > 0:
        raise ValueError("omega must be positive")
    scale = max(1.0, float(np.abs(eigs).max(initial=0.0)))
    if np.any(eigs < -1e-8 * scale):
        raise ValueError("eigenvalues must be nonnegative")
    eigs = np.maximum(eigs, 0.0)
    return float(np.sum(eigs / (eigs + omega)))


def _recursive_rls(spec, X, rng, *, s_level, lam_fn, oversample_fn, m_exact=None):
    """Recursive ridge-leverage-score sampling in the style of Musco & Musco.

    Scores for a uniformly subsampled half are estimated recursively,
    each level using a weighted Nyström approximation built from the
    sample drawn at the level below.
    """
    N = X.shape[0]
    kdiag = np.full(N, spec.variance)
    n_levels = max(1, math.ceil(math.log2(N / s_level))) if N > s_level else 1
    sizes = [N]
    for _ in range(n_levels):
        sizes.append(math.ceil(sizes[-1] / 2))
    perm = rng.permutation(N)
    samp = np.arange(sizes[-1])
    weights = np.ones(samp.size)
    log = []
    for level in range(n_levels - 1, -1, -1):
        curr = perm[: sizes[level]]
        landmarks = perm[samp]
        KS = gram(spec, X[curr], X[landmarks])
        SKS = KS[samp]
        lam = lam_fn(SKS, weights)
        R = SKS + np.diag(lam / weights**2)
        sol = scipy.linalg.solve(R, KS.T, assume_a="pos")
        resid = np.maximum(kdiag[curr] - np.sum(KS * sol.T, axis=1), 0.0)
        tau = np.minimum(1.0, resid / lam)
        over = oversample_fn(tau)
        levs = np.minimum(1.0, over * tau)
        log.append({"size": int(curr.size), "lambda": float(lam), "oversample": float(over),
                    "score_sum": float(tau.sum())})
        if level == 0 and m_exact is not None:
            samp = _weighted_without_replacement(rng, levs, m_exact)
            weights = np.ones(samp.size)
        else:
            samp = np.flatnonzero(rng.random(curr.size) < levs)
            if samp.size == 0:
                if levs.sum() <= 0:
                    raise ValueError("degenerate sampling: all leverage scores vanish")
                samp = np.array([int(np.argmax(levs))])
            weights = 1.0 / np.sqrt(levs[samp])
    return perm[samp], log


def _weighted_without_replacement(rng, p, m):
    p = np.asarray(p, dtype=float)
    if p.sum() <= 0:
        raise ValueError("degenerate sampling: all leverage scores vanish")
    nz = np.flatnonzero(p > 0)
    if nz.size >= m:
        return rng.choice(p.size, m, replace=False, p=p / p.sum())
    # pad with uniformly chosen zero-score points
    rest = np.setdiff1d(np.arange(p.size), nz)
    return np.r_[nz, rng.choice(rest, m - nz.size, replace=False)]


def _top_k_lambda(k):
    def lam_fn(SKS, w):
        n = SKS.shape[0]
        if k >= n:
            return 1e-6 * float(np.max(np.diag(SKS)))  # small but nonzero
        ev = np.linalg.eigvalsh(SKS * np.outer(w, w))
        # ridge set to the weighted spectral tail beyond k, divided by k
        return max(float(np.sum(np.diag(SKS) * w**2) - np.sum(ev[-k:])) / k, 1e-12)
    return lam_fn


def select_rls_fixed(
    spec: KernelSpec, X, S: int, delta: float = 0.01, seed=None, m: int | None = None
) -> SelectionResult:
    """Ridge-leverage-score sampling aimed at spectral error ``tail_S / S``.

    The ridge parameter at each level is the weighted spectral tail beyond
    ``S`` divided by ``S``, and points are kept independently with
    probability ``min(1, log(S / delta) * score)``, so the number of points
    is random and of order ``S log(S / delta)``. Passing ``m`` instead
    draws exactly ``m`` points at the final level, without replacement and
    with probability proportional to those inclusion probabilities.
    """
    X = _points(spec, X)
    N = X.shape[0]
    if S < 1:
        raise ValueError("S must be at least 1")
    if not 0 < delta < 1 / 32:
        raise ValueError("delta must lie in (0, 1/32)")
    if m is not None:
        _check_m(m, N)
    over = max(1.0, math.log(S / delta))
    rng = np.random.default_rng(seed)
    idx, log = _recursive_rls(
        spec, X, rng,
        s_level=max(S * over, 1.0),
        lam_fn=_top_k_lambda(S),
        oversample_fn=lambda tau: over,
        m_exact=m,
    )
    diag = {"S": S, "delta": delta, "realized_m": int(idx.size), "levels": log}
    return SelectionResult(np.asarray(idx), X[idx], "rls", seed, diag)


def select_rls_adaptive(spec: KernelSpec, X, omega: float, delta: float = 0.01, seed=None) -> SelectionResult:
    """Ridge-leverage-score sampling with a fixed ridge ``omega``.

    The number of points adapts to the effective dimension at ridge
    ``omega``, aiming at ``||Kff - Qff||_op <= omega``.
    """
    X = _points(spec, X)
    if not omega > 0:
        raise ValueError("omega must be positive")
    if not 0 < delta < 1 / 32:
        raise ValueError("delta must lie in (0, 1/32)")
    rng = np.random.default_rng(seed)
    d_guess = min(X.shape[0], max(1.0, X.shape[0] * spec.variance / omega))

    def oversample(tau):
        return max(1.0, math.log(max(float(tau.sum()), 1.0) / delta))

    idx, log = _recursive_rls(
        spec, X, rng,
        s_level=max(1.0, min(d_guess, 200.0)),
        lam_fn=lambda SKS, w: omega,
        oversample_fn=oversample,
    )
    d_est = log[-1]["score_sum"]
    diag = {
        "omega": omega,
        "delta": delta,
        "realized_m": int(idx.size),
        "d_eff_estimate": d_est,
        "size_bound": rls_adaptive_size_bound(d_est, delta),
        "levels": log,
    }
    return SelectionResult(np.asarray(idx), X[idx], "rls_adaptive", seed, diag)


def rls_adaptive_size_bound(d_eff: float, delta: float) -> float:
    """Worst-case number of points ``384 d log(d / delta)`` for adaptive sampling."""
    d = max(d_eff, 1.0)
    return 384.0 * d * math.log(d / delta)


def eigenfeature_inducing(spec: KernelSpec, X, M: int, jitter: float = 0.0) -> InducingSet:
    """Inducing features from the top ``M`` eigenvectors of ``gram(spec, X)``.

    The resulting ``Qff`` is the best rank-``M`` approximation of ``Kff``.
    """
    basis = compute_eigen_basis(spec, X, M)
    return InducingSet.eigenfeatures(M, jitter, basis)
