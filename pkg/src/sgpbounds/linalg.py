"""Dense symmetric linear algebra helpers.

Cholesky with an escalating jitter schedule, greedy pivoted partial
Cholesky, sorted symmetric eigendecomposition and log-determinants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .kernels import KernelSpec, gram
from .kernels import _as_points

__all__ = [
    "ConditioningError",
    "LowerFactor",
    "PivotedFactor",
    "default_jitter_schedule",
    "chol_jittered",
    "pivoted_partial_chol",
    "sym_eig",
    "logdet_from_factor",
]


class ConditioningError(np.linalg.LinAlgError):
    """Raised when no jitter in the schedule makes a matrix factorisable."""

    def __init__(self, msg, jitter=None):
        super().__init__(msg)
        self.jitter = jitter


@dataclass(frozen=True)
class LowerFactor:
    L: np.ndarray
    jitter_used: float = 0.0


@dataclass(frozen=True)
class PivotedFactor:
    """Result of a greedy pivoted partial Cholesky factorisation.

    Attributes
    ----------
    pivots : ndarray of int
        Selected indices, in selection order.
    factor : ndarray, shape (N, len(pivots))
        ``factor @ factor.T`` is the Nyström approximation built from the
        pivot columns.
    residual_diag : ndarray, shape (N,)
        ``diag(K - factor @ factor.T)``.
    exhausted : bool
        True when selection stopped early because every residual fell
        below the tolerance.
    """

    pivots: np.ndarray
    factor: np.ndarray
    residual_diag: np.ndarray
    exhausted: bool = False


def default_jitter_schedule(scale: float = 1.0) -> tuple:
    """``(0, 1e-6 s, 1e-5 s, 1e-4 s)`` for a matrix of typical size ``s``."""
    return (0.0, 1e-6 * scale, 1e-5 * scale, 1e-4 * scale)


def chol_jittered(A, schedule=None) -> LowerFactor:
    """Cholesky factor of ``A + eps I`` for the first ``eps`` that works.

    Parameters
    ----------
    A : array_like, shape (n, n)
        Symmetric matrix with finite entries.
    schedule : sequence of float, optional
        Jitter values tried in order. Defaults to
        ``default_jitter_schedule(mean(diag(A)))``.

    Returns
    -------
    LowerFactor

    Raises
    ------
    ConditioningError
        If every jitter in the schedule fails.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    if not np.all(np.isfinite(A)):
        raise ValueError("A has non-finite entries")
    if schedule is None:
        scale = float(np.mean(np.diag(A))) if A.size else 1.0
        schedule = default_jitter_schedule(scale if scale > 0 else 1.0)
    eps = None
    for eps in schedule:
        B = A + eps * np.eye(A.shape[0]) if eps else A
        try:
            L = scipy.linalg.cholesky(B, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            continue
        return LowerFactor(L, float(eps))
    raise ConditioningError(
        f"Cholesky failed for every jitter up to {eps:g}", jitter=eps
    )


def pivoted_partial_chol(spec: KernelSpec, X, M: int, tol: float = 1e-12) -> PivotedFactor:
    """Greedy pivoted partial Cholesky of ``gram(spec, X)``.

    At each step the point with the largest residual variance is chosen,
    ties broken by the lowest index. Only ``M`` kernel columns are
    evaluated, so the cost is O(N M^2).

    Parameters
    ----------
    spec : KernelSpec
    X : array_like, shape (N, D)
    M : int
        Number of pivots, ``1 <= M <= N``.
    tol : float
        Selection stops early when the largest residual drops below
        ``tol * v``.
    """
    X = _as_points(X, spec.dim)
    N = X.shape[0]
    if not 1 <= M <= N:
        raise ValueError(f"need 1 <= M <= N, got M={M}, N={N}")
    resid = np.full(N, spec.variance, dtype=float)
    F = np.zeros((N, M))
    pivots = []
    available = np.ones(N, dtype=bool)
    exhausted = False
    for m in range(M):
        masked = np.where(available, resid, -np.inf)
        i = int(np.argmax(masked))
        if masked[i] < tol * spec.variance:
            exhausted = True
            break
        col = gram(spec, X, X[i : i + 1])[:, 0] - F[:, :m] @ F[i, :m]
        F[:, m] = col / np.sqrt(masked[i])
        resid -= F[:, m] ** 2
        resid[i] = 0.0
        available[i] = False
        pivots.append(i)
    k = len(pivots)
    return PivotedFactor(np.array(pivots, dtype=int), F[:, :k].copy(), resid, exhausted)


def sym_eig(A, tol: float = 1e-10):
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Returns
    -------
    w : ndarray
        Eigenvalues, largest first.
    V : ndarray
        Orthonormal eigenvectors as columns, ``A = V diag(w) V.T``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    scale = max(np.abs(A).max(), 1e-300) if A.size else 1.0
    if np.abs(A - A.T).max(initial=0.0) > tol * scale:
        raise ValueError("A is not symmetric")
    w, V = np.linalg.eigh(0.5 * (A + A.T))
    return w[::-1], V[:, ::-1]


def logdet_from_factor(f: LowerFactor) -> float:
    """``log det(L L^T) = 2 sum(log diag(L))``."""
    d = np.diag(f.L)
    if np.any(d <= 0):
        raise ValueError("factor has a nonpositive diagonal entry")
    return 2.0 * float(np.sum(np.log(d)))
