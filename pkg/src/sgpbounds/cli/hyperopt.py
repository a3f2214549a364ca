"""ELBO maximisation over kernel and noise hyperparameters.

The parameter vector is ``theta = [log v, log l_1, ..., log l_k, log s2]``
and the inducing inputs ``Z`` stay fixed within one optimisation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize
from scipy.linalg import solve_triangular

from ..gp_exact import Dataset
from ..kernels import KernelSpec, gram, gram_log_param_grads
from ..linalg import ConditioningError, chol_jittered, default_jitter_schedule
from ..select import select_greedy_variance
from ..sgpr import InducingSet, elbo

__all__ = [
    "HyperoptResult",
    "elbo_and_grad",
    "gradient_check",
    "optimize_hypers",
    "hyperopt_reinit",
    "REINIT_TOL",
]

#: Reinitialisation stops when greedy reselection gains less than this (nats).
REINIT_TOL = 1e-3
NOISE_BOUNDS = (1e-6, 1e3)
LOG2PI = math.log(2 * math.pi)


def _pack(spec: KernelSpec, noise: float) -> np.ndarray:
    return np.r_[spec.log_params(), math.log(noise)]


def _unpack(spec: KernelSpec, theta):
    theta = np.asarray(theta, dtype=float)
    return spec.with_log_params(theta[:-1]), float(np.exp(theta[-1]))


def elbo_and_grad(X, y, Z, spec: KernelSpec, noise: float, jitter: float = 0.0):
    """Collapsed ELBO and its gradient with respect to ``_pack(spec, noise)``.

    With ``G = 1/2 (a a^T - S^-1) + I / (2 s2)`` where ``S = Qff + s2 I``
    and ``a = S^-1 y``, the partial derivatives are
    ``dF/dKfu = 2 G Kfu Kuu^-1``, ``dF/dKuu = -Kuu^-1 Kuf G Kfu Kuu^-1``
    and ``dF/dk(x_n, x_n) = -1 / (2 s2)``. Nothing of size N x N is formed.
    """
    N, M = X.shape[0], Z.shape[0]
    s2 = noise
    sched = (jitter,) + tuple(j for j in default_jitter_schedule(spec.variance) if j > jitter)
    Lf = chol_jittered(gram(spec, Z), sched)
    L = Lf.L
    Kuf = gram(spec, Z, X)
    P = solve_triangular(L, Kuf, lower=True)
    PPt = P @ P.T
    LB = scipy.linalg.cholesky(np.eye(M) + PPt / s2, lower=True)
    Py = P @ y
    c = solve_triangular(LB, Py, lower=True)
    t = N * spec.variance - float(np.sum(P**2))
    logdet = N * math.log(s2) + 2 * float(np.sum(np.log(np.diag(LB))))
    yy = float(y @ y)
    quad = (yy - float(c @ c) / s2) / s2
    F = -0.5 * logdet - 0.5 * quad - 0.5 * N * LOG2PI - 0.5 * t / s2

    # S^-1 v = (v - P^T B^-1 P v / s2) / s2
    def binv(v):
        return scipy.linalg.cho_solve((LB, True), v)

    alpha = (y - P.T @ binv(Py) / s2) / s2
    Sinv_Pt = (P.T - P.T @ binv(PPt) / s2) / s2  # N x M
    GPt = 0.5 * (np.outer(alpha, alpha @ P.T) - Sinv_Pt) + P.T / (2 * s2)
    Linv_T = solve_triangular(L, np.eye(M), lower=True).T  # L^-T
    dKfu = 2.0 * GPt @ Linv_T.T  # dF/dKfu, N x M
    PGPt = P @ GPt
    dKuu = -Linv_T @ PGPt @ Linv_T.T

    grads_uf = gram_log_param_grads(spec, Z, X)
    grads_uu = gram_log_param_grads(spec, Z)
    g = np.empty(len(grads_uf) + 1)
    for k, (duf, duu) in enumerate(zip(grads_uf, grads_uu)):
        g[k] = np.sum(dKfu * duf.T) + np.sum(dKuu * duu)
    g[0] += -N * spec.variance / (2 * s2)  # d diag(Kff) / d log v = v
    tr_Sinv = N / s2 - float(np.trace(binv(PPt))) / s2**2
    dF_ds2 = -0.5 * tr_Sinv + 0.5 * float(alpha @ alpha) + t / (2 * s2**2)
    g[-1] = dF_ds2 * s2
    return float(F), g, Lf.jitter_used


def gradient_check(X, y, Z, spec: KernelSpec, noise: float, h: float = 1e-5, jitter: float = 0.0) -> float:
    """Norm-wise relative error between analytic and central-difference gradients."""
    theta = _pack(spec, noise)
    _, g, _ = elbo_and_grad(X, y, Z, spec, noise, jitter)
    fd = np.empty_like(theta)
    for k in range(theta.size):
        e = np.zeros_like(theta)
        e[k] = h
        fp = elbo_and_grad(X, y, Z, *_unpack(spec, theta + e), jitter)[0]
        fm = elbo_and_grad(X, y, Z, *_unpack(spec, theta - e), jitter)[0]
        fd[k] = (fp - fm) / (2 * h)
    return float(np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-300))


@dataclass
class HyperoptResult:
    spec: KernelSpec
    noise: float
    elbo: float
    Z: np.ndarray
    trace: list = field(default_factory=list)  # accepted ELBO values
    success: bool = True
    message: str = ""
    rounds: int = 0
    grad_rel_error: float | None = None

    def dataset(self, data: Dataset) -> Dataset:
        return Dataset(data.X, data.y, self.noise, data.meta)


def optimize_hypers(
    data: Dataset,
    spec0: KernelSpec,
    ind: InducingSet,
    budget: int = 200,
    check_grad: bool = False,
    grad_tol: float = 1e-4,
) -> HyperoptResult:
    """L-BFGS-B ascent on the ELBO over log hyperparameters with ``Z`` fixed.

    Evaluations that fail to factorise are reported to the optimiser as
    ``-inf`` ELBO; the best point seen is returned, flagged unsuccessful if
    the optimiser stopped abnormally.

    Parameters
    ----------
    budget : int
        Maximum number of L-BFGS iterations; 0 returns ``spec0`` unchanged.
    check_grad : bool
        Compare the analytic gradient at ``spec0`` with central differences
        and raise ``AssertionError`` above ``grad_tol``.
    """
    if ind.kind != "points":
        raise ValueError("hyperparameter optimisation needs inducing points")
    X, y, Z = data.X, data.y, np.asarray(ind.Z, dtype=float)
    f0, _, _ = elbo_and_grad(X, y, Z, spec0, data.noise, ind.jitter)
    res = HyperoptResult(spec0, data.noise, f0, Z, [f0])
    if check_grad:
        err = gradient_check(X, y, Z, spec0, data.noise, jitter=ind.jitter)
        res.grad_rel_error = err
        if not err < grad_tol:
            raise AssertionError(f"gradient check failed: relative error {err:.3g}")
    if budget <= 0:
        return res
    best = {"f": f0, "theta": _pack(spec0, data.noise)}

    def objective(theta):
        try:
            f, g, _ = elbo_and_grad(X, y, Z, *_unpack(spec0, theta), ind.jitter)
        except (ConditioningError, np.linalg.LinAlgError, ValueError, FloatingPointError):
            return np.inf, np.zeros_like(theta)
        if not np.isfinite(f):
            return np.inf, np.zeros_like(theta)
        if f > best["f"]:
            best["f"], best["theta"] = f, theta.copy()
        return -f, -g

    def accepted(theta):
        res.trace.append(best["f"])

    bounds = [(None, None)] * (best["theta"].size - 1) + [tuple(np.log(NOISE_BOUNDS))]
    with np.errstate(over="ignore", under="ignore"):
        opt = scipy.optimize.minimize(
            objective, best["theta"], jac=True, method="L-BFGS-B",
            bounds=bounds, callback=accepted, options={"maxiter": int(budget)},
        )
    res.spec, res.noise = _unpack(spec0, best["theta"])
    res.elbo = best["f"]
    res.success = bool(opt.success) or opt.status == 1  # status 1: iteration budget reached
    res.message = str(opt.message)
    return res


def hyperopt_reinit(
    data: Dataset,
    spec0: KernelSpec,
    M: int,
    rounds: int = 10,
    budget: int = 200,
    jitter: float = 0.0,
    tol: float = REINIT_TOL,
    check_grad: bool = False,
) -> HyperoptResult:
    """Alternate hyperparameter optimisation with greedy-variance reselection of ``Z``.

    Each round optimises the hyperparameters for the current ``Z`` and then
    reselects ``Z`` under the new hyperparameters. The loop stops when the
    reselection improves the ELBO by less than ``tol`` nats or after
    ``rounds`` rounds. The returned ELBO is the best accepted one.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    Z = select_greedy_variance(spec0, data.X, M).Z
    spec, cur = spec0, data
    trace, res = [], None
    for k in range(1, rounds + 1):
        res = optimize_hypers(cur, spec, InducingSet.points(Z, jitter), budget, check_grad and k == 1)
        trace.extend(res.trace)
        spec, cur = res.spec, res.dataset(data)
        Z_new = select_greedy_variance(spec, data.X, M).Z
        try:
            f_new = elbo(cur, spec, InducingSet.points(Z_new, jitter))
        except (ConditioningError, np.linalg.LinAlgError):
            f_new = -np.inf
        res.rounds = k
        if f_new - res.elbo < tol:
            break
        Z = Z_new
        res.Z, res.elbo = Z, f_new
        trace.append(f_new)
    res.trace = trace
    return res
