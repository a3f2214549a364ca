"""Operator spectra and a-priori bounds on the sparse-approximation KL.

Two spectrum models are provided:

``SEGaussSpectrum``
    SE kernel with isotropic Gaussian inputs. Eigenvalues are
    ``v (2a/A)^(D/2) B^s`` with multiplicity ``C(s + D - 1, D - 1)``.
``PolyDecaySpectrum``
    Eigenvalues sandwiched as ``C1 m^-eta <= lambda_m <= C2 m^-eta``,
    e.g. Matérn kernels with compactly supported inputs.

Both expose ``eig(m)`` (an upper value), ``eig_lower(m)`` and
``tail(M) = sum_{m > M} lambda_m`` with 1-based ``m``, vectorised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np
from scipy.special import gamma as gamma_fn, gammaln, zeta

from .kernels import KernelSpec, spectral_density_matern

__all__ = [
    "SEGaussSpectrum",
    "PolyDecaySpectrum",
    "AprioriInputs",
    "PlannerResult",
    "se_gauss_spectrum",
    "se_gauss_spectrum_for_kernel",
    "se_gauss_eig_1d",
    "se_gauss_tail_1d",
    "se_gauss_eigs_multid",
    "se_gauss_tail_bound_multid",
    "se_gauss_eig_lower",
    "matern_eig_bound",
    "matern_poly_spectrum",
    "apriori_kl_thm1",
    "apriori_kl_thm2",
    "apriori_kl_rls",
    "required_m",
    "cor5_closed_form",
    "kl_lower_bound_from_eigs",
    "braun_bound",
    "kl_lower_growth",
    "PLANNERS",
]

_MAX_COUNT = 50_000_000


@dataclass(frozen=True)
class SEGaussSpectrum:
    """Eigen-structure of the SE kernel under ``N(0, beta2 I)`` inputs."""

    a: float
    b: float
    A: float
    B: float
    v: float
    D: int
    beta2: float
    lengthscale: float
    reduced: bool = False  # built from an anisotropic kernel by worst-case reduction
    convention: str = "display"

    @property
    def alpha(self) -> float:
        return -math.log(self.B)

    @property
    def scale(self) -> float:
        """``v (2a/A)^(D/2)``, the largest eigenvalue."""
        return self.v * (2 * self.a / self.A) ** (self.D / 2)

    # -- generic spectrum interface -------------------------------------------
    def eig(self, m):
        m = np.asarray(m)
        if np.any(m < 1):
            raise ValueError("eigenvalue index starts at 1")
        if self.D == 1:
            return self.scale * self.B ** (m - 1.0)
        s = _block_of_index(np.atleast_1d(m), self.D)
        out = self.scale * self.B ** s.astype(float)
        return out if m.ndim else float(out[0])

    def eig_lower(self, m):
        return self.eig(m)

    def tail(self, M):
        """``sum_{m > M} lambda_m`` for integer ``M >= 0``."""
        M = np.asarray(M)
        if np.any(M < 0):
            raise ValueError("M must be nonnegative")
        if self.D == 1:
            return self.scale * self.B ** M.astype(float) / (1.0 - self.B)
        out = _multid_tail(self, np.atleast_1d(M).astype(np.int64))
        return out if M.ndim else float(out[0])

    @property
    def total(self) -> float:
        return self.scale / (1.0 - self.B) ** self.D


def se_gauss_spectrum(
    lengthscale: float, beta2: float, variance: float = 1.0, dim: int = 1, convention: str = "display"
) -> SEGaussSpectrum:
    """Constants ``a, b, A, B`` for lengthscale ``l`` and input variance ``beta2``.

    ``a = 1/(4 beta2)``, ``b = 1/(2 l^2)`` and ``B = b / A``. With
    ``convention="display"`` (default) ``A = a + b + sqrt(a^2 + 4ab)``;
    with ``"mercer"`` ``A = a + b + sqrt(a^2 + 2ab)``, the exact operator
    spectrum for ``k = v exp(-|x - x'|^2 / (2 l^2))``, whose eigenvalues
    sum to ``v``. The default eigenvalues are smaller and sum to less
    than ``v``; use ``"mercer"`` when comparing with kernel matrices.
    """
    if not (lengthscale > 0 and beta2 > 0 and variance > 0 and dim >= 1):
        raise ValueError("lengthscale, beta2 and variance must be positive, dim >= 1")
    if convention not in ("display", "mercer"):
        raise ValueError("convention must be 'display' or 'mercer'")
    a = 1.0 / (4.0 * beta2)
    b = 1.0 / (2.0 * lengthscale**2)
    A = a + b + math.sqrt(a * a + (4 if convention == "display" else 2) * a * b)
    return SEGaussSpectrum(
        a, b, A, b / A, float(variance), int(dim), float(beta2), float(lengthscale), convention=convention
    )


def se_gauss_spectrum_for_kernel(spec: KernelSpec, beta2, convention: str = "display") -> SEGaussSpectrum:
    """Isotropic worst case for an SE or SE-ARD kernel and diagonal input variances.

    Uses the shortest lengthscale and the largest input variance, whose
    eigenvalues dominate those of the anisotropic operator up to a constant.
    """
    if spec.family not in ("se", "se_ard"):
        raise ValueError("SE spectrum needs an SE kernel")
    beta2 = np.atleast_1d(np.asarray(beta2, dtype=float))
    ls = np.asarray(spec.lengthscales)
    reduced = spec.family == "se_ard" and (np.ptp(ls) > 0 or np.ptp(beta2) > 0)
    reduced = reduced or np.ptp(beta2) > 0
    s = se_gauss_spectrum(float(ls.min()), float(beta2.max()), spec.variance, spec.dim, convention)
    return SEGaussSpectrum(**{**asdict(s), "reduced": bool(reduced)})


def _block_counts(D: int, s_max: int) -> np.ndarray:
    """Cumulative eigenvalue counts ``C(s + D, D)`` for ``s = 0..s_max``."""
    s = np.arange(s_max + 1)
    return np.rint(np.exp(gammaln(s + D + 1) - gammaln(s + 1) - gammaln(D + 1))).astype(np.int64)


def _block_of_index(m: np.ndarray, D: int) -> np.ndarray:
    mmax = int(m.max())
    s_max = 1
    while math.comb(s_max + D, D) < mmax:
        s_max *= 2
    cum = _block_counts(D, s_max)
    return np.searchsorted(cum, m, side="left")


def _multid_tail(sp: SEGaussSpectrum, M: np.ndarray) -> np.ndarray:
    D, logB = sp.D, math.log(sp.B)
    mmax = max(int(M.max()), 1)
    s_need = 1
    while math.comb(s_need + D, D) < mmax + 1:
        s_need *= 2

    def log_block(s):
        # log of multiplicity-weighted block mass C(s + D - 1, D - 1) B^s
        return gammaln(s + D) - gammaln(s + 1) - gammaln(D) + s * logB

    # extend past the peak until block masses are negligible
    s_end = s_need + 16
    ref = log_block(np.arange(s_need + 1.0)).max()
    while log_block(float(s_end)) > ref - 60 or s_end < (D - 1) / -logB + s_need:
        s_end *= 2
    s = np.arange(s_end + 1, dtype=float)
    mass = np.exp(log_block(s))
    # R[k] = sum of block masses for blocks > k, summed smallest first
    R = np.concatenate([np.cumsum(mass[::-1])[::-1][1:], [0.0]])
    cum = _block_counts(D, s_end)
    blk = np.searchsorted(cum, M + 1, side="left")  # block containing index M + 1
    left_in_block = cum[blk] - M
    return sp.scale * (left_in_block * np.exp(blk * logB) + R[blk])


def _require_1d(s: SEGaussSpectrum):
    if s.D != 1:
        raise ValueError("this operation is for one-dimensional inputs")


def se_gauss_eig_1d(s: SEGaussSpectrum, m):
    """``v sqrt(2a/A) B^(m-1)``."""
    _require_1d(s)
    return s.eig(m)


def se_gauss_tail_1d(s: SEGaussSpectrum, M):
    """``v sqrt(2a/A) B^M / (1 - B)``."""
    _require_1d(s)
    return s.tail(M)


def se_gauss_eigs_multid(s: SEGaussSpectrum, count: int) -> np.ndarray:
    """The ``count`` largest eigenvalues, with multiplicities, in non-increasing order."""
    if count < 0 or count > _MAX_COUNT:
        raise ValueError(f"count must lie in [0, {_MAX_COUNT}]")
    if count == 0:
        return np.zeros(0)
    return np.asarray(s.eig(np.arange(1, count + 1)), dtype=float)


def se_gauss_tail_bound_multid(s: SEGaussSpectrum, M: float) -> float:
    """Closed-form upper bound on ``sum_{m > M} lambda_m`` in ``D`` dimensions.

    ``v (2a/A)^(D/2) D^2 (M - D + 1) / alpha * exp(-alpha (M - D)^(1/D))``,
    valid for ``M >= D^D / alpha + D - 1``.
    """
    D, alpha = s.D, s.alpha
    if M < D**D / alpha + D - 1:
        raise ValueError(f"M must be at least D^D/alpha + D - 1 = {D**D / alpha + D - 1:.3g}")
    return s.scale * D**2 * (M - D + 1) / alpha * math.exp(-alpha * (M - D) ** (1.0 / D))


def se_gauss_eig_lower(s: SEGaussSpectrum, r):
    """``v (2a/A)^(D/2) B^(D r^(1/D))``, a lower bound on the ``r``-th eigenvalue."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 1):
        raise ValueError("r must be at least 1")
    return s.scale * s.B ** (s.D * r ** (1.0 / s.D))


@dataclass(frozen=True)
class PolyDecaySpectrum:
    """Eigenvalues with ``C1 m^-eta <= lambda_m <= C2 m^-eta``."""

    eta: float
    C1: float
    C2: float
    D: int = 1
    nu: float | None = None
    v: float = 1.0

    def __post_init__(self):
        if not self.eta > 1:
            raise ValueError("eta must exceed 1")
        if not 0 < self.C1 <= self.C2:
            raise ValueError("need 0 < C1 <= C2")

    def eig(self, m):
        m = np.asarray(m, dtype=float)
        if np.any(m < 1):
            raise ValueError("eigenvalue index starts at 1")
        return self.C2 * m ** (-self.eta)

    def eig_lower(self, m):
        m = np.asarray(m, dtype=float)
        return self.C1 * m ** (-self.eta)

    def tail(self, M):
        """Upper value of the tail, ``C2 * zeta(eta, M + 1)``."""
        M = np.asarray(M, dtype=float)
        if np.any(M < 0):
            raise ValueError("M must be nonnegative")
        return self.C2 * zeta(self.eta, M + 1.0)


def _widom_arg(D: int, T: float, m):
    return 2.0 * gamma_fn(D / 2 + 1) ** (2.0 / D) / T * np.asarray(m, dtype=float) ** (1.0 / D)


def matern_eig_bound(spec: KernelSpec, T: float, tau: float, m):
    """Asymptotic eigenvalue bound for inputs supported in a ball of radius ``T``.

    ``tau (2 pi)^D s(2 Gamma(D/2 + 1)^(2/D) m^(1/D) / T)`` where ``tau``
    bounds the input density and ``s`` is the Matérn spectral density.
    The ``1 + o(1)`` factor of the underlying asymptotic result is dropped.
    """
    if spec.family != "matern":
        raise ValueError("needs a Matérn kernel")
    if not (T > 0 and tau > 0):
        raise ValueError("T and tau must be positive")
    D = spec.dim
    return tau * (2 * np.pi) ** D * spectral_density_matern(spec, _widom_arg(D, T, m))


def matern_poly_spectrum(spec: KernelSpec, T: float, tau: float, C1: float | None = None) -> PolyDecaySpectrum:
    """Polynomial-decay envelope of ``matern_eig_bound``.

    Since ``1 + (l w)^2 >= (l w)^2`` the bound is dominated by
    ``C2 m^-eta`` with ``eta = (2 nu + D) / D``. The lower constant is
    not available in closed form; it defaults to ``C2``.
    """
    if spec.family != "matern":
        raise ValueError("needs a Matérn kernel")
    D, nu, l = spec.dim, spec.nu, spec.lengthscale
    eta = (2 * nu + D) / D
    c = _widom_arg(D, T, 1.0)
    logpref = (
        D * math.log(l) + gammaln(nu + D / 2) - (D / 2) * math.log(math.pi) - gammaln(nu)
    )
    C2 = float(tau * (2 * math.pi) ** D * spec.variance * math.exp(logpref) * (l * c) ** (-(2 * nu + D)))
    return PolyDecaySpectrum(eta, C2 if C1 is None else C1, C2, D, nu, spec.variance)


# ---------------------------------------------------------------------------
# A-priori upper bounds


@dataclass(frozen=True)
class AprioriInputs:
    """Problem constants for the a-priori KL bounds.

    Attributes
    ----------
    n : int
        Number of training points ``N``.
    m : int
        Number of inducing points ``M`` (or the RLS target ``S``).
    noise : float
        Noise variance ``sigma^2``.
    eps_dpp : float
        Total-variation accuracy of the approximate M-DPP sampler.
    delta : float
        Failure probability.
    gamma : float
        KL budget.
    R : float
        Bound on ``E[||y||^2 | X] / N``.
    variance : float
        Bound ``v`` on ``k(x, x)``.
    """

    n: int
    m: int
    noise: float
    eps_dpp: float = 0.0
    delta: float = 0.1
    gamma: float = 1.0
    R: float = 1.0
    variance: float = 1.0

    def __post_init__(self):
        if self.n < 1 or self.m < 0:
            raise ValueError("need n >= 1 and m >= 0")
        if not self.noise > 0 or not self.variance > 0:
            raise ValueError("noise and variance must be positive")
        if not 0 <= self.eps_dpp <= 1:
            raise ValueError("eps_dpp must lie in [0, 1]")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not self.gamma > 0 or self.R < 0:
            raise ValueError("need gamma > 0 and R >= 0")


def _dpp_core(inp: AprioriInputs, tail):
    N = inp.n
    return ((inp.m + 1) * N * np.asarray(tail) + 2 * N * inp.variance * inp.eps_dpp) / inp.noise


def apriori_kl_thm1(inp: AprioriInputs, tail, markov: bool = False):
    """Expected-KL bound for any ``y`` with ``E||y||^2 <= R N``, M-DPP inducing points.

    ``1/2 (1 + R N / s2) ((M + 1) N tail + 2 N v eps) / s2``; divided by
    ``delta`` when ``markov`` is set (a probability ``1 - delta`` bound).
    """
    val = 0.5 * (1 + inp.R * inp.n / inp.noise) * _dpp_core(inp, tail)
    return val / inp.delta if markov else val


def apriori_kl_thm2(inp: AprioriInputs, tail, markov: bool = False):
    """Expected-KL bound when ``y`` follows the prior: ``((M + 1) N tail + 2 N v eps) / s2``."""
    val = _dpp_core(inp, tail)
    return val / inp.delta if markov else val


@dataclass(frozen=True)
class RLSBound:
    kl_bound: float
    m_bound: float
    details: dict


def _argmin_split(N: int, c: float, tail) -> tuple:
    """Minimise ``S + c tail(S)`` over integers ``1 <= S <= N``."""
    S = np.arange(1, N + 1)
    f = S + c * np.asarray(tail(S), dtype=float)
    k = int(np.argmin(f))
    return int(S[k]), float(f[k])


def apriori_kl_rls(inp: AprioriInputs, tail, variant: str, c: float = 1.0) -> RLSBound:
    """KL bounds for ridge-leverage-score inducing points.

    Parameters
    ----------
    inp : AprioriInputs
        ``inp.m`` is the target ``S`` for ``thm3``/``thm4``.
    tail : float or callable
        ``sum_{m > S} lambda_m`` for ``thm3``/``thm4``; for ``thm5``/``thm6``
        a callable mapping an integer array ``S`` to tails.
    variant : {"thm3", "thm4", "thm5", "thm6"}
        thm3: any ``y``, fixed-size sampler.
        thm4: ``y`` from the prior, fixed-size sampler.
        thm5: ``y`` from the prior, adaptive sampler.
        thm6: any ``y``, adaptive sampler.
    c : float
        Unspecified universal constant in the size bound ``c S log(S / delta)``.
    """
    N, s2, d, S = inp.n, inp.noise, inp.delta, inp.m
    if not d < 1 / 32:
        raise ValueError("RLS bounds need delta < 1/32")
    if variant in ("thm3", "thm4"):
        if S < 1:
            raise ValueError("S must be at least 1")
        t = float(tail)
        if variant == "thm3":
            kl = 0.5 * (N + inp.R * N / s2) * N * t / (S * d**2 * s2)
        else:
            kl = N**2 * t / (S * d**2 * s2)
        return RLSBound(kl, c * S * math.log(S / d), {"S": S})
    if variant == "thm5":
        coef = N**2 / (s2 * d**2 * inp.gamma)
        omega = s2 * d * inp.gamma / N
    elif variant == "thm6":
        # the effective-dimension constant carries R^2 while omega carries R
        coef = N**2 * (1 + inp.R**2 / s2) / (2 * s2 * d * inp.gamma)
        omega = 2 * s2 * d * inp.gamma / (N * (1 + inp.R / s2))
    else:
        raise ValueError(f"unknown variant {variant!r}")
    S_star, deff = _argmin_split(N, coef, tail)
    m_bound = 384.0 * deff * math.log(deff / d)
    return RLSBound(inp.gamma, m_bound, {"S": S_star, "d": deff, "omega": omega})


# ---------------------------------------------------------------------------
# Planners


PLANNERS = ("cor5_dpp", "cor5_rls", "cor6_dpp", "cor6_rls", "matern_dpp", "matern_rls")

_ORDERS = {
    "cor5_dpp": "O(log N)",
    "cor5_rls": "O(log N loglog N)",
    "cor6_dpp": "O((log N)^D)",
    "cor6_rls": "O((log N)^D loglog N)",
    "matern_dpp": "O(N^(2D/(2nu-D)))",
    "matern_rls": "O(N^(2D/(2nu+D)) log N)",
}


@dataclass
class PlannerResult:
    planner: str
    N: int
    gamma: float
    delta: float
    M: int | None
    bound_value: float | None
    valid: bool
    S: int | None = None
    order: str = ""

    CSV_KEYS = ("planner", "N", "gamma", "delta", "M", "bound_value", "valid")

    def to_dict(self) -> dict:
        return asdict(self)

    def csv_row(self) -> dict:
        d = asdict(self)
        return {k: d[k] for k in self.CSV_KEYS}


def required_m(
    planner: str,
    N: int,
    gamma: float,
    delta: float,
    spectrum,
    R: float = 1.0,
    noise: float = 1.0,
    c: float = 1.0,
) -> PlannerResult:
    """Smallest number of inducing points certified by an a-priori bound.

    DPP planners pick the sampler accuracy ``eps`` so that its contribution
    to the expected-KL bound (for arbitrary ``y``) is ``gamma / 2``, then
    search for the smallest ``M`` whose total bound is at most ``gamma``.
    RLS planners search for the smallest target ``S`` meeting ``gamma`` in
    the fixed-size RLS bound (probability ``1 - 5 delta``) and report
    ``M = ceil(c S log(S / delta))``. The search is exact over
    ``1..N``; if nothing qualifies, or ``M > N``, the result is flagged
    invalid (vacuous).
    """
    if planner not in PLANNERS:
        raise ValueError(f"unknown planner {planner!r}")
    if not (gamma > 0 and 0 < delta < 1 and N >= 1):
        raise ValueError("need gamma > 0, delta in (0, 1), N >= 1")
    family = planner.split("_")[0]
    if family == "cor5" and not (isinstance(spectrum, SEGaussSpectrum) and spectrum.D == 1):
        raise ValueError("cor5 planners need a one-dimensional SE/Gaussian spectrum")
    if family == "cor6" and not isinstance(spectrum, SEGaussSpectrum):
        raise ValueError("cor6 planners need an SE/Gaussian spectrum")
    if family == "matern" and not isinstance(spectrum, PolyDecaySpectrum):
        raise ValueError("matern planners need a polynomial-decay spectrum")
    v = spectrum.v
    Ms = np.arange(1, N + 1)
    tails = np.asarray(spectrum.tail(Ms), dtype=float)
    out = PlannerResult(planner, int(N), float(gamma), float(delta), None, None, False,
                        order=_ORDERS[planner])
    if planner.endswith("_dpp"):
        eps = gamma * noise / (2 * N * v * (1 + R * N / noise))
        eps = min(eps, 1.0)
        bound = 0.5 * (1 + R * N / noise) * ((Ms + 1) * N * tails + 2 * N * v * eps) / noise
        ok = np.flatnonzero(bound <= gamma)
        if ok.size:
            k = int(ok[0])
            out.M, out.bound_value, out.valid = int(Ms[k]), float(bound[k]), True
        if family == "matern" and spectrum.eta <= 2:
            out.valid = False  # (M + 1) tail(M) does not decay: no useful M
        return out
    bound = 0.5 * (N + R * N / noise) * N * tails / (Ms * delta**2 * noise)
    ok = np.flatnonzero(bound <= gamma)
    if ok.size:
        k = int(ok[0])
        S = int(Ms[k])
        M = int(math.ceil(c * S * max(math.log(S / delta), 1.0)))
        out.S, out.M, out.bound_value = S, M, float(bound[k])
        out.valid = M <= N
    return out


def cor5_closed_form(s: SEGaussSpectrum, N: int, gamma: float, delta: float, R: float = 1.0, noise: float = 1.0):
    """Closed-form sizes from the one-dimensional SE/Gaussian analysis.

    Returns
    -------
    M_dpp : float
        ``log_B( sqrt(A/2a) gamma delta s2 (1 - B) / (N^2 (1 + R N / s2)) )``.
    S_rls : float
        ``log_B( sqrt(A/2a) gamma s2 (1 - B) delta^2 / (N^2 (1 + R / s2)) )``.
    """
    _require_1d(s)
    r = math.sqrt(s.A / (2 * s.a))
    logB = math.log(s.B)
    m = math.log(r * gamma * delta * noise * (1 - s.B) / (N**2 * (1 + R * N / noise))) / logB
    S = math.log(r * gamma * noise * (1 - s.B) * delta**2 / (N**2 * (1 + R / noise))) / logB
    return m, S


# ---------------------------------------------------------------------------
# Lower bounds


def kl_lower_bound_from_eigs(eigs, M: int, noise: float) -> float:
    """``1/2 sum_{m > M} (l_m / s2 - log(1 + l_m / s2))`` over kernel-matrix eigenvalues.

    Lower-bounds the KL for every ``y`` and every set of ``M`` inducing variables.
    """
    eigs = np.sort(np.asarray(eigs, dtype=float))[::-1]
    scale = max(1.0, float(np.abs(eigs).max(initial=0.0)))
    if np.any(eigs < -1e-8 * scale):
        raise ValueError("eigenvalues must be nonnegative")
    if not 0 <= M <= eigs.size:
        raise ValueError("need 0 <= M <= N")
    x = np.maximum(eigs[M:], 0.0) / noise
    return float(0.5 * np.sum(x - np.log1p(x)))


def braun_bound(spectrum, m: int, r: int, N: int, delta: float, v: float | None = None) -> float:
    """High-probability bound on ``|lambda_m - l_m / N|``.

    ``lambda_m r sqrt(r (r + 1) v / (lambda_r N delta)) + sum_{s >= r} lambda_s
    + sqrt(2 v sum_{s > r} lambda_s / (N delta))``
    """
    if not 1 <= r <= N:
        raise ValueError("need 1 <= r <= N")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    v = spectrum.v if v is None else v
    lam_r = float(spectrum.eig_lower(r))
    if lam_r <= 0:
        raise ValueError("lambda_r must be positive")
    lam_m = float(spectrum.eig(m))
    t1 = lam_m * r * math.sqrt(r * (r + 1) * v / (lam_r * N * delta))
    t2 = float(spectrum.tail(r - 1))
    t3 = math.sqrt(2 * v * float(spectrum.tail(r)) / (N * delta))
    return t1 + t2 + t3


def _r_candidates(planner: str, N: float, spectrum) -> list:
    """The deterministic choices of ``r`` used by each lower-bound argument."""
    rs = set()
    if planner == "se_gauss_1d":
        s = spectrum
        for eta in np.linspace(0.01, 0.99, 99):
            arg = (1 - s.B) * math.sqrt(s.A / (2 * s.a * s.v**2)) * N ** (-eta)
            rs.add(1 + math.ceil(math.log(arg) / math.log(s.B)))
    elif planner == "se_gauss_multid":
        s = spectrum
        for g in np.linspace(0.01, 0.49, 49):
            rs.add(math.ceil((g * math.log(N) / (s.alpha * s.D)) ** s.D))
    else:
        hi = 1.0 / (4 + spectrum.eta)
        for g in np.linspace(0.01, 0.99, 99) * hi:
            rs.add(math.ceil(N**g))
    return sorted(r for r in rs if 1 <= r <= N)


def kl_lower_growth(planner: str, N, M: int, delta: float, spectrum, noise: float = 1.0):
    """Certified lower bound on the KL with ``M`` inducing variables and ``N`` points.

    Uses ``KL >= N (lambda_{M+1} - err) / (4 s2)`` where ``err`` is the
    eigenvalue concentration bound (probability ``1 - delta``), valid when
    ``err < lambda_{M+1}`` and ``N (lambda_{M+1} - err) / s2 > 3``. The
    concentration parameter ``r`` is chosen, independently of the data,
    from the regime's family of choices to maximise the bound.

    Returns
    -------
    predicted_lower : float
    valid : bool
    """
    if planner not in ("se_gauss_1d", "se_gauss_multid", "poly"):
        raise ValueError(f"unknown planner {planner!r}")
    if planner.startswith("se_gauss") and not isinstance(spectrum, SEGaussSpectrum):
        raise ValueError("SE planners need an SE/Gaussian spectrum")
    if planner == "se_gauss_1d" and spectrum.D != 1:
        raise ValueError("se_gauss_1d needs D = 1")
    if planner == "poly" and not isinstance(spectrum, PolyDecaySpectrum):
        raise ValueError("poly planner needs a polynomial-decay spectrum")
    if M >= N:
        return 0.0, True
    lam = float(spectrum.eig_lower(M + 1))
    best = (0.0, False)
    for r in _r_candidates(planner, N, spectrum):
        err = braun_bound(spectrum, M + 1, r, N, delta)
        gamma_n = 1.0 - err / lam
        if gamma_n <= 0:
            continue
        certified = N * lam * gamma_n
        if certified / noise <= 3:
            continue
        val = certified / (4 * noise)
        if val > best[0]:
            best = (val, True)
    return best
