import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from sgpbounds.gp_exact import Dataset
from sgpbounds.sgpr import exact_kl
from sgpbounds.kernels import KernelSpec, gram
from sgpbounds.linalg import sym_eig
from sgpbounds.select import eigenfeature_inducing, select_greedy_variance
from sgpbounds.spectrum import (
    AprioriInputs,
    PlannerResult,
    PolyDecaySpectrum,
    apriori_kl_rls,
    apriori_kl_thm1,
    apriori_kl_thm2,
    braun_bound,
    cor5_closed_form,
    kl_lower_bound_from_eigs,
    kl_lower_growth,
    matern_eig_bound,
    matern_poly_spectrum,
    required_m,
    se_gauss_eig_1d,
    se_gauss_eig_lower,
    se_gauss_eigs_multid,
    se_gauss_spectrum,
    se_gauss_spectrum_for_kernel,
    se_gauss_tail_1d,
    se_gauss_tail_bound_multid,
)


@pytest.fixture(scope="module")
def gauss_eigs():
    """Top 20 eigenvalues and traces of Kff for 50 seeded N = 2000 Gaussian draws."""
    spec = KernelSpec.se(1.0, 1.0)
    out = []
    for seed in range(50):
        K = gram(spec, np.random.default_rng(seed).standard_normal((2000, 1)))
        out.append((_top_eigs(K, 20), float(np.trace(K))))
    return out


def _top_eigs(K, k):
    n = K.shape[0]
    return scipy.linalg.eigh(K, eigvals_only=True, subset_by_index=[n - k, n - 1])[::-1]


@pytest.fixture
def unit():
    return se_gauss_spectrum(1.0, 1.0)


def _slope(x, y):
    return np.polyfit(np.log(x), np.log(y), 1)[0]


class TestSEGaussConstants:
    def test_unit_constants(self, unit):
        assert (unit.a, unit.b, unit.A) == (0.25, 0.5, 1.5)
        np.testing.assert_allclose(unit.B, 1 / 3, rtol=1e-15)
        np.testing.assert_allclose(unit.alpha, math.log(3), rtol=1e-15)

    def test_short_lengthscale_decays_slower(self):
        assert se_gauss_spectrum(0.5, 1.0).B > se_gauss_spectrum(1.0, 1.0).B

    @given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
    def test_invariants(self, l, b2):
        s = se_gauss_spectrum(l, b2)
        np.testing.assert_allclose(s.a, 1 / (4 * b2))
        np.testing.assert_allclose(s.b, 1 / (2 * l * l))
        assert 0 < s.B < 1 and s.alpha > 0

    @pytest.mark.parametrize("bad", [(0, 1), (1, -1), (-1, 1)])
    def test_rejects_nonpositive(self, bad):
        with pytest.raises(ValueError):
            se_gauss_spectrum(*bad)

    def test_ard_reduction(self):
        s = se_gauss_spectrum_for_kernel(KernelSpec.se_ard(2.0, [0.5, 3.0]), [1.0, 4.0])
        ref = se_gauss_spectrum(0.5, 4.0, 2.0, 2)
        assert s.reduced and (s.B, s.scale) == (ref.B, ref.scale)
        assert not se_gauss_spectrum_for_kernel(KernelSpec.se(1.0, 1.0, 2), 1.0).reduced


class TestSEGauss1D:
    def test_first_eigenvalue(self, unit):
        np.testing.assert_allclose(se_gauss_eig_1d(unit, 1), 0.5773502691896257, rtol=1e-15)

    def test_total(self, unit):
        np.testing.assert_allclose(se_gauss_tail_1d(unit, 0), 0.8660254037844386, rtol=1e-12)
        np.testing.assert_allclose(unit.total, math.sqrt(3) / 2, atol=1e-10)

    def test_ratio_and_telescoping(self):
        s = se_gauss_spectrum(0.7, 2.0, 1.3)
        m = np.arange(1, 60)
        lam = se_gauss_eig_1d(s, m)
        np.testing.assert_allclose(lam[1:] / lam[:-1], s.B, rtol=1e-12)
        np.testing.assert_allclose(se_gauss_tail_1d(s, m - 1) - se_gauss_tail_1d(s, m), lam, rtol=1e-9)
        assert np.all(np.diff(se_gauss_tail_1d(s, m)) < 0)

    def test_tail_matches_summation(self):
        s = se_gauss_spectrum(1.3, 0.8, 2.0)
        for M in (0, 3, 17):
            tot = math.fsum(se_gauss_eig_1d(s, np.arange(M + 1, M + 2000)))
            np.testing.assert_allclose(se_gauss_tail_1d(s, M), tot, rtol=1e-10)

    def test_index_from_one(self, unit):
        with pytest.raises(ValueError):
            se_gauss_eig_1d(unit, 0)
        with pytest.raises(ValueError):
            se_gauss_eig_1d(se_gauss_spectrum(1, 1, dim=2), 1)

    def test_mercer_convention_sums_to_variance(self):
        s = se_gauss_spectrum(0.7, 2.0, 1.7, convention="mercer")
        np.testing.assert_allclose(s.total, 1.7, rtol=1e-12)
        assert se_gauss_spectrum(0.7, 2.0).total < 1.0
        with pytest.raises(ValueError):
            se_gauss_spectrum(1, 1, convention="other")

    def test_empirical_eigenvalues_converge(self):
        s = se_gauss_spectrum(1.0, 1.0, convention="mercer")
        spec = KernelSpec.se(1.0, 1.0)
        lam = se_gauss_eig_1d(s, np.arange(1, 6))
        err = []
        for N in (250, 1000, 3000):
            e = []
            for seed in range(5):
                X = np.random.default_rng(seed).standard_normal((N, 1))
                e.append(np.abs(_top_eigs(gram(spec, X), 5) / N - lam) / lam)
            err.append(np.median(np.mean(e, axis=1)))
        assert err[0] > err[1] > err[2]


class TestSEGaussMultiD:
    def test_d1_reduces(self):
        s = se_gauss_spectrum(0.8, 1.5)
        np.testing.assert_allclose(se_gauss_eigs_multid(s, 30), se_gauss_eig_1d(s, np.arange(1, 31)))

    def test_d2_multiplicities(self, unit):
        s = se_gauss_spectrum(1.0, 1.0, dim=2)
        e = se_gauss_eigs_multid(s, 10)
        levels = np.rint(np.log(e / s.scale) / np.log(s.B)).astype(int)
        assert list(levels) == [0, 1, 1, 2, 2, 2, 3, 3, 3, 3]

    @pytest.mark.parametrize("D", [1, 2, 3, 4])
    def test_count_above_level(self, D):
        s = se_gauss_spectrum(1.0, 1.0, dim=D)
        e = se_gauss_eigs_multid(s, math.comb(12 + D, D) + 5)
        for lvl in range(13):
            thr = s.scale * s.B**lvl
            # strictly above level lvl + 1 means at level <= lvl
            assert np.sum(e > thr * (1 + s.B) / 2) == math.comb(lvl + D, D)

    def test_count_guard(self, unit):
        with pytest.raises(ValueError):
            se_gauss_eigs_multid(unit, 10**9)

    @pytest.mark.parametrize("D", [2, 3, 4])
    def test_tail_matches_summation(self, D):
        s = se_gauss_spectrum(0.6, 1.0, dim=D)
        e = se_gauss_eigs_multid(s, 200_000)
        for M in (0, 7, 50, 333):
            np.testing.assert_allclose(s.tail(M), math.fsum(e[M:]), rtol=1e-6)

    def test_tail_bound_d1_dominates(self):
        for l in (0.5, 1.0, 2.0):
            s = se_gauss_spectrum(l, 1.0)
            M0 = math.ceil(1 / s.alpha)
            for M in range(M0, M0 + 40):
                assert se_gauss_tail_bound_multid(s, M) >= se_gauss_tail_1d(s, M)

    def test_tail_bound_d2_spot(self):
        s = se_gauss_spectrum(1.0, 1.0, dim=2)
        partial = math.fsum(se_gauss_eigs_multid(s, 100_000)[64:])
        assert se_gauss_tail_bound_multid(s, 64) >= partial

    @pytest.mark.parametrize("D", [1, 2, 3, 4])
    def test_tail_bound_decreasing(self, D):
        s = se_gauss_spectrum(1.0, 1.0, dim=D)
        M0 = D**D / s.alpha + D - 1
        # the bound is only eventually decreasing in D > 1; check well past the peak
        grid = np.linspace(max(M0, D**D * 4), 4 * D**D * 8 + 200, 50)
        vals = [se_gauss_tail_bound_multid(s, M) for M in grid]
        assert np.all(np.diff(vals) < 0)

    def test_tail_bound_domain(self):
        with pytest.raises(ValueError):
            se_gauss_tail_bound_multid(se_gauss_spectrum(1.0, 1.0, dim=3), 5)


class TestEigLower:
    def test_below_1d(self):
        s = se_gauss_spectrum(0.7, 1.2)
        r = np.arange(1, 200)
        assert np.all(se_gauss_eig_lower(s, r) <= se_gauss_eig_1d(s, r))
        assert np.all(np.diff(se_gauss_eig_lower(s, r)) < 0)

    @pytest.mark.parametrize("D", [2, 3])
    def test_below_multid(self, D):
        s = se_gauss_spectrum(1.0, 1.0, dim=D)
        r = np.arange(1, 1001)
        assert np.all(se_gauss_eig_lower(s, r) <= se_gauss_eigs_multid(s, 1000) * (1 + 1e-12))


class TestMatern:
    @pytest.mark.parametrize("nu,D", [(0.5, 1), (1.5, 1), (2.5, 2), (1.5, 3)])
    def test_slope(self, nu, D):
        spec = KernelSpec.matern(nu, 1.0, 0.5, D)
        m = np.logspace(2, 4, 9)
        sl = _slope(m, matern_eig_bound(spec, 1.0, 0.3, m))
        expected = -(2 * nu + D) / D
        assert abs(sl - expected) <= 0.05 * abs(expected)

    def test_support_scaling(self):
        from sgpbounds.kernels import spectral_density_matern

        spec = KernelSpec.matern(1.5, 1.0, 0.5, 2)
        m = np.array([5.0, 50.0])
        b1, b2 = matern_eig_bound(spec, 1.0, 1.0, m), matern_eig_bound(spec, 2.0, 1.0, m)
        # the density argument halves, which the Bochner density evaluates directly
        w = 2 * math.gamma(2) * np.sqrt(m)
        np.testing.assert_allclose(b2 / b1, spectral_density_matern(spec, w / 2) / spectral_density_matern(spec, w))

    def test_poly_envelope_dominates(self):
        spec = KernelSpec.matern(2.5, 1.3, 0.4, 1)
        p = matern_poly_spectrum(spec, 1.0, 0.5)
        m = np.arange(1, 500)
        assert p.eta == 6.0
        assert np.all(matern_eig_bound(spec, 1.0, 0.5, m) <= p.eig(m) * (1 + 1e-12))

    def test_non_matern(self):
        with pytest.raises(ValueError):
            matern_eig_bound(KernelSpec.se(), 1.0, 1.0, 3)


class TestPolyDecay:
    def test_validation(self):
        with pytest.raises(ValueError):
            PolyDecaySpectrum(1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            PolyDecaySpectrum(2.0, 2.0, 1.0)

    def test_tail_matches_summation(self):
        p = PolyDecaySpectrum(3.0, 0.5, 2.0)
        M = 10
        np.testing.assert_allclose(p.tail(M), 2.0 * math.fsum(np.arange(M + 1, 10**6, dtype=float) ** -3.0), rtol=1e-9)


class TestAprioriDpp:
    def test_zero(self):
        inp = AprioriInputs(100, 5, 0.1)
        assert apriori_kl_thm1(inp, 0.0) == 0 and apriori_kl_thm2(inp, 0.0) == 0

    def test_thm1_spot(self, unit):
        inp = AprioriInputs(1000, 30, 0.1, R=1.0)
        t = se_gauss_tail_1d(unit, 30)
        np.testing.assert_allclose(apriori_kl_thm1(inp, t), 6.520308068374325e-06, rtol=1e-12)
        np.testing.assert_allclose(apriori_kl_thm2(inp, t), 1.3039312205528097e-09, rtol=1e-12)

    def test_markov(self):
        inp = AprioriInputs(300, 4, 0.2, eps_dpp=0.01, delta=0.5)
        np.testing.assert_allclose(apriori_kl_thm2(inp, 0.3, markov=True), 2 * apriori_kl_thm2(inp, 0.3))
        np.testing.assert_allclose(apriori_kl_thm1(inp, 0.3, markov=True), 2 * apriori_kl_thm1(inp, 0.3))

    @settings(max_examples=200)
    @given(
        st.integers(1, 10**6), st.integers(0, 100), st.floats(1e-3, 10), st.floats(0, 1),
        st.floats(0, 10), st.floats(0, 1e3), st.floats(0.1, 10),
    )
    def test_thm2_below_thm1(self, N, M, s2, eps, tail, R, v):
        inp = AprioriInputs(N, M, s2, eps_dpp=eps, R=R, variance=v)
        if R * N / s2 >= 1:
            assert apriori_kl_thm2(inp, tail) <= apriori_kl_thm1(inp, tail) * (1 + 1e-12)

    def test_monotone(self, unit):
        base = dict(noise=0.1, eps_dpp=0.001)
        f = lambda N, M: apriori_kl_thm1(AprioriInputs(N, M, **base), se_gauss_tail_1d(unit, M))
        assert all(f(1000, M + 1) <= f(1000, M) for M in range(5, 40))
        assert all(f(N, 10) <= f(2 * N, 10) for N in (10, 100, 1000))

    def test_input_validation(self):
        with pytest.raises(ValueError):
            AprioriInputs(10, 1, 0.0)
        with pytest.raises(ValueError):
            AprioriInputs(10, 1, 1.0, eps_dpp=2.0)
        with pytest.raises(ValueError):
            AprioriInputs(10, 1, 1.0, delta=1.0)


class TestAprioriRls:
    def test_zero_tail(self):
        inp = AprioriInputs(100, 5, 0.1, delta=0.01)
        for v in ("thm3", "thm4"):
            assert apriori_kl_rls(inp, 0.0, v).kl_bound == 0

    def test_spot_values(self):
        N, S, s2, d, R, t = 500, 8, 0.2, 0.02, 1.5, 1e-6
        inp = AprioriInputs(N, S, s2, delta=d, R=R)
        np.testing.assert_allclose(
            apriori_kl_rls(inp, t, "thm3").kl_bound, 0.5 * (N + R * N / s2) * N * t / (S * d * d * s2)
        )
        r4 = apriori_kl_rls(inp, t, "thm4", c=2.0)
        np.testing.assert_allclose(r4.kl_bound, N * N * t / (S * d * d * s2))
        np.testing.assert_allclose(r4.m_bound, 2.0 * S * math.log(S / d))

    def test_effective_dimension_spot(self, unit):
        N, s2, d, g = 200, 0.5, 0.01, 2.0
        r = apriori_kl_rls(AprioriInputs(N, 1, s2, delta=d, gamma=g), unit.tail, "thm5")
        vals = [S + N * N / (s2 * d * d * g) * se_gauss_tail_1d(unit, S) for S in range(1, N + 1)]
        k = int(np.argmin(vals))
        assert r.details["S"] == k + 1
        np.testing.assert_allclose(r.details["d"], vals[k])
        np.testing.assert_allclose(r.m_bound, 384 * vals[k] * math.log(vals[k] / d))
        np.testing.assert_allclose(r.details["omega"], s2 * d * g / N)

    def test_thm6_constants(self, unit):
        N, s2, d, g, R = 200, 0.5, 0.01, 2.0, 3.0
        r = apriori_kl_rls(AprioriInputs(N, 1, s2, delta=d, gamma=g, R=R), unit.tail, "thm6")
        np.testing.assert_allclose(r.details["omega"], 2 * s2 * d * g / (N * (1 + R / s2)))
        coef = N * N * (1 + R * R / s2) / (2 * s2 * d * g)
        S = r.details["S"]
        np.testing.assert_allclose(r.details["d"], S + coef * se_gauss_tail_1d(unit, S))

    def test_split_grows_logarithmically(self, unit):
        Ns = [10**k for k in range(2, 7)]
        S = [apriori_kl_rls(AprioriInputs(N, 1, 0.1, delta=0.01), unit.tail, "thm5").details["S"] for N in Ns]
        inc = np.diff(S)
        assert np.all(inc > 0) and inc.max() - inc.min() <= 1

    def test_delta_precondition(self):
        with pytest.raises(ValueError):
            apriori_kl_rls(AprioriInputs(10, 2, 1.0, delta=0.05), 0.1, "thm3")
        with pytest.raises(ValueError):
            apriori_kl_rls(AprioriInputs(10, 2, 1.0, delta=0.01), 0.1, "thm7")


class TestRequiredM:
    def test_huge_budget(self, unit):
        assert required_m("cor5_dpp", 1000, 1e30, 0.01, unit).M == 1
        assert required_m("cor5_rls", 1000, 1e30, 0.01, unit).S == 1

    def test_minimal(self, unit):
        N, g, s2 = 1000, 1.0, 0.1
        r = required_m("cor5_dpp", N, g, 0.1, unit, noise=s2)
        eps = g * s2 / (2 * N * (1 + N / s2))
        f = lambda M: apriori_kl_thm1(AprioriInputs(N, M, s2, eps_dpp=eps), se_gauss_tail_1d(unit, M))
        assert r.valid and f(r.M) <= g < f(r.M - 1)
        np.testing.assert_allclose(r.bound_value, f(r.M))

    def test_cor5_affine_in_log_n(self):
        s = se_gauss_spectrum(0.5, 1.0)
        Ns = [10**3, 10**4, 10**5, 10**6]
        M = np.array([required_m("cor5_dpp", N, 1.0, 0.1, s, noise=0.1).M for N in Ns], dtype=float)
        assert np.all(np.diff(M) > 0)
        d = np.diff(M)
        assert d.max() - d.min() <= 1

    def test_closed_form_is_sufficient(self):
        s = se_gauss_spectrum(0.5, 1.0)
        for N in (10**3, 10**4, 10**5, 10**6):
            m_closed, s_closed = cor5_closed_form(s, N, 1.0, 0.1, noise=0.1)
            assert required_m("cor5_dpp", N, 1.0, 0.1, s, noise=0.1).M <= math.ceil(m_closed)
            assert required_m("cor5_rls", N, 1.0, 0.01, s, noise=0.1).S <= math.ceil(
                cor5_closed_form(s, N, 1.0, 0.01, noise=0.1)[1]
            )

    def test_matern_rough_vacuous(self):
        spec = KernelSpec.matern(0.5, 1.0, 0.5, 1)
        r = required_m("matern_dpp", 200, 1.0, 0.1, matern_poly_spectrum(spec, 1.0, 0.5))
        assert not r.valid

    def test_rls_vacuous_when_too_large(self, unit):
        r = required_m("cor5_rls", 20, 1e-6, 0.01, unit)
        assert not r.valid

    def test_spectrum_family_checked(self, unit):
        with pytest.raises(ValueError):
            required_m("matern_dpp", 100, 1.0, 0.1, unit)
        with pytest.raises(ValueError):
            required_m("cor5_dpp", 100, 1.0, 0.1, se_gauss_spectrum(1, 1, dim=2))

    def test_serialisation(self, unit):
        r = required_m("cor6_rls", 500, 1.0, 0.01, se_gauss_spectrum(1, 1, dim=2))
        assert isinstance(r, PlannerResult)
        assert list(r.csv_row()) == ["planner", "N", "gamma", "delta", "M", "bound_value", "valid"]


class TestKLLowerFromEigs:
    def test_values(self):
        assert kl_lower_bound_from_eigs([3.0, 2.0, 0.0, 0.0], 2, 0.5) == 0
        np.testing.assert_allclose(kl_lower_bound_from_eigs([5.0, 0.3], 1, 0.3), 0.15342640972002736, rtol=1e-14)
        with pytest.raises(ValueError):
            kl_lower_bound_from_eigs([1.0, -1.0], 0, 1.0)
        with pytest.raises(ValueError):
            kl_lower_bound_from_eigs([1.0], 2, 1.0)

    def test_monotone_in_m(self):
        e = np.random.default_rng(42).exponential(size=30)
        vals = [kl_lower_bound_from_eigs(e, M, 0.2) for M in range(31)]
        assert np.all(np.diff(vals) <= 0) and vals[-1] == 0

    def test_below_exact_kl(self):
        rng = np.random.default_rng(42)
        for _ in range(30):
            N, M = 40, int(rng.integers(1, 10))
            spec = KernelSpec.se(float(rng.uniform(0.5, 2)), float(rng.uniform(0.2, 1.5)), 2)
            X = rng.normal(size=(N, 2))
            d = Dataset(X, rng.normal(size=N), float(rng.uniform(0.01, 1)))
            lb = kl_lower_bound_from_eigs(sym_eig(gram(spec, X))[0], M, d.noise)
            ind = select_greedy_variance(spec, X, M).inducing(1e-12)
            assert lb <= exact_kl(d, spec, ind) + 1e-6

    def test_tight_for_eigenfeatures(self):
        rng = np.random.default_rng(42)
        spec = KernelSpec.se(1.0, 0.6, 2)
        X = rng.normal(size=(50, 2))
        d = Dataset(X, np.zeros(50), 0.05)
        for M in (2, 8, 20):
            lb = kl_lower_bound_from_eigs(sym_eig(gram(spec, X))[0], M, d.noise)
            np.testing.assert_allclose(exact_kl(d, spec, eigenfeature_inducing(spec, X, M)), lb, atol=1e-6)


class TestBraun:
    def test_spot(self, unit):
        np.testing.assert_allclose(braun_bound(unit, 3, 10, 10**4, 0.1), 39.2845285414934, rtol=1e-10)

    def test_large_n_limit(self, unit):
        vals = [braun_bound(unit, 3, 10, N, 0.1) for N in (1e4, 1e8, 1e16, 1e32)]
        t = se_gauss_tail_1d(unit, 9)
        assert np.all(np.diff(vals) < 0) and vals[-1] >= t
        np.testing.assert_allclose(vals[-1], t, rtol=1e-6)

    def test_validation(self, unit):
        with pytest.raises(ValueError):
            braun_bound(unit, 1, 0, 10, 0.1)
        with pytest.raises(ValueError):
            braun_bound(unit, 1, 2, 10, 1.0)

    def test_containment(self, gauss_eigs):
        s = se_gauss_spectrum(1.0, 1.0, convention="mercer")
        N, m, r = 2000, 2, 4
        bound = braun_bound(s, m, r, N, 0.1)
        hits = [abs(se_gauss_eig_1d(s, m) - e[m - 1] / N) <= bound for e, _ in gauss_eigs]
        assert np.mean(hits) >= 0.9


class TestKLLowerGrowth:
    def test_no_tail(self, unit):
        assert kl_lower_growth("se_gauss_1d", 50, 50, 0.1, unit) == (0.0, True)

    def test_invalid_at_small_n(self, unit):
        val, ok = kl_lower_growth("se_gauss_1d", 1000, 3, 0.1, unit)
        assert not ok and val == 0.0

    def test_se_1d_slope(self, unit):
        Ns = np.logspace(20, 120, 11)
        out = [kl_lower_growth("se_gauss_1d", N, int(0.5 * math.log(N) / unit.alpha), 0.1, unit) for N in Ns]
        assert all(ok for _, ok in out)
        assert abs(_slope(Ns, [v for v, _ in out]) - 0.5) <= 0.05 * 0.5

    def test_multid_valid(self):
        s = se_gauss_spectrum(1.0, 1.0, dim=2)
        N = 1e40
        val, ok = kl_lower_growth("se_gauss_multid", N, 10, 0.1, s)
        assert ok and val > 0

    def test_poly_exponent(self):
        sp = matern_poly_spectrum(KernelSpec.matern(2.5, 1.0, 1.0, 2), 1.0, 0.5)
        z = 0.9 * (sp.eta - 1) / (sp.eta * (4 + sp.eta))
        Ns = np.logspace(40, 200, 9)
        out = [kl_lower_growth("poly", N, math.ceil(N**z), 0.1, sp) for N in Ns]
        assert all(ok for _, ok in out)
        target = 1 - sp.eta * z
        assert abs(_slope(Ns, [v for v, _ in out]) - target) <= 0.05 * target

    def test_wrong_spectrum(self, unit):
        with pytest.raises(ValueError):
            kl_lower_growth("poly", 100, 2, 0.1, unit)


class TestMatrixToOperator:
    @pytest.mark.parametrize("convention", ["mercer", "display"])
    def test_transfer_median(self, convention, gauss_eigs):
        s = se_gauss_spectrum(1.0, 1.0, convention=convention)
        N = 2000
        for M in (5, 10, 20):
            v = [(tr - e[:M].sum()) / N for e, tr in gauss_eigs[:20]]
            assert np.median(v) <= 1.1 * se_gauss_tail_1d(s, M)
