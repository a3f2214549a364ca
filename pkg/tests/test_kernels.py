import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sgpbounds.kernels import (
    KernelSpec,
    eval_kernel,
    gram,
    gram_log_param_grads,
    spectral_density_matern,
)

from oracles import random_spec


class TestKernelSpec:
    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            KernelSpec.se(0.0, 1.0)
        with pytest.raises(ValueError):
            KernelSpec.se(1.0, -1.0)
        with pytest.raises(ValueError):
            KernelSpec.matern(0.0)

    def test_dict_round_trip(self):
        for spec in [KernelSpec.se(2.0, 0.5, 3), KernelSpec.se_ard(1.5, (0.1, 2.0)), KernelSpec.matern(1.5, 1.0, 0.7, 2)]:
            assert KernelSpec.from_dict(spec.to_dict()) == spec

    def test_log_params_round_trip(self):
        spec = KernelSpec.se_ard(1.5, (0.3, 2.0))
        assert spec.with_log_params(spec.log_params()).lengthscales == pytest.approx(spec.lengthscales)


class TestEvalKernel:
    def test_zero_lag_is_variance(self):
        assert eval_kernel(KernelSpec.se(2.0, 0.37), [0.0], [0.0]) == 2.0

    def test_se_half_height(self):
        # exp(-r^2 / 2) = 1/2 at r = sqrt(2 log 2)
        k = eval_kernel(KernelSpec.se(1.0, 1.0), [0.0], [1.1774100225154747])
        np.testing.assert_allclose(k, 0.5, rtol=1e-12)

    def test_matern12_unit_distance(self):
        k = eval_kernel(KernelSpec.matern(0.5, 1.0, 1.0), [0.0], [1.0])
        np.testing.assert_allclose(k, 0.36787944117144233, rtol=1e-12)

    def test_matern_zero_distance_general_nu(self):
        assert eval_kernel(KernelSpec.matern(0.8, 1.7, 1.0), [0.3], [0.3]) == 1.7

    def test_matern_bessel_path_matches_closed_form(self):
        # nu slightly off 3/2 goes through the Bessel formula
        r = np.linspace(0.01, 5, 50)[:, None]
        a = gram(KernelSpec.matern(1.5, 1.0, 1.0), r, np.zeros((1, 1)))
        b = gram(KernelSpec.matern(1.5 + 1e-9, 1.0, 1.0), r, np.zeros((1, 1)))
        np.testing.assert_allclose(a, b, rtol=1e-7)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            eval_kernel(KernelSpec.se(1.0, 1.0, 2), [0.0], [0.0])

    def test_non_finite(self):
        with pytest.raises(ValueError):
            eval_kernel(KernelSpec.se(), [np.nan], [0.0])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000))
    def test_symmetric_and_bounded(self, seed):
        rng = np.random.default_rng(seed)
        spec = random_spec(rng, 2)
        x, xp = rng.normal(size=2), rng.normal(size=2)
        k = eval_kernel(spec, x, xp)
        assert k == eval_kernel(spec, xp, x)
        assert 0 < k <= spec.variance


class TestGram:
    def test_single_point(self):
        np.testing.assert_array_equal(gram(KernelSpec.se(2.0), [[0.0]]), [[2.0]])

    def test_two_by_one(self):
        G = gram(KernelSpec.se(1.0, 1.0), [[0.0], [1.0]], [[0.0]])
        np.testing.assert_allclose(G, [[1.0], [0.6065306597126334]], rtol=1e-12)

    def test_matches_eval_kernel(self):
        rng = np.random.default_rng(42)
        spec = KernelSpec.matern(2.5, 1.3, 0.6, 3)
        A, B = rng.normal(size=(5, 3)), rng.normal(size=(4, 3))
        G = gram(spec, A, B)
        ref = np.array([[eval_kernel(spec, a, b) for b in B] for a in A])
        np.testing.assert_allclose(G, ref, rtol=1e-12, atol=1e-15)

    def test_exactly_symmetric(self):
        rng = np.random.default_rng(42)
        X = rng.normal(size=(40, 3))
        for spec in [KernelSpec.se(1.0, 0.7, 3), KernelSpec.matern(0.7, 1.0, 1.0, 3)]:
            G = gram(spec, X)
            np.testing.assert_array_equal(G, G.T)
            np.testing.assert_array_equal(np.diag(G), spec.variance)

    def test_psd_random_sets(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            D = int(rng.integers(1, 4))
            spec = random_spec(rng, D)
            X = rng.normal(size=(int(rng.integers(2, 31)), D))
            assert np.linalg.eigvalsh(gram(spec, X)).min() >= -1e-8 * spec.variance

    def test_ard_equal_lengthscales_is_iso(self):
        rng = np.random.default_rng(42)
        X = rng.normal(size=(20, 3))
        np.testing.assert_allclose(
            gram(KernelSpec.se_ard(1.2, (0.8, 0.8, 0.8)), X), gram(KernelSpec.se(1.2, 0.8, 3), X), rtol=1e-12
        )

    def test_matern12_is_exponential(self):
        rng = np.random.default_rng(42)
        X, Y = rng.normal(size=(15, 2)), rng.normal(size=(10, 2))
        r = np.linalg.norm(X[:, None] - Y[None], axis=-1)
        np.testing.assert_allclose(
            gram(KernelSpec.matern(0.5, 1.7, 0.9, 2), X, Y), 1.7 * np.exp(-r / 0.9), rtol=1e-10
        )


class TestLogParamGrads:
    @pytest.mark.parametrize(
        "spec",
        [KernelSpec.se(1.3, 0.7, 2), KernelSpec.se_ard(0.8, (0.5, 1.5)), KernelSpec.matern(0.5, 1.1, 0.8, 2),
         KernelSpec.matern(1.5, 1.1, 0.8, 2), KernelSpec.matern(2.5, 1.1, 0.8, 2)],
    )
    def test_central_differences(self, spec):
        rng = np.random.default_rng(42)
        A, B = rng.normal(size=(6, 2)), rng.normal(size=(5, 2))
        theta, h = spec.log_params(), 1e-6
        for k, G in enumerate(gram_log_param_grads(spec, A, B)):
            e = np.zeros_like(theta)
            e[k] = h
            fd = (gram(spec.with_log_params(theta + e), A, B) - gram(spec.with_log_params(theta - e), A, B)) / (2 * h)
            np.testing.assert_allclose(G, fd, rtol=1e-6, atol=1e-9)


class TestSpectralDensity:
    def test_origin_value(self):
        s = spectral_density_matern(KernelSpec.matern(0.5, 1.0, 1.0), 0.0)
        np.testing.assert_allclose(s, 0.3183098861837907, rtol=1e-12)

    def test_strictly_decreasing(self):
        w = np.linspace(0, 20, 200)
        s = spectral_density_matern(KernelSpec.matern(1.5, 1.0, 0.7, 2), w)
        assert np.all(np.diff(s) < 0) and np.all(s > 0)

    def test_lengthscale_scaling(self):
        w = np.linspace(0, 5, 20)
        s2 = spectral_density_matern(KernelSpec.matern(2.5, 1.0, 2.0), w)
        s1 = spectral_density_matern(KernelSpec.matern(2.5, 1.0, 1.0), 2 * w)
        np.testing.assert_allclose(s2, 2 * s1, rtol=1e-12)

    def test_integrates_to_kernel(self):
        from scipy.integrate import quad

        spec = KernelSpec.matern(1.5, 1.3, 0.7)
        r = 0.4
        val = quad(lambda w: 2 * spectral_density_matern(spec, w) * np.cos(w * r), 0, np.inf, limit=400)[0]
        np.testing.assert_allclose(val, eval_kernel(spec, [0.0], [r]), rtol=1e-6)

    def test_rejects_se(self):
        with pytest.raises(ValueError):
            spectral_density_matern(KernelSpec.se(), 1.0)
