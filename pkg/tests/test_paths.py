import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anneal_path.errors import InputError
from anneal_path.gaussian import GaussianMixture, GaussianParams
from anneal_path.paths import (
    MCEstimatorConfig,
    PathScore,
    RecursiveCostModel,
    Schedule,
    convolutional_gmm_path,
    convolutional_mc_score,
    dilated_gmm,
    dilation_score,
    geometric_score,
    interpolant_samples,
    recursive_cost,
)


@pytest.fixture
def three_modes():
    return GaussianMixture.from_arrays(
        [0.2, 0.5, 0.3],
        [[-3.0, 0.0], [2.0, 2.0], [1.0, -3.0]],
        [1.0, [[0.5, 0.2], [0.2, 0.8]], [2.0, 0.5]],
    )


class StandardNormal:
    dim = 2

    def log_density(self, x):
        x = np.asarray(x)
        return -0.5 * np.sum(x * x, axis=-1) - math.log(2 * math.pi)

    def score(self, x):
        return -np.asarray(x, dtype=float)


class TestSchedule:
    @pytest.mark.parametrize("t,expected", [(0.0, 0.0), (0.25, 0.25), (1.0, 1.0), (7.0, 1.0)])
    def test_linear(self, t, expected):
        assert Schedule("linear")(t) == expected

    def test_exponential(self):
        s = Schedule("exponential", 2.0)
        assert s(0.0) == pytest.approx(math.exp(-4.0))
        assert s(1.5) == pytest.approx(math.exp(-1.0))
        assert s(2.0) == 1.0
        assert s(3.0) == 1.0

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0, 10), st.floats(0, 10), st.sampled_from(["linear", "exponential"]))
    def test_monotone_and_bounded(self, t1, t2, kind):
        s = Schedule(kind, 3.0 if kind == "exponential" else None)
        lo, hi = sorted((t1, t2))
        assert 0.0 <= s(lo) <= s(hi) <= 1.0

    def test_negative_time_rejected(self):
        with pytest.raises(InputError):
            Schedule()(-0.1)

    @pytest.mark.parametrize("kind,horizon", [("cosine", None), ("exponential", None), ("exponential", -1.0)])
    def test_bad_schedule(self, kind, horizon):
        with pytest.raises(InputError):
            Schedule(kind, horizon)


class TestDilation:
    def test_matches_dilated_mixture(self, three_modes):
        x = np.random.default_rng(0).normal(0, 2, (20, 2))
        for lam in (0.01, 0.3, 1.0):
            np.testing.assert_allclose(
                dilation_score(three_modes, x, lam), dilated_gmm(three_modes, lam).score(x), rtol=1e-10, atol=1e-10
            )

    def test_dirac_limit_of_convolutional_path(self, three_modes):
        tiny = GaussianParams([0.0, 0.0], 1e-12)
        rng = np.random.default_rng(1)
        for lam in rng.uniform(0.05, 1.0, 10):
            x = rng.normal(0, 2, (5, 2))
            exact = convolutional_gmm_path(three_modes, tiny, lam).score(x)
            np.testing.assert_allclose(dilation_score(three_modes, x, lam), exact, rtol=1e-6)

    def test_level_one_is_target(self, three_modes):
        x = np.array([[0.3, -1.0]])
        np.testing.assert_array_equal(dilation_score(three_modes, x, 1.0), three_modes.score(x))

    @pytest.mark.parametrize("lam", [0.0, -0.5, 1.5, float("nan")])
    def test_level_out_of_range(self, three_modes, lam):
        with pytest.raises(InputError):
            dilation_score(three_modes, [0.0, 0.0], lam)

    def test_single_gaussian_closed_form(self):
        g = GaussianMixture.from_arrays([1.0], [[1.0, -2.0]], [[[2.0, 0.3], [0.3, 1.0]]])
        lam = 0.4
        x = np.array([0.5, 0.5])
        cov = lam * g.components[0].covariance
        expected = -np.linalg.solve(cov, x - math.sqrt(lam) * g.components[0].mean)
        np.testing.assert_allclose(dilation_score(g, x, lam), expected, rtol=1e-12)


class TestGeometric:
    def test_endpoints(self, three_modes):
        prop = GaussianParams([0.0, 0.0], 1.0)
        x = np.array([[1.0, 2.0]])
        np.testing.assert_array_equal(geometric_score(three_modes, prop, x, 0.0), prop.score(x))
        np.testing.assert_array_equal(geometric_score(three_modes, prop, x, 1.0), three_modes.score(x))

    def test_linear_in_level(self, three_modes):
        prop = GaussianParams([0.0, 0.0], 2.0)
        x = np.array([[1.0, -0.5]])
        mid = geometric_score(three_modes, prop, x, 0.5)
        np.testing.assert_allclose(mid, 0.5 * (prop.score(x) + three_modes.score(x)))


class TestConvolutionalExact:
    def test_closed_form_parameters(self, three_modes):
        prop = GaussianParams([0.0, 0.0], 1.0)
        path = convolutional_gmm_path(three_modes, prop, 0.36)
        np.testing.assert_allclose(path.means, 0.6 * three_modes.means)
        for comp, orig in zip(path.components, three_modes.components):
            np.testing.assert_allclose(comp.covariance, 0.64 * np.eye(2) + 0.36 * orig.covariance)
        np.testing.assert_array_equal(path.weights, three_modes.weights)

    def test_endpoints(self, three_modes):
        prop = GaussianParams([0.0, 0.0], 1.5)
        x = np.random.default_rng(2).normal(size=(5, 2))
        np.testing.assert_allclose(convolutional_gmm_path(three_modes, prop, 0.0).score(x), prop.score(x))
        np.testing.assert_allclose(convolutional_gmm_path(three_modes, prop, 1.0).score(x), three_modes.score(x))

    def test_uncentred_proposal_rejected(self, three_modes):
        with pytest.raises(InputError):
            convolutional_gmm_path(three_modes, GaussianParams([1.0, 0.0], 1.0), 0.5)

    @pytest.mark.parametrize("lam", [0.1, 0.5, 0.9])
    def test_matches_interpolant_moments(self, three_modes, lam):
        prop = GaussianParams([0.0, 0.0], 1.0)
        draws = interpolant_samples(three_modes, prop, lam, 100_000, np.random.default_rng(3))
        path = convolutional_gmm_path(three_modes, prop, lam)
        n = draws.shape[0]
        se = np.sqrt(np.diag(path.covariance()) / n)
        assert np.all(np.abs(draws.mean(axis=0) - path.mean()) < 3 * se)
        # standard error of a covariance entry: sqrt((s_ii s_jj + s_ij^2) / n) under near-normality
        cov = path.covariance()
        cov_se = np.sqrt((np.outer(np.diag(cov), np.diag(cov)) + cov**2) / n)
        assert np.all(np.abs(np.cov(draws.T) - cov) < 3 * cov_se)


class TestMonteCarloEstimator:
    def test_standard_gaussian_oracle(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(4, 2))
        inner = MCEstimatorConfig(n_samples=2000, n_iter=60)
        for t, horizon in ((0.5, 1.0), (0.9, 1.0)):
            est, diag = convolutional_mc_score(StandardNormal(), x, t, horizon, inner, np.random.default_rng(5))
            rel = np.linalg.norm(est - (-x), axis=1) / np.linalg.norm(x, axis=1)
            assert np.all(rel < 0.1)
            assert diag.score_queries == 4 * 2000 * 60

    def test_level_from_time(self):
        # lambda = exp(-2 (T - t)) = 1/2 at t = T - log(2) / 2
        x = np.array([[1.0, -2.0]])
        inner = MCEstimatorConfig(n_samples=4000, n_iter=80)
        t = 1.0 - 0.5 * math.log(2.0)
        est, diag = convolutional_mc_score(StandardNormal(), x, t, 1.0, inner, np.random.default_rng(6))
        np.testing.assert_allclose(est, -x, rtol=0.05)
        # blur variance 1 so the inner step is half the configured fraction
        assert diag.step_size == pytest.approx(0.5 * inner.step)

    def test_error_decays_with_samples(self):
        x = np.random.default_rng(7).normal(size=(6, 2))
        errs = []
        for n in (50, 800):
            inner = MCEstimatorConfig(n_samples=n, n_iter=40)
            runs = [
                convolutional_mc_score(StandardNormal(), x, 0.5, 1.0, inner, np.random.default_rng(100 + r))[0]
                for r in range(4)
            ]
            errs.append(np.sqrt(np.mean([(r + x) ** 2 for r in runs])))
        slope = math.log(errs[1] / errs[0]) / math.log(16)
        assert -0.8 < slope < -0.25

    def test_time_range(self):
        inner = MCEstimatorConfig(n_samples=2, n_iter=2)
        with pytest.raises(InputError):
            convolutional_mc_score(StandardNormal(), [0.0, 0.0], 1.0, 1.0, inner, np.random.default_rng(0))
        with pytest.raises(InputError):
            convolutional_mc_score(StandardNormal(), [0.0, 0.0], -0.1, 1.0, inner, np.random.default_rng(0))

    @pytest.mark.parametrize(
        "kwargs", [{"n_samples": 0}, {"n_iter": 1}, {"step": 0.0}, {"step": 2.5}, {"burn_in": 1.0}]
    )
    def test_bad_config(self, kwargs):
        with pytest.raises(InputError):
            MCEstimatorConfig(**kwargs)

    def test_reproducible(self):
        inner = MCEstimatorConfig(n_samples=10, n_iter=10)
        a, _ = convolutional_mc_score(StandardNormal(), [1.0, 1.0], 0.3, 1.0, inner, np.random.default_rng(9))
        b, _ = convolutional_mc_score(StandardNormal(), [1.0, 1.0], 0.3, 1.0, inner, np.random.default_rng(9))
        np.testing.assert_array_equal(a, b)


class TestPathScore:
    def test_dispatch(self, three_modes):
        prop = GaussianParams([0.0, 0.0], 1.0)
        x = np.array([[0.5, 0.5]])
        np.testing.assert_array_equal(PathScore("dilation", three_modes)(x, 0.5), dilation_score(three_modes, x, 0.5))
        np.testing.assert_array_equal(
            PathScore("geometric", three_modes, prop)(x, 0.5), geometric_score(three_modes, prop, x, 0.5)
        )
        np.testing.assert_allclose(
            PathScore("convolutional_exact_gmm", three_modes, prop)(x, 0.5),
            convolutional_gmm_path(three_modes, prop, 0.5).score(x),
        )

    @pytest.mark.parametrize(
        "variant,proposal",
        [
            ("dilation", GaussianParams([0.0, 0.0], 1.0)),
            ("geometric", None),
            ("convolutional_exact_gmm", None),
            ("convolutional_mc", GaussianParams([0.0, 0.0], 2.0)),
            ("straight", None),
        ],
    )
    def test_invalid_combinations(self, three_modes, variant, proposal):
        with pytest.raises(InputError):
            PathScore(variant, three_modes, proposal)

    def test_mc_needs_stream(self, three_modes):
        path = PathScore("convolutional_mc", three_modes, inner=MCEstimatorConfig(n_samples=2, n_iter=2))
        with pytest.raises(InputError):
            path([[0.0, 0.0]], 0.5)
        assert path.queries_per_point() == 4


class TestRecursiveCost:
    @pytest.mark.parametrize("windows,expected", [(1, 10**3), (2, 10**6), (3, 10**9)])
    def test_table(self, windows, expected):
        assert recursive_cost(RecursiveCostModel(10, 100, windows)) == expected

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 50), st.integers(1, 500), st.integers(1, 12))
    def test_log_linear_in_windows(self, p, i, s):
        c1 = recursive_cost(RecursiveCostModel(p, i, s))
        c2 = recursive_cost(RecursiveCostModel(p, i, s + 1))
        assert c2 == c1 * p * i

    def test_exact_for_huge_values(self):
        assert recursive_cost(RecursiveCostModel(1000, 1000, 20)) == 10**120

    @pytest.mark.parametrize("args", [(0, 1, 1), (1, -1, 1), (1, 1, 0), (1.5, 1, 1), (True, 1, 1)])
    def test_invalid(self, args):
        with pytest.raises(InputError):
            RecursiveCostModel(*args)
