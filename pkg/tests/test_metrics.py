import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from anneal_path.errors import InputError
from anneal_path.gaussian import GaussianMixture
from anneal_path.metrics import (
    DiagnosticsReport,
    MetricConfig,
    assign_modes,
    evaluate,
    knn_kl,
    ksd,
    mmd,
    mms,
    mode_counts,
    occupied_modes,
    sinkhorn_w2,
)


def std_normal_score(x):
    return -np.asarray(x, dtype=float)


def forty_modes():
    rng = np.random.default_rng(0)
    return GaussianMixture.from_arrays(np.full(40, 1 / 40), rng.uniform(-40, 40, (40, 2)), [1.0] * 40)


point_clouds = arrays(
    np.float64, st.tuples(st.integers(2, 12), st.just(2)), elements=st.floats(-5, 5, allow_nan=False)
)


def imq_stein_kernel_fd(x, y, score, beta, eps=1e-4):
    """Stein kernel by finite differences of the IMQ base kernel; independent of the closed form."""

    def k(a, b):
        return (1.0 + np.sum((a - b) ** 2)) ** (-beta)

    d = x.size
    gx = np.array([(k(x + e, y) - k(x - e, y)) / (2 * eps) for e in np.eye(d) * eps])
    gy = np.array([(k(x, y + e) - k(x, y - e)) / (2 * eps) for e in np.eye(d) * eps])
    trace = 0.0
    for e in np.eye(d) * eps:
        trace += (k(x + e, y + e) - k(x + e, y - e) - k(x - e, y + e) + k(x - e, y - e)) / (4 * eps * eps)
    sx, sy = score(x), score(y)
    return sx @ sy * k(x, y) + sx @ gy + sy @ gx + trace


class TestKSD:
    def test_single_particle_at_mode(self):
        assert ksd(np.zeros((1, 1)), std_normal_score) ** 2 == pytest.approx(1.0, abs=1e-8)

    def test_against_finite_difference_kernel(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(5, 2))
        beta = 0.5
        total = sum(imq_stein_kernel_fd(a, b, std_normal_score, beta) for a in x for b in x)
        assert ksd(x, std_normal_score) ** 2 == pytest.approx(total / 25, rel=1e-6)

    def test_exact_samples_beat_distant_ones(self):
        rng = np.random.default_rng(2)
        good = rng.normal(size=(2000, 2))
        bad = rng.normal(4.0, 1.0, size=(2000, 2))
        assert ksd(good, std_normal_score) < ksd(bad, std_normal_score)

    @settings(max_examples=25, deadline=None)
    @given(point_clouds, st.randoms(use_true_random=False))
    def test_non_negative_and_permutation_invariant(self, x, rnd):
        perm = list(range(x.shape[0]))
        rnd.shuffle(perm)
        a = ksd(x, std_normal_score)
        b = ksd(x[perm], std_normal_score)
        assert a >= 0
        assert b == pytest.approx(a, rel=1e-9, abs=1e-12)


class TestMMD:
    def test_self_distance_is_zero(self):
        a = np.random.default_rng(3).normal(size=(300, 2))
        assert mmd(a, a) == 0.0

    @pytest.mark.parametrize("r", [0.5, 1.0, 3.0])
    def test_two_point_masses(self, r):
        a = np.zeros((10, 1))
        b = np.full((7, 1), r)
        assert mmd(a, b) ** 2 == pytest.approx(2 - 2 * math.exp(-r * r / 2), rel=1e-12)

    def test_symmetric(self):
        rng = np.random.default_rng(4)
        a, b = rng.normal(size=(50, 2)), rng.normal(1, 1, size=(80, 2))
        assert mmd(a, b) == pytest.approx(mmd(b, a), rel=1e-12)

    def test_bandwidth(self):
        a, b = np.zeros((4, 1)), np.ones((4, 1))
        assert mmd(a, b, MetricConfig(mmd_bandwidth=2.0)) ** 2 == pytest.approx(2 - 2 * math.exp(-0.25))

    @settings(max_examples=25, deadline=None)
    @given(point_clouds)
    def test_self_zero_property(self, a):
        assert mmd(a, a) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            mmd(np.zeros((3, 2)), np.zeros((3, 1)))


class TestKnnKL:
    def test_shifted_gaussian(self):
        rng = np.random.default_rng(5)
        est = knn_kl(rng.normal(size=(10_000, 1)), rng.normal(1.0, 1.0, size=(10_000, 1)))
        assert est.kl == pytest.approx(0.5, abs=0.1)
        assert est.rev_kl == pytest.approx(0.5, abs=0.1)

    def test_matched_distributions(self):
        rng = np.random.default_rng(6)
        est = knn_kl(rng.normal(size=(10_000, 1)), rng.normal(size=(10_000, 1)))
        assert abs(est.kl) <= 0.05

    def test_reverse_is_swapped(self):
        rng = np.random.default_rng(7)
        a, b = rng.normal(size=(300, 2)), rng.normal(0.5, 1, size=(200, 2))
        assert knn_kl(a, b).rev_kl == knn_kl(b, a).kl

    def test_duplicates_are_excluded_with_warning(self):
        rng = np.random.default_rng(8)
        a = np.vstack([np.zeros((5, 1)), rng.normal(size=(100, 1))])
        with pytest.warns(RuntimeWarning, match="excluded"):
            est = knn_kl(a, rng.normal(size=(100, 1)))
        assert est.excluded == 5
        assert math.isfinite(est.kl)

    def test_all_duplicates_give_nan(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            est = knn_kl(np.zeros((10, 2)), np.random.default_rng(9).normal(size=(10, 2)))
        assert math.isnan(est.kl) and math.isfinite(est.rev_kl)


class TestSinkhorn:
    def test_opposing_point_masses(self):
        res = sinkhorn_w2(np.zeros((50, 1)), np.ones((50, 1)), MetricConfig(ot_epsilon=0.05))
        assert res.value == pytest.approx(1.0, abs=0.05)
        assert res.converged

    def test_translation_of_cloud(self):
        rng = np.random.default_rng(10)
        a = rng.normal(size=(200, 2))
        res = sinkhorn_w2(a, a + [3.0, 4.0])
        assert res.value == pytest.approx(5.0, rel=0.05)

    def test_self_cost_is_small(self):
        a = np.random.default_rng(11).normal(size=(200, 2))
        assert sinkhorn_w2(a, a).value < sinkhorn_w2(a, a + 1.0).value

    def test_permutation_invariant(self):
        rng = np.random.default_rng(12)
        a, b = rng.normal(size=(100, 2)), rng.normal(1, 1, size=(100, 2))
        perm = rng.permutation(100)
        assert sinkhorn_w2(a, b[perm]).value == pytest.approx(sinkhorn_w2(a, b).value, rel=1e-5)

    def test_non_convergence_is_flagged(self):
        rng = np.random.default_rng(13)
        res = sinkhorn_w2(rng.normal(size=(100, 2)), rng.normal(3, 1, size=(100, 2)), MetricConfig(ot_max_iter=2, ot_tol=1e-12))
        assert not res.converged
        assert res.n_iter == 2
        assert res.value > 0


class TestMMS:
    def test_perfect_coverage(self):
        gmm = forty_modes()
        cloud = np.repeat(gmm.means, 25, axis=0)
        assert mms(cloud, gmm) == 0.0

    def test_single_mode_collapse(self):
        gmm = forty_modes()
        cloud = np.repeat(gmm.means[:1], 1000, axis=0)
        assert mms(cloud, gmm) == pytest.approx(math.sqrt((975**2 + 39 * 25**2) / 40), rel=1e-12)
        assert mms(cloud, gmm) == pytest.approx(156.12, abs=0.005)

    def test_approaches_zero(self):
        gmm = forty_modes()
        noise = np.random.default_rng(14).normal(0, 10, 40)
        noise -= noise.mean()
        scores = []
        for spread in (1.0, 0.5, 0.0):
            counts = np.maximum(0, np.round(25 + spread * noise)).astype(int)
            scores.append(mms(np.repeat(gmm.means, counts, axis=0), gmm))
        assert scores[0] > scores[1] > scores[2] == 0.0

    def test_order_invariant(self):
        gmm = forty_modes()
        cloud = np.random.default_rng(15).uniform(-40, 40, (500, 2))
        assert mms(cloud[::-1], gmm) == mms(cloud, gmm)

    def test_nearest_mean_assignment(self):
        gmm = GaussianMixture.from_arrays([0.5, 0.5], [[0.0], [10.0]], [1.0, 1.0])
        np.testing.assert_array_equal(assign_modes([[1.0], [6.0], [-50.0]], gmm), [0, 1, 0])
        np.testing.assert_array_equal(mode_counts([[1.0], [6.0], [-50.0]], gmm), [2, 1])

    def test_occupancy_radius(self):
        gmm = GaussianMixture.from_arrays([0.5, 0.5], [[0.0, 0.0], [10.0, 0.0]], [[4.0, 1.0], 1.0])
        occ = occupied_modes([[5.9, 0.0], [13.5, 0.0]], gmm)
        np.testing.assert_array_equal(occ, [True, False])


class TestInputsUntouched:
    def test_no_mutation(self):
        rng = np.random.default_rng(16)
        a, b = rng.normal(size=(40, 2)), rng.normal(size=(40, 2))
        a0, b0 = a.copy(), b.copy()
        gmm = forty_modes()
        evaluate(a, target_score=std_normal_score, reference=b, gmm=gmm)
        np.testing.assert_array_equal(a, a0)
        np.testing.assert_array_equal(b, b0)


class TestReport:
    def test_csv_and_json_round_trip(self):
        rep = DiagnosticsReport("run", ("ksd", "kl"), [{"iteration": 0, "ksd": 0.1, "kl": math.nan}])
        assert rep.to_csv().splitlines() == ["iteration,ksd,kl", "0,0.1,nan"]
        back = DiagnosticsReport.from_dict(json.loads(rep.to_json()))
        assert back.iterations == [0]
        assert math.isnan(back.rows[0]["kl"])

    def test_bad_report(self):
        with pytest.raises(InputError):
            DiagnosticsReport.from_dict({"rows": []})

    @pytest.mark.parametrize(
        "kwargs", [{"ksd_beta": 2.0}, {"mmd_bandwidth": 0.0}, {"knn_k": 0}, {"ot_epsilon": 0.0}, {"mms_rule": "soft"}]
    )
    def test_bad_config(self, kwargs):
        with pytest.raises(InputError):
            MetricConfig(**kwargs)
