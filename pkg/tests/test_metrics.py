import numpy as np
import pytest

from histotex import MetricKind, chi2, chi2_abs, cosine_dist, distance_matrix, l1, l2

from oracles import LOOP_METRICS

ALL_KINDS = list(MetricKind)


class TestScalarExamples:
    def test_identity_is_zero(self, rng):
        v = rng.uniform(0, 1, 12)
        assert chi2(v, v) == 0.0
        assert l1(v, v) == 0.0
        assert l2(v, v) == 0.0
        assert cosine_dist(v, v) == pytest.approx(0.0, abs=1e-15)

    def test_chi2_disjoint_unit_masses(self):
        assert chi2([1.0, 0.0], [0.0, 1.0]) == 1.0

    def test_chi2_direct_evaluation(self):
        # 0.5 * (0.25^2/0.75 + 0.25^2/1.25)
        assert chi2([0.5, 0.5], [0.25, 0.75]) == pytest.approx(
            0.0666666666666, abs=1e-10
        )

    def test_l1_l2_triangle_345(self):
        assert l1([0.0, 3.0], [4.0, 0.0]) == 7.0
        assert l2([0.0, 3.0], [4.0, 0.0]) == 5.0

    def test_cosine_orthogonal(self):
        assert cosine_dist([1.0, 0.0], [0.0, 1.0]) == 1.0

    def test_cosine_zero_vector_convention(self):
        assert cosine_dist([0.0, 0.0], [1.0, 2.0]) == 1.0
        assert cosine_dist([0.0, 0.0], [0.0, 0.0]) == 1.0

    def test_chi2_abs_cases(self):
        assert chi2_abs([-1.0, 0.0], [1.0, 0.0]) == 0.0
        assert chi2_abs([-1.0, 0.0], [0.0, 1.0]) == 1.0

    def test_chi2_abs_equals_chi2_on_nonnegative(self, rng):
        p = rng.uniform(0, 1, 20)
        q = rng.uniform(0, 1, 20)
        assert chi2_abs(p, q) == chi2(p, q)

    def test_chi2_zero_denominator_terms_drop(self):
        # both zero at a bin
        assert chi2([0.0, 1.0], [0.0, 1.0]) == 0.0
        # signed cancellation also hits the p+q = 0 rule
        assert chi2([1.0, 2.0], [-1.0, 2.0]) == 0.0

    def test_chi2_signed_inputs_compute_without_error(self):
        val = chi2([-1.0, 3.0], [2.0, -0.5])
        assert np.isfinite(val)

    def test_length_mismatch(self):
        for fn in (chi2, l1, l2, cosine_dist, chi2_abs):
            with pytest.raises(ValueError, match="length"):
                fn([1.0, 2.0], [1.0])


class TestProperties:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_symmetry(self, kind, rng):
        fn = LOOP_METRICS[kind.value]
        from histotex.metrics import metric_fn

        ours = metric_fn(kind)
        for _ in range(200):
            p = rng.uniform(0, 1, 8)
            q = rng.uniform(0, 1, 8)
            assert ours(p, q) == pytest.approx(ours(q, p), abs=1e-12)
            assert ours(p, q) == pytest.approx(fn(p, q), rel=1e-12, abs=1e-12)

    def test_l1_l2_triangle_inequality(self, rng):
        for _ in range(1000):
            p, q, s = rng.uniform(-5, 5, (3, 6))
            assert l1(p, q) <= l1(p, s) + l1(s, q) + 1e-9
            assert l2(p, q) <= l2(p, s) + l2(s, q) + 1e-9

    def test_nonnegativity(self, rng):
        for _ in range(100):
            p = rng.uniform(0, 1, 5)
            q = rng.uniform(0, 1, 5)
            assert l1(p, q) >= 0
            assert l2(p, q) >= 0
            assert chi2(p, q) >= 0

    def test_chi2_zero_iff_equal_on_support(self, rng):
        p = rng.uniform(0.1, 1, 6)
        assert chi2(p, p) == 0.0
        q = p.copy()
        q[2] += 0.3
        assert chi2(p, q) > 0.0


class TestDistanceMatrix:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_matches_scalar_loop(self, kind, rng):
        Q = rng.uniform(0, 1, (3, 5))
        R = rng.uniform(0, 1, (4, 5))
        D = distance_matrix(Q, R, kind)
        fn = LOOP_METRICS[kind.value]
        for i in range(3):
            for j in range(4):
                assert D[i, j] == pytest.approx(fn(Q[i], R[j]), rel=1e-12, abs=1e-12)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_zero_diagonal(self, kind, rng):
        X = rng.uniform(0.1, 1, (6, 4))
        D = distance_matrix(X, X, kind)
        assert np.allclose(np.diag(D), 0.0, atol=1e-12)

    def test_single_pair(self, rng):
        p = rng.uniform(0, 1, 7)
        q = rng.uniform(0, 1, 7)
        D = distance_matrix([p], [q], MetricKind.CHI2)
        assert D.shape == (1, 1)
        assert D[0, 0] == pytest.approx(chi2(p, q), abs=1e-15)

    def test_empty_inputs(self):
        assert distance_matrix([], [], MetricKind.L2).shape == (0, 0)
        assert distance_matrix([], [[1.0, 2.0]], MetricKind.L2).shape == (0, 1)

    def test_cosine_zero_rows_get_distance_one(self, rng):
        Q = np.vstack([np.zeros(4), rng.uniform(0.1, 1, 4)])
        R = rng.uniform(0.1, 1, (3, 4))
        D = distance_matrix(Q, R, MetricKind.COSINE)
        assert np.all(D[0] == 1.0)
        assert np.all(D[1] < 1.0)

    def test_chunking_does_not_change_values(self, rng, monkeypatch):
        import histotex.metrics as hm

        X = rng.uniform(0, 1, (37, 11))
        full = distance_matrix(X, X, MetricKind.CHI2)
        monkeypatch.setattr(hm, "_CHUNK_ELEMENTS", 64)
        chunked = distance_matrix(X, X, MetricKind.CHI2)
        assert np.array_equal(full, chunked)

    def test_repeatable_bitwise(self, rng):
        X = rng.uniform(0, 1, (20, 33))
        a = distance_matrix(X, X, MetricKind.COSINE)
        b = distance_matrix(X, X, MetricKind.COSINE)
        assert np.array_equal(a, b)

    def test_metric_parse(self):
        assert MetricKind.from_string("chi2abs") is MetricKind.CHI2_ABS
        with pytest.raises(ValueError, match="unknown metric"):
            MetricKind.from_string("manhattan")
