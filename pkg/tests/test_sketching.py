import math

import numpy as np
import pytest

from sketchopt.linalg import LsProblem, cholesky, qr_least_squares
from sketchopt.sketching import (
    AspectRatios,
    RngStream,
    SketchTooThin,
    fwht_in_place,
    gaussian_sketch,
    haar_sketch,
    make_sketch,
    materialize_sketch_matrix,
    pad_to_power_of_two,
    srht_apply,
)


def naive_hadamard(n):
    H = np.array([[1.0]])
    while H.shape[0] < n:
        H = np.block([[H, H], [H, -H]]) / math.sqrt(2.0)
    return H


class TestFwht:
    def test_h2_first_column(self):
        out = fwht_in_place(np.array([1.0, 0.0]))
        assert np.allclose(out, [1 / math.sqrt(2)] * 2, atol=1e-12)

    def test_h4_first_column(self):
        out = fwht_in_place(np.array([1.0, 0.0, 0.0, 0.0]))
        assert np.allclose(out, [0.5] * 4, atol=1e-12)

    @pytest.mark.parametrize("n", [2, 4, 8, 16, 32, 64])
    def test_matches_naive_hadamard(self, n):
        v = np.random.default_rng(n).standard_normal(n)
        assert np.max(np.abs(fwht_in_place(v.copy()) - naive_hadamard(n) @ v)) < 1e-12

    def test_involution(self):
        v = np.random.default_rng(0).standard_normal(256)
        w = fwht_in_place(fwht_in_place(v.copy()))
        assert np.max(np.abs(w - v)) < 1e-12

    def test_linearity(self):
        g = np.random.default_rng(3)
        u, v = g.standard_normal(64), g.standard_normal(64)
        lhs = fwht_in_place(2.5 * u + 1.5 * v)
        rhs = 2.5 * fwht_in_place(u.copy()) + 1.5 * fwht_in_place(v.copy())
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_matrix_columns(self):
        g = np.random.default_rng(4)
        W = g.standard_normal((32, 5))
        out = fwht_in_place(W.copy())
        H = naive_hadamard(32)
        assert np.max(np.abs(out - H @ W)) < 1e-12

    def test_non_power_of_two_rejected(self):
        with pytest.raises(ValueError, match="power of two"):
            fwht_in_place(np.zeros(12))


class TestRngStream:
    def test_reproducible(self):
        a = RngStream(123, 4).generator().standard_normal(10)
        b = RngStream(123, 4).generator().standard_normal(10)
        assert np.array_equal(a, b)

    def test_streams_differ(self):
        a = RngStream(123, 4).generator().standard_normal(10)
        b = RngStream(123, 5).generator().standard_normal(10)
        assert not np.array_equal(a, b)

    def test_child_offsets(self):
        assert RngStream(1, 2).child(3) == RngStream(1, 5)


class TestAspectRatios:
    def test_ratios(self):
        r = AspectRatios(n=8192, d=1640, m=3280)
        assert r.gamma == pytest.approx(1640 / 8192)
        assert r.xi == pytest.approx(3280 / 8192)
        assert r.rho == pytest.approx(0.5)

    def test_ordering_enforced(self):
        with pytest.raises(ValueError):
            AspectRatios(n=100, d=60, m=50)


class TestSrht:
    def test_rows_orthonormal(self):
        S = materialize_sketch_matrix("srht", 256, 100, RngStream(7, 3))
        assert np.max(np.abs(S @ S.T - np.eye(S.shape[0]))) < 1e-10

    def test_matches_materialized_matrix(self):
        A = np.random.default_rng(0).standard_normal((256, 20))
        b = np.random.default_rng(1).standard_normal(256)
        res, sb = srht_apply(A, b, 100, RngStream(7, 3))
        S = materialize_sketch_matrix("srht", 256, 100, RngStream(7, 3))
        assert np.max(np.abs(S @ A - res.SA)) < 1e-12
        assert np.max(np.abs(S @ b - sb)) < 1e-12

    def test_deterministic(self):
        A = np.random.default_rng(2).standard_normal((128, 10))
        r1, _ = srht_apply(A, None, 64, RngStream(5, 9))
        r2, _ = srht_apply(A, None, 64, RngStream(5, 9))
        assert np.array_equal(r1.SA, r2.SA)
        assert r1.m_effective == r2.m_effective

    def test_too_thin_rejected(self):
        A = np.random.default_rng(3).standard_normal((64, 60))
        with pytest.raises(SketchTooThin):
            srht_apply(A, None, 16, RngStream(0))

    def test_binomial_row_count(self):
        # E[m_tilde] = m; 100 draws at n=1024, m=256 stay within 3 standard
        # errors (~4.2) of the mean.
        effs = [
            srht_apply(np.zeros((1024, 1)), None, 256, RngStream(1000, i))[0].m_effective
            for i in range(100)
        ]
        se3 = 3 * math.sqrt(1024 * 0.25 * 0.75 / 100)
        assert abs(np.mean(effs) - 256) <= se3

    def test_spectrum_scale_matches_xi(self):
        # mean eigenvalue of C_S = trace / d concentrates at m/n; no n/m
        # rescaling happens inside the sketch itself.
        U = np.linalg.qr(np.random.default_rng(9).standard_normal((8192, 256)))[0]
        res, _ = srht_apply(U, None, 3280, RngStream(55))
        C = res.SA.T @ res.SA
        assert abs(np.trace(C) / 256 - 3280 / 8192) < 0.02

    def test_non_power_of_two_rejected(self):
        with pytest.raises(ValueError, match="power of two"):
            srht_apply(np.zeros((100, 4)), None, 50, RngStream(0))


class TestGaussian:
    def test_second_moment_identity(self):
        acc = np.zeros((64, 64))
        for i in range(50):
            S = materialize_sketch_matrix("gaussian", 64, 4096, RngStream(2, i))
            acc += S.T @ S
        acc /= 50
        assert np.max(np.abs(acc - np.eye(64))) < 0.05

    def test_entry_statistics(self):
        S = materialize_sketch_matrix("gaussian", 512, 1024, RngStream(3, 0))
        k = S.size
        assert abs(S.mean()) < 3.0 / math.sqrt(1024 * k)
        assert abs(S.var() * 1024 - 1.0) < 3.0 * math.sqrt(2.0 / k)

    def test_eigenvalues_in_mp_bulk(self):
        # d/m = 0.4: spectrum of (SU)^T SU within the MP support +- 0.05.
        U = np.linalg.qr(np.random.default_rng(6).standard_normal((4096, 800)))[0]
        res, _ = gaussian_sketch(U, None, 2000, RngStream(77))
        lam = np.linalg.eigvalsh(res.SA.T @ res.SA)
        a, b = (1 - math.sqrt(0.4)) ** 2, (1 + math.sqrt(0.4)) ** 2
        assert lam[0] > a - 0.05 and lam[-1] < b + 0.05

    def test_m_not_above_d_rejected(self):
        with pytest.raises(ValueError):
            gaussian_sketch(np.zeros((64, 10)), None, 10, RngStream(0))


class TestHaar:
    def test_rows_orthonormal(self):
        S = materialize_sketch_matrix("haar", 128, 40, RngStream(11))
        assert np.max(np.abs(S @ S.T - np.eye(40))) < 1e-10

    def test_full_size_rejected(self):
        with pytest.raises(ValueError):
            haar_sketch(np.zeros((64, 10)), None, 64, RngStream(0))


class TestPadding:
    def test_power_of_two_unchanged(self):
        A = np.random.default_rng(1).standard_normal((8, 3))
        b = np.arange(8.0)
        A2, b2, n2 = pad_to_power_of_two(A, b)
        assert n2 == 8 and np.array_equal(A2, A) and np.array_equal(b2, b)

    def test_pads_with_zero_rows(self):
        A = np.ones((5, 2))
        b = np.ones(5)
        A2, b2, n2 = pad_to_power_of_two(A, b)
        assert n2 == 8
        assert np.array_equal(A2[5:], np.zeros((3, 2)))
        assert np.array_equal(b2[5:], np.zeros(3))

    def test_solution_unchanged(self):
        g = np.random.default_rng(4)
        A = g.standard_normal((300, 20))
        b = g.standard_normal(300)
        x = qr_least_squares(A, b)
        A2, b2, _ = pad_to_power_of_two(A, b)
        assert np.max(np.abs(qr_least_squares(A2, b2) - x)) < 1e-12


class TestGramPositiveDefinite:
    @pytest.mark.parametrize("kind", ["gaussian", "srht", "haar"])
    def test_sketched_gram_factors_across_seeds(self, kind):
        A = np.random.default_rng(8).standard_normal((1024, 100))
        for i in range(50):
            res, _ = make_sketch(kind, A, None, 300, RngStream(10_000 + i, 0))
            cholesky(res.SA.T @ res.SA)
