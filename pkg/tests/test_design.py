"""Combiner design: raised-cosine pulse, correlation matrices, extremal
eigensolve, reference reproduction, serialization."""

import dataclasses

import numpy as np
import pytest

import maxminsense as mms
from maxminsense._jacobi import jacobi_eigh
from maxminsense.design import (
    DEFAULT_RANK_TOL,
    REFERENCE_DESIGNS,
    DesignMatrices,
    cosine_similarity,
)
from maxminsense.signals import PulseSpec

BETAS = (0.2, 0.25, 0.35)


class TestRcPulse:
    def test_unit_peak(self):
        assert mms.rc_pulse(0.0, 0.2) == pytest.approx(1.0, abs=1e-15)

    def test_nyquist_zero_crossings(self):
        for k in (1, 2, 3, -1, -5):
            assert abs(mms.rc_pulse(float(k), 0.2)) < 1e-15

    def test_singular_point_limit(self):
        # limit at t = ps/(2*beta) equals (pi/4)*sinc(1/(2*beta)); the frozen
        # value for beta=0.2 comes from evaluating at t = pole +- 1e-6
        pole = 1.0 / (2.0 * 0.2)
        assert mms.rc_pulse(pole, 0.2) == pytest.approx(0.1, abs=1e-9)
        near = mms.rc_pulse(pole + 1e-6, 0.2)
        assert mms.rc_pulse(pole, 0.2) == pytest.approx(near, abs=1e-6)

    @pytest.mark.parametrize("beta", BETAS)
    def test_numeric_limit_oracle(self, beta):
        pole = 1.0 / (2.0 * beta)
        limit = (mms.rc_pulse(pole + 1e-6, beta) + mms.rc_pulse(pole - 1e-6, beta)) / 2
        assert mms.rc_pulse(pole, beta) == pytest.approx(limit, abs=1e-9)

    def test_scaled_period(self):
        assert mms.rc_pulse(3.0, 0.2, ps=2.0) == pytest.approx(
            mms.rc_pulse(1.5, 0.2), abs=1e-15
        )

    def test_validation(self):
        with pytest.raises(ValueError):
            mms.rc_pulse(0.0, 0.0)
        with pytest.raises(ValueError):
            mms.rc_pulse(0.0, 0.2, ps=-1.0)


class TestBuildMatrices:
    def test_unit_diagonal_b(self, spec02):
        m = mms.build_matrices(spec02)
        np.testing.assert_allclose(np.diag(m.B), 1.0, atol=1e-15)

    def test_b_entry_closed_form(self, spec02):
        # |t_i - t_j| = P_s/2 at (i, j) = (4, 0); frozen rc(0.5, 0.2)
        m = mms.build_matrices(spec02)
        assert m.B[4, 0] == pytest.approx(0.6306889405338809, abs=1e-12)

    def test_exact_symmetry(self, spec02):
        m = mms.build_matrices(spec02)
        assert np.array_equal(m.A, m.A.T)
        assert np.array_equal(m.B, m.B.T)

    def test_truncation_doubling_stability(self, spec02):
        m16 = mms.build_matrices(spec02, truncation_k=16)
        m64 = mms.build_matrices(spec02, truncation_k=64)
        assert np.max(np.abs(m16.A - m64.A)) < 1e-8

    def test_truncation_floor(self, spec02):
        with pytest.raises(ValueError, match="truncation_k"):
            mms.build_matrices(spec02, truncation_k=4)


class TestJacobiEigh:
    @pytest.mark.parametrize("n,seed", [(2, 0), (4, 1), (8, 2), (8, 3), (12, 4)])
    def test_matches_lapack(self, n, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((n, n))
        s = (x + x.T) / 2.0
        evals, evecs = jacobi_eigh(s)
        ref = np.linalg.eigvalsh(s)
        np.testing.assert_allclose(evals, ref, atol=1e-12 * max(1, abs(ref).max()))
        # eigenvector residuals
        for k in range(n):
            r = s @ evecs[:, k] - evals[k] * evecs[:, k]
            assert np.linalg.norm(r) < 1e-12 * np.linalg.norm(s)
        # orthonormality
        np.testing.assert_allclose(evecs.T @ evecs, np.eye(n), atol=1e-12)

    def test_identity(self):
        evals, evecs = jacobi_eigh(np.eye(3))
        np.testing.assert_allclose(evals, 1.0)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            jacobi_eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))


class TestSolveExtremalSnr:
    def test_zero_signal_matrix(self, spec02):
        m = mms.build_matrices(spec02)
        zero = DesignMatrices(A=np.zeros_like(m.A), B=m.B, spec=spec02, truncation_k=16)
        w = mms.solve_extremal_snr(zero)
        assert w.gamma_min == pytest.approx(0.0, abs=1e-12)
        assert w.gamma_max == pytest.approx(0.0, abs=1e-12)

    def test_equal_matrices(self, spec02):
        m = mms.build_matrices(spec02)
        same = DesignMatrices(A=m.B.copy(), B=m.B, spec=spec02, truncation_k=16)
        w = mms.solve_extremal_snr(same)
        assert w.gamma_min == pytest.approx(1.0, abs=1e-9)
        assert w.gamma_max == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("beta", BETAS)
    def test_reference_direction_match(self, beta):
        spec = PulseSpec(rolloff=beta)
        w = mms.design_combiner(spec)
        ref = REFERENCE_DESIGNS[beta]
        assert cosine_similarity(w.alpha_min, ref["alpha_min"]) >= 0.995
        assert cosine_similarity(w.alpha_max, ref["alpha_max"]) >= 0.995

    @pytest.mark.parametrize("beta", BETAS)
    def test_quotients_reproduce_gammas(self, beta):
        spec = PulseSpec(rolloff=beta)
        m = mms.build_matrices(spec)
        w = mms.solve_extremal_snr(m)
        for alpha, gamma in ((w.alpha_min, w.gamma_min), (w.alpha_max, w.gamma_max)):
            a = alpha.real
            q = (a @ m.A @ a) / (a @ m.B @ a)
            assert q == pytest.approx(gamma, abs=1e-9)
            assert a @ m.B @ a == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("beta", BETAS)
    def test_whitened_eigen_residual(self, beta):
        # independent oracle: LAPACK eigendecomposition of B for the whitener
        spec = PulseSpec(rolloff=beta)
        m = mms.build_matrices(spec)
        w = mms.solve_extremal_snr(m)
        evals, vecs = np.linalg.eigh(m.B)
        keep = evals > DEFAULT_RANK_TOL * evals[-1]
        white = vecs[:, keep] / np.sqrt(evals[keep])
        s = white.T @ m.A @ white
        s_norm = np.linalg.norm(s)
        for alpha, gamma in ((w.alpha_min, w.gamma_min), (w.alpha_max, w.gamma_max)):
            r = white.T @ (m.A @ alpha.real - gamma * (m.B @ alpha.real))
            assert np.linalg.norm(r) <= 1e-9 * s_norm

    def test_random_direction_extremality(self, spec02, weights02):
        # 1e5 random unit vectors never beat the returned extremal quotients
        m = mms.build_matrices(spec02)
        rng = np.random.default_rng(12345)
        v = rng.standard_normal((100_000, 8))
        num = np.einsum("ij,jk,ik->i", v, m.A, v)
        den = np.einsum("ij,jk,ik->i", v, m.B, v)
        q = num / den
        eps = 1e-9
        assert q.min() >= weights02.gamma_min - eps
        assert q.max() <= weights02.gamma_max + eps

    def test_gamma_gap_monotone_in_rolloff(self):
        gaps = [mms.design_combiner(PulseSpec(rolloff=b)).gamma_d for b in BETAS]
        assert gaps[0] < gaps[1] < gaps[2]

    def test_scale_invariance(self, spec02):
        m = mms.build_matrices(spec02)
        w1 = mms.solve_extremal_snr(m)
        for c in (1e-3, 1e3):
            scaled = DesignMatrices(A=c * m.A, B=c * m.B, spec=spec02, truncation_k=16)
            w2 = mms.solve_extremal_snr(scaled)
            assert w2.gamma_min == pytest.approx(w1.gamma_min, rel=1e-12)
            assert w2.gamma_max == pytest.approx(w1.gamma_max, rel=1e-12)
            assert cosine_similarity(w1.alpha_min, w2.alpha_min) >= 1.0 - 1e-12
            assert cosine_similarity(w1.alpha_max, w2.alpha_max) >= 1.0 - 1e-12

    def test_sign_convention(self, weights02):
        for alpha in (weights02.alpha_min, weights02.alpha_max):
            scale = np.abs(alpha).max()
            lead = next(x for x in alpha if abs(x) > 1e-12 * scale)
            assert lead.real > 0

    def test_noise_rank_reported(self, weights02):
        assert weights02.rank == 4


class TestWeightsSerialization:
    def test_round_trip_bit_exact(self, weights02, tmp_path):
        path = tmp_path / "w.json"
        mms.save_weights(weights02, path)
        loaded = mms.load_weights(path)
        assert np.array_equal(loaded.alpha_min, weights02.alpha_min)
        assert np.array_equal(loaded.alpha_max, weights02.alpha_max)
        assert loaded.gamma_min == weights02.gamma_min
        assert loaded.gamma_max == weights02.gamma_max
        assert loaded.gamma_d == weights02.gamma_d
        assert loaded.spec == weights02.spec
        assert loaded.truncation_k == weights02.truncation_k
        assert loaded.rank == weights02.rank

    def test_written_twice_identical(self, weights02, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        mms.save_weights(weights02, a)
        mms.save_weights(weights02, b)
        assert a.read_bytes() == b.read_bytes()
