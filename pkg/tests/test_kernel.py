"""Kernel closed forms against finite differences, and joint Gram
assembly / conditioning behavior."""

import math

import numpy as np
import pytest

from monotune import (
    ConditioningError,
    KernelParams,
    SignObservation,
    build_joint_gram,
    se_kernel,
    se_kernel_dd,
    se_kernel_dobs,
)
from monotune.kernel import cholesky_with_jitter, se_kernel_matrix


def fd_dobs(x_i, x_j, d, params, h=1e-5):
    """Central finite difference of se_kernel in coordinate d of x_i."""
    e = np.zeros_like(x_i, dtype=float)
    e[d] = h
    return (se_kernel(x_i + e, x_j, params) - se_kernel(x_i - e, x_j, params)) / (2 * h)


def fd_dd(x_i, x_j, d, g, params, h=1e-4):
    """Nested central differences: d/dx_i_d then d/dx_j_g."""
    e = np.zeros_like(x_j, dtype=float)
    e[g] = h
    return (
        fd_dobs(x_i, x_j + e, d, params) - fd_dobs(x_i, x_j - e, d, params)
    ) / (2 * h)


class TestSeKernel:
    def test_zero_distance(self):
        params = KernelParams(lengthscale=0.7)
        x = np.array([0.3, 0.7])
        assert se_kernel(x, x, params) == 1.0

    def test_unit_separation(self):
        params = KernelParams(lengthscale=1.0)
        val = se_kernel(np.array([0.0]), np.array([1.0]), params)
        assert val == pytest.approx(math.exp(-0.5), abs=1e-12)
        assert val == pytest.approx(0.606531, abs=1e-6)

    def test_symmetry(self):
        rng = np.random.default_rng(0)
        params = KernelParams(lengthscale=0.3, amplitude=2.0)
        for _ in range(20):
            x, x2 = rng.uniform(0, 1, 3), rng.uniform(0, 1, 3)
            assert se_kernel(x, x2, params) == se_kernel(x2, x, params)

    def test_stationarity(self):
        rng = np.random.default_rng(1)
        params = KernelParams(lengthscale=0.5, amplitude=1.5)
        for _ in range(20):
            x, x2, t = rng.uniform(0, 1, 4), rng.uniform(0, 1, 4), rng.normal(size=4)
            assert se_kernel(x + t, x2 + t, params) == pytest.approx(
                se_kernel(x, x2, params), abs=1e-12
            )

    def test_non_finite_input_rejected(self):
        params = KernelParams(lengthscale=1.0)
        with pytest.raises(ValueError):
            se_kernel(np.array([np.nan]), np.array([0.0]), params)
        with pytest.raises(ValueError):
            se_kernel(np.array([np.inf, 0.0]), np.array([0.0, 0.0]), params)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            se_kernel(np.array([0.0]), np.array([0.0, 1.0]), KernelParams(1.0))

    def test_invalid_params_rejected(self):
        with pytest.raises(ValueError):
            KernelParams(lengthscale=0.0)
        with pytest.raises(ValueError):
            KernelParams(lengthscale=1.0, amplitude=-1.0)
        with pytest.raises(ValueError):
            KernelParams(lengthscale=1.0, noise=-1e-3)
        with pytest.raises(ValueError):
            KernelParams(lengthscale=float("nan"))

    def test_matrix_matches_pairwise(self):
        rng = np.random.default_rng(2)
        params = KernelParams(lengthscale=0.4, amplitude=1.3)
        X = rng.uniform(0, 1, (6, 3))
        X2 = rng.uniform(0, 1, (4, 3))
        K = se_kernel_matrix(X, X2, params)
        for i in range(6):
            for j in range(4):
                assert K[i, j] == pytest.approx(se_kernel(X[i], X2[j], params), abs=1e-12)


class TestDerivativeCrossCovariances:
    def test_dobs_zero_offset(self):
        params = KernelParams(lengthscale=0.9)
        x = np.array([0.2, 0.8])
        assert se_kernel_dobs(x, x, 0, params) == 0.0

    def test_dobs_unit_separation(self):
        params = KernelParams(lengthscale=1.0)
        val = se_kernel_dobs(np.array([0.0]), np.array([1.0]), 0, params)
        assert val == pytest.approx(math.exp(-0.5), abs=1e-9)
        assert val == pytest.approx(
            fd_dobs(np.array([0.0]), np.array([1.0]), 0, params), rel=1e-6
        )

    def test_dobs_antisymmetry(self):
        rng = np.random.default_rng(3)
        params = KernelParams(lengthscale=0.25)
        for _ in range(20):
            x, x2 = rng.uniform(0, 1, 2), rng.uniform(0, 1, 2)
            d = int(rng.integers(0, 2))
            assert se_kernel_dobs(x, x2, d, params) == pytest.approx(
                -se_kernel_dobs(x2, x, d, params), abs=1e-14
            )

    def test_dd_zero_offset_diagonal(self):
        params = KernelParams(lengthscale=1.0)
        x = np.array([0.5])
        assert se_kernel_dd(x, x, 0, 0, params) == pytest.approx(1.0, abs=1e-12)

    def test_dd_zero_offset_cross_term(self):
        params = KernelParams(lengthscale=0.6)
        x = np.array([0.1, 0.9])
        assert se_kernel_dd(x, x, 0, 1, params) == 0.0

    def test_dd_unit_separation_vanishes(self):
        # (1/theta - 1/theta^2 * 1) * k = 0 at theta = 1, offset 1
        params = KernelParams(lengthscale=1.0)
        val = se_kernel_dd(np.array([0.0]), np.array([1.0]), 0, 0, params)
        assert val == pytest.approx(0.0, abs=1e-12)
        assert val == pytest.approx(
            fd_dd(np.array([0.0]), np.array([1.0]), 0, 0, params), abs=1e-6
        )

    def test_out_of_range_dimension(self):
        params = KernelParams(lengthscale=1.0)
        x = np.array([0.0, 1.0])
        with pytest.raises(ValueError):
            se_kernel_dobs(x, x, 2, params)
        with pytest.raises(ValueError):
            se_kernel_dobs(x, x, -1, params)
        with pytest.raises(ValueError):
            se_kernel_dd(x, x, 0, 5, params)

    def test_finite_difference_agreement(self):
        """100 random instances, D <= 5, theta in [0.05, 2]."""
        rng = np.random.default_rng(42)
        for _ in range(100):
            D = int(rng.integers(1, 6))
            params = KernelParams(lengthscale=float(rng.uniform(0.05, 2.0)))
            x = rng.uniform(0, 1, D)
            x2 = rng.uniform(0, 1, D)
            d = int(rng.integers(0, D))
            g = int(rng.integers(0, D))

            exact = se_kernel_dobs(x, x2, d, params)
            approx = fd_dobs(x, x2, d, params)
            if abs(approx) > 1e-4:
                assert abs(exact - approx) / abs(approx) < 1e-4
            else:
                assert abs(exact - approx) < 1e-8

            exact2 = se_kernel_dd(x, x2, d, g, params)
            approx2 = fd_dd(x, x2, d, g, params)
            if abs(approx2) > 1e-4:
                assert abs(exact2 - approx2) / abs(approx2) < 1e-3
            else:
                assert abs(exact2 - approx2) < 1e-6


class TestJointGram:
    def test_single_value_no_signs(self):
        params = KernelParams(lengthscale=0.5, amplitude=1.0)
        gram = build_joint_gram(np.array([[0.5]]), [], params, jitter=1e-9)
        assert gram.full.shape == (1, 1)
        assert gram.full[0, 0] == pytest.approx(1.0 + 1e-9, abs=1e-12)
        assert gram.jitter == pytest.approx(1e-9)

    def test_value_and_sign_blocks_match_finite_differences(self):
        params = KernelParams(lengthscale=0.3)
        X = np.array([[0.1], [0.7]])
        sign = SignObservation((0.4,), 0, +1)
        gram = build_joint_gram(X, [sign], params)
        assert gram.full.shape == (3, 3)
        assert np.allclose(gram.full, gram.full.T, atol=1e-15)
        z = np.array([0.4])
        for i in range(2):
            fd = fd_dobs(z, X[i], 0, params)
            assert gram.full[i, 2] == pytest.approx(fd, rel=1e-6)
        # derivative-derivative entry is off the jittered diagonal path:
        # compare against the nested difference plus the known jitter
        fd2 = fd_dd(z, z, 0, 0, params)
        assert gram.full[2, 2] - gram.jitter == pytest.approx(fd2, rel=1e-4)

    def test_duplicated_value_point_still_factorizes(self):
        params = KernelParams(lengthscale=0.5)
        X = np.array([[0.3], [0.3]])
        gram = build_joint_gram(X, [], params, jitter=1e-9)
        assert np.all(np.isfinite(gram.chol))

    def test_random_grams_symmetric_and_factorizable(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            D = int(rng.integers(1, 4))
            p = int(rng.integers(1, 5))
            M = int(rng.integers(0, 4))
            params = KernelParams(lengthscale=float(rng.uniform(0.05, 2.0)))
            X = rng.uniform(0, 1, (p, D))
            signs = [
                SignObservation(
                    tuple(rng.uniform(0, 1, D)), int(rng.integers(0, D)),
                    int(rng.choice([-1, 1])),
                )
                for _ in range(M)
            ]
            gram = build_joint_gram(X, signs, params)
            assert np.max(np.abs(gram.full - gram.full.T)) < 1e-12
            # recomputing the factor from the stored matrix must succeed
            np.linalg.cholesky(gram.full)

    def test_empty_values_rejected(self):
        with pytest.raises(ValueError):
            build_joint_gram(np.empty((0, 1)), [], KernelParams(1.0))

    def test_conditioning_error_carries_jitter(self):
        # indefinite matrix: no diagonal jitter up to 1e-3 fixes eig -1
        A = np.array([[1.0, 2.0], [2.0, 1.0]])
        with pytest.raises(ConditioningError) as err:
            cholesky_with_jitter(A, 1e-9)
        assert err.value.jitter > 0
