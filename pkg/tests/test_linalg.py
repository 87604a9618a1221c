import numpy as np
import pytest

from hybridtherm.linalg import (
    ExpRangeError,
    NonHermitianError,
    check_hermitian,
    eigh,
    frobenius,
    herm_exp,
    log_cosh,
    logsumexp,
    shifted_softmax,
    trace_distance,
)
from hybridtherm.verify import random_hermitian

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])


def taylor_exp(mat, scale, terms=60):
    # series oracle, independent of the spectral route
    acc = np.eye(mat.shape[0], dtype=complex)
    term = np.eye(mat.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ (scale * mat) / k
        acc = acc + term
    return acc


class TestHermExp:
    def test_matches_taylor_series(self, rng):
        m = random_hermitian(rng, 4)
        got = herm_exp(m, -0.7)
        want = taylor_exp(m, -0.7)
        assert frobenius(got - want) < 1e-12

    def test_identity_at_zero_scale(self, rng):
        m = random_hermitian(rng, 3)
        assert frobenius(herm_exp(m, 0.0) - np.eye(3)) < 1e-14

    def test_inverse_pair(self, rng):
        m = random_hermitian(rng, 4)
        prod = herm_exp(m, 0.3) @ herm_exp(m, -0.3)
        assert frobenius(prod - np.eye(4)) < 1e-12

    def test_range_guard(self):
        m = np.diag([1.0, -1.0])
        with pytest.raises(ExpRangeError):
            herm_exp(m, 1e6)

    def test_rejects_non_hermitian(self):
        m = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(NonHermitianError):
            herm_exp(m, 1.0)


class TestEigh:
    def test_reconstruction(self, rng):
        m = random_hermitian(rng, 6)
        es = eigh(m)
        assert frobenius(es.reconstruct() - m) < 1e-12

    def test_ascending_order(self, rng):
        es = eigh(random_hermitian(rng, 5))
        assert np.all(np.diff(es.eigenvalues) >= 0)

    def test_phase_convention_sigma_x(self):
        # eigenvectors (1, -1)/sqrt2 and (1, 1)/sqrt2 with the largest
        # component made real positive; the tie picks the first row
        es = eigh(SIGMA_X)
        r = 1.0 / np.sqrt(2.0)
        assert np.allclose(es.eigenvectors[:, 0], [r, -r], atol=1e-14)
        assert np.allclose(es.eigenvectors[:, 1], [r, r], atol=1e-14)

    def test_phase_pivot_is_real_positive(self, rng):
        es = eigh(random_hermitian(rng, 7))
        for k in range(7):
            col = es.eigenvectors[:, k]
            pivot = np.argmax(np.abs(col))
            assert col[pivot].imag == 0.0
            assert col[pivot].real > 0.0

    def test_deterministic(self, rng):
        m = random_hermitian(rng, 5)
        a = eigh(m)
        b = eigh(m.copy())
        assert np.array_equal(a.eigenvectors, b.eigenvectors)


class TestTraceDistance:
    def test_orthogonal_pure_states(self):
        a = np.diag([1.0, 0.0]).astype(complex)
        b = np.diag([0.0, 1.0]).astype(complex)
        assert abs(trace_distance(a, b) - 1.0) < 1e-14

    def test_identical_states(self, rng):
        m = random_hermitian(rng, 3)
        rho = herm_exp(m, -1.0)
        rho = rho / np.trace(rho).real
        assert trace_distance(rho, rho) == 0.0

    def test_known_mixture(self):
        a = np.diag([0.75, 0.25]).astype(complex)
        b = np.diag([0.5, 0.5]).astype(complex)
        assert abs(trace_distance(a, b) - 0.25) < 1e-14


class TestScalarHelpers:
    def test_logsumexp_against_direct(self, rng):
        v = rng.normal(size=20)
        assert abs(logsumexp(v) - np.log(np.sum(np.exp(v)))) < 1e-12

    def test_logsumexp_extreme_range(self):
        v = np.array([-2000.0, 0.0, 1.0])
        direct = np.log(np.exp(-2001.0) + np.exp(-1.0) + 1.0) + 1.0
        assert abs(logsumexp(v) - direct) < 1e-12

    def test_softmax_sums_to_one(self, rng):
        p = shifted_softmax(rng.normal(size=8) * 50)
        assert abs(p.sum() - 1.0) < 1e-14
        assert np.all(p >= 0)

    def test_log_cosh_large_argument(self):
        # cosh overflows around 710; the log form must not
        x = 5000.0
        assert abs(log_cosh(x) - (x - np.log(2.0))) < 1e-12

    def test_log_cosh_small_argument(self):
        x = 1e-4
        assert abs(log_cosh(x) - np.log(np.cosh(x))) < 1e-15


class TestCheckHermitian:
    def test_accepts_hermitian(self, rng):
        check_hermitian(random_hermitian(rng, 4), "m")

    def test_rejects_with_location(self):
        m = np.eye(3, dtype=complex)
        m[0, 2] = 1e-3
        with pytest.raises(NonHermitianError) as err:
            check_hermitian(m, "m")
        assert "(0, 2)" in str(err.value) or "(2, 0)" in str(err.value)

    def test_rejects_non_square(self):
        with pytest.raises(NonHermitianError):
            check_hermitian(np.zeros((2, 3)), "m")
