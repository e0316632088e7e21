import numpy as np
import pytest

from matw.linalg import (hs_norm, operator_norm, psd_power, psd_power_stack,
                         sym_eigen, trace_of)

from _oracles import matrix_power_iteration_norm


def random_pd(rng, d):
    a = rng.standard_normal((d, d))
    return a @ a.T + 0.05 * np.eye(d)


def test_eigen_identity():
    vals, _ = sym_eigen(np.eye(3))
    assert np.allclose(vals, 1.0)


def test_eigen_diagonal_descending():
    vals, _ = sym_eigen(np.diag([4.0, 9.0]))
    assert np.allclose(vals, [9.0, 4.0])


def test_eigen_two_by_two_characteristic_roots():
    # det([[2-x,1],[1,2-x]]) = x^2 - 4x + 3, roots 3 and 1
    vals, vecs = sym_eigen(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert np.allclose(vals, [3.0, 1.0], atol=1e-12)
    assert np.max(np.abs(vecs @ vecs.T - np.eye(2))) <= 1e-10


def test_eigen_reconstruction_and_orthonormality():
    rng = np.random.default_rng(5)
    for d in range(1, 9):
        m = random_pd(rng, d) - 0.5 * np.eye(d)
        vals, vecs = sym_eigen(m)
        assert np.all(np.diff(vals) <= 1e-12)
        assert np.max(np.abs(vecs @ vecs.T - np.eye(d))) <= 1e-10
        recon = (vecs * vals) @ vecs.T
        assert np.max(np.abs(recon - m)) <= 1e-9 * max(1.0, np.max(np.abs(m)))


def test_eigen_rejects_nonsymmetric():
    with pytest.raises(ValueError, match="not symmetric"):
        sym_eigen(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_psd_power_diagonal_sqrt():
    assert np.allclose(psd_power(np.diag([4.0, 9.0]), 0.5), np.diag([2.0, 3.0]))


@pytest.mark.parametrize("p", [0.5, -0.5, -1.0])
def test_psd_power_identity_fixed_point(p):
    assert np.allclose(psd_power(np.eye(4), p), np.eye(4))


def test_psd_power_sqrt_squares_back():
    m = np.array([[2.0, 1.0], [1.0, 2.0]])
    root = psd_power(m, 0.5)
    assert np.allclose(root, [[1.36603, 0.36603], [0.36603, 1.36603]], atol=5e-6)
    assert np.max(np.abs(root @ root - m)) <= 1e-9


def test_psd_power_roundtrips_random():
    rng = np.random.default_rng(7)
    for d in range(1, 9):
        m = random_pd(rng, d)
        scale = np.max(np.abs(m))
        root = psd_power(m, 0.5)
        assert np.max(np.abs(root @ root - m)) <= 1e-9 * scale
        inv_root = psd_power(m, -0.5)
        assert np.max(np.abs(inv_root @ root - np.eye(d))) <= 1e-9
        assert np.max(np.abs(psd_power(m, -1.0) @ m - np.eye(d))) <= 1e-8


def test_psd_power_rejects_indefinite():
    with pytest.raises(ValueError, match="not PSD"):
        psd_power(np.diag([1.0, -1.0]), 0.5)


def test_psd_power_rejects_singular_for_negative_powers():
    with pytest.raises(ValueError, match="singular weight"):
        psd_power(np.diag([1.0, 1e-14]), -0.5)
    # nonnegative powers tolerate the same matrix
    psd_power(np.diag([1.0, 1e-14]), 0.5)


def test_psd_power_stack_matches_single():
    rng = np.random.default_rng(9)
    ms = np.array([random_pd(rng, 3) for _ in range(5)])
    stacked = psd_power_stack(ms, -0.5)
    for i in range(5):
        assert np.max(np.abs(stacked[i] - psd_power(ms[i], -0.5))) <= 1e-10


def test_operator_norm_diagonal():
    assert operator_norm(np.diag([2.0, 5.0])) == 5.0


def test_operator_norm_nilpotent_shift():
    assert abs(operator_norm(np.array([[0.0, 1.0], [0.0, 0.0]])) - 1.0) <= 1e-14


def test_operator_norm_matches_power_iteration():
    rng = np.random.default_rng(13)
    for _ in range(20):
        m = rng.standard_normal((3, 3))
        assert abs(operator_norm(m) - matrix_power_iteration_norm(m)) <= 1e-8 * operator_norm(m)


def test_hs_norm_and_trace_identity():
    assert abs(hs_norm(np.eye(3)) - np.sqrt(3.0)) <= 1e-15
    assert trace_of(np.eye(3)) == 3.0


def test_hs_norm_entrywise():
    assert abs(hs_norm(np.array([[1.0, 2.0], [3.0, 4.0]])) - np.sqrt(30.0)) <= 1e-14


def test_norm_comparisons():
    rng = np.random.default_rng(17)
    for _ in range(100):
        d = int(rng.integers(1, 6))
        m = rng.standard_normal((d, d))
        op, hs = operator_norm(m), hs_norm(m)
        assert op <= hs * (1 + 1e-12)
        assert hs <= np.sqrt(d) * op * (1 + 1e-12)
        assert abs(hs**2 - trace_of(m.T @ m)) <= 1e-10 * max(1.0, hs**2)


def test_operator_norm_submultiplicative():
    rng = np.random.default_rng(19)
    for _ in range(50):
        a, b = rng.standard_normal((2, 4, 4))
        assert operator_norm(a @ b) <= operator_norm(a) * operator_norm(b) * (1 + 1e-12)


def test_trace_similarity_invariance():
    rng = np.random.default_rng(23)
    for _ in range(30):
        d = int(rng.integers(2, 6))
        m = rng.standard_normal((d, d))
        p = rng.standard_normal((d, d)) + 2.0 * np.eye(d)
        sim = np.linalg.solve(p, m @ p)
        assert abs(trace_of(sim) - trace_of(m)) <= 1e-8 * max(1.0, abs(trace_of(m)))
