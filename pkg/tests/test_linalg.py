import numpy as np
import pytest

from qcondprob import tol
from qcondprob.errors import NonDiagonalizable, NotFaithful, NotHermitian, NotPositive, ShapeMismatch
from qcondprob.linalg import (
    commutator_norm,
    eig_general,
    eig_hermitian,
    is_psd,
    kron,
    partial_trace,
    partial_transpose,
    psd_inv_sqrt,
    psd_power,
    psd_sqrt,
    trace_norm,
)
from qcondprob.states import ginibre, random_density


def kron_loop(a, b):
    ra, ca = a.shape
    rb, cb = b.shape
    out = np.zeros((ra * rb, ca * cb), dtype=complex)
    for i in range(ra):
        for j in range(ca):
            for k in range(rb):
                for l in range(cb):
                    out[i * rb + k, j * cb + l] = a[i, j] * b[k, l]
    return out


def ptrace_loop(m, dA, dB, side):
    if side == "B":
        out = np.zeros((dA, dA), dtype=complex)
        for i in range(dA):
            for j in range(dA):
                for k in range(dB):
                    out[i, j] += m[i * dB + k, j * dB + k]
    else:
        out = np.zeros((dB, dB), dtype=complex)
        for k in range(dB):
            for l in range(dB):
                for i in range(dA):
                    out[k, l] += m[i * dB + k, i * dB + l]
    return out


@pytest.mark.parametrize("shape", [(2, 2), (2, 3), (3, 2), (3, 4)])
def test_kron_matches_index_loop(shape):
    rng = np.random.default_rng(0)
    a = ginibre(rng, *shape)
    b = ginibre(rng, shape[1], shape[0])
    assert np.abs(kron(a, b) - kron_loop(a, b)).max() < 1e-14


@pytest.mark.parametrize("dA,dB", [(2, 2), (2, 3), (3, 2), (4, 3)])
def test_partial_trace_matches_index_loop(dA, dB):
    rng = np.random.default_rng(dA * 10 + dB)
    m = ginibre(rng, dA * dB, dA * dB)
    for side in "AB":
        assert np.abs(partial_trace(m, (dA, dB), side) - ptrace_loop(m, dA, dB, side)).max() < 1e-13


def test_partial_trace_of_product():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a = random_density(rng, 3)
        b = random_density(rng, 2)
        ab = np.kron(a, b)
        assert np.abs(partial_trace(ab, (3, 2), "B") - a).max() < 1e-14
        assert np.abs(partial_trace(ab, (3, 2), "A") - b).max() < 1e-14


def test_partial_trace_rejects_bad_shape():
    with pytest.raises(ShapeMismatch):
        partial_trace(np.eye(6), (2, 2))
    with pytest.raises(ValueError):
        partial_trace(np.eye(4), (2, 2), "C")


def test_partial_transpose_product_and_involution():
    rng = np.random.default_rng(2)
    a, b = ginibre(rng, 2, 2), ginibre(rng, 3, 3)
    ab = np.kron(a, b)
    assert np.abs(partial_transpose(ab, (2, 3), "A") - np.kron(a.T, b)).max() < 1e-14
    assert np.abs(partial_transpose(ab, (2, 3), "B") - np.kron(a, b.T)).max() < 1e-14
    m = ginibre(rng, 6, 6)
    for side in "AB":
        assert np.abs(partial_transpose(partial_transpose(m, (2, 3), side), (2, 3), side) - m).max() == 0
    full = partial_transpose(partial_transpose(m, (2, 3), "A"), (2, 3), "B")
    assert np.abs(full - m.T).max() == 0


def test_bell_state_partial_transpose_has_negative_eigenvalue():
    v = np.array([1, 0, 0, 1]) / np.sqrt(2)
    pt = partial_transpose(np.outer(v, v), (2, 2))
    assert abs(np.linalg.eigvalsh(pt)[0] + 0.5) < 1e-14


def test_eig_hermitian_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        eig_hermitian(np.array([[1, 1], [0, 1]]))
    es = eig_hermitian(np.diag([3.0, 1.0]))
    assert np.abs(es.values - [1, 3]).max() == 0


def test_eig_general_companion_matrix():
    # roots of (x - 1)(x - 0.5)(x + 0.25)
    roots = np.array([1.0, 0.5, -0.25])
    c = np.poly(roots)
    comp = np.zeros((3, 3))
    comp[0] = -c[1:]
    comp[1, 0] = comp[2, 1] = 1
    es = eig_general(comp)
    assert np.abs(np.sort(es.values.real) - np.sort(roots)).max() < 1e-12
    assert np.abs(comp @ es.right - es.right * es.values).max() < 1e-12
    assert np.abs(es.left.conj().T @ es.right - np.eye(3)).max() < 1e-12


def test_eig_general_jordan_block_raises():
    with pytest.raises(NonDiagonalizable):
        eig_general(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(NonDiagonalizable):
        eig_general(np.array([[0.5, 1, 0], [0, 0.5, 1], [0, 0, 0.5]]))


def test_eig_general_degenerate_but_diagonalizable():
    rng = np.random.default_rng(3)
    p = ginibre(rng, 4, 4)
    m = p @ np.diag([1, 1, 0.3, 0.3]) @ np.linalg.inv(p)
    es = eig_general(m)
    assert np.abs(es.left.conj().T @ es.right - np.eye(4)).max() < 1e-10
    recon = es.right @ np.diag(es.values) @ es.left.conj().T
    assert np.abs(recon - m).max() < 1e-10


def test_psd_powers():
    rng = np.random.default_rng(4)
    for _ in range(20):
        rho = random_density(rng, 3)
        s = psd_sqrt(rho)
        assert np.abs(s @ s - rho).max() < 1e-13
        w = psd_inv_sqrt(rho)
        assert np.abs(w @ rho @ w - np.eye(3)).max() < 1e-9
        assert np.abs(psd_power(rho, 1.0) - rho).max() < 1e-13


def test_psd_power_errors():
    with pytest.raises(NotFaithful):
        psd_inv_sqrt(np.diag([1.0, 0.0]))
    with pytest.raises(NotFaithful):
        psd_inv_sqrt(np.diag([1.0, 1e-9]))
    with pytest.raises(NotPositive):
        psd_sqrt(np.diag([1.0, -0.1]))


def test_is_psd_threshold_and_tolerance_scale():
    m = np.diag([1.0, -5e-9])
    assert not is_psd(m)
    with tol.tolerance_scale(10):
        assert is_psd(m)
    assert not is_psd(m)
    with pytest.raises(ValueError):
        with tol.tolerance_scale(0):
            pass


def test_norms():
    x = np.array([[0, 1], [1, 0]])
    z = np.diag([1, -1])
    assert abs(commutator_norm(x, z) - 2) < 1e-14
    assert abs(trace_norm(np.diag([0.5, -0.25])) - 0.75) < 1e-15
