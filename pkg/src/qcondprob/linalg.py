"""Dense complex linear algebra on bipartite operators.

Operators on H_A (x) H_B are plain square ndarrays of side ``dA*dB`` with the
A index major, i.e. row ``i*dB + k`` belongs to ``|i>_A (x) |k>_B``.  A
bipartite shape is the tuple ``(dA, dB)``; a side is ``"A"`` or ``"B"``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import tol
from .errors import NonDiagonalizable, NotFaithful, NotHermitian, NotPositive, ShapeMismatch

__all__ = [
    "EigenSystem",
    "kron",
    "partial_trace",
    "partial_transpose",
    "dagger",
    "is_hermitian",
    "eig_hermitian",
    "eig_general",
    "psd_sqrt",
    "psd_inv_sqrt",
    "psd_power",
    "min_eigenvalue",
    "is_psd",
    "positivity_threshold",
    "commutator_norm",
    "trace_norm",
]


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues with right (and optionally left) eigenvectors as columns.

    For :func:`eig_general` the left vectors are biorthonormal to the right
    ones: ``left[:, a].conj() @ right[:, b] == delta_ab``.
    """

    values: np.ndarray
    right: np.ndarray
    left: np.ndarray | None = None
    condition: float = 1.0


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a), np.asarray(b))


def _check_shape(m: np.ndarray, shape) -> tuple[int, int]:
    dA, dB = (int(x) for x in shape)
    if dA < 1 or dB < 1:
        raise ShapeMismatch(f"dimensions must be positive, got {shape}")
    n = dA * dB
    if m.ndim != 2 or m.shape != (n, n):
        raise ShapeMismatch(f"expected a {n}x{n} matrix for shape {shape}, got {m.shape}")
    return dA, dB


def partial_trace(m, shape, side: str = "B") -> np.ndarray:
    """Trace out subsystem ``side`` of an operator on H_A (x) H_B."""
    m = np.asarray(m)
    dA, dB = _check_shape(m, shape)
    t = m.reshape(dA, dB, dA, dB)
    if side == "B":
        return np.einsum("ikjk->ij", t)
    if side == "A":
        return np.einsum("ikil->kl", t)
    raise ValueError(f"side must be 'A' or 'B', got {side!r}")


def partial_transpose(m, shape, side: str = "B") -> np.ndarray:
    """Transpose subsystem ``side`` in the computational basis."""
    m = np.asarray(m)
    dA, dB = _check_shape(m, shape)
    t = m.reshape(dA, dB, dA, dB)
    if side == "A":
        t = t.transpose(2, 1, 0, 3)
    elif side == "B":
        t = t.transpose(0, 3, 2, 1)
    else:
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    return t.reshape(dA * dB, dA * dB)


def dagger(m) -> np.ndarray:
    return np.asarray(m).conj().T


def _scale_of(m: np.ndarray) -> float:
    return max(1.0, float(np.linalg.norm(m, 2))) if m.size else 1.0


def is_hermitian(m, atol: float | None = None) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    atol = tol.get(tol.HERMITIAN) if atol is None else atol
    return float(np.abs(m - m.conj().T).max(initial=0.0)) <= atol * _scale_of(m)


def _require_hermitian(m: np.ndarray) -> np.ndarray:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {m.shape}")
    dev = float(np.abs(m - m.conj().T).max(initial=0.0))
    if dev > tol.get(tol.HERMITIAN) * _scale_of(m):
        raise NotHermitian(f"max |m - m^dag| = {dev:.3e}")
    return (m + m.conj().T) / 2


def eig_hermitian(m) -> EigenSystem:
    """Ascending real eigenvalues and orthonormal eigenvectors."""
    h = _require_hermitian(np.asarray(m, dtype=complex))
    w, v = np.linalg.eigh(h)
    return EigenSystem(values=w, right=v, left=v)


def eig_general(m, cond_max: float | None = None) -> EigenSystem:
    """Eigendecomposition of a general square matrix.

    Right eigenvectors are normalized to unit 2-norm.  Left eigenvectors are
    the rows of the inverse eigenvector matrix (conjugated), which makes them
    biorthonormal to the right ones even inside degenerate eigenspaces.

    Raises
    ------
    NonDiagonalizable
        If the condition number of the right eigenvector matrix exceeds
        ``cond_max`` (default 1e8).
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {m.shape}")
    cond_max = tol.get(tol.NONDIAG_COND) if cond_max is None else cond_max
    w, vr = scipy.linalg.eig(m)
    vr = vr / np.linalg.norm(vr, axis=0)
    cond = float(np.linalg.cond(vr))
    if not np.isfinite(cond) or cond > cond_max:
        raise NonDiagonalizable(f"eigenvector condition number {cond:.3e} exceeds {cond_max:.1e}")
    left = np.linalg.inv(vr).conj().T
    return EigenSystem(values=w, right=vr, left=left, condition=cond)


def positivity_threshold(m) -> float:
    return tol.get(tol.POSITIVITY) * _scale_of(np.asarray(m))


def min_eigenvalue(m) -> float:
    m = np.asarray(m)
    return float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])


def is_psd(m) -> bool:
    m = np.asarray(m)
    return is_hermitian(m) and min_eigenvalue(m) >= -positivity_threshold(m)


def psd_power(m, power: float) -> np.ndarray:
    """``m**power`` for a Hermitian PSD matrix; negative powers need ``m > 0``."""
    h = _require_hermitian(np.asarray(m, dtype=complex))
    w, v = np.linalg.eigh(h)
    if power < 0:
        if w[0] < tol.get(tol.FAITHFUL):
            raise NotFaithful(f"min eigenvalue {w[0]:.3e} below faithfulness threshold {tol.get(tol.FAITHFUL):.1e}")
    elif w[0] < -positivity_threshold(h):
        raise NotPositive(f"min eigenvalue {w[0]:.3e}")
    w = np.clip(w, 0.0, None)
    return (v * w**power) @ v.conj().T


def psd_sqrt(m) -> np.ndarray:
    return psd_power(m, 0.5)


def psd_inv_sqrt(m) -> np.ndarray:
    return psd_power(m, -0.5)


def commutator_norm(x, y) -> float:
    x, y = np.asarray(x), np.asarray(y)
    return float(np.linalg.norm(x @ y - y @ x, 2))


def trace_norm(m) -> float:
    return float(np.linalg.svd(np.asarray(m), compute_uv=False).sum())
