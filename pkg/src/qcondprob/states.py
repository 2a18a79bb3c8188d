"""Density operators, POVMs, block access, Schmidt decomposition, and random
instances.

States are plain complex ndarrays; the ``validate_*`` functions return a
cleaned (exactly Hermitian) copy or raise with the violated bound.  Bases are
unitary matrices whose *columns* are the basis vectors.  Random generators
take an explicit :class:`numpy.random.Generator`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tol
from .errors import IncompletePOVM, NotHermitian, NotNormalized, NotOrthonormal, NotPositive, ShapeMismatch, TraceNotOne
from .linalg import psd_inv_sqrt

__all__ = [
    "validate_density",
    "validate_povm",
    "validate_basis",
    "blocks",
    "from_blocks",
    "SchmidtDecomposition",
    "schmidt",
    "projectors",
    "ginibre",
    "random_density",
    "random_pure",
    "random_povm",
    "random_unitary",
    "random_pure_bipartite",
    "random_stochastic",
]


def _square(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {m.shape}")
    return m


def validate_density(m) -> np.ndarray:
    m = _square(m)
    scale = max(1.0, float(np.linalg.norm(m, 2)))
    herm_dev = float(np.abs(m - m.conj().T).max())
    if herm_dev > tol.get(tol.HERMITIAN) * scale:
        raise NotHermitian(f"max |rho - rho^dag| = {herm_dev:.3e}")
    h = (m + m.conj().T) / 2
    lo = float(np.linalg.eigvalsh(h)[0])
    if lo < -tol.get(tol.POSITIVITY) * scale:
        raise NotPositive(f"min eigenvalue {lo:.3e}")
    tr = float(np.trace(h).real)
    if abs(tr - 1) > tol.get(tol.TRACE):
        raise TraceNotOne(f"trace {tr!r} differs from 1 by {abs(tr - 1):.3e}")
    return h


def validate_povm(effects) -> list[np.ndarray]:
    effects = [_square(f) for f in effects]
    if not effects:
        raise ShapeMismatch("a POVM needs at least one effect")
    d = effects[0].shape[0]
    out = []
    for k, f in enumerate(effects):
        if f.shape != (d, d):
            raise ShapeMismatch(f"effect {k} has shape {f.shape}, expected {(d, d)}")
        dev = float(np.abs(f - f.conj().T).max())
        if dev > tol.get(tol.HERMITIAN):
            raise NotHermitian(f"effect {k}: max |F - F^dag| = {dev:.3e}")
        f = (f + f.conj().T) / 2
        lo = float(np.linalg.eigvalsh(f)[0])
        if lo < -tol.get(tol.POSITIVITY):
            raise NotPositive(f"effect {k}: min eigenvalue {lo:.3e}")
        out.append(f)
    dev = float(np.abs(sum(out) - np.eye(d)).max())
    if dev > tol.get(tol.TP):
        raise IncompletePOVM(f"effects sum to identity only within {dev:.3e}")
    return out


def validate_basis(basis) -> np.ndarray:
    """Return ``basis`` (columns = vectors) after checking orthonormality."""
    b = _square(basis)
    dev = float(np.abs(b.conj().T @ b - np.eye(b.shape[0])).max())
    if dev > tol.get(tol.ORTHONORMAL):
        raise NotOrthonormal(f"max |B^dag B - I| = {dev:.3e}")
    return b


def projectors(basis) -> np.ndarray:
    """Stack of rank-one projectors ``|e_i><e_i|``, shape ``(d, d, d)``."""
    b = np.asarray(basis)
    return np.einsum("ai,bi->iab", b, b.conj())


def blocks(rho, shape, basis=None) -> np.ndarray:
    """Blocks ``rho_ij`` of ``rho = sum_ij rho_ij (x) |e_i><e_j|``.

    The basis acts on the *second* factor, the blocks live on the first.
    Returns an array of shape ``(d2, d2, d1, d1)``.
    """
    rho = np.asarray(rho)
    d1, d2 = (int(x) for x in shape)
    if rho.shape != (d1 * d2, d1 * d2):
        raise ShapeMismatch(f"expected {(d1 * d2,) * 2} for shape {shape}, got {rho.shape}")
    e = np.eye(d2) if basis is None else validate_basis(basis)
    t = rho.reshape(d1, d2, d1, d2)
    # rho_ij = (I (x) <e_i|) rho (I (x) |e_j>)
    return np.einsum("ai,xayb,bj->ijxy", e.conj(), t, e)


def from_blocks(blk, basis=None) -> np.ndarray:
    """Inverse of :func:`blocks`."""
    blk = np.asarray(blk)
    d2, _, d1, _ = blk.shape
    e = np.eye(d2) if basis is None else np.asarray(basis)
    t = np.einsum("ai,ijxy,bj->xayb", e, blk, e.conj())
    return t.reshape(d1 * d2, d1 * d2)


@dataclass(frozen=True)
class SchmidtDecomposition:
    """``psi = sum_k coefficients[k] * left[:, k] (x) right[:, k]``."""

    coefficients: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def vector(self) -> np.ndarray:
        return np.einsum("k,ak,bk->ab", self.coefficients, self.left, self.right).ravel()


def schmidt(psi, shape, cutoff: float = 1e-12) -> SchmidtDecomposition:
    psi = np.asarray(psi, dtype=complex).ravel()
    d1, d2 = (int(x) for x in shape)
    if psi.size != d1 * d2:
        raise ShapeMismatch(f"vector of length {psi.size} does not match shape {shape}")
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1) > tol.get(tol.TRACE):
        raise NotNormalized(f"||psi|| = {norm!r}")
    u, s, vh = np.linalg.svd(psi.reshape(d1, d2), full_matrices=False)
    keep = s > cutoff
    return SchmidtDecomposition(coefficients=s[keep], left=u[:, keep], right=vh[keep].T)


def ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))


def random_density(rng: np.random.Generator, dim: int, rank: int | None = None) -> np.ndarray:
    g = ginibre(rng, dim, dim if rank is None else rank)
    rho = g @ g.conj().T
    rho = rho / np.trace(rho).real
    return (rho + rho.conj().T) / 2


def random_pure(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = ginibre(rng, dim, 1)[:, 0]
    return v / np.linalg.norm(v)


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    q, r = np.linalg.qr(ginibre(rng, dim, dim))
    ph = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * ph


def random_povm(rng: np.random.Generator, dim: int, n_effects: int) -> list[np.ndarray]:
    ps = []
    for _ in range(n_effects):
        g = ginibre(rng, dim, dim)
        ps.append(g @ g.conj().T)
    s_inv = psd_inv_sqrt(sum(ps))
    out = []
    for p in ps:
        f = s_inv @ p @ s_inv
        out.append((f + f.conj().T) / 2)
    return out


def random_pure_bipartite(rng: np.random.Generator, shape) -> np.ndarray:
    d1, d2 = shape
    return random_pure(rng, d1 * d2)


def random_stochastic(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Column-stochastic ``rows x cols`` matrix with Dirichlet(1) columns."""
    return rng.dirichlet(np.ones(rows), size=cols).T
