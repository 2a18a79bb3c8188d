"""Standard channels and measure-and-prepare constructors.

Stochastic matrices are column stochastic: ``p[j, i]`` is the probability of
outcome ``j`` given ``i``.
"""
from __future__ import annotations

import numpy as np

from . import tol
from .channel import Channel
from .errors import NotUnitary, ShapeMismatch
from .states import ginibre, projectors, validate_basis, validate_density, validate_povm

__all__ = [
    "identity_channel",
    "unitary_channel",
    "constant_channel",
    "depolarizing_channel",
    "dephasing_channel",
    "measure_prepare_channel",
    "qc_channel",
    "cq_channel",
    "cc_channel",
    "check_stochastic",
    "random_channel",
]


def identity_channel(d: int) -> Channel:
    return Channel([np.eye(d)])


def unitary_channel(u) -> Channel:
    u = np.asarray(u, dtype=complex)
    dev = float(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max())
    if dev > tol.get(tol.ORTHONORMAL):
        raise NotUnitary(f"max |U^dag U - I| = {dev:.3e}")
    return Channel([u])


def constant_channel(sigma, dim_in: int) -> Channel:
    """``rho -> sigma Tr(rho)``."""
    sigma = validate_density(sigma)
    return measure_prepare_channel([np.eye(dim_in)], [sigma])


def depolarizing_channel(d: int, p: float) -> Channel:
    """``rho -> (1 - p) rho + p Tr(rho) I/d`` for ``0 <= p <= 1 + 1/(d^2 - 1)``."""
    pi = (1 - p) * _bell(d) + p * np.eye(d * d) / d
    return Channel.from_choi(pi, (d, d))


def _bell(d: int) -> np.ndarray:
    v = np.eye(d).ravel()
    return np.outer(v, v)


def dephasing_channel(d: int, basis=None) -> Channel:
    """Complete dephasing ``rho -> sum_i P_i rho P_i`` in ``basis`` (columns)."""
    e = np.eye(d) if basis is None else validate_basis(basis)
    return Channel(list(projectors(e)))


def measure_prepare_channel(effects, states) -> Channel:
    """``rho -> sum_i Tr(rho F_i) R_i`` via its conditional operator ``sum F_i^T (x) R_i``."""
    effects = validate_povm(effects)
    states = [validate_density(r) for r in states]
    if len(effects) != len(states):
        raise ShapeMismatch(f"{len(effects)} effects but {len(states)} states")
    dA, dB = effects[0].shape[0], states[0].shape[0]
    pi = sum(np.kron(f.T, r) for f, r in zip(effects, states))
    return Channel.from_choi(pi, (dA, dB))


def check_stochastic(p, atol: float | None = None) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    atol = tol.get(tol.TP) if atol is None else atol
    if p.ndim != 2:
        raise ShapeMismatch(f"stochastic matrix must be 2-d, got shape {p.shape}")
    if p.min(initial=0.0) < -atol:
        raise ValueError(f"stochastic matrix has negative entry {p.min():.3e}")
    dev = float(np.abs(p.sum(axis=0) - 1).max())
    if dev > atol:
        raise ValueError(f"columns sum to one only within {dev:.3e}")
    return p


def qc_channel(effects, p, f_basis=None) -> Channel:
    """``rho -> sum_ij p[j, i] Tr(rho F_i) |f_j><f_j|``."""
    p = check_stochastic(p)
    dB = p.shape[0]
    f = np.eye(dB) if f_basis is None else validate_basis(f_basis)
    pf = projectors(f)
    states = [np.einsum("j,jab->ab", p[:, i], pf) for i in range(p.shape[1])]
    return measure_prepare_channel(effects, states)


def cq_channel(q, states, e_basis=None) -> Channel:
    """``rho -> sum_ij q[j, i] <e_i|rho|e_i> R_j``."""
    q = check_stochastic(q)
    dA = q.shape[1]
    e = np.eye(dA) if e_basis is None else validate_basis(e_basis)
    states = [validate_density(r) for r in states]
    mixed = [sum(q[j, i] * states[j] for j in range(q.shape[0])) for i in range(dA)]
    return measure_prepare_channel(list(projectors(e)), mixed)


def cc_channel(t, e_basis=None, f_basis=None) -> Channel:
    """Classical channel ``T`` embedded as ``rho -> sum_ij T[j, i] <e_i|rho|e_i> |f_j><f_j|``."""
    t = check_stochastic(t)
    dB, dA = t.shape
    f = np.eye(dB) if f_basis is None else validate_basis(f_basis)
    return cq_channel(t, list(projectors(f)), e_basis)


def random_channel(rng: np.random.Generator, dim_in: int, dim_out: int | None = None, rank: int | None = None) -> Channel:
    """Channel whose stacked Kraus operators form a random isometry."""
    dim_out = dim_in if dim_out is None else dim_out
    rank = dim_in * dim_out if rank is None else rank
    q, r = np.linalg.qr(ginibre(rng, dim_out * rank, dim_in))
    q = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
    return Channel([q[k * dim_out:(k + 1) * dim_out] for k in range(rank)])
