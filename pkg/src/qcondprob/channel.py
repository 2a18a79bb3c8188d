r"""Linear maps and quantum channels.

A map :math:`\Lambda: B(H_A) \to B(H_B)` is stored through its transfer
matrix ``S`` acting on row-major vectorizations, ``vec(Lambda(X)) = S vec(X)``,
so ``S`` has shape ``(dB**2, dA**2)`` and ``S[(b, b'), (i, j)]`` is the
``(b, b')`` entry of ``Lambda(|i><j|)``.

The conditional (Choi) operator uses the A (x) B ordering

.. math:: \pi_{B|A} = \sum_{ij} |i\rangle\langle j| \otimes \Lambda(|i\rangle\langle j|),

so it is a reshuffle of ``S``.  Channels are inverted from their conditional
operator with :math:`\Lambda(\rho) = \mathrm{Tr}_A[\pi_{B|A}(\rho^T\otimes I)]`,
transposition always being taken in the computational basis.
"""
from __future__ import annotations

import numpy as np

from . import tol
from .errors import NotConditional, NotPositive, NotTracePreserving, ShapeMismatch
from .linalg import partial_trace, psd_inv_sqrt, psd_sqrt
from .states import validate_density

__all__ = [
    "LinearMap",
    "Channel",
    "transfer_from_kraus",
    "choi_from_transfer",
    "transfer_from_choi",
    "kraus_from_choi",
    "transpose_map",
    "validate_conditional",
    "conditional_from_channel",
    "channel_from_conditional",
    "apply",
    "apply_conditional",
    "extend_apply",
    "dual",
    "unitalize",
    "reverse_channel",
    "compound_state",
]


def _swap(d: int) -> np.ndarray:
    """Index permutation taking vec(X) to vec(X^T)."""
    return np.arange(d * d).reshape(d, d).T.ravel()


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def transfer_from_kraus(kraus) -> np.ndarray:
    return sum(np.kron(k, k.conj()) for k in kraus)


def choi_from_transfer(transfer, dim_in: int, dim_out: int) -> np.ndarray:
    s4 = np.asarray(transfer).reshape(dim_out, dim_out, dim_in, dim_in)
    return s4.transpose(2, 0, 3, 1).reshape(dim_in * dim_out, dim_in * dim_out)


def transfer_from_choi(choi, dim_in: int, dim_out: int) -> np.ndarray:
    c4 = np.asarray(choi).reshape(dim_in, dim_out, dim_in, dim_out)
    return c4.transpose(1, 3, 0, 2).reshape(dim_out * dim_out, dim_in * dim_in)


def kraus_from_choi(choi, shape) -> list[np.ndarray]:
    """Kraus operators from a PSD conditional operator.

    Keeps eigenvalues above ``1e-10 * max eigenvalue``, so the number of
    operators is the numerical rank of ``choi``.
    """
    dA, dB = shape
    choi = np.asarray(choi, dtype=complex)
    h = (choi + choi.conj().T) / 2
    w, v = np.linalg.eigh(h)
    top = max(float(w[-1]), 0.0)
    scale = max(1.0, top)
    if w[0] < -tol.get(tol.POSITIVITY) * scale:
        raise NotPositive(f"conditional operator has eigenvalue {w[0]:.3e}")
    keep = w > tol.get(tol.KRAUS_RANK) * top
    return [np.sqrt(lam) * vec.reshape(dA, dB).T for lam, vec in zip(w[keep], v[:, keep].T)]


class LinearMap:
    """A linear map between matrix spaces, held as its transfer matrix.

    Not necessarily completely positive; ``completely_positive`` records what
    is known about it (``None`` when unknown).
    """

    def __init__(self, transfer, dim_in: int, dim_out: int | None = None, completely_positive: bool | None = None):
        dim_out = dim_in if dim_out is None else dim_out
        transfer = np.asarray(transfer, dtype=complex)
        if transfer.shape != (dim_out * dim_out, dim_in * dim_in):
            raise ShapeMismatch(
                f"transfer matrix of shape {transfer.shape} does not map {dim_in}x{dim_in} to {dim_out}x{dim_out}"
            )
        if not np.all(np.isfinite(transfer)):
            raise ValueError("transfer matrix has non-finite entries")
        self.dim_in = int(dim_in)
        self.dim_out = int(dim_out)
        self.transfer = _readonly(transfer)
        self.completely_positive = completely_positive

    @classmethod
    def from_function(cls, f, dim_in: int, dim_out: int | None = None, **kw) -> LinearMap:
        dim_out = dim_in if dim_out is None else dim_out
        cols = []
        for k in range(dim_in * dim_in):
            e = np.zeros(dim_in * dim_in, dtype=complex)
            e[k] = 1
            cols.append(np.asarray(f(e.reshape(dim_in, dim_in))).ravel())
        return cls(np.stack(cols, axis=1), dim_in, dim_out, **kw)

    @classmethod
    def from_kraus(cls, kraus) -> LinearMap:
        kraus = [np.asarray(k, dtype=complex) for k in kraus]
        dout, din = kraus[0].shape
        return cls(transfer_from_kraus(kraus), din, dout, completely_positive=True)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.shape != (self.dim_in, self.dim_in):
            raise ShapeMismatch(f"input of shape {x.shape}, map expects {(self.dim_in,) * 2}")
        return (self.transfer @ x.ravel()).reshape(self.dim_out, self.dim_out)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.dim_in, self.dim_out)

    @property
    def choi(self) -> np.ndarray:
        return choi_from_transfer(self.transfer, self.dim_in, self.dim_out)

    def compose(self, other: LinearMap) -> LinearMap:
        """``self o other``."""
        if other.dim_out != self.dim_in:
            raise ShapeMismatch(f"cannot compose {self.shape} after {other.shape}")
        cp = None
        if self.completely_positive and other.completely_positive:
            cp = True
        return LinearMap(self.transfer @ other.transfer, other.dim_in, self.dim_out, completely_positive=cp)

    def __matmul__(self, other: LinearMap) -> LinearMap:
        return self.compose(other)

    def power(self, r: int) -> LinearMap:
        if self.dim_in != self.dim_out:
            raise ShapeMismatch("only maps of a space to itself have powers")
        return LinearMap(np.linalg.matrix_power(self.transfer, r), self.dim_in, completely_positive=self.completely_positive)

    def trace_defect(self) -> float:
        """``max |Tr Lambda(E_ij) - delta_ij|``; zero for trace preserving maps."""
        tr_out = self.transfer.reshape(self.dim_out, self.dim_out, -1).trace(axis1=0, axis2=1)
        return float(np.abs(tr_out - np.eye(self.dim_in).ravel()).max())

    def unital_defect(self) -> float:
        return float(np.abs(self(np.eye(self.dim_in)) - np.eye(self.dim_out)).max())

    def is_trace_preserving(self, atol: float | None = None) -> bool:
        return self.trace_defect() <= (tol.get(tol.TP) if atol is None else atol)

    def is_unital(self, atol: float | None = None) -> bool:
        return self.unital_defect() <= (tol.get(tol.TP) if atol is None else atol)

    def distance(self, other: LinearMap) -> float:
        """Max-entry difference of transfer matrices."""
        if self.shape != other.shape:
            raise ShapeMismatch(f"{self.shape} vs {other.shape}")
        return float(np.abs(self.transfer - other.transfer).max())

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim_in={self.dim_in}, dim_out={self.dim_out})"


class Channel(LinearMap):
    """A CPTP map, holding Kraus, conditional (Choi) and transfer forms.

    All three are computed at construction and the instance is immutable.
    Build with ``Channel(kraus)``, :meth:`from_choi` or :meth:`from_transfer`.
    """

    def __init__(self, kraus):
        kraus = [_readonly(k) for k in kraus]
        if not kraus:
            raise ShapeMismatch("a channel needs at least one Kraus operator")
        dout, din = kraus[0].shape
        for k in kraus:
            if k.shape != (dout, din):
                raise ShapeMismatch(f"Kraus operators of mixed shapes {k.shape} and {(dout, din)}")
        super().__init__(transfer_from_kraus(kraus), din, dout, completely_positive=True)
        self.kraus = tuple(kraus)
        self._choi = _readonly(choi_from_transfer(self.transfer, din, dout))
        defect = float(np.abs(sum(k.conj().T @ k for k in kraus) - np.eye(din)).max())
        if defect > tol.get(tol.TP):
            raise NotTracePreserving(f"max |sum K^dag K - I| = {defect:.3e}")

    @property
    def choi(self) -> np.ndarray:
        return self._choi

    @classmethod
    def from_choi(cls, choi, shape) -> Channel:
        dA, dB = shape
        choi = np.asarray(choi, dtype=complex)
        if choi.shape != (dA * dB, dA * dB):
            raise ShapeMismatch(f"conditional operator {choi.shape} does not match shape {shape}")
        return cls(kraus_from_choi(choi, shape))

    @classmethod
    def from_transfer(cls, transfer, dim_in: int, dim_out: int | None = None) -> Channel:
        dim_out = dim_in if dim_out is None else dim_out
        return cls.from_choi(choi_from_transfer(transfer, dim_in, dim_out), (dim_in, dim_out))

    @classmethod
    def from_map(cls, m: LinearMap) -> Channel:
        return cls.from_transfer(m.transfer, m.dim_in, m.dim_out)


def transpose_map(d: int) -> LinearMap:
    """Transposition in the computational basis (positive, not CP for d > 1)."""
    return LinearMap(np.eye(d * d)[_swap(d)], d, d, completely_positive=(d == 1))


def validate_conditional(pi, shape) -> np.ndarray:
    """Check ``pi >= 0`` and ``Tr_B pi = I_A``; returns the Hermitian part."""
    dA, dB = shape
    pi = np.asarray(pi, dtype=complex)
    if pi.shape != (dA * dB, dA * dB):
        raise ShapeMismatch(f"operator {pi.shape} does not match shape {shape}")
    herm = float(np.abs(pi - pi.conj().T).max())
    if herm > tol.get(tol.HERMITIAN) * max(1.0, dA):
        raise NotConditional(f"not Hermitian: max |pi - pi^dag| = {herm:.3e}")
    pi = (pi + pi.conj().T) / 2
    scale = max(1.0, float(np.linalg.norm(pi, 2)))
    lo = float(np.linalg.eigvalsh(pi)[0])
    if lo < -tol.get(tol.POSITIVITY) * scale:
        raise NotConditional(f"not positive: min eigenvalue {lo:.3e}")
    dev = float(np.abs(partial_trace(pi, shape, "B") - np.eye(dA)).max())
    if dev > tol.get(tol.TP):
        raise NotConditional(f"Tr_B pi differs from I_A by {dev:.3e}")
    return pi


def conditional_from_channel(ch: LinearMap) -> np.ndarray:
    """``pi_{B|A} = sum_ij |i><j| (x) Lambda(|i><j|)``."""
    return np.array(ch.choi)


def channel_from_conditional(pi, shape) -> Channel:
    pi = validate_conditional(pi, shape)
    return Channel.from_choi(pi, shape)


def apply(ch: LinearMap, rho) -> np.ndarray:
    return ch(np.asarray(rho))


def apply_conditional(pi, shape, rho) -> np.ndarray:
    """``Tr_A[pi (rho^T (x) I_B)]``, the conditional-operator form of a channel."""
    dA, dB = shape
    rho = np.asarray(rho)
    if rho.shape != (dA, dA):
        raise ShapeMismatch(f"input {rho.shape}, expected {(dA, dA)}")
    return partial_trace(np.asarray(pi) @ np.kron(rho.T, np.eye(dB)), shape, "A")


def extend_apply(ch: LinearMap, rho, dim_c: int) -> np.ndarray:
    """``(id_C (x) Lambda) rho`` for ``rho`` on H_C (x) H_A."""
    rho = np.asarray(rho)
    dA, dB = ch.dim_in, ch.dim_out
    if rho.shape != (dim_c * dA, dim_c * dA):
        raise ShapeMismatch(f"state {rho.shape} does not match C={dim_c}, A={dA}")
    t = rho.reshape(dim_c, dA, dim_c, dA).transpose(0, 2, 1, 3).reshape(dim_c * dim_c, dA * dA)
    out = (t @ ch.transfer.T).reshape(dim_c, dim_c, dB, dB).transpose(0, 2, 1, 3)
    return out.reshape(dim_c * dB, dim_c * dB)


def dual(m: LinearMap) -> LinearMap:
    """The map with ``Tr[dual(a) rho] = Tr[a m(rho)]`` for all ``a``, ``rho``."""
    st = m.transfer.T
    return LinearMap(st[_swap(m.dim_in)][:, _swap(m.dim_out)], m.dim_out, m.dim_in, completely_positive=m.completely_positive)


def unitalize(ch: Channel) -> tuple[np.ndarray, LinearMap]:
    """``V = Lambda(I)`` and the unital CP map ``V^-1/2 Lambda(.) V^-1/2``.

    The second map is generally not trace preserving.  Raises
    :class:`~qcondprob.errors.NotFaithful` when ``V`` is singular.
    """
    v = ch(np.eye(ch.dim_in))
    v = (v + v.conj().T) / 2
    w = psd_inv_sqrt(v)
    tilde = LinearMap(np.kron(w, w.T) @ ch.transfer, ch.dim_in, ch.dim_out, completely_positive=True)
    return v, tilde


def reverse_channel(ch: Channel) -> Channel:
    """The channel ``sigma -> Lambda^#(V^-1/2 sigma V^-1/2)`` from B back to A.

    It is the dual of the unitalized map, so it is CPTP and sends ``V`` to
    ``I_A``.  Kraus operators are ``K_i^dag V^-1/2``.
    """
    v, _ = unitalize(ch)
    w = psd_inv_sqrt(v)
    return Channel([k.conj().T @ w for k in ch.kraus])


def compound_state(pi, shape, rho_a) -> np.ndarray:
    """``(rho_A^1/2 (x) I) pi (rho_A^1/2 (x) I)``.

    Its A marginal is ``rho_A`` and its B marginal is ``Lambda(rho_A^T)``.
    """
    dA, dB = shape
    rho_a = validate_density(rho_a)
    if rho_a.shape != (dA, dA):
        raise ShapeMismatch(f"marginal {rho_a.shape} does not match dA={dA}")
    s = np.kron(psd_sqrt(rho_a), np.eye(dB))
    return s @ np.asarray(pi) @ s
