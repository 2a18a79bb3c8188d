r"""Structural classification of channels and bipartite states.

QC / CQ / CC detection reduces to one question: does a family of operators
commute (as normal operators), and if so, what is a common eigenbasis?  A
channel is QC when every output is diagonal in one basis ``f``; it is CQ when
``Lambda o Delta_e = Lambda`` for a dephasing ``Delta_e``, which is the QC test
applied to the outputs of the dual map.  Bases are returned as unitary
matrices with the basis vectors in the columns.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import tol
from .channel import Channel, LinearMap, dual, extend_apply
from .errors import NotCC, NotQC, ShapeMismatch
from .linalg import is_psd, min_eigenvalue, partial_trace, partial_transpose
from .states import blocks, projectors, validate_basis

__all__ = [
    "EBStatus",
    "Witness",
    "CommonBasis",
    "common_eigenbasis",
    "hermitian_family",
    "is_qc",
    "is_cq",
    "is_cc",
    "ppt_choi",
    "HolevoForm",
    "holevo_form",
    "QCDecomposition",
    "qc_output_decomposition",
    "CCStateTest",
    "is_cc_state",
    "CCMembership",
    "cc_membership",
    "Classification",
    "classify",
    "DephasingGenerator",
    "decohere",
    "partial_decohere",
    "partial_decohere_limit",
]


class EBStatus(str, enum.Enum):
    EB = "EB"
    NOT_EB = "NotEB"
    UNDECIDED_PPT = "UndecidedPPT"


class Witness(NamedTuple):
    flag: bool
    basis: np.ndarray | None


@dataclass(frozen=True)
class CommonBasis:
    basis: np.ndarray
    residual: float
    condition: float


def hermitian_family(mats) -> list[np.ndarray]:
    """Hermitian and anti-Hermitian parts of each matrix, round-off dropped.

    A set of matrices is a commuting family of normal operators iff these
    Hermitian parts pairwise commute.  Parts below ``1e-12`` of the largest
    entry are treated as zero.
    """
    out = []
    mats = [np.asarray(m) for m in mats]
    scale = max((float(np.abs(m).max()) for m in mats), default=0.0)
    for m in mats:
        for h in ((m + m.conj().T) / 2, (m - m.conj().T) / 2j):
            if float(np.abs(h).max()) > 1e-12 * max(scale, 1e-300):
                out.append(h)
    return out


def _max_relative_commutator(family) -> float:
    norms = [float(np.linalg.norm(h, 2)) for h in family]
    worst = 0.0
    for a in range(len(family)):
        for b in range(a + 1, len(family)):
            c = family[a] @ family[b] - family[b] @ family[a]
            worst = max(worst, float(np.linalg.norm(c, 2)) / (norms[a] * norms[b]))
    return worst


def _canonical(basis: np.ndarray) -> np.ndarray:
    """Fix column phases; order columns like the identity when they are close to it."""
    b = np.array(basis, dtype=complex)
    peak = np.abs(b).argmax(axis=0)
    ph = b[peak, np.arange(b.shape[1])]
    b = b * (np.abs(ph) / ph)
    if len(set(peak.tolist())) == b.shape[1]:
        b = b[:, np.argsort(peak)]
    return b


def common_eigenbasis(family, dim: int, seed: int = 0, retries: int = 3) -> CommonBasis | None:
    """Diagonalize a random real combination of a commuting Hermitian family.

    Every member must come out diagonal within ``1e-8`` of its norm; a fresh
    combination is drawn up to ``retries`` times before giving up.
    """
    family = list(family)
    if not family:
        return CommonBasis(np.eye(dim, dtype=complex), 0.0, 1.0)
    rng = np.random.default_rng(seed)
    norms = [float(np.linalg.norm(h, 2)) for h in family]
    thresh = tol.get(tol.COMMUTE)
    for _ in range(retries):
        c = rng.normal(size=len(family))
        combo = sum(ci * h / n for ci, h, n in zip(c, family, norms))
        w, v = np.linalg.eigh((combo + combo.conj().T) / 2)
        worst = 0.0
        for h, n in zip(family, norms):
            d = v.conj().T @ h @ v
            off = d - np.diag(np.diagonal(d))
            worst = max(worst, float(np.abs(off).max()) / n)
        if worst <= thresh:
            spread = float(w[-1] - w[0])
            gaps = np.diff(w)
            gaps = gaps[gaps > 1e-10 * spread] if spread > 0 else gaps[:0]
            cond = spread / float(gaps.min()) if gaps.size else 1.0
            return CommonBasis(_canonical(v), worst, cond)
    return None


def _commuting_witness(mats, dim: int, seed: int) -> tuple[Witness, CommonBasis | None]:
    family = hermitian_family(mats)
    if _max_relative_commutator(family) > tol.get(tol.COMMUTE):
        return Witness(False, None), None
    cb = common_eigenbasis(family, dim, seed=seed)
    if cb is None:
        return Witness(False, None), None
    return Witness(True, cb.basis), cb


def _outputs(m: LinearMap) -> list[np.ndarray]:
    d = m.dim_out
    return [m.transfer[:, k].reshape(d, d) for k in range(m.dim_in**2)]


def is_qc(ch: LinearMap, seed: int = 0) -> Witness:
    """Are all outputs diagonal in one orthonormal basis ``f``?"""
    return _commuting_witness(_outputs(ch), ch.dim_out, seed)[0]


def is_cq(ch: LinearMap, seed: int = 0) -> Witness:
    """Is ``Lambda = Lambda o Delta_e`` for some basis ``e``?"""
    return _commuting_witness(_outputs(dual(ch)), ch.dim_in, seed)[0]


def _cc_transfer(t: np.ndarray, e: np.ndarray, f: np.ndarray) -> np.ndarray:
    # Lambda(|a><b|) = sum_jk t[k, j] conj(e[a, j]) e[b, j] |f_k><f_k|
    pf = projectors(f)
    s = np.einsum("kj,aj,bj,kxy->xyab", t, e.conj(), e, pf)
    dB, dA = pf.shape[1], e.shape[0]
    return s.reshape(dB * dB, dA * dA)


def is_cc(ch: LinearMap, seed: int = 0) -> tuple[bool, np.ndarray | None, np.ndarray | None, np.ndarray | None]:
    """``(flag, T, e, f)`` with ``T[k, j] = <f_k|Lambda(|e_j><e_j|)|f_k>``.

    ``T`` is column stochastic and reproduces the channel within 1e-9.
    """
    qc = is_qc(ch, seed)
    cq = is_cq(ch, seed)
    if not (qc.flag and cq.flag):
        return False, None, None, None
    e, f = cq.basis, qc.basis
    t = np.array([[np.real(f[:, k].conj() @ ch(np.outer(e[:, j], e[:, j].conj())) @ f[:, k])
                   for j in range(ch.dim_in)] for k in range(ch.dim_out)])
    resid = float(np.abs(_cc_transfer(t, e, f) - ch.transfer).max())
    if resid > tol.get(tol.TP):
        return False, None, None, None
    return True, t, e, f


def ppt_choi(ch: LinearMap) -> tuple[bool, EBStatus]:
    """Partial-transpose test on the conditional operator.

    PPT decides entanglement breaking exactly only when ``dA * dB <= 6``.
    """
    pt = partial_transpose(ch.choi, ch.shape, "A")
    flag = is_psd(pt)
    if not flag:
        return False, EBStatus.NOT_EB
    if ch.dim_in * ch.dim_out <= 6:
        return True, EBStatus.EB
    return True, EBStatus.UNDECIDED_PPT


@dataclass(frozen=True)
class HolevoForm:
    """``Lambda(rho) = sum_i Tr(rho F_i) R_i`` with ``R_i = sum_j p[j, i] |f_j><f_j|``."""

    effects: list
    cond_prob: np.ndarray
    basis: np.ndarray
    states: list = field(default_factory=list)

    @classmethod
    def qc(cls, effects, cond_prob, basis=None) -> HolevoForm:
        cond_prob = np.asarray(cond_prob, dtype=float)
        basis = np.eye(cond_prob.shape[0], dtype=complex) if basis is None else np.asarray(basis)
        pf = projectors(basis)
        states = [np.einsum("j,jab->ab", cond_prob[:, i], pf) for i in range(cond_prob.shape[1])]
        return cls([np.asarray(f) for f in effects], cond_prob, basis, states)

    def transfer(self) -> np.ndarray:
        return sum(np.outer(r.ravel(), f.T.ravel()) for f, r in zip(self.effects, self.states))


def holevo_form(ch: Channel, seed: int = 0) -> HolevoForm:
    """Holevo form of a QC channel with effects ``F_j = Lambda^#(|f_j><f_j|)``.

    The effects and ``p`` of a measure-and-prepare construction are not
    identifiable from the channel; this canonical form has ``p = I`` and
    ``F_j = sum_i p_{j|i} F_i`` for any such construction.
    """
    w = is_qc(ch, seed)
    if not w.flag:
        raise NotQC("outputs do not commute")
    dual_map = dual(ch)
    effects = []
    for j in range(ch.dim_out):
        g = dual_map(np.outer(w.basis[:, j], w.basis[:, j].conj()))
        effects.append((g + g.conj().T) / 2)
    form = HolevoForm.qc(effects, np.eye(ch.dim_out), w.basis)
    resid = float(np.abs(form.transfer() - ch.transfer).max())
    if resid > tol.get(tol.TP):
        raise NotQC(f"Holevo reconstruction residual {resid:.3e}")
    return form


@dataclass(frozen=True)
class QCDecomposition:
    """``(id_C (x) Lambda) rho_CA = sum_kl p_kl rho_l (x) |f_k><f_k|``."""

    sigma: list
    p_l: np.ndarray
    p_kl: np.ndarray
    rho_l: list
    residual: float
    min_sigma_eigenvalue: float
    flag: bool


def qc_output_decomposition(ch: Channel, rho_ca, dim_c: int, form: HolevoForm | None = None, seed: int = 0) -> QCDecomposition:
    """Decompose the output of a QC channel extended by the identity on C.

    ``sigma_l = Tr_A[rho_CA (I (x) F_l)]`` are positive and sum to ``rho_C``.
    Pass ``form`` to use a specific Holevo form instead of the canonical one.
    """
    form = holevo_form(ch, seed) if form is None else form
    rho_ca = np.asarray(rho_ca)
    dA = ch.dim_in
    if rho_ca.shape != (dim_c * dA, dim_c * dA):
        raise ShapeMismatch(f"state {rho_ca.shape} does not match C={dim_c}, A={dA}")
    sigma = [partial_trace(rho_ca @ np.kron(np.eye(dim_c), f), (dim_c, dA), "B") for f in form.effects]
    p_l = np.array([np.trace(s).real for s in sigma])
    p_kl = form.cond_prob * p_l[None, :]
    rho_l = [s / pl if pl > 1e-14 else None for s, pl in zip(sigma, p_l)]
    pf = projectors(form.basis)
    rebuilt = sum(form.cond_prob[k, l] * np.kron(sigma[l], pf[k])
                  for k in range(form.cond_prob.shape[0]) for l in range(len(sigma)))
    resid = float(np.abs(rebuilt - extend_apply(ch, rho_ca, dim_c)).max())
    lo = min(min_eigenvalue(s) for s in sigma)
    flag = resid <= tol.get(tol.TP) and lo >= -tol.get(tol.POSITIVITY) and bool(np.all(p_l <= 1 + tol.get(tol.TP)))
    return QCDecomposition(sigma, p_l, p_kl, rho_l, resid, lo, flag)


@dataclass(frozen=True)
class CCStateTest:
    flag: bool
    bases: tuple | None
    residual: float
    condition: float


def _swap_factors(rho: np.ndarray, shape) -> np.ndarray:
    d1, d2 = shape
    return rho.reshape(d1, d2, d1, d2).transpose(1, 0, 3, 2).reshape(d1 * d2, d1 * d2)


def is_cc_state(rho, shape, seed: int = 0) -> CCStateTest:
    """Is ``rho`` diagonal in a product basis ``c (x) e``?

    Both families of partial blocks must commute; the state is then dephased
    in the product of their common eigenbases and compared with itself.
    """
    rho = np.asarray(rho)
    d1, d2 = shape
    first = blocks(rho, shape).reshape(d2 * d2, d1, d1)
    second = blocks(_swap_factors(rho, shape), (d2, d1)).reshape(d1 * d1, d2, d2)
    w1, cb1 = _commuting_witness(list(first), d1, seed)
    w2, cb2 = _commuting_witness(list(second), d2, seed)
    if not (w1.flag and w2.flag):
        return CCStateTest(False, None, float("inf"), float("inf"))
    proj = [np.kron(p, q) for p in projectors(w1.basis) for q in projectors(w2.basis)]
    dephased = sum(p @ rho @ p for p in proj)
    resid = float(np.abs(dephased - rho).max())
    return CCStateTest(resid <= tol.get(tol.COMMUTE), (w1.basis, w2.basis), resid, max(cb1.condition, cb2.condition))


@dataclass(frozen=True)
class CCMembership:
    flag: bool
    commutator_norms: np.ndarray
    block_route: bool
    dephasing_route: bool
    agree: bool
    condition: float
    # is the actual output (id (x) Lambda) rho CC?  Equals ``flag`` when T has full column rank
    output_cc: bool


def cc_membership(ch: LinearMap, rho_ca, dim_c: int, seed: int = 0) -> CCMembership:
    """Does ``(id_C (x) Lambda) rho_CA`` come out CC for a CC channel?

    Two routes: the diagonal blocks of ``rho_CA`` in the channel's basis ``e``
    pairwise commute, or ``(id_C (x) P_A) rho_CA`` is a CC state.  Both are
    independent of the stochastic matrix ``T``; the direct test on the
    output is reported as well and can only be more permissive (a rank
    deficient ``T`` can merge non-commuting blocks).
    """
    flag, t, e, _ = is_cc(ch, seed)
    if not flag:
        raise NotCC("channel is not classical-classical")
    rho_ca = np.asarray(rho_ca)
    blk = blocks(rho_ca, (dim_c, ch.dim_in), e)
    diag = [blk[i, i] for i in range(ch.dim_in)]
    n = len(diag)
    norms = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            norms[i, j] = float(np.linalg.norm(diag[i] @ diag[j] - diag[j] @ diag[i], 2))
    # relative to the largest block, so blocks at round-off level cannot fail the test
    scale = max(float(np.linalg.norm(b, 2)) for b in diag) ** 2
    block_route = float(norms.max()) <= tol.get(tol.COMMUTE) * max(scale, 1e-300)
    gen = DephasingGenerator(e, 1.0)
    st = is_cc_state(partial_decohere_limit(gen, rho_ca, dim_c), (dim_c, ch.dim_in), seed)
    out = is_cc_state(extend_apply(ch, rho_ca, dim_c), (dim_c, ch.dim_out), seed)
    return CCMembership(block_route, norms, block_route, st.flag, block_route == st.flag, st.condition, out.flag)


@dataclass(frozen=True)
class Classification:
    is_unital: bool
    ppt: bool
    eb_status: EBStatus
    is_qc: bool
    f_basis: np.ndarray | None
    is_cq: bool
    e_basis: np.ndarray | None
    is_cc: bool
    cc_matrix: np.ndarray | None


def classify(ch: Channel, seed: int = 0) -> Classification:
    ppt, status = ppt_choi(ch)
    qc = is_qc(ch, seed)
    cq = is_cq(ch, seed)
    cc_flag, t, _, _ = is_cc(ch, seed) if (qc.flag and cq.flag) else (False, None, None, None)
    return Classification(
        is_unital=ch.dim_in == ch.dim_out and ch.is_unital(),
        ppt=ppt,
        eb_status=status,
        is_qc=qc.flag,
        f_basis=qc.basis,
        is_cq=cq.flag,
        e_basis=cq.basis,
        is_cc=cc_flag,
        cc_matrix=t,
    )


@dataclass(frozen=True)
class DephasingGenerator:
    """``L = gamma (id - P)`` with ``P`` the pinching in ``basis``."""

    basis: np.ndarray
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "basis", validate_basis(self.basis))
        if not self.gamma > 0:
            raise ValueError(f"rate must be positive, got {self.gamma}")

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def project(self, rho) -> np.ndarray:
        p = projectors(self.basis)
        return np.einsum("iab,bc,icd->ad", p, np.asarray(rho), p)

    def transfer(self) -> np.ndarray:
        """Transfer matrix of the generator, for use with ``scipy.linalg.expm``."""
        p = projectors(self.basis)
        proj = sum(np.kron(q, q.conj()) for q in p)
        return self.gamma * (np.eye(self.dim**2) - proj)


def _weight(gen: DephasingGenerator, t: float) -> float:
    t = float(t)
    if not t >= 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    return float(np.exp(-gen.gamma * t))


def decohere(gen: DephasingGenerator, rho, t: float) -> np.ndarray:
    """``e^{-gamma t} rho + (1 - e^{-gamma t}) P(rho)``; ``t = inf`` is allowed."""
    w = _weight(gen, t)
    rho = np.asarray(rho)
    return w * rho + (1 - w) * gen.project(rho)


def partial_decohere(gen: DephasingGenerator, rho_ca, dim_c: int, t: float) -> np.ndarray:
    """``id_C (x) exp(t L)`` applied to a state on H_C (x) H_A."""
    w = _weight(gen, t)
    rho_ca = np.asarray(rho_ca)
    return w * rho_ca + (1 - w) * partial_decohere_limit(gen, rho_ca, dim_c)


def partial_decohere_limit(gen: DephasingGenerator, rho_ca, dim_c: int) -> np.ndarray:
    """``(id_C (x) P_A) rho_CA``."""
    rho_ca = np.asarray(rho_ca)
    dA = gen.dim
    if rho_ca.shape != (dim_c * dA, dim_c * dA):
        raise ShapeMismatch(f"state {rho_ca.shape} does not match C={dim_c}, A={dA}")
    return sum(np.kron(np.eye(dim_c), p) @ rho_ca @ np.kron(np.eye(dim_c), p) for p in projectors(gen.basis))
