r"""Spectral analysis of positive trace-preserving maps and broadcast states.

The central object is ``Lambda^tau = Lambda o T`` (``T`` = transposition in
the computational basis).  Its Perron-Frobenius fixed point ``rho*`` is
broadcast by the compound state ``(rho*^1/2 (x) I) pi (rho*^1/2 (x) I)``,
whose two marginals both equal ``rho*``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import tol
from .channel import Channel, LinearMap, _swap, compound_state
from .errors import ConflictingWitness, NonDiagonalizable, NotPrimitive, NotUnitary, ShapeMismatch, ValidationFailed
from .families import constant_channel
from .linalg import eig_general, partial_trace, trace_norm
from .states import ginibre, random_pure

__all__ = [
    "lambda_tau",
    "lambda_tau_u",
    "validate_positive_tp",
    "FixedPoint",
    "fixed_point",
    "power_fixed_point",
    "SpectralReport",
    "spectral_report",
    "DampingBasis",
    "damping_basis",
    "conditional_expansion",
    "BroadcastCertificate",
    "broadcast_state",
    "spectrum_broadcast",
    "asymptotic_channel",
    "convergence_errors",
    "fit_decay_ratio",
    "convergence_bound",
]

# a sampled output counts as strictly positive above this normalized min eigenvalue
SAMPLE_POSITIVE = 1e-10


def lambda_tau(ch: LinearMap) -> LinearMap:
    """``rho -> Lambda(rho^T)``; positive and trace preserving, generally not CP."""
    return LinearMap(ch.transfer[:, _swap(ch.dim_in)], ch.dim_in, ch.dim_out)


def lambda_tau_u(ch: LinearMap, u) -> LinearMap:
    """``rho -> U* Lambda(rho^T) U^T``."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (ch.dim_out, ch.dim_out):
        raise ShapeMismatch(f"unitary {u.shape} does not act on the output dimension {ch.dim_out}")
    dev = float(np.abs(u.conj().T @ u - np.eye(ch.dim_out)).max())
    if dev > tol.get(tol.ORTHONORMAL):
        raise NotUnitary(f"max |U^dag U - I| = {dev:.3e}")
    if np.array_equal(u, np.eye(ch.dim_out)):
        return lambda_tau(ch)
    return LinearMap(np.kron(u.conj(), u) @ ch.transfer[:, _swap(ch.dim_in)], ch.dim_in, ch.dim_out)


def _stack_apply(transfer: np.ndarray, mats: np.ndarray) -> np.ndarray:
    n, d, _ = mats.shape
    return (mats.reshape(n, d * d) @ transfer.T).reshape(n, d, d)


def _min_eigs(mats: np.ndarray) -> np.ndarray:
    h = (mats + mats.conj().transpose(0, 2, 1)) / 2
    tr = np.trace(h, axis1=1, axis2=2).real
    return np.linalg.eigvalsh(h)[:, 0] / tr


def _all_positive(mats: np.ndarray, threshold: float) -> bool:
    """``min eig(A)/Tr A > threshold`` for every matrix, via Cholesky of the shifted stack."""
    h = (mats + mats.conj().transpose(0, 2, 1)) / 2
    tr = np.trace(h, axis1=1, axis2=2).real
    shifted = h - (threshold * tr)[:, None, None] * np.eye(h.shape[1])
    try:
        np.linalg.cholesky(shifted)
    except np.linalg.LinAlgError:
        return False
    return True


def _random_pure_stack(rng: np.random.Generator, d: int, n: int) -> np.ndarray:
    vs = ginibre(rng, n, d)
    vs /= np.linalg.norm(vs, axis=1, keepdims=True)
    return vs[:, :, None] * vs[:, None, :].conj()


def validate_positive_tp(m: LinearMap, seed: int = 0, samples: int = 20) -> None:
    """Raise :class:`ValidationFailed` unless ``m`` is TP and maps sampled pure states to PSD."""
    if m.dim_in != m.dim_out:
        raise ShapeMismatch(f"fixed points need a map of a space to itself, got {m.shape}")
    if not m.is_trace_preserving():
        raise ValidationFailed(f"map is not trace preserving (defect {m.trace_defect():.3e})")
    rng = np.random.default_rng(seed)
    out = _stack_apply(m.transfer, _random_pure_stack(rng, m.dim_in, samples))
    herm = float(np.abs(out - out.conj().transpose(0, 2, 1)).max())
    if herm > tol.get(tol.HERMITIAN):
        raise ValidationFailed(f"map output not Hermitian (deviation {herm:.3e})")
    lo = float(_min_eigs(out).min())
    if lo < -tol.get(tol.POSITIVITY):
        raise ValidationFailed(f"map sends a pure state to an operator with eigenvalue {lo:.3e}")


@dataclass(frozen=True)
class FixedPoint:
    rho: np.ndarray
    unique: bool
    fixed_space_dim: int
    residual: float
    method: str
    # max entry distance between the eigensolver and power-iteration fixed points
    route_agreement: float


def _hermitian_unit_trace(x: np.ndarray) -> np.ndarray:
    x = x / np.trace(x)
    return (x + x.conj().T) / 2


def power_fixed_point(m: LinearMap, max_iter: int = 100_000, step_tol: float = 1e-12) -> tuple[np.ndarray, int]:
    """Iterate the lazy map ``(id + m)/2`` from ``I/d``.

    The lazy map has the same fixed points, and every peripheral eigenvalue
    other than 1 is pulled strictly inside the unit disc, so the iterates
    converge to the same limit a Cesaro average would, but geometrically.
    Returns the limit and the number of steps used.
    """
    d = m.dim_in
    lazy = (m.transfer + np.eye(d * d)) / 2
    x = (np.eye(d) / d).ravel().astype(complex)
    for k in range(1, max_iter + 1):
        nxt = lazy @ x
        step = float(np.abs(nxt - x).max())
        x = nxt
        if step <= step_tol:
            break
    return _hermitian_unit_trace(x.reshape(d, d)), k


def _sorted_eigs(transfer: np.ndarray):
    w, v = scipy.linalg.eig(transfer)
    near_one = np.abs(w - 1) <= tol.get(tol.PERIPHERAL)
    order = np.lexsort((-np.round(np.angle(w), 12), -np.round(np.abs(w), 12), ~near_one))
    return w[order], v[:, order], int(near_one.sum())


def fixed_point(m: LinearMap, seed: int = 0, max_iter: int = 100_000, step_tol: float = 1e-12, validate: bool = True) -> FixedPoint:
    """Normalized fixed point of a positive trace-preserving map.

    The eigenvector of the transfer matrix at eigenvalue 1 is the primary
    route; when that eigenvalue is degenerate the power-iteration limit from
    ``I/d`` is returned instead and ``unique`` is false.
    """
    if validate:
        validate_positive_tp(m, seed)
    d = m.dim_in
    w, v, dim_fixed = _sorted_eigs(m.transfer)
    powered, _ = power_fixed_point(m, max_iter, step_tol)
    vec = v[:, 0].reshape(d, d)
    usable = abs(np.trace(vec)) > 1e-8 * float(np.abs(vec).max())
    if dim_fixed <= 1 and usable:
        rho, method = _hermitian_unit_trace(vec), "eigensolver"
    else:
        rho, method = powered, "power-iteration"
    residual = float(np.linalg.norm(m(rho) - rho))
    agreement = float(np.abs(rho - powered).max())
    return FixedPoint(rho, dim_fixed <= 1, max(dim_fixed, 1), residual, method, agreement)


def _hermitian_directions(vectors, rho: np.ndarray) -> list[np.ndarray]:
    out = []
    for x in vectors:
        for h in (x + x.conj().T, 1j * (x - x.conj().T)):
            h = h - np.trace(h).real * rho
            n = float(np.linalg.norm(h))
            if n > 1e-8:
                out.append(h / n)
    return out


def _boundary_states(rho: np.ndarray, directions) -> list[np.ndarray]:
    """``rho + t H`` pushed to the edge of the PSD cone (``rho`` faithful)."""
    w, v = np.linalg.eigh(rho)
    isq = (v / np.sqrt(w)) @ v.conj().T
    out = []
    for h in directions:
        g = isq @ h @ isq
        top = float(np.linalg.eigvalsh((-g - g.conj().T) / 2)[-1])
        if top > 1e-12:
            b = rho + h / top
            out.append((b + b.conj().T) / 2)
    return out


@dataclass(frozen=True)
class SpectralReport:
    eigenvalues: np.ndarray
    fixed_point: FixedPoint
    peripheral_count: int
    fixed_space_dim: int
    irreducible: bool
    primitive: bool
    spectral_gap: float
    sampled_irreducible: bool
    sampled_primitive: bool
    # smallest power k at which every primitivity sample was strictly positive
    primitivity_index: int | None
    min_fixed_point_eigenvalue: float

    @property
    def second_eigenvalue(self) -> complex:
        return complex(self.eigenvalues[1]) if len(self.eigenvalues) > 1 else 0j


def spectral_report(m: LinearMap, seed: int = 0, samples: int = 50) -> SpectralReport:
    """Eigenvalues, fixed point and irreducible/primitive flags of a positive TP map.

    The spectral flags are cross-checked against the defining positivity
    tests on ``samples`` random pure states plus witness states built from
    the fixed and peripheral eigenspaces.  A disagreement raises
    :class:`ConflictingWitness`, except when ``rho*`` is in the gray zone
    between the sample threshold and the faithfulness threshold.
    """
    validate_positive_tp(m, seed)
    d = m.dim_in
    fp = fixed_point(m, seed, validate=False)
    w, v, dim_fixed = _sorted_eigs(m.transfer)
    mags = np.abs(w)
    peripheral = int((mags >= 1 - tol.get(tol.PERIPHERAL)).sum())
    lo = float(np.linalg.eigvalsh(fp.rho)[0])
    irreducible = dim_fixed == 1 and lo >= tol.get(tol.FAITHFUL)
    primitive = irreducible and peripheral == 1
    gap = 1.0 - float(mags[1]) if len(w) > 1 else 1.0

    rng = np.random.default_rng(seed)
    sample_stack = [_random_pure_stack(rng, d, samples)]
    if lo < SAMPLE_POSITIVE:
        sample_stack.append(fp.rho[None])
    else:
        mats = [v[:, k].reshape(d, d) for k in range(len(w)) if mags[k] >= 1 - tol.get(tol.PERIPHERAL)]
        wit = _boundary_states(fp.rho, _hermitian_directions(mats, fp.rho))
        if wit:
            sample_stack.append(np.stack(wit))
    pool = np.concatenate(sample_stack)

    x = pool.copy()
    for _ in range(d - 1):
        x = x + _stack_apply(m.transfer, x)
    sampled_irr = bool(_min_eigs(x).min() > SAMPLE_POSITIVE)

    index = None
    x = pool.copy()
    for k in range(1, 2 * d**4 + 1):
        x = _stack_apply(m.transfer, x)
        if _all_positive(x, SAMPLE_POSITIVE):
            index = k
            break
    sampled_prim = index is not None

    gray = dim_fixed == 1 and SAMPLE_POSITIVE <= lo < tol.get(tol.FAITHFUL)
    if not gray:
        if irreducible != sampled_irr:
            raise ConflictingWitness(f"spectral irreducible={irreducible}, sampled test={sampled_irr}")
        if primitive != sampled_prim:
            raise ConflictingWitness(f"spectral primitive={primitive}, sampled test={sampled_prim}")
    return SpectralReport(w, fp, peripheral, max(dim_fixed, 1), irreducible, primitive, gap,
                          sampled_irr, sampled_prim, index, lo)


@dataclass(frozen=True)
class DampingBasis:
    """Right eigenoperators ``X`` and biorthonormal left ones ``Y``, stacked ``(n, d, d)``.

    ``Tr(X_a Y_b^dag) = delta_ab``; the eigenvalue-1 block leads with
    ``X_0 = rho*``, ``Y_0 = I`` and the rest follow in decreasing modulus.
    """

    lambdas: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    condition: float

    def coefficients(self, rho) -> np.ndarray:
        return np.einsum("aij,ij->a", self.Y.conj(), np.asarray(rho))

    def apply(self, rho, power: int = 1) -> np.ndarray:
        return np.einsum("a,aij->ij", self.lambdas**power * self.coefficients(rho), self.X)

    def gram(self) -> np.ndarray:
        n = len(self.lambdas)
        return self.Y.reshape(n, -1).conj() @ self.X.reshape(n, -1).T


def damping_basis(m: LinearMap, seed: int = 0) -> DampingBasis:
    """Damping basis of a diagonalizable positive TP map.

    Raises :class:`NonDiagonalizable` when the eigenvector matrix has
    condition number above 1e8.
    """
    d = m.dim_in
    fp = fixed_point(m, seed)
    es = eig_general(m.transfer)
    w, vr = es.values, es.right
    near_one = np.abs(w - 1) <= tol.get(tol.PERIPHERAL)
    order = np.lexsort((-np.round(np.angle(w), 12), -np.round(np.abs(w), 12), ~near_one))
    w, vr = w[order], vr[:, order]
    nb = max(int(near_one.sum()), 1)
    rho = fp.rho.ravel()
    trace_row = np.eye(d).ravel()
    block = vr[:, :nb]
    traceless = block - np.outer(rho, trace_row @ block)
    if nb > 1:
        u, _, _ = np.linalg.svd(traceless, full_matrices=False)
        rest = u[:, : nb - 1]
    else:
        rest = np.zeros((d * d, 0), dtype=complex)
    right = np.concatenate([rho[:, None], rest, vr[:, nb:]], axis=1)
    lambdas = np.concatenate([np.ones(nb, dtype=complex), w[nb:]])
    left = np.linalg.inv(right).conj().T
    cond = float(np.linalg.cond(right))
    if cond > tol.get(tol.NONDIAG_COND):
        raise NonDiagonalizable(f"damping basis condition number {cond:.3e}")
    n = d * d
    return DampingBasis(lambdas, right.T.reshape(n, d, d), left.T.reshape(n, d, d), cond)


def conditional_expansion(ch: LinearMap, basis: DampingBasis) -> np.ndarray:
    """``sum_a lambda_a Y_a^dag (x) X_a`` from the damping basis of ``Lambda^tau``."""
    d = ch.dim_in
    if basis.X.shape[1:] != (d, d) or ch.dim_out != d:
        raise ShapeMismatch(f"basis of {basis.X.shape[1:]} operators does not fit channel {ch.shape}")
    pi = np.einsum("a,aji,akl->ikjl", basis.lambdas, basis.Y.conj(), basis.X).reshape(d * d, d * d)
    resid = float(np.abs(pi - ch.choi).max())
    if resid > 1e-8 * tol.scale():
        raise ValidationFailed(f"damping basis does not belong to this channel (residual {resid:.3e})")
    return pi


@dataclass(frozen=True)
class BroadcastCertificate:
    rho_star: np.ndarray
    rho_ab: np.ndarray
    zeta: np.ndarray
    marginal_residual_a: float
    marginal_residual_b: float
    zeta_residual_a: float
    zeta_residual_b: float
    mode: str
    fixed_point: FixedPoint
    unitary: np.ndarray | None = None
    spectra_residual: float = 0.0
    # residual of rho_B against U rho U^dag (the other conjugation convention)
    alternate_residual_b: float = 0.0
    conjugation_mismatch: bool = False
    spectra: tuple = field(default=())


def _certificate(ch: LinearMap, m: LinearMap, u, seed: int, mode: str) -> BroadcastCertificate:
    d = ch.dim_in
    fp = fixed_point(m, seed)
    rho = fp.rho
    rho_ab = compound_state(ch.choi, (d, d), rho)
    rho_a = partial_trace(rho_ab, (d, d), "B")
    rho_b = partial_trace(rho_ab, (d, d), "A")
    zeta = rho_ab - np.kron(rho_a, rho_b) if mode == "spectrum" else rho_ab - np.kron(rho, rho)
    if u is None:
        target_b, other_b = rho, rho
    else:
        target_b = u.T @ rho @ u.conj()
        other_b = u @ rho @ u.conj().T
    za = float(np.abs(partial_trace(zeta, (d, d), "A")).max())
    zb = float(np.abs(partial_trace(zeta, (d, d), "B")).max())
    ra = float(np.abs(rho_a - rho).max())
    rb = float(np.abs(rho_b - target_b).max())
    alt = float(np.abs(rho_b - other_b).max())
    spec_a = np.linalg.eigvalsh((rho_a + rho_a.conj().T) / 2)
    spec_b = np.linalg.eigvalsh((rho_b + rho_b.conj().T) / 2)
    return BroadcastCertificate(
        rho_star=rho,
        rho_ab=rho_ab,
        zeta=zeta,
        marginal_residual_a=ra,
        marginal_residual_b=rb,
        zeta_residual_a=za,
        zeta_residual_b=zb,
        mode=mode,
        fixed_point=fp,
        unitary=u,
        spectra_residual=float(np.abs(spec_a - spec_b).max()),
        alternate_residual_b=alt,
        conjugation_mismatch=alt > tol.get(tol.TP),
        spectra=(spec_a, spec_b),
    )


def _square(ch: LinearMap) -> None:
    if ch.dim_in != ch.dim_out:
        raise ShapeMismatch(f"broadcasting needs equal input and output dimensions, got {ch.shape}")


def broadcast_state(ch: Channel, seed: int = 0) -> BroadcastCertificate:
    """Compound state of ``Lambda`` with the fixed point of ``Lambda^tau``; both marginals are ``rho*``."""
    _square(ch)
    return _certificate(ch, lambda_tau(ch), None, seed, "full")


def spectrum_broadcast(ch: Channel, u, seed: int = 0) -> BroadcastCertificate:
    """Compound state with the fixed point ``rho*^U`` of ``U* Lambda(rho^T) U^T``.

    The marginals are ``rho*^U`` and ``U^T rho*^U U*``, so they share a
    spectrum.  With ``U = I`` the certificate is that of :func:`broadcast_state`.
    """
    _square(ch)
    u = np.asarray(u, dtype=complex)
    m = lambda_tau_u(ch, u)
    if np.array_equal(u, np.eye(ch.dim_in)):
        return _certificate(ch, m, None, seed, "full")
    cert = _certificate(ch, m, u, seed, "spectrum")
    return cert


def convergence_errors(ch: LinearMap, rho, limit, r_max: int = 100) -> np.ndarray:
    """``||Lambda^r(rho) - limit||_1`` for ``r = 0..r_max``."""
    d = ch.dim_in
    x = np.asarray(rho, dtype=complex).ravel()
    limit = np.asarray(limit)
    errs = [trace_norm(x.reshape(d, d) - limit)]
    for _ in range(r_max):
        x = ch.transfer @ x
        errs.append(trace_norm(x.reshape(d, d) - limit))
    return np.array(errs)


def fit_decay_ratio(errors, r_lo: int = 20, r_hi: int = 100) -> float:
    """Per-step ratio from a least-squares fit of ``log error`` over ``r_lo..r_hi``."""
    r = np.arange(r_lo, r_hi + 1)
    y = np.log(np.asarray(errors)[r_lo : r_hi + 1])
    slope = np.polyfit(r, y, 1)[0]
    return float(np.exp(slope))


def convergence_bound(basis: DampingBasis, rho) -> float:
    """``C = sum_{a>0} ||X_a||_1 |Tr(Y_a^dag rho)|`` so that the error at step r is at most ``C |lambda_1|^r``."""
    c = basis.coefficients(rho)
    return float(sum(trace_norm(x) * abs(ci) for x, ci in zip(basis.X[1:], c[1:])))


def asymptotic_channel(ch: Channel, seed: int = 0, checks: int = 3, r_max: int = 100) -> Channel:
    """The constant channel ``rho -> rho'* Tr(rho)`` that powers of ``Lambda`` converge to.

    ``rho'*`` is the fixed point of ``Lambda`` itself.  Gated on ``Lambda``
    being primitive; the bound ``||Lambda^r rho - rho'*|| <= C |lambda_1|^r``
    is checked on ``checks`` random states when a damping basis exists.
    """
    rep = spectral_report(ch, seed)
    if not rep.primitive:
        raise NotPrimitive(f"map is not primitive (peripheral eigenvalues: {rep.peripheral_count}, fixed space: {rep.fixed_space_dim})")
    limit = constant_channel(rep.fixed_point.rho, ch.dim_in)
    try:
        basis = damping_basis(ch, seed)
    except NonDiagonalizable:
        return limit
    rng = np.random.default_rng(seed)
    lam1 = float(np.abs(basis.lambdas[1])) if len(basis.lambdas) > 1 else 0.0
    for _ in range(checks):
        v = random_pure(rng, ch.dim_in)
        rho = np.outer(v, v.conj())
        errs = convergence_errors(ch, rho, rep.fixed_point.rho, r_max)
        bound = convergence_bound(basis, rho) * lam1 ** np.arange(r_max + 1)
        if np.any(errs > bound * (1 + 1e-6) + 1e-10):
            raise ValidationFailed("convergence to the constant channel violates the spectral bound")
    return limit
