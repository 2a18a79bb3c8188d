"""Conditional states from joint states, the quantum Bayes identity, and the
state-dependent recovery channel.

Conditionals are in A (x) B order throughout: ``pi_B_given_A`` conditions B on
A and ``pi_A_given_B`` conditions A on B, both acting on H_A (x) H_B.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import Channel, LinearMap, compound_state, dual
from .errors import NotFaithful, ShapeMismatch
from .linalg import partial_trace, psd_inv_sqrt, psd_sqrt
from .states import validate_density

__all__ = [
    "JointStateAnalysis",
    "conditionals_from_joint",
    "BayesResidual",
    "bayes_identity_check",
    "recovery_channel",
]


@dataclass(frozen=True)
class JointStateAnalysis:
    rho_ab: np.ndarray
    shape: tuple
    rho_a: np.ndarray
    rho_b: np.ndarray
    pi_b_given_a: np.ndarray
    pi_a_given_b: np.ndarray

    def reconstruction_residual(self) -> float:
        """``max |compound_state(pi_B|A, rho_A) - rho_AB|``."""
        return float(np.abs(compound_state(self.pi_b_given_a, self.shape, self.rho_a) - self.rho_ab).max())


def _inv_sqrt_named(m: np.ndarray, name: str) -> np.ndarray:
    try:
        return psd_inv_sqrt(m)
    except NotFaithful as exc:
        raise NotFaithful(f"marginal {name} is not faithful: {exc}") from None


def conditionals_from_joint(rho_ab, shape) -> JointStateAnalysis:
    """Both conditional states of a joint state with faithful marginals.

    ``pi_B|A = (rho_A^-1/2 (x) I) rho_AB (rho_A^-1/2 (x) I)`` and
    ``pi_A|B = (I (x) rho_B^-1/2) rho_AB (I (x) rho_B^-1/2)``.
    """
    dA, dB = (int(x) for x in shape)
    rho_ab = validate_density(rho_ab)
    if rho_ab.shape != (dA * dB, dA * dB):
        raise ShapeMismatch(f"joint state {rho_ab.shape} does not match shape {(dA, dB)}")
    rho_a = partial_trace(rho_ab, (dA, dB), "B")
    rho_b = partial_trace(rho_ab, (dA, dB), "A")
    wa = np.kron(_inv_sqrt_named(rho_a, "rho_A"), np.eye(dB))
    wb = np.kron(np.eye(dA), _inv_sqrt_named(rho_b, "rho_B"))
    return JointStateAnalysis(rho_ab, (dA, dB), rho_a, rho_b, wa @ rho_ab @ wa, wb @ rho_ab @ wb)


@dataclass(frozen=True)
class BayesResidual:
    bayes: float
    symmetric: float

    def max(self) -> float:
        return max(self.bayes, self.symmetric)


def bayes_identity_check(analysis: JointStateAnalysis) -> BayesResidual:
    """Spectral-norm residuals of the two forms of the Bayes identity.

    ``bayes``: ``pi_A|B`` against ``(rho_A^1/2 (x) rho_B^-1/2) pi_B|A (...)``.
    ``symmetric``: ``(rho_A^1/2 (x) I) pi_B|A (...)`` against
    ``(I (x) rho_B^1/2) pi_A|B (...)``.
    """
    dA, dB = analysis.shape
    sa = psd_sqrt(analysis.rho_a)
    sb = psd_sqrt(analysis.rho_b)
    w = np.kron(sa, psd_inv_sqrt(analysis.rho_b))
    lhs = w @ analysis.pi_b_given_a @ w
    r1 = float(np.linalg.norm(analysis.pi_a_given_b - lhs, 2))
    ka = np.kron(sa, np.eye(dB))
    kb = np.kron(np.eye(dA), sb)
    r2 = float(np.linalg.norm(ka @ analysis.pi_b_given_a @ ka - kb @ analysis.pi_a_given_b @ kb, 2))
    return BayesResidual(r1, r2)


def recovery_channel(ch: Channel, rho_a) -> Channel:
    """``sigma -> rho_A^1/2 [Lambda^#(rho_B^-1/2 sigma^T rho_B^-1/2)]^T rho_A^1/2``.

    ``rho_B = Lambda(rho_A^T)`` is the B marginal of the compound state, so
    the result is CPTP and sends ``rho_B^T`` back to ``rho_A``.
    """
    rho_a = validate_density(rho_a)
    if rho_a.shape != (ch.dim_in, ch.dim_in):
        raise ShapeMismatch(f"marginal {rho_a.shape} does not match dA={ch.dim_in}")
    sa = psd_sqrt(_check_faithful(rho_a, "rho_A"))
    rho_b = ch(rho_a.T)
    wb = _inv_sqrt_named((rho_b + rho_b.conj().T) / 2, "rho_B")
    adj = dual(ch)

    def act(sigma):
        return sa @ adj(wb @ sigma.T @ wb).T @ sa

    m = LinearMap.from_function(act, ch.dim_out, ch.dim_in)
    return Channel.from_map(m)


def _check_faithful(rho: np.ndarray, name: str) -> np.ndarray:
    _inv_sqrt_named(rho, name)
    return rho
