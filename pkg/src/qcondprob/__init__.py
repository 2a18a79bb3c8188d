"""Quantum channels as conditional probabilities: classification, quantum
Bayes relations, and broadcasting of Perron-Frobenius fixed points."""
from . import bayes, channel, classify, errors, families, linalg, spectral, states, tol
from .bayes import bayes_identity_check, conditionals_from_joint, recovery_channel
from .channel import (
    Channel,
    LinearMap,
    apply,
    apply_conditional,
    channel_from_conditional,
    compound_state,
    conditional_from_channel,
    dual,
    extend_apply,
    kraus_from_choi,
    reverse_channel,
    transpose_map,
    unitalize,
)
from .classify import (
    DephasingGenerator,
    EBStatus,
    cc_membership,
    classify as classify_channel,
    decohere,
    holevo_form,
    is_cc,
    is_cc_state,
    is_cq,
    is_qc,
    partial_decohere,
    partial_decohere_limit,
    ppt_choi,
    qc_output_decomposition,
)
from .errors import QCPError
from .spectral import (
    asymptotic_channel,
    broadcast_state,
    conditional_expansion,
    damping_basis,
    fixed_point,
    lambda_tau,
    spectral_report,
    spectrum_broadcast,
)
from .tol import tolerance_scale

__version__ = "0.1.0"
