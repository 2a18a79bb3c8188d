"""Numerical tolerances.

All thresholds are module constants multiplied by a scale factor held in a
:class:`contextvars.ContextVar`, so ``--tol-scale`` on the command line (or
:func:`tolerance_scale` in library code) loosens or tightens every check at
once without shared mutable state between threads.
"""
from __future__ import annotations

import contextlib
import contextvars

POSITIVITY = 1e-9
FAITHFUL = 1e-7
NONDIAG_COND = 1e8
COMMUTE = 1e-8
TP = 1e-9
HERMITIAN = 1e-9
TRACE = 1e-10
ORTHONORMAL = 1e-9
KRAUS_RANK = 1e-10
PERIPHERAL = 1e-8

_scale: contextvars.ContextVar[float] = contextvars.ContextVar("tol_scale", default=1.0)


def scale() -> float:
    return _scale.get()


def get(base: float) -> float:
    """Scaled value of one of the base tolerances above."""
    return base * _scale.get()


@contextlib.contextmanager
def tolerance_scale(factor: float):
    if not factor > 0:
        raise ValueError(f"tolerance scale must be positive, got {factor}")
    token = _scale.set(factor)
    try:
        yield
    finally:
        _scale.reset(token)
