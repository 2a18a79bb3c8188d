"""Command-line front end.

Reads a JSON channel specification, runs one analysis and prints a JSON
report on stdout; a one-line summary goes to stderr.  Reports are
byte-identical for identical input and ``--seed`` (elapsed time is only
included with ``--timing``).

Exit codes: 0 success, 2 parse error, 3 input invariant or bad parameter,
4 not faithful, 5 non-diagonalizable (report still printed, damping basis
omitted), 7 channel is not classical-classical.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time

import numpy as np

from . import __version__, tol
from .bayes import bayes_identity_check, conditionals_from_joint, recovery_channel
from .channel import Channel, channel_from_conditional, compound_state
from .classify import (
    DephasingGenerator,
    cc_membership,
    classify,
    decohere,
    holevo_form,
    is_cc,
    is_cq,
    is_qc,
    partial_decohere,
)
from .errors import NonDiagonalizable, NotCC, NotFaithful, QCPError
from .families import cc_channel, check_stochastic
from .linalg import min_eigenvalue
from .states import validate_density
from .spectral import (
    broadcast_state,
    damping_basis,
    lambda_tau,
    spectral_report,
    spectrum_broadcast,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INPUT = 3
EXIT_NOT_FAITHFUL = 4
EXIT_NON_DIAGONALIZABLE = 5
EXIT_DEGENERATE_WARNING = 6  # reported inside the report only; the process exits 0
EXIT_NOT_CC = 7

REPRESENTATIONS = ("kraus", "choi", "conditional", "stochastic")


class ParseError(Exception):
    pass


# ---------------------------------------------------------------- input


def _scalar(x, where: str) -> complex:
    if isinstance(x, bool):
        raise ParseError(f"{where}: booleans are not numbers")
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
        return complex(x[0], x[1])
    raise ParseError(f"{where}: expected a number or a [re, im] pair, got {x!r}")


def parse_matrix(obj, where: str) -> np.ndarray:
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise ParseError(f"{where}: expected a non-empty list of rows")
    width = len(obj[0])
    if width == 0 or any(len(r) != width for r in obj):
        raise ParseError(f"{where}: rows have unequal or zero length")
    return np.array([[_scalar(x, f"{where}[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(obj)])


def _dims(spec) -> tuple[int, int]:
    d = spec.get("dims")
    if not isinstance(d, dict) or set(d) != {"in", "out"}:
        raise ParseError("dims must be an object with keys 'in' and 'out'")
    if not all(isinstance(d[k], int) and not isinstance(d[k], bool) and d[k] > 0 for k in ("in", "out")):
        raise ParseError("dims.in and dims.out must be positive integers")
    return d["in"], d["out"]


def load_spec(text: str) -> dict:
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(spec, dict):
        raise ParseError("top level must be an object")
    if not isinstance(spec.get("name"), str):
        raise ParseError("missing string field 'name'")
    present = [k for k in REPRESENTATIONS if k in spec]
    if len(present) != 1:
        raise ParseError(f"exactly one of {', '.join(REPRESENTATIONS)} is required, found {present or 'none'}")
    for key in ("states", "unitaries"):
        if key in spec and not isinstance(spec[key], dict):
            raise ParseError(f"'{key}' must be an object of named matrices")
    return spec


def build_channel(spec: dict) -> Channel:
    """Channel described by ``spec``; invariant violations raise :class:`QCPError` or ``ValueError``."""
    dA, dB = _dims(spec)
    if "kraus" in spec:
        ops = spec["kraus"]
        if not isinstance(ops, list) or not ops:
            raise ParseError("kraus must be a non-empty list of matrices")
        kraus = [parse_matrix(k, f"kraus[{i}]") for i, k in enumerate(ops)]
        for k in kraus:
            if k.shape != (dB, dA):
                raise ParseError(f"Kraus operator of shape {k.shape}, dims imply {(dB, dA)}")
        return Channel(kraus)
    if "stochastic" in spec:
        t = parse_matrix(spec["stochastic"], "stochastic")
        if np.abs(t.imag).max() > 0:
            raise ParseError("stochastic matrix must be real")
        if t.shape != (dB, dA):
            raise ParseError(f"stochastic matrix of shape {t.shape}, dims imply {(dB, dA)}")
        return cc_channel(check_stochastic(t.real))
    key = "choi" if "choi" in spec else "conditional"
    pi = parse_matrix(spec[key], key)
    if pi.shape != (dA * dB, dA * dB):
        raise ParseError(f"{key} of shape {pi.shape}, dims imply {(dA * dB,) * 2}")
    return channel_from_conditional(pi, (dA, dB))


def named(spec: dict, section: str, name: str) -> np.ndarray:
    table = spec.get(section, {})
    if name not in table:
        raise ParseError(f"no entry '{name}' under '{section}'")
    return parse_matrix(table[name], f"{section}.{name}")


# ---------------------------------------------------------------- output


def _num(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == 0:
        x = 0.0  # fold -0.0
    return "%.17g" % x


def _plain(obj):
    """Convert numpy values into JSON-like Python values; complex becomes ``[re, im]``."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return _plain(np.stack([obj.real, obj.imag], axis=-1).tolist())
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _dump(obj, indent: int = 0) -> str:
    pad = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_dump(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(obj, list):
        return "[" + ", ".join(_dump(v, indent) for v in obj) + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _num(obj)
    return json.dumps(obj)


def render(report: dict) -> str:
    """Deterministic JSON with 17 significant digits for every float."""
    return _dump(_plain(report)) + "\n"


# ---------------------------------------------------------------- commands


def _holevo(ch: Channel, seed: int) -> dict:
    form = holevo_form(ch, seed)
    return {"effects": form.effects, "cond_prob": form.cond_prob, "basis": form.basis}


def cmd_classify(spec, ch: Channel, args) -> tuple[dict, int]:
    c = classify(ch, args.seed)
    result = {
        "isUnital": c.is_unital,
        "ppt": c.ppt,
        "ebStatus": c.eb_status.value,
        "isQC": c.is_qc,
        "isCQ": c.is_cq,
        "isCC": c.is_cc,
        "fBasis": c.f_basis,
        "eBasis": c.e_basis,
        "ccMatrix": c.cc_matrix,
    }
    if c.is_qc:
        result["holevoForm"] = _holevo(ch, args.seed)
    residuals = {"traceDefect": ch.trace_defect(), "choiMinEigenvalue": min_eigenvalue(ch.choi)}
    return {"result": result, "residuals": residuals, "flags": {"isQC": c.is_qc, "isCQ": c.is_cq, "isCC": c.is_cc}}, EXIT_OK


def cmd_bayes(spec, ch: Channel, args) -> tuple[dict, int]:
    rho_a = validate_density(named(spec, "states", args.state))
    if rho_a.shape != (ch.dim_in, ch.dim_in):
        raise ValueError(f"state '{args.state}' has shape {rho_a.shape}, channel input is {ch.dim_in}")
    rec = recovery_channel(ch, rho_a)
    rho_ab = compound_state(ch.choi, ch.shape, rho_a)
    analysis = conditionals_from_joint(rho_ab, ch.shape)
    bayes = bayes_identity_check(analysis)
    rho_b = analysis.rho_b
    forward = float(np.abs(ch(rho_a.T) - rho_b).max())
    backward = float(np.abs(rec(rho_b.T) - rho_a).max())
    seed = args.seed
    flags = {
        "channelQC": is_qc(ch, seed).flag,
        "channelCQ": is_cq(ch, seed).flag,
        "channelCC": is_cc(ch, seed)[0],
        "recoveryQC": is_qc(rec, seed).flag,
        "recoveryCQ": is_cq(rec, seed).flag,
        "recoveryCC": is_cc(rec, seed)[0],
    }
    result = {
        "recoveryChoi": rec.choi,
        "rhoA": rho_a,
        "rhoB": rho_b,
        "piBgivenA": analysis.pi_b_given_a,
        "piAgivenB": analysis.pi_a_given_b,
    }
    residuals = {
        "bayes": bayes.bayes,
        "bayesSymmetric": bayes.symmetric,
        "reconstruction": analysis.reconstruction_residual(),
        "forwardMarginal": forward,
        "backwardMarginal": backward,
        "recoveryTraceDefect": rec.trace_defect(),
    }
    if "stochastic" in spec and np.abs(rho_a - np.diag(np.diagonal(rho_a))).max() == 0:
        t = np.real(np.array(parse_matrix(spec["stochastic"], "stochastic")))
        x = np.diagonal(rho_a).real
        p = t @ x
        r = np.array([[rec(np.diag(np.eye(ch.dim_out)[j]))[i, i].real for j in range(ch.dim_out)] for i in range(ch.dim_in)])
        result["classical"] = {"prior": x, "evidence": p, "recoveredStochastic": r}
        residuals["classicalBayes"] = float(np.abs(r * p[None, :] - t.T * x[:, None]).max())
    return {"result": result, "residuals": residuals, "flags": flags}, EXIT_OK


def _report_dict(rep) -> dict:
    return {
        "eigenvalues": rep.eigenvalues,
        "fixedPoint": rep.fixed_point.rho,
        "fixedPointMethod": rep.fixed_point.method,
        "fixedPointResidual": rep.fixed_point.residual,
        "peripheralCount": rep.peripheral_count,
        "fixedSpaceDim": rep.fixed_space_dim,
        "irreducible": rep.irreducible,
        "primitive": rep.primitive,
        "spectralGap": rep.spectral_gap,
        "primitivityIndex": rep.primitivity_index,
    }


def _certificate_dict(cert) -> dict:
    out = {
        "mode": cert.mode,
        "rhoStar": cert.rho_star,
        "rhoAB": cert.rho_ab,
        "zeta": cert.zeta,
        "marginalResidualA": cert.marginal_residual_a,
        "marginalResidualB": cert.marginal_residual_b,
        "zetaResidualA": cert.zeta_residual_a,
        "zetaResidualB": cert.zeta_residual_b,
    }
    if cert.unitary is not None:
        out["spectrumA"], out["spectrumB"] = cert.spectra
        out["spectraResidual"] = cert.spectra_residual
        out["spectraMatch"] = cert.spectra_residual <= 1e-8 * tol.scale()
        out["alternateResidualB"] = cert.alternate_residual_b
        out["conjugationMismatch"] = cert.conjugation_mismatch
    return out


def cmd_broadcast(spec, ch: Channel, args) -> tuple[dict, int]:
    if ch.dim_in != ch.dim_out:
        raise ValueError(f"broadcasting needs equal input and output dimensions, got {ch.shape}")
    seed = args.seed
    tau = lambda_tau(ch)
    rep_tau = spectral_report(tau, seed)
    rep = spectral_report(ch, seed)
    cert = broadcast_state(ch, seed)
    result = {"lambdaTau": _report_dict(rep_tau), "lambda": _report_dict(rep), "broadcast": _certificate_dict(cert)}
    flags = {"primitive": rep_tau.primitive, "lambdaPrimitive": rep.primitive, "uniqueFixedPoint": rep_tau.fixed_point.unique}
    residuals = {"marginalA": cert.marginal_residual_a, "marginalB": cert.marginal_residual_b,
                 "zetaA": cert.zeta_residual_a, "zetaB": cert.zeta_residual_b}
    warnings = []
    if not rep_tau.fixed_point.unique:
        warnings.append({"code": EXIT_DEGENERATE_WARNING,
                         "message": f"eigenvalue 1 has multiplicity {rep_tau.fixed_space_dim}; fixed point is the power-iteration limit from I/d"})
    if rep.primitive:
        result["asymptoticFixedPoint"] = rep.fixed_point.rho
    if args.unitary is not None:
        u = named(spec, "unitaries", args.unitary)
        ucert = spectrum_broadcast(ch, u, seed)
        result["spectrumBroadcast"] = _certificate_dict(ucert)
        flags["spectraMatch"] = bool(ucert.spectra_residual <= 1e-8 * tol.scale())
    code = EXIT_OK
    try:
        basis = damping_basis(tau, seed)
        result["dampingBasis"] = {"lambdas": basis.lambdas, "X": basis.X, "Y": basis.Y, "condition": basis.condition}
        residuals["biorthonormality"] = float(np.abs(basis.gram() - np.eye(len(basis.lambdas))).max())
    except NonDiagonalizable as exc:
        warnings.append({"code": EXIT_NON_DIAGONALIZABLE, "message": str(exc)})
        code = EXIT_NON_DIAGONALIZABLE
    return {"result": result, "residuals": residuals, "flags": flags, "warnings": warnings}, code


def cmd_cc_membership(spec, ch: Channel, args) -> tuple[dict, int]:
    rho = named(spec, "states", args.state)
    rho = validate_density(rho)
    if rho.shape[0] % ch.dim_in:
        raise ValueError(f"state dimension {rho.shape[0]} is not a multiple of the input dimension {ch.dim_in}")
    dim_c = rho.shape[0] // ch.dim_in
    m = cc_membership(ch, rho, dim_c, args.seed)
    n = m.commutator_norms
    result = {"member": m.flag, "commutatorNorms": n, "maxCommutatorNorm": float(n.max()), "dimC": dim_c}
    flags = {"member": m.flag, "blockRoute": m.block_route, "dephasingRoute": m.dephasing_route, "routesAgree": m.agree}
    return {"result": result, "residuals": {"maxCommutatorNorm": float(n.max())}, "flags": flags}, EXIT_OK


def cmd_decohere(spec, ch: Channel, args) -> tuple[dict, int]:
    rho = validate_density(named(spec, "states", args.state))
    basis = np.eye(ch.dim_in) if args.basis is None else named(spec, "unitaries", args.basis)
    gen = DephasingGenerator(basis, args.gamma)
    d = ch.dim_in
    if rho.shape[0] == d:
        out = decohere(gen, rho, args.t)
        limit = gen.project(rho)
        local = gen.basis.conj().T @ out @ gen.basis
    elif rho.shape[0] % d == 0:
        dim_c = rho.shape[0] // d
        out = partial_decohere(gen, rho, dim_c, args.t)
        limit = partial_decohere(gen, rho, dim_c, math.inf)
        local = None
    else:
        raise ValueError(f"state dimension {rho.shape[0]} is neither {d} nor a multiple of it")
    result = {"gamma": args.gamma, "t": args.t, "rhoT": out}
    if math.isinf(args.t):
        result["dephased"] = limit
    if local is not None:
        result["maxCoherence"] = float(np.abs(local - np.diag(np.diagonal(local))).max())
    residuals = {"distanceToDephased": float(np.abs(out - limit).max())}
    return {"result": result, "residuals": residuals, "flags": {}}, EXIT_OK


COMMANDS = {
    "classify": cmd_classify,
    "bayes": cmd_bayes,
    "broadcast": cmd_broadcast,
    "cc-membership": cmd_cc_membership,
    "decohere": cmd_decohere,
}


def _nonneg_int(s: str) -> int:
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError("seed must be a nonnegative integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qcondprob", allow_abbrev=False, description="Analyze quantum channels given as JSON specification files.")
    p.add_argument("--seed", type=_nonneg_int, default=0, help="seed for every internal random choice (default 0)")
    p.add_argument("--tol-scale", type=float, default=1.0, help="multiply every numerical tolerance (default 1)")
    p.add_argument("--timing", action="store_true", help="include elapsed time in the report (breaks byte determinism)")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("classify", help="QC/CQ/CC and entanglement-breaking classification")
    s.add_argument("file")
    s = sub.add_parser("bayes", help="recovery channel and Bayes identity for a named input state")
    s.add_argument("file")
    s.add_argument("--state", required=True)
    s = sub.add_parser("broadcast", help="fixed point of Lambda o T, spectral report and broadcast state")
    s.add_argument("file")
    s.add_argument("--unitary", default=None, help="named unitary for spectrum broadcasting")
    s = sub.add_parser("cc-membership", help="does a CC channel map a named C(x)A state to a CC state")
    s.add_argument("file")
    s.add_argument("--state", required=True)
    s = sub.add_parser("decohere", help="dephasing semigroup applied to a named state")
    s.add_argument("file")
    s.add_argument("--state", required=True)
    s.add_argument("--gamma", type=float, required=True)
    s.add_argument("--t", type=float, required=True, help="time; 'inf' gives the dephased limit")
    s.add_argument("--basis", default=None, help="named unitary whose columns are the dephasing basis")
    return p


def _run(args, raw: bytes) -> tuple[dict, int]:
    spec = load_spec(raw.decode("utf-8"))
    if args.command == "decohere" and not (args.gamma > 0 and args.t >= 0):
        raise ValueError(f"need gamma > 0 and t >= 0, got gamma={args.gamma}, t={args.t}")
    ch = build_channel(spec)
    body, code = COMMANDS[args.command](spec, ch, args)
    return {"name": spec["name"], **body}, code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    report = {"tool": "qcondprob", "version": __version__, "command": args.command,
              "seed": args.seed, "tolScale": args.tol_scale}
    try:
        with open(args.file, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        print(f"qcondprob: cannot read {args.file}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    report["inputSha256"] = hashlib.sha256(raw).hexdigest()
    try:
        if not args.tol_scale > 0:
            raise ValueError(f"--tol-scale must be positive, got {args.tol_scale}")
        with tol.tolerance_scale(args.tol_scale):
            body, code = _run(args, raw)
        report.update(body)
    except (ParseError, UnicodeDecodeError) as exc:
        code = EXIT_PARSE
        report["error"] = {"type": "ParseError", "message": str(exc)}
    except NotFaithful as exc:
        code = EXIT_NOT_FAITHFUL
        report["error"] = {"type": "NotFaithful", "message": str(exc)}
    except NotCC as exc:
        code = EXIT_NOT_CC
        report["error"] = {"type": "NotCC", "message": str(exc)}
    except (QCPError, ValueError) as exc:
        code = EXIT_INPUT
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
    elapsed = time.perf_counter() - start
    if args.timing:
        report["elapsedSeconds"] = elapsed
    report["exitCode"] = code
    sys.stdout.write(render(report))
    print(f"qcondprob {args.command} {args.file}: exit {code} ({elapsed:.3f} s)", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
