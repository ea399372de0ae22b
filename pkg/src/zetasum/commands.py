"""Command implementations behind both the HTTP service and the CLI.

Each command takes a validated request model and returns a
:class:`~zetasum.schemas.CommandResult`.  Results are cached on disk, keyed
by a hash of the canonical request JSON and the package version.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .config import cache_dir
from .decomp import DecompError, OperatorFamily, logdet_decomposed
from .expr import parse_expression
from .phg import PhgError, extract_phg, sl_trace
from .regcal import AsymptoticModel, FitError, RegcalError, reg_int, reg_sum
from .schemas import (
    AssembleRequest,
    CommandResult,
    FamilySpec,
    PhgRequest,
    RegIntRequest,
    RegSumRequest,
    SLRequest,
)
from .sturm import SLOperator, eigenvalues, logdet, resolvent_trace
from .surfrev import decompose

# errors that mean "the numerics did not reach tolerance" (exit code 2)
NUMERICAL_ERRORS = (RegcalError, PhgError, DecompError, ArithmeticError)


# --------------------------------------------------------------------------
# cache


def request_key(command: str, request) -> str:
    payload = {"command": command, "version": __version__,
               "request": request.model_dump(mode="json", by_alias=True)}
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def cache_load(key: str, root: Path | None = None) -> dict | None:
    root = root if root is not None else cache_dir()
    if root is None:
        return None
    path = root / f"{key}.json"
    try:
        return json.loads(path.read_text())
    except (OSError, ValueError):
        return None


def cache_store(key: str, data: dict, root: Path | None = None) -> None:
    """Write through a temporary file and rename, so readers never see partial JSON."""
    root = root if root is not None else cache_dir()
    if root is None:
        return
    root.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=root, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(data, fh, sort_keys=True)
        os.replace(tmp, root / f"{key}.json")
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


# --------------------------------------------------------------------------
# helpers


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def parse_model(text: str) -> AsymptoticModel:
    """``"1:1,0,-1"`` lists exponents at infinity, ``a:m`` adding logs up to ``log^m``."""
    alphas, logs = [], {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        a, _, m = part.partition(":")
        alphas.append(float(a))
        if m:
            logs[float(a)] = int(m)
    if not alphas:
        raise ValueError("empty model")
    return AsymptoticModel.powers(alphas, logs)


def _auto_models(f, x0: float = 1e3):
    # integer exponents from the observed growth rate down, each with a log companion
    a, b = abs(float(f(x0))), abs(float(f(10 * x0)))
    slope = math.log10(b / a) if a > 0 and b > 0 else 0.0
    top = int(math.ceil(slope - 0.05))
    for n in (3, 5, 7):
        exps = range(top, top - n, -1)
        yield AsymptoticModel.powers(exps, {e: 1 for e in exps})


def _with_models(run, f, spec: str):
    if spec != "auto":
        return run(parse_model(spec))
    last = None
    for model in _auto_models(f):
        try:
            return run(model)
        except FitError as exc:
            last = exc
    raise last


def _summary(value) -> dict:
    return {"value": value.value, "error": value.error}


def _family(spec: FamilySpec) -> OperatorFamily:
    if spec.r is not None:
        return decompose(spec.r, spec.bc0, spec.bc1, surface_neumann=spec.surface_neumann)
    V, W = parse_expression(spec.V), parse_expression(spec.W)
    return OperatorFamily(_coef(V), _coef(W), spec.bc0, spec.bc1, name=f"V = {spec.V}")


def _coef(node):
    from .expr import is_constant
    return float(node(0.0)) if is_constant(node) else node


# --------------------------------------------------------------------------
# commands


def cmd_regint(req: RegIntRequest) -> dict:
    f = parse_expression(req.expr)
    upper = math.inf if req.upper is None else req.upper
    val = _with_models(lambda m: reg_int(f, req.lower, upper, m), f, req.model)
    return _summary(val)


def cmd_regsum(req: RegSumRequest) -> dict:
    f = parse_expression(req.expr)
    val = _with_models(lambda m: reg_sum(f, req.start, req.method, model=m), f, req.model)
    return _summary(val)


def cmd_sl(req: SLRequest) -> dict:
    op = SLOperator(_coef(parse_expression(req.V)), _coef(parse_expression(req.W)), req.lam,
                    req.bc0, req.bc1)
    if req.action == "eig":
        ev = eigenvalues(op, req.count)
        return {"eigenvalues": list(ev.values), "errors": list(ev.errors)}
    if req.action == "det":
        return _summary(logdet(op, req.method))
    rows = [{"z": z, "trace": resolvent_trace(op, z, req.power)} for z in req.z]
    return {"power": req.power, "rows": rows}


def cmd_phg(req: PhgRequest) -> dict:
    fam = _family(req.family)
    trace = sl_trace(fam.V, fam.W, fam.bc0, fam.bc1, power=req.power)
    exp = extract_phg(trace, K=req.K, gamma0=float(req.power + 1), r0=req.r0,
                      provenance=fam.describe())
    out = {"coefficients": exp.profiles_json(), "holdout_error": exp.holdout_error,
           "remainder_order": exp.remainder_order}
    if req.samples:
        zs = np.geomspace(1.0, 1e3, req.samples)
        out["samples"] = [{"lam": 1.0, "z": float(z), "trace": float(trace(1.0, z)),
                           "expansion": float(exp(1.0, z))} for z in zs]
    return out


def cmd_assemble(req: AssembleRequest) -> dict:
    fam = _family(req.family)
    rep = logdet_decomposed(fam, req.convention, req.sigma, with_direct=req.direct)
    return json.loads(rep.to_json(default=_jsonable))


COMMANDS = {
    "regint": (RegIntRequest, cmd_regint),
    "regsum": (RegSumRequest, cmd_regsum),
    "sl": (SLRequest, cmd_sl),
    "phg": (PhgRequest, cmd_phg),
    "assemble": (AssembleRequest, cmd_assemble),
}


def _tolerance_messages(command: str, req, result: dict) -> list[str]:
    msgs = []
    if command == "assemble":
        msgs.extend(result.get("failures") or [])
        disc = result.get("discrepancy")
        if disc is not None and disc > req.tolerance:
            msgs.append(f"discrepancy {disc:.3g} above tolerance {req.tolerance:.3g}")
    return msgs


def execute(command: str, request, *, use_cache: bool = True) -> CommandResult:
    """Run *command*; numerical failures come back with ``ok = False``."""
    if command not in COMMANDS:
        raise KeyError(f"unknown command {command!r}")
    model_cls, fn = COMMANDS[command]
    if not isinstance(request, model_cls):
        request = model_cls.model_validate(request)
    key = request_key(command, request)
    if use_cache:
        hit = cache_load(key)
        if hit is not None:
            return CommandResult.model_validate({**hit, "cached": True})
    try:
        result = _jsonable(fn(request))
        messages = _tolerance_messages(command, request, result)
    except NUMERICAL_ERRORS as exc:
        result, messages = {}, [f"{type(exc).__name__}: {exc}"]
    out = CommandResult(command=command, ok=not messages, result=result, messages=messages,
                        version=__version__)
    if use_cache and out.ok:
        cache_store(key, out.model_dump(mode="json", exclude={"cached"}))
    return out
