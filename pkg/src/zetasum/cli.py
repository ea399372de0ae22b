"""Command line client.

Runs commands in-process by default.  With ``--server URL`` (or
``ZETASUM_SERVER``) the request is posted to a running service instead.
Exit codes: 0 success, 1 usage error, 2 numerical tolerance not met.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from pydantic import ValidationError

from .config import server_url

EXIT_OK, EXIT_USAGE, EXIT_TOLERANCE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _family_args(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--r", help="surface profile r(x)")
    g.add_argument("--V", help="coefficient of lambda^2")
    p.add_argument("--W", default=None, help="lambda-independent potential (with --V)")
    p.add_argument("--surface-neumann", action="store_true",
                   help="read Neumann as the surface condition and convert it")


def _bc_args(p):
    p.add_argument("--bc0", default="dirichlet", help="dirichlet, neumann or an angle")
    p.add_argument("--bc1", default="dirichlet")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="zetasum", description=__doc__.splitlines()[0])
    ap.add_argument("--server", default=None, help="service URL (default: $ZETASUM_SERVER)")
    ap.add_argument("--config", type=Path, help="JSON file with request fields")
    ap.add_argument("--out", type=Path, help="write the JSON report here instead of stdout")
    ap.add_argument("--no-cache", action="store_true")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("regint", help="partie-finie integral")
    p.add_argument("--expr")
    p.add_argument("--from", dest="lower", type=float)
    p.add_argument("--to", dest="upper", type=float)
    p.add_argument("--model", help='exponents at infinity, e.g. "1:1,0,-1" (default auto)')

    p = sub.add_parser("regsum", help="regularized sum over integers >= FROM")
    p.add_argument("--expr")
    p.add_argument("--from", dest="start", type=int)
    p.add_argument("--method", choices=["euler_maclaurin", "direct"])
    p.add_argument("--model")

    p = sub.add_parser("sl", help="Sturm-Liouville operator")
    p.add_argument("action", choices=["det", "trace", "eig"])
    p.add_argument("--V")
    p.add_argument("--W")
    _bc_args(p)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--z", type=float, action="append", help="repeatable")
    p.add_argument("--power", type=int)
    p.add_argument("--count", type=int)
    p.add_argument("--method", choices=["gelfand_yaglom", "resolvent_pf", "resolvent_zeta"])
    p.add_argument("--csv", type=Path, help="trace table as CSV")

    p = sub.add_parser("phg", help="joint expansion of resolvent traces")
    p.add_argument("action", choices=["extract"])
    _family_args(p)
    _bc_args(p)
    p.add_argument("--K", type=int)
    p.add_argument("--power", type=int)
    p.add_argument("--r0", type=float)
    p.add_argument("--samples", type=int, help="rows of sampled traces")
    p.add_argument("--csv", type=Path, help="sampled traces as CSV")

    for name in ("assemble", "zetasum"):
        p = sub.add_parser(name, help="determinant from the mode decomposition"
                           if name == "assemble" else "pipeline commands")
        if name == "zetasum":
            p.add_argument("action", choices=["assemble"])
        _family_args(p)
        _bc_args(p)
        p.add_argument("--convention", choices=["pf", "zeta"])
        p.add_argument("--sigma", type=int, choices=[1, -1])
        p.add_argument("--no-direct", dest="direct", action="store_const", const=False)
        p.add_argument("--tolerance", type=float)
    return ap


def _drop_none(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None}


def build_request(args, base: dict | None = None) -> tuple[str, dict]:
    """Map parsed arguments onto a request payload; flags override ``base``."""
    base = dict(base or {})
    cmd = "assemble" if args.command == "zetasum" else args.command
    if cmd == "regint":
        req = {"expr": args.expr, "from": args.lower, "to": args.upper, "model": args.model}
    elif cmd == "regsum":
        req = {"expr": args.expr, "from": args.start, "method": args.method, "model": args.model}
    elif cmd == "sl":
        req = {"action": args.action, "V": args.V, "W": args.W, "bc0": args.bc0,
               "bc1": args.bc1, "lambda": args.lam, "z": args.z, "power": args.power,
               "count": args.count, "method": args.method}
    else:
        fam = _drop_none({"r": args.r, "V": args.V, "W": args.W, "bc0": args.bc0,
                          "bc1": args.bc1, "surface_neumann": args.surface_neumann or None})
        fam = {**base.pop("family", {}), **fam}
        if cmd == "phg":
            req = {"family": fam, "K": args.K, "power": args.power, "r0": args.r0,
                   "samples": args.samples}
        else:
            req = {"family": fam, "convention": args.convention, "sigma": args.sigma,
                   "direct": args.direct, "tolerance": args.tolerance}
    return cmd, {**base, **_drop_none(req)}


def _remote(url: str, command: str, payload: dict) -> dict:
    import httpx

    from .service import ROUTES

    resp = httpx.post(url.rstrip("/") + ROUTES[command], json=payload, timeout=None)
    if resp.status_code == 422:
        detail = resp.json().get("detail")
        if isinstance(detail, list):
            detail = "; ".join(str(d.get("msg", d)).removeprefix("Value error, ") for d in detail)
        raise UsageError(str(detail))
    resp.raise_for_status()
    return resp.json()


def _local(command: str, payload: dict, use_cache: bool) -> dict:
    from .commands import execute

    return execute(command, payload, use_cache=use_cache).model_dump(mode="json")


def _write_csv(path: Path, rows: list) -> None:
    if not rows:
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required")
        base = json.loads(args.config.read_text()) if args.config else {}
        command, payload = build_request(args, base)
        url = args.server or server_url()
        if url:
            out = _remote(url, command, payload)
        else:
            out = _local(command, payload, not args.no_cache)
    except (UsageError, ValidationError, ValueError, OSError) as exc:
        print(f"zetasum: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if out.pop("cached", False):
        print("zetasum: result from cache", file=sys.stderr)
    text = json.dumps(out, indent=2, sort_keys=True)
    if args.out:
        args.out.write_text(text + "\n")
    else:
        print(text)
    csv_path = getattr(args, "csv", None)
    if csv_path:
        res = out.get("result", {})
        _write_csv(csv_path, res.get("rows") or res.get("samples") or [])
    for msg in out.get("messages", []):
        print(f"zetasum: {msg}", file=sys.stderr)
    return EXIT_OK if out.get("ok") else EXIT_TOLERANCE


if __name__ == "__main__":
    sys.exit(main())
