"""Command-line interface: ``jetpot {ops,cone,canonical,garding,scenario,check}``.

Exit codes: 0 success (including a failure scenario that exhibits its
expected failure), 1 check failed, 2 usage or precondition error,
3 inconclusive.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys

import numpy as np

from .errors import Inconclusive, JetpotError, PreconditionError, SearchFailure
from .jets import Jet
from .report import VerificationReport, dumps, emit_report

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class UsageError(PreconditionError):
    """Bad command-line input."""


# parsing helpers

def default_seed() -> int:
    raw = os.environ.get("JETPOT_SEED")
    if raw is None or raw == "":
        return 42
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"JETPOT_SEED must be an integer, got {raw!r}") from None


_SCALED_I = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)?\s*\*?\s*I\s*$")


def parse_matrix(text: str, n: int | None = None) -> np.ndarray:
    """Parse ``I``, ``cI``, ``diag(a,b,...)`` or a JSON array."""
    text = str(text).strip()
    m = _SCALED_I.match(text)
    if m:
        if n is None:
            raise UsageError("'I' needs a dimension; pass --n")
        return float(m.group(1) or 1.0) * np.eye(n)
    if text.startswith("diag(") and text.endswith(")"):
        try:
            return np.diag([float(v) for v in text[5:-1].split(",")])
        except ValueError:
            raise UsageError(f"bad diagonal matrix {text!r}") from None
    try:
        A = np.asarray(json.loads(text), dtype=float)
    except (json.JSONDecodeError, ValueError, TypeError):
        raise UsageError(f"cannot parse matrix {text!r}") from None
    if A.ndim == 0 and n is not None:
        return float(A) * np.eye(n)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise UsageError(f"matrix must be square, got shape {A.shape}")
    return A


def _split_top(text: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts]


def parse_jet(text: str, n: int | None = None) -> Jet:
    """Parse a JSON jet ``{"r":..,"p":[..],"A":[[..]]}`` or the triple ``"r,p,A"``.

    In the triple form ``p`` may be ``0`` (zero vector) or a JSON list and
    ``A`` anything :func:`parse_matrix` accepts.
    """
    text = str(text).strip()
    if text.startswith("{"):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"malformed JSON jet: {exc}") from None
        if not isinstance(d, dict):
            raise UsageError("a JSON jet must be an object")
        try:
            return Jet.from_dict(d)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"malformed JSON jet: {exc}") from None
    parts = _split_top(text)
    if len(parts) != 3:
        raise UsageError(f"expected 'r,p,A' or a JSON jet, got {text!r}")
    try:
        r = float(parts[0])
    except ValueError:
        raise UsageError(f"bad jet value {parts[0]!r}") from None
    p = None
    if parts[1] not in ("0", "0.0"):
        try:
            p = np.asarray(json.loads(parts[1]), dtype=float)
        except (json.JSONDecodeError, ValueError, TypeError):
            raise UsageError(f"bad gradient {parts[1]!r}") from None
        n = p.size if n is None else n
    A = parse_matrix(parts[2], n)
    n = A.shape[0]
    return Jet(r, np.zeros(n) if p is None else p, A)


def parse_params(tokens: list[str]) -> dict:
    """``--key value`` and ``key=value`` tokens to a dict with numeric conversion."""
    out = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok.startswith("--"):
            key = tok[2:]
            if "=" in key:
                key, val = key.split("=", 1)
            else:
                if i + 1 >= len(tokens):
                    raise UsageError(f"missing value for {tok}")
                val = tokens[i + 1]
                i += 1
        elif "=" in tok:
            key, val = tok.split("=", 1)
        else:
            raise UsageError(f"unexpected argument {tok!r}")
        out[key.replace("-", "_")] = _convert(val)
        i += 1
    return out


def _convert(val: str):
    for cast in (int, float):
        try:
            return cast(val)
        except ValueError:
            pass
    if val.lower() in ("true", "false"):
        return val.lower() == "true"
    if val.lower() in ("none", "null"):
        return None
    return val


# named sets for cone and canonical queries

CONE_NAMES = ("P", "NP", "N", "R", "D", "gamma", "minimal")
SET_ALIASES = {"P": "lambda_min", "NP": "min_neg_r_lambda_min", "NxP": "min_neg_r_lambda_min",
               "Pk": "truncated_laplacian", "N": "neg_r", "MR": "lambda_min_minus_gradient"}


def build_cone(name: str, n: int, R: float = 1.0, gamma: float = 0.0, halfspace=None):
    from . import cones

    if name == "P":
        return cones.cone_P(n)
    if name == "NP":
        return cones.cone_NP(n)
    if name == "N":
        return cones.cone_N(n)
    if name == "R":
        return cones.cone_R(n, R)
    if name == "gamma":
        return cones.cone_gamma(n, gamma)
    if name == "minimal":
        return cones.minimal_cone(n)
    if name == "D":
        b = np.eye(n)[-1] if halfspace is None else np.asarray(halfspace, dtype=float)
        return cones.cone_D(cones.DirectionalCone.halfspace(b))
    raise UsageError(f"unknown cone {name!r}; known: {', '.join(CONE_NAMES)}")


def resolve_set(name: str, n: int, k=None, R: float = 1.0, params: dict | None = None):
    """Constraint set and default axis for a canonical query."""
    from .canonical import canonical_catalog
    from .operators import CATALOG, catalog

    entries = canonical_catalog(n, k=k, R=R)
    key = SET_ALIASES.get(name, name)
    if key in entries:
        e = entries[key]
        return e.constraint, e.J0, e
    if name in CATALOG:
        spec = catalog(name, n, **(params or {}))
        return spec.check_set(), spec.axis, None
    raise UsageError(f"unknown set {name!r}; use one of {sorted(SET_ALIASES)}, "
                     f"{sorted(entries)} or an operator catalog name")


# subcommand handlers; each returns (payload, exit code)

def cmd_ops(args):
    from .operators import CATALOG, admissible_levels, catalog, eval_operator, operator_checks

    params = parse_params(args.param or [])
    if args.action == "list":
        return {"operators": [{"name": k, "parameters": v[1]} for k, v in CATALOG.items()]}, EXIT_OK
    if not args.name:
        raise UsageError(f"ops {args.action} needs an operator name")
    spec = catalog(args.name, args.n, **params)
    if args.action == "show":
        out = spec.to_dict()
        out["admissible_levels"] = admissible_levels(spec, seed=args.seed).to_dict()
        return out, EXIT_OK
    if args.action == "eval":
        if not args.jet:
            raise UsageError("ops eval needs --jet")
        J = parse_jet(args.jet, args.n)
        return {"operator": spec.name, "value": eval_operator(spec, J)}, EXIT_OK
    rep = operator_checks(spec, args.samples, args.seed)
    return rep, _report_code(rep)


def cmd_cone(args):
    from .cones import polar_member

    M = build_cone(args.name, args.n, args.R, args.gamma)
    out = {"cone": M.describe(), "definition": M.to_dict()}
    if args.jet:
        J = parse_jet(args.jet, args.n)
        out.update(margin=float(M.margin(J)), member=bool(M.member(J)),
                   interior=bool(M.interior(J)), dual_margin=float(-M.margin(-J)),
                   polar_member=bool(polar_member(M, J)))
    return out, EXIT_OK


def cmd_canonical(args):
    from .canonical import canonical_eval, dual_canonical_eval, solve_ray

    if not args.jet:
        raise UsageError("canonical needs --jet")
    J = parse_jet(args.jet, args.n)
    n = J.n
    S, J0, entry = resolve_set(args.set, n, args.k, args.R)
    if args.J0:
        J0 = parse_jet(args.J0, n)
    sol = solve_ray(S, J0, J)
    out = {"set": S.name, "J0": J0.to_dict(), **sol.to_dict(),
           "dual_value": float(dual_canonical_eval(S, J0, J))}
    out["value"] = float(canonical_eval(S, J0, J))
    if entry is not None and _same_jet(J0, entry.J0):
        out["closed_form"] = float(entry.closed_form(J))
    return out, EXIT_OK


def _same_jet(a: Jet, b: Jet) -> bool:
    return bool(np.allclose(a.r, b.r) and np.allclose(a.p, b.p) and np.allclose(a.A, b.A))


def cmd_garding(args):
    from .garding import garding_from_name

    A = parse_matrix(args.A, args.n)
    g = garding_from_name(args.poly, A.shape[0])
    if args.action == "eigs":
        return {"poly": args.poly, "eigenvalues": np.sort(g.eigenvalues(A)).tolist()}, EXIT_OK
    if args.action == "value":
        return {"poly": args.poly, "value": float(g(A))}, EXIT_OK
    k = 1 if args.k is None else args.k
    return {"poly": args.poly, "branch": k, "margin": float(g.branch_margin(k, A))}, EXIT_OK


def cmd_scenario(args):
    from .verify import SCENARIOS, run_scenario

    if args.name == "list":
        return {"scenarios": [{"name": k, "anchor": v.anchor, "defaults": v.defaults,
                               "expected": v.expected} for k, v in SCENARIOS.items()]}, EXIT_OK
    params = dict(args.config_params)
    params.update(parse_params(args.extra or []))
    rep = run_scenario(args.name, seed=args.seed, keep_rows=args.format == "csv", **params)
    if rep.inconclusive:
        return rep, EXIT_INCONCLUSIVE
    return rep, EXIT_OK if rep.details.get("reproduced") else EXIT_FAIL


def cmd_check(args):
    from .operators import catalog, operator_checks

    params = dict(args.config_params)
    params.update(parse_params(args.param or []))
    if not args.op:
        raise UsageError("check needs --op")
    spec = catalog(args.op, args.n, **params)
    rep = operator_checks(spec, args.samples, args.seed)
    return rep, _report_code(rep)


def _report_code(rep: VerificationReport) -> int:
    if rep.passed:
        return EXIT_OK
    return EXIT_INCONCLUSIVE if rep.inconclusive else EXIT_FAIL


# argument parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (default JETPOT_SEED or 42)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", default=None, help="write the result to this path")
    common.add_argument("--config", default=None, help="JSON file whose keys mirror the flags")

    p = argparse.ArgumentParser(prog="jetpot", description="Potential theory on 2-jet space.",
                                allow_abbrev=False)
    sub = p.add_subparsers(dest="command", required=True)

    o = sub.add_parser("ops", parents=[common], allow_abbrev=False, help="operator catalog")
    o.add_argument("action", choices=("list", "show", "eval", "check"))
    o.add_argument("name", nargs="?")
    o.add_argument("--n", type=int, default=2)
    o.add_argument("--param", action="append", help="key=value operator parameter")
    o.add_argument("--jet")
    o.add_argument("--samples", type=int, default=2000)

    c = sub.add_parser("cone", parents=[common], allow_abbrev=False, help="monotonicity cone queries")
    c.add_argument("name", choices=CONE_NAMES)
    c.add_argument("--n", type=int, default=2)
    c.add_argument("--R", type=float, default=1.0)
    c.add_argument("--gamma", type=float, default=0.0)
    c.add_argument("--jet")

    k = sub.add_parser("canonical", parents=[common], allow_abbrev=False, help="canonical operator value")
    k.add_argument("--set", required=True)
    k.add_argument("--J0")
    k.add_argument("--jet")
    k.add_argument("--n", type=int, default=None)
    k.add_argument("--k", type=int, default=None)
    k.add_argument("--R", type=float, default=1.0)

    g = sub.add_parser("garding", parents=[common], allow_abbrev=False, help="Garding eigenvalues")
    g.add_argument("action", choices=("eigs", "value", "margin"))
    g.add_argument("--poly", required=True)
    g.add_argument("--A", required=True)
    g.add_argument("--n", type=int, default=None)
    g.add_argument("--k", type=int, default=None)

    s = sub.add_parser("scenario", parents=[common], allow_abbrev=False, help="run a verification scenario")
    s.add_argument("name")

    ch = sub.add_parser("check", parents=[common], allow_abbrev=False, help="sampled checks of a catalog operator")
    ch.add_argument("--op")
    ch.add_argument("--n", type=int, default=2)
    ch.add_argument("--param", action="append")
    ch.add_argument("--samples", type=int, default=2000)
    return p


HANDLERS = {"ops": cmd_ops, "cone": cmd_cone, "canonical": cmd_canonical, "garding": cmd_garding,
            "scenario": cmd_scenario, "check": cmd_check}


def _apply_config(args, argv):
    """Merge a JSON config into ``args``; unknown keys go to ``config_params`` or are rejected."""
    args.config_params = {}
    if args.config is None:
        return
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    explicit = {t[2:].split("=")[0].replace("-", "_") for t in argv if t.startswith("--")}
    params = cfg.pop("params", {})
    if not isinstance(params, dict):
        raise UsageError("config 'params' must be an object")
    for key, val in cfg.items():
        if key in ("command", "config") or not hasattr(args, key):
            raise UsageError(f"unknown config key {key!r}")
        if key not in explicit:
            setattr(args, key, val)
    if args.command in ("scenario", "check"):
        args.config_params = params
    elif params:
        args.param = (args.param or []) + [f"{k}={v}" for k, v in params.items()]


def dispatch(argv: list[str] | None = None, stdout=None) -> int:
    """Run one command; prints the result and returns the exit code."""
    stdout = sys.stdout if stdout is None else stdout
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args, extra = parser.parse_known_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if extra and args.command != "scenario":
            raise UsageError(f"unrecognized arguments: {' '.join(extra)}")
        args.extra = extra
        _apply_config(args, argv)
        if args.seed is None:
            args.seed = default_seed()
        payload, code = HANDLERS[args.command](args)
    except (Inconclusive, SearchFailure) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (JetpotError, ValueError, NotImplementedError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_USAGE
    if isinstance(payload, VerificationReport):
        text = emit_report(payload, args.format, args.output)
    else:
        if args.format == "csv":
            print(json.dumps({"error": "UsageError", "message": "csv output is only available "
                              "for reports"}), file=sys.stderr)
            return EXIT_USAGE
        text = dumps(payload) + "\n"
        if args.output:
            with open(args.output, "w") as fh:
                fh.write(text)
    if args.output is None:
        stdout.write(text)
    return code


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
