"""Command-line front end.

Exit codes: 0 success, 1 verification failure (or a search that fell short of
its target), 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path

from . import __version__
from .errors import PrimechainError
from .prime_engine import is_prime

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ConfigError(PrimechainError):
    """Invalid run configuration; ``field`` names the offending entry."""

    def __init__(self, field_name: str, msg: str):
        super().__init__(f"{field_name}: {msg}")
        self.field = field_name


def parse_int(text, name: str = "value") -> int:
    """Integer from '1000', '1e6' or '10**7'; rejects non-integral values."""
    s = str(text).strip().replace("_", "")
    try:
        if "**" in s:
            base, exp = s.split("**")
            return int(base) ** int(exp)
        d = Decimal(s)
    except (InvalidOperation, ValueError):
        raise ConfigError(name, f"not an integer: {text!r}") from None
    if d != d.to_integral_value():
        raise ConfigError(name, f"not an integer: {text!r}")
    return int(d)


def parse_int_list(text, name: str) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [parse_int(x, name) for x in text]
    return [parse_int(x, name) for x in str(text).split(",") if x.strip()]


def parse_float_list(text, name: str) -> list[float]:
    items = text if isinstance(text, (list, tuple)) else str(text).split(",")
    try:
        return [float(x) for x in items]
    except ValueError:
        raise ConfigError(name, f"not a list of numbers: {text!r}") from None


@dataclass
class RunConfig:
    """Validated parameters of a sieve/chain run."""

    J: list[int]
    theta: list[float]
    N: list[int]
    z: int = 7
    offsets: list[list[int]] | None = None
    pool: object = "odd-squares"
    basis: dict = field(default_factory=dict)
    version: str = __version__

    _BASIS_KEYS = ("long_share", "pieces", "balanced", "decay")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config", "must be a JSON object")
        unknown = set(d) - {"J", "theta", "N", "z", "offsets", "pool", "basis", "version"}
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown field")
        if "J" not in d:
            raise ConfigError("J", "missing")
        J = parse_int_list(d["J"], "J")
        if not J or any(j < 1 for j in J):
            raise ConfigError("J", "block sizes must be positive")
        theta = parse_float_list(d.get("theta", [1.0 / len(J)] * len(J)), "theta")
        if len(theta) != len(J):
            raise ConfigError("theta", f"need {len(J)} values")
        if any(t <= 0 for t in theta) or sum(theta) > 1 + 1e-12:
            raise ConfigError("theta", "values must be positive with sum <= 1")
        if "N" not in d:
            raise ConfigError("N", "missing")
        N = parse_int_list(d["N"] if isinstance(d["N"], list) else [d["N"]], "N")
        if any(n < 2 for n in N):
            raise ConfigError("N", "must be >= 2")
        z = parse_int(d.get("z", 7), "z")
        if z < 2:
            raise ConfigError("z", "must be >= 2")
        offsets = d.get("offsets")
        if offsets is not None:
            if not isinstance(offsets, list) or [len(b) for b in offsets] != J:
                raise ConfigError("offsets", "need one list of J_i offsets per block")
            offsets = [parse_int_list(b, "offsets") for b in offsets]
        pool = d.get("pool", "odd-squares")
        if isinstance(pool, list):
            pool = parse_int_list(pool, "pool")
        elif pool != "odd-squares":
            raise ConfigError("pool", "must be 'odd-squares' or a list of offsets")
        basis = d.get("basis", {}) or {}
        if not isinstance(basis, dict) or set(basis) - set(cls._BASIS_KEYS):
            raise ConfigError("basis", f"allowed keys: {', '.join(cls._BASIS_KEYS)}")
        return cls(J, theta, N, z, offsets, pool, dict(basis))

    def grid(self):
        from .chain_selector import pool_offsets
        from .maynard_sieve import SieveGrid

        try:
            if self.offsets is not None:
                return SieveGrid(tuple(self.J), tuple(tuple(b) for b in self.offsets), tuple(self.theta))
            offs = pool_offsets(self.pool, sum(self.J))
            return SieveGrid.from_pool(offs.offsets, self.J, self.theta)
        except PrimechainError as exc:
            raise ConfigError("offsets" if self.offsets is not None else "pool", str(exc)) from None


def to_document(kind: str, result) -> dict:
    return {"kind": kind, "version": __version__, **result.to_dict()}


def emit_report(doc, path: str | None = None, fmt: str = "json", rows: list[dict] | None = None) -> str:
    """Serialise a document as JSON, or its rows as CSV, to ``path`` or stdout."""
    if fmt == "json":
        text = json.dumps(doc, indent=2) + "\n"
    elif fmt == "csv":
        if rows is None:
            raise ConfigError("format", "this result has no tabular form")
        buf = io.StringIO()
        if rows:
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        text = buf.getvalue()
    else:
        raise ConfigError("format", f"unknown format {fmt!r}")
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)
    return text


# ---- verification using only primality -------------------------------------------------


def _strictly_increasing(xs) -> bool:
    return all(b > a for a, b in zip(xs, xs[1:]))


def _verify_witness(d: dict) -> list[str]:
    errs = []
    offs, ws = d["offsets"], d["witnesses"]
    if not _strictly_increasing(offs):
        errs.append("offsets not strictly increasing")
    if not _strictly_increasing(ws):
        errs.append("witnesses not strictly increasing")
    if ws and ws[-1] > d["searched_up_to"]:
        errs.append("witness beyond searched_up_to")
    for n in ws:
        bad = [h for h in offs if not is_prime(n + h)]
        if bad:
            errs.append(f"n={n}: n+{bad[0]} is composite")
    return errs


def _verify_goodtuple(d: dict) -> list[str]:
    ps = d["primes"]
    errs = []
    if not _strictly_increasing(ps):
        errs.append("primes not increasing")
    errs += [f"{p} is not a prime > 3" for p in ps if p <= 3 or not is_prime(p)]
    for j in range(len(ps)):
        for i in range(j):
            if not is_prime(ps[i] + ps[j] + 1):
                errs.append(f"{ps[i]}+{ps[j]}+1 composite")
            if (ps[j] + 2) % ps[i] == 0:
                errs.append(f"{ps[i]} divides {ps[j]}+2")
    if d.get("step_witnesses", []) != ps[1:]:
        errs.append("step witnesses do not match the appended primes")
    return errs


def _verify_sumset(d: dict) -> list[str]:
    a, b = d["a"], d["b"]
    errs = []
    if not _strictly_increasing(a) or not _strictly_increasing(b):
        errs.append("a and b must be strictly increasing")
    for j in range(1, len(b) + 1):
        for i in range(1, min(j, len(a) + 1)):
            if not is_prime(a[i - 1] + b[j - 1]):
                errs.append(f"a_{i}+b_{j}={a[i - 1] + b[j - 1]} composite")
    return errs


def _verify_chain(d: dict) -> list[str]:
    offs = [link["offset"] for link in d["chain"]]
    errs = []
    if not _strictly_increasing(offs):
        errs.append("chain offsets not increasing")
    certs = d["prefix_witnesses"]
    if len(certs) != len(offs):
        errs.append("one witness certificate per prefix required")
    for r, cert in enumerate(certs, start=1):
        if cert["offsets"] != offs[:r]:
            errs.append(f"prefix {r}: offsets mismatch")
        if not cert["witnesses"]:
            errs.append(f"prefix {r}: no witness")
        errs += [f"prefix {r}: {e}" for e in _verify_witness(cert)]
    return errs


VERIFIERS = {
    "witness": _verify_witness,
    "goodtuple": _verify_goodtuple,
    "sumset": _verify_sumset,
    "chain": _verify_chain,
}


def verify_document(doc: dict) -> list[str]:
    """Problems found in a certificate document (empty list means valid)."""
    kind = doc.get("kind")
    if kind not in VERIFIERS:
        for k, keys in (("chain", "prefix_witnesses"), ("goodtuple", "primes"), ("sumset", "b"),
                        ("witness", "witnesses")):
            if keys in doc:
                kind = k
                break
        else:
            return ["unrecognised certificate"]
    try:
        return VERIFIERS[kind](doc)
    except (KeyError, TypeError) as exc:
        return [f"malformed {kind} certificate: {exc}"]


# ---- subcommands -------------------------------------------------------------------------


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError("path", str(exc)) from None
    except json.JSONDecodeError as exc:
        raise ConfigError("path", f"invalid JSON: {exc}") from None


def cmd_admissible_check(args) -> int:
    from .admissibility import is_admissible

    rep = is_admissible(parse_int_list(args.offsets, "offsets"))
    emit_report(to_document("admissibility", rep), args.out)
    print("admissible" if rep.admissible else "not admissible", file=sys.stderr)
    return EXIT_OK if rep.admissible else EXIT_FAIL


def cmd_admissible_witness(args) -> int:
    from .admissibility import primitive_class
    from .prime_engine import find_witnesses

    offs = parse_int_list(args.offsets, "offsets")
    residue = primitive_class(offs, args.z) if args.z else None
    cert = find_witnesses(offs, parse_int(args.lo, "lo"), parse_int(args.hi, "hi"),
                          max_count=args.max_count, residue=residue, workers=args.threads)
    emit_report(to_document("witness", cert), args.out)
    return EXIT_OK


def cmd_goodtuple_build(args) -> int:
    from .good_tuples import build_chain

    res = build_chain(parse_int(args.seed, "seed"), args.len, parse_int(args.bound, "bound"), args.threads)
    emit_report(to_document("goodtuple", res), args.out)
    return EXIT_OK if len(res.primes) >= args.len else EXIT_FAIL


def cmd_goodtuple_verify(args) -> int:
    from .good_tuples import verify_good

    if args.input:
        errs = verify_document(_load_json(args.input))
    else:
        chk = verify_good(parse_int_list(args.primes, "primes"))
        errs = [] if chk.ok else [chk.violation]
    return _report_verification(errs)


def _report_verification(errs: list[str]) -> int:
    for e in errs:
        print(f"FAIL {e}")
    if not errs:
        print("OK")
    return EXIT_OK if not errs else EXIT_FAIL


def cmd_sieve_verify(args) -> int:
    from .maynard_sieve import SieveConfig, default_cutoff, verify_estimates

    cfg = RunConfig.from_dict(_load_json(args.config))
    grid = cfg.grid()
    F = default_cutoff(grid, **cfg.basis)
    reports = []
    for N in cfg.N:
        try:
            sc = SieveConfig(grid, N, cfg.z)
        except PrimechainError as exc:
            raise ConfigError("N", str(exc)) from None
        reports.append(verify_estimates(sc, F, workers=args.threads))
    if args.format == "csv":
        rows = [{"N": r.config["N"], **row} for r in reports for row in r.to_rows()]
        emit_report(None, args.out, "csv", rows)
    else:
        doc = {"kind": "sieve-report", "version": __version__, "reports": [r.to_dict() for r in reports]}
        emit_report(doc, args.out)
    return EXIT_OK


def cmd_sieve_functionals(args) -> int:
    from .cutoffs import basis_ratios, functional_table
    from .maynard_sieve import default_cutoff

    if args.config:
        cfg = RunConfig.from_dict(_load_json(args.config))
        F = default_cutoff(cfg.grid(), **cfg.basis)
        doc = {"kind": "functionals", "version": __version__, **functional_table(F, exact=False).to_dict()}
        emit_report(doc, args.out)
        return EXIT_OK
    from .cutoffs import maynard_basis

    ratios = [basis_ratios(maynard_basis(J)) for J in parse_int_list(args.J, "J")]
    rows = [r.to_dict() for r in ratios]
    doc = {"kind": "basis-ratios", "version": __version__, "ratios": rows,
           "c": min(r.c for r in ratios), "C": max(r.C for r in ratios)}
    emit_report(doc, args.out, args.format, rows)
    return EXIT_OK


def cmd_chain_run(args) -> int:
    from .chain_selector import run_pipeline

    if args.shape.startswith("doubling:"):
        from .maynard_sieve import doubling_schedule

        J, ths = doubling_schedule(parse_int(args.shape.split(":", 1)[1], "shape"))
        theta = [float(t) for t in ths] if args.theta is None else parse_float_list(args.theta, "theta")
    else:
        if args.theta is None:
            raise ConfigError("theta", "required unless --shape is a doubling preset")
        J = parse_int_list(args.shape, "shape")
        theta = parse_float_list(args.theta, "theta")
    pool = args.pool if args.pool == "odd-squares" else parse_int_list(args.pool, "pool")
    cfg = RunConfig.from_dict({"J": J, "theta": theta, "N": parse_int_list(args.N, "N"), "z": args.z,
                               "pool": pool})
    cert = run_pipeline(cfg.pool, cfg.J, cfg.theta, cfg.N, args.depth, z=cfg.z,
                        min_witnesses=args.witnesses, workers=args.threads)
    emit_report(to_document("chain", cert), args.out)
    return EXIT_OK if len(cert.chain) >= args.depth and cert.verify() else EXIT_FAIL


def cmd_sumset_build(args) -> int:
    from .chain_selector import build_half_sumset

    hs = build_half_sumset(parse_int_list(args.a, "a"), args.count, parse_int(args.bound, "bound"),
                           args.threads)
    emit_report(to_document("sumset", hs), args.out, args.format, hs.to_rows())
    return EXIT_OK if len(hs.b) == args.count + 1 else EXIT_FAIL


def cmd_sumset_verify(args) -> int:
    return _report_verification(verify_document(_load_json(args.input)))


def cmd_verify(args) -> int:
    return _report_verification(verify_document(_load_json(args.certificate)))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="primechain", description="Prime-producing tuples, good-tuple chains, "
                                "Maynard sieve weights and half-sumset certificates.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--threads", type=int, default=None, help="worker threads (capped by PRIMECHAIN_THREADS)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    adm = sub.add_parser("admissible", help="admissibility checks and witness search").add_subparsers(
        dest="action", required=True)
    a = adm.add_parser("check")
    a.add_argument("--offsets", required=True)
    a.add_argument("--out")
    a.set_defaults(func=cmd_admissible_check)
    a = adm.add_parser("witness")
    a.add_argument("--offsets", required=True)
    a.add_argument("--lo", default="1")
    a.add_argument("--hi", required=True)
    a.add_argument("--max-count", type=int, default=10)
    a.add_argument("--z", type=int, default=0, help="restrict to the CRT class mod primorial(z)")
    a.add_argument("--out")
    a.set_defaults(func=cmd_admissible_witness)

    gt = sub.add_parser("goodtuple", help="good-tuple chains").add_subparsers(dest="action", required=True)
    a = gt.add_parser("build")
    a.add_argument("--seed", default="5")
    a.add_argument("--len", type=int, required=True)
    a.add_argument("--bound", required=True)
    a.add_argument("--out")
    a.set_defaults(func=cmd_goodtuple_build)
    a = gt.add_parser("verify")
    g = a.add_mutually_exclusive_group(required=True)
    g.add_argument("--primes")
    g.add_argument("--in", dest="input")
    a.set_defaults(func=cmd_goodtuple_verify)

    sv = sub.add_parser("sieve", help="sieve weights and functionals").add_subparsers(dest="action", required=True)
    a = sv.add_parser("verify")
    a.add_argument("--config", required=True)
    a.add_argument("--out")
    a.add_argument("--format", choices=("json", "csv"), default="json")
    a.set_defaults(func=cmd_sieve_verify)
    a = sv.add_parser("functionals")
    g = a.add_mutually_exclusive_group(required=True)
    g.add_argument("--config")
    g.add_argument("--J", help="block sizes for the basis ratio report, e.g. 4,8,16")
    a.add_argument("--out")
    a.add_argument("--format", choices=("json", "csv"), default="json")
    a.set_defaults(func=cmd_sieve_functionals)

    ch = sub.add_parser("chain", help="second-moment chain selection").add_subparsers(dest="action", required=True)
    a = ch.add_parser("run")
    a.add_argument("--pool", default="odd-squares", help="'odd-squares' or a comma list of offsets")
    a.add_argument("--shape", required=True,
                   help="block sizes, e.g. 2,3, or doubling:B for J_i = 2^(2^i), theta_i = 2^-i")
    a.add_argument("--theta", help="block scales, e.g. 0.5,0.25")
    a.add_argument("--N", required=True, help="one N or a comma-separated schedule")
    a.add_argument("--depth", type=int, required=True)
    a.add_argument("--z", type=int, default=7)
    a.add_argument("--witnesses", type=int, default=1)
    a.add_argument("--out")
    a.set_defaults(func=cmd_chain_run)

    ss = sub.add_parser("sumset", help="half-sumset certificates").add_subparsers(dest="action", required=True)
    a = ss.add_parser("build")
    a.add_argument("--a", required=True)
    a.add_argument("--count", type=int, required=True)
    a.add_argument("--bound", required=True)
    a.add_argument("--out")
    a.add_argument("--format", choices=("json", "csv"), default="json")
    a.set_defaults(func=cmd_sumset_build)
    a = ss.add_parser("verify")
    a.add_argument("--in", dest="input", required=True)
    a.set_defaults(func=cmd_sumset_verify)

    a = sub.add_parser("verify", help="re-verify any certificate with primality tests only")
    a.add_argument("certificate")
    a.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PrimechainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
