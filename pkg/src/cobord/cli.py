"""Command line front end: ``python -m cobord <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Sequence

from . import __version__
from .fgl import KINDS, fgl_sum, formal_inverse, make_law, n_series, series_to_json
from .gamma import GammaParams, build_gamma
from .graded import graded_presentation
from .groups import GroupOrderError, GroupSpecError, chain_poset, parse_group
from .poly import Poly

EXIT_OK, EXIT_INVALID, EXIT_MISMATCH = 0, 2, 3
SCHEMA_BASE = "urn:cobord:schema:"
SUPER = str.maketrans("0123456789-", "⁰¹²³⁴⁵⁶⁷⁸⁹⁻")
SUB = str.maketrans("0123456789", "₀₁₂₃₄₅₆₇₈₉")


class ValidationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# parsing helpers


def parse_degrees(text: str) -> list[int]:
    """``"a..b"`` (inclusive) or a single integer."""
    m = re.fullmatch(r"\s*(-?\d+)\s*(?:\.\.\s*(-?\d+)\s*)?", text)
    if not m:
        raise ValidationError(f"bad degree range {text!r}; expected a..b")
    lo = int(m.group(1))
    hi = int(m.group(2)) if m.group(2) is not None else lo
    if hi < lo:
        raise ValidationError(f"empty degree range {text!r}")
    return list(range(lo, hi + 1))


def format_group(factors: Sequence[int]) -> str:
    """``[2, 4, 0, 0]`` -> ``"Z/2 + Z/4 + Z^2"``; the trivial group is ``"0"``."""
    parts = [f"Z/{a}" for a in factors if a]
    free = sum(1 for a in factors if a == 0)
    if free:
        parts.append("Z" if free == 1 else f"Z^{free}")
    return " + ".join(parts) if parts else "0"


def parse_group_string(text: str) -> list[int]:
    """Inverse of :func:`format_group`."""
    text = text.strip()
    if text == "0":
        return []
    out: list[int] = []
    free = 0
    for part in text.split("+"):
        part = part.strip()
        if part.startswith("Z/"):
            out.append(int(part[2:]))
        elif part == "Z":
            free += 1
        elif part.startswith("Z^"):
            free += int(part[2:])
        else:
            raise ValueError(f"cannot parse {part!r}")
    return out + [0] * free


def pretty_series(p: Poly) -> str:
    """Human form such as ``2x + βx²``."""
    ring = p.ring
    base = ring.base
    nv = ring.nvars
    gens = [n for n, _ in base.generators]
    if not p.terms:
        return "0"
    pieces = []
    for key, c in p.sorted_terms():
        c = Fraction(c)
        mono = ""
        for g, e in zip(gens, key[nv:]):
            if e:
                m = re.fullmatch(r"([a-z]+)(\d*)", g)
                name = "β" if g == "b" else (m.group(1) + m.group(2).translate(SUB) if m else g)
                mono += name + (str(e).translate(SUPER) if e != 1 else "")
        for name, e in zip(ring.names, key[:nv]):
            if e:
                mono += name + (str(e).translate(SUPER) if e != 1 else "")
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        coef = "" if (mag == 1 and mono) else str(mag)
        pieces.append((sign, coef + mono))
    out = ("-" if pieces[0][0] == "-" else "") + pieces[0][1]
    for sign, body in pieces[1:]:
        out += f" {sign} {body}"
    return out


def dump(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False)


# ---------------------------------------------------------------------------
# run configuration


def run_config(args: argparse.Namespace) -> dict:
    cfg = {"subcommand": args.command, "format": args.format, "deterministic": True, "version": __version__}
    for name in ("group", "flavor", "fgl", "law", "action", "k", "order", "p", "n", "jobs", "allow_unstable", "show_ring", "chain"):
        if hasattr(args, name) and getattr(args, name) is not None:
            cfg[name] = getattr(args, name)
    if getattr(args, "degrees", None) is not None:
        d = parse_degrees(args.degrees)
        cfg["degrees"] = [d[0], d[-1]]
    if hasattr(args, "laurent"):
        cfg["params"] = params_from(args).to_json()
        # completion precision is derived from the degree window; results record it
        cfg["params"].pop("N")
        cfg["params"]["precision"] = args.precision
    return cfg


def params_from(args: argparse.Namespace) -> GammaParams:
    law = getattr(args, "fgl", None) or "universal-integral"
    if law not in KINDS:
        raise ValidationError(f"unknown law {law!r}")
    try:
        return GammaParams(D=args.D, E=args.laurent, P=args.P, I=args.I, M=args.M, law=law)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc


def schedule_from(args: argparse.Namespace, degrees: Sequence[int]):
    from .limit import default_schedule

    if args.precision < 0:
        raise ValidationError("--precision must be nonnegative")
    return default_schedule(params_from(args), degrees, extra=args.precision)


# ---------------------------------------------------------------------------
# subcommands


def cmd_fgl(args: argparse.Namespace) -> tuple[int, str]:
    if args.law not in KINDS:
        raise ValidationError(f"unknown law {args.law!r}")
    if args.order < 1:
        raise ValidationError("--order must be positive")
    D = args.D if args.D is not None else max(args.order - 1, 1)
    law = make_law(args.law, 2 * D, args.order)
    cfg = run_config(args)
    if args.action == "nseries":
        s = n_series(law, args.k, args.order)
    elif args.action == "inverse":
        x = n_series(law, 1, args.order)
        s = formal_inverse(law, x)
    elif args.action == "sum":
        s = law.as_series(args.order)
    else:
        raise ValidationError(f"unknown fgl action {args.action!r}")
    if args.format == "json":
        return EXIT_OK, dump({"$schema": SCHEMA_BASE + "series-output", "config": cfg, "series": series_to_json(s)})
    return EXIT_OK, pretty_series(s)


def cmd_poset(args: argparse.Namespace) -> tuple[int, str]:
    G = parse_group(args.group)
    P = chain_poset(G, args.flavor)
    data = P.to_json()
    if args.format == "json":
        return EXIT_OK, dump({"$schema": SCHEMA_BASE + "poset", "config": run_config(args), "poset": data, "count": len(P.nodes)})
    lines = [f"{data['group']} flavor {data['flavor']}: {len(P.nodes)} nodes"]
    for node in data["nodes"]:
        above = data["adjacency"][node]
        lines.append(f"  {node}" + (f" -> {', '.join(above)}" if above else ""))
    return EXIT_OK, "\n".join(lines)


def cmd_gamma(args: argparse.Namespace) -> tuple[int, str]:
    G = parse_group(args.group)
    P = chain_poset(G, args.flavor)
    prm = params_from(args)
    from .limit import auto_precision

    degrees = parse_degrees(args.degrees) if args.degrees else []
    prm = prm.with_(N=auto_precision(prm.D, prm.E, prm.P, degrees or [0], extra=args.precision))
    nodes = [S for S in P.nodes if args.chain is None or S.ident() == args.chain]
    if not nodes:
        raise ValidationError(f"no chain {args.chain!r} in {P.flavor}({G})")
    out = []
    for S in nodes:
        g = build_gamma(G, S, prm)
        entry = {"chain": S.ident(), "presentations": []}
        if args.show_ring or args.format == "table":
            entry["ring"] = g.describe()
        for d in degrees:
            entry["presentations"].append(graded_presentation(g.roster(), g.relations, d).to_json())
        out.append(entry)
    if args.format == "json":
        return EXIT_OK, dump({"$schema": SCHEMA_BASE + "gamma", "config": run_config(args), "nodes": out})
    lines = []
    for e in out:
        lines.append(e["ring"])
        for pr in e["presentations"]:
            lines.append(f"  degree {pr['degree']}: {format_group(pr['invariant_factors'])}")
    return EXIT_OK, "\n".join(lines)


def _limit_chunk(job):
    from .limit import stabilize

    group, degrees, schedule, flavor = job
    return stabilize(parse_group(group), degrees, schedule, flavor)


def _zpn_chunk(job):
    from .zpn import zpn_pullback

    p, n, degrees, schedule = job
    return zpn_pullback(p, n, degrees, schedule[0], schedule)


def _chunks(degrees: list[int], jobs: int) -> list[list[int]]:
    jobs = max(1, min(jobs, len(degrees)))
    return [degrees[i::jobs] for i in range(jobs)]


def _run_jobs(fn, jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) == 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _limit_output(args, cfg, results, schema="limit") -> tuple[int, str]:
    results = sorted(results, key=lambda r: r.degree)
    unstable = [r.degree for r in results if not r.stable]
    if unstable and not args.allow_unstable:
        raise ValidationError(f"results not stable in degrees {unstable}; rerun with --allow-unstable to see them")
    if args.format == "json":
        payload = {"$schema": SCHEMA_BASE + schema, "config": cfg, "results": [r.to_json(args.witnesses) for r in results]}
        return EXIT_OK, dump(payload)
    lines = [f"# {cfg['subcommand']} {cfg.get('group', '')} {cfg.get('flavor', '')}".rstrip()]
    for r in results:
        lines.append(f"{r.degree}\t{format_group(r.invariant_factors)}\t{'stable' if r.stable else 'unstable'}")
    return EXIT_OK, "\n".join(lines)


def cmd_limit(args: argparse.Namespace) -> tuple[int, str]:
    G = parse_group(args.group)
    chain_poset(G, args.flavor)  # validates flavor and order bound
    degrees = parse_degrees(args.degrees)
    if params_from(args).law == "universal-rational":
        raise ValidationError("limits need an integral base; use universal-integral")
    schedule = schedule_from(args, degrees)
    jobs = [(args.group, chunk, schedule, args.flavor) for chunk in _chunks(degrees, args.jobs)]
    results = [r for part in _run_jobs(_limit_chunk, jobs, args.jobs) for r in part]
    return _limit_output(args, run_config(args), results)


def _check_pn(args) -> None:
    from .zpn import _is_prime

    if not _is_prime(args.p) or args.n < 1:
        raise ValidationError("need a prime --p and --n >= 1")
    from .groups import max_group_order

    if args.p**args.n > max_group_order():
        raise ValidationError(f"p^n = {args.p**args.n} exceeds the group order bound {max_group_order()}")


def cmd_zpn(args: argparse.Namespace) -> tuple[int, str]:
    _check_pn(args)
    degrees = parse_degrees(args.degrees)
    if params_from(args).law == "universal-rational":
        raise ValidationError("the pullback needs an integral base; use universal-integral")
    schedule = schedule_from(args, degrees)
    jobs = [(args.p, args.n, chunk, schedule) for chunk in _chunks(degrees, args.jobs)]
    results = [r for part in _run_jobs(_zpn_chunk, jobs, args.jobs) for r in part]
    return _limit_output(args, run_config(args), results)


def cmd_crosscheck(args: argparse.Namespace) -> tuple[int, str]:
    from .zpn import crosscheck_zpn

    _check_pn(args)
    degrees = parse_degrees(args.degrees)
    schedule = schedule_from(args, degrees)
    rep = crosscheck_zpn(args.p, args.n, degrees, schedule[-1], schedule)
    stable = all(r["zpn_stable"] and r["limit_stable"] for r in rep["degrees"])
    ok = rep["agree"] and (stable or args.allow_unstable)
    cfg = run_config(args)
    if args.format == "json":
        text = dump({"$schema": SCHEMA_BASE + "crosscheck", "config": cfg, "report": rep, "stable": stable, "ok": ok})
    else:
        lines = [f"# crosscheck Z/{args.p ** args.n} (p={args.p}, n={args.n})"]
        for r in rep["degrees"]:
            mark = "ok" if r["agree"] else "MISMATCH"
            lines.append(f"{r['degree']}\t{format_group(r['zpn'])}\t{format_group(r['limit'])}\t{mark}")
        lines.append(f"euler tuple in limit: zpn={rep['euler_tuple']['zpn']} poset={rep['euler_tuple']['limit']}")
        lines.append("result: " + ("agree" if ok else "MISMATCH" if not rep["agree"] else "unstable"))
        text = "\n".join(lines)
    return (EXIT_OK if ok else EXIT_MISMATCH), text


# ---------------------------------------------------------------------------
# argument parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("json", "table"), default="table")


def _add_params(p: argparse.ArgumentParser, laurent_default: int = 2) -> None:
    p.add_argument("--fgl", default="universal-integral", help="law kind (default universal-integral)")
    p.add_argument("--D", type=int, default=3, help="base truncation: degrees <= 2D")
    p.add_argument("--laurent", "--E", dest="laurent", type=int, default=laurent_default, help="level-0 Laurent box radius")
    p.add_argument("--P", type=int, default=1, help="weight bound on coefficient classes in the box")
    p.add_argument("--I", type=int, default=None, help="coefficient class index bound (default D+1)")
    p.add_argument("--M", type=int, default=1, help="window margin for the target quotients")
    p.add_argument("--precision", type=int, default=1, help="extra completion precision beyond the automatic minimum")
    p.add_argument("--allow-unstable", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--witnesses", action="store_true", help="include kernel witnesses in JSON output")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cobord", description="Equivariant complex cobordism coefficients from chain-poset limits.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fgl", help="formal group law arithmetic")
    p.add_argument("action", choices=("nseries", "sum", "inverse"))
    p.add_argument("--law", default="universal-integral")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--D", type=int, default=None, help="base truncation (default order-1)")
    _add_common(p)

    p = sub.add_parser("poset", help="chain posets of subgroups")
    p.add_argument("--group", required=True)
    p.add_argument("--flavor", default="P''")
    _add_common(p)

    p = sub.add_parser("gamma", help="the rings attached to chains")
    p.add_argument("--group", required=True)
    p.add_argument("--flavor", default="P''")
    p.add_argument("--chain", default=None, help="chain identifier such as '[e < <2>]'")
    p.add_argument("--degrees", default=None)
    p.add_argument("--show-ring", action="store_true")
    _add_params(p)
    _add_common(p)

    p = sub.add_parser("limit", help="degreewise limit over a chain poset")
    p.add_argument("--group", required=True)
    p.add_argument("--flavor", default="P''")
    p.add_argument("--degrees", default="-4..4")
    _add_params(p)
    _add_common(p)

    for name, helptext in (("zpn", "pullback of the cyclic staircase"), ("crosscheck", "staircase against the poset limit")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--p", type=int, required=True)
        p.add_argument("--n", type=int, default=1)
        p.add_argument("--degrees", default="-4..4")
        _add_params(p)
        _add_common(p)
    return ap


COMMANDS = {
    "fgl": cmd_fgl,
    "poset": cmd_poset,
    "gamma": cmd_gamma,
    "limit": cmd_limit,
    "zpn": cmd_zpn,
    "crosscheck": cmd_crosscheck,
}


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    ap = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    # "-8..8" looks like an option to argparse; glue it to its flag
    for i in range(len(argv) - 1):
        if argv[i] == "--degrees" and argv[i + 1].startswith("-"):
            argv[i : i + 2] = [f"--degrees={argv[i + 1]}", ""]
    argv = [a for a in argv if a != ""]
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        code, text = COMMANDS[args.command](args)
    except (ValidationError, GroupSpecError, GroupOrderError, ValueError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INVALID
    print(text, file=stdout)
    return code


def main() -> None:
    sys.exit(run())


__all__ = ["build_parser", "format_group", "main", "parse_degrees", "parse_group_string", "pretty_series", "run"]
