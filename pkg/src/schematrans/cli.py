"""Command-line front end.

Exit codes: 0 success, 1 semantic failure (diagnostics, counterexample,
rejected transaction), 2 usage or parse error.  Output goes to stdout
unless ``--out`` names a directory; logs go to stderr.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import dsl
from .carm import derive_carm, export_conceptual_dot
from .enumeration import DomainSpec
from .errors import (
    NotInCarmForm,
    ParseError,
    SchemaTransError,
    StepError,
    TransactionRejected,
)
from .losslessness import (
    EQUIVALENCE,
    FORWARD_DOMINANCE,
    VERIFIED,
    VerificationConfig,
    verify,
)
from .patterns import compose_plan
from .schema import validate_schema
from .sqlgen import emit_sql
from .transducer import TwinState, apply_transaction


def _log(msg: str):
    print(msg, file=sys.stderr)


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _load_schema(path: str):
    return dsl.parse_schema(_read(path))


def _load_plan(path: str):
    return dsl.parse_plan(_read(path))


def _parse_bounds(text: str):
    """``k=2,tuples=3`` -> (domain size, max tuples); either part optional."""
    k, tuples = 2, None
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"bad bounds component {part!r}")
        key, _, val = part.partition("=")
        if key.strip() == "k":
            k = int(val)
        elif key.strip() == "tuples":
            tuples = int(val)
        else:
            raise ValueError(f"unknown bounds key {key.strip()!r}")
    if k <= 0 or (tuples is not None and tuples < 0):
        raise ValueError("bounds must be positive")
    return k, tuples


def _parse_domain_overrides(items):
    """Each item is ``attr=tok1,tok2``; tokens are int or bare string."""
    per_attr = []
    for item in items or ():
        attr, eq, raw = item.partition("=")
        if not eq or not raw:
            raise ValueError(f"bad --domain {item!r}; expected attr=v1,v2")
        tokens = tuple(
            int(t) if t.lstrip("-").isdigit() else t for t in raw.split(",")
        )
        per_attr.append((attr.strip(), tokens))
    return tuple(per_attr)


def _emit_files(files: dict, outdir):
    if outdir:
        os.makedirs(outdir, exist_ok=True)
        for name in sorted(files):
            with open(os.path.join(outdir, name), "w", encoding="utf-8") as fh:
                fh.write(files[name])
            _log(f"wrote {os.path.join(outdir, name)}")
    else:
        for name in sorted(files):
            print(f"-- ==== {name} ====")
            print(files[name], end="" if files[name].endswith("\n") else "\n")


def cmd_check(args) -> int:
    schema = _load_schema(args.schema)
    diags = validate_schema(schema)
    if not schema.relations:
        diags = ["no relations declared"] + list(diags)
    for d in diags:
        print(d)
    if diags:
        return 1
    print(f"ok: {len(schema.relations)} relations, {len(schema.constraints)} constraints")
    return 0


def cmd_plan(args) -> int:
    schema = _load_schema(args.schema)
    steps = _load_plan(args.plan)
    t = compose_plan(schema, steps)
    out = []
    out.append("# target schema")
    out.append(dsl.print_schema(t.target).rstrip("\n"))
    out.append("")
    out.append("# forward mapping (target relations over the source)")
    out.append(dsl.print_mapping(t.fwd).rstrip("\n"))
    out.append("")
    out.append("# backward mapping (source relations over the target)")
    out.append(dsl.print_mapping(t.bwd).rstrip("\n"))
    text = "\n".join(out) + "\n"
    if args.out:
        _emit_files({"plan.txt": text}, args.out)
    else:
        print(text, end="")
    return 0


def cmd_verify(args) -> int:
    schema = _load_schema(args.schema)
    steps = _load_plan(args.plan)
    t = compose_plan(schema, steps)
    k, tuples = _parse_bounds(args.bounds)
    domains = DomainSpec(
        default=tuple(range(k)), per_attr=_parse_domain_overrides(args.domain)
    )
    direction = FORWARD_DOMINANCE if args.direction == "dominance" else EQUIVALENCE
    cfg = VerificationConfig(
        domains=domains, max_tuples_per_relation=tuples, direction=direction
    )
    report = verify(t, cfg)
    print(report.render_text())
    return 0 if report.status == VERIFIED else 1


def cmd_emit(args) -> int:
    schema = _load_schema(args.schema)
    steps = _load_plan(args.plan)
    if args.format == "dot":
        carm, _ = derive_carm(schema, steps)
        files = {"conceptual.dot": export_conceptual_dot(carm)}
    else:
        t = compose_plan(schema, steps)
        files = emit_sql(t)
    _emit_files(files, args.out)
    return 0


def cmd_simulate(args) -> int:
    schema = _load_schema(args.schema)
    steps = _load_plan(args.plan)
    t = compose_plan(schema, steps)
    inst = dsl.parse_instance(_read(args.instance), schema)
    txs = dsl.parse_script(_read(args.script))
    state = TwinState.initial(t, inst)
    rejected = 0
    for i, tx in enumerate(txs, 1):
        try:
            state = apply_transaction(state, tx)
            print(f"tx {i}: ACCEPT ({tx.side} side, epoch {state.epoch})")
        except TransactionRejected as exc:
            rejected += 1
            print(f"tx {i}: REJECT ({tx.side} side): {exc}")
    print(f"# {len(txs)} transactions, {len(txs) - rejected} accepted, {rejected} rejected")
    print("# final source instance")
    print(dsl.print_instance(state.s_instance), end="")
    print("# final target instance")
    print(dsl.print_instance(state.t_instance), end="")
    return 1 if rejected else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="schematrans",
        description="Compile, verify, and simulate lossless schema transformations.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, plan=True):
        p.add_argument("--schema", required=True, help="schema DSL file")
        if plan:
            p.add_argument("--plan", required=True, help="transformation plan file")

    p = sub.add_parser("check", help="parse and validate a schema file")
    common(p, plan=False)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("plan", help="compile a plan; print target schema and mappings")
    common(p)
    p.add_argument("--out", help="output directory (default: stdout)")
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("verify", help="bounded-exhaustive losslessness check")
    common(p)
    p.add_argument("--bounds", default="k=2,tuples=3", help="e.g. k=2,tuples=3")
    p.add_argument(
        "--domain",
        action="append",
        metavar="attr=v1,v2",
        help="per-attribute domain override (repeatable)",
    )
    p.add_argument(
        "--direction", choices=["equivalence", "dominance"], default="equivalence"
    )
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("emit", help="emit the SQL bundle or the conceptual DOT graph")
    common(p)
    p.add_argument("--format", choices=["sql", "dot"], default="sql")
    p.add_argument("--out", help="output directory (default: stdout)")
    p.set_defaults(fn=cmd_emit)

    p = sub.add_parser("simulate", help="replay an update script on the twin state")
    common(p)
    p.add_argument("--instance", required=True, help="initial source instance file")
    p.add_argument("--script", required=True, help="update script file")
    p.set_defaults(fn=cmd_simulate)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (ParseError, FileNotFoundError, ValueError) as exc:
        _log(f"error: {exc}")
        return 2
    except (StepError, NotInCarmForm, SchemaTransError) as exc:
        _log(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
