"""SQL bundle emission: DDL for both schemas, view materialization, and
synchronization triggers with a loop guard.

The bundle is four files plus a README and is byte-stable across runs:

- ``schema_s.sql`` / ``schema_t.sql``: CREATE TABLE statements.  Key FDs
  become PRIMARY KEY/UNIQUE, unary unidirectional inclusions become FOREIGN
  KEY, domain constraints become CHECK.  Everything else the dialect cannot
  express declaratively is listed in the README as an assertion — never
  silently dropped.
- ``materialize.sql``: ``CREATE TABLE <target> AS SELECT …`` per forward view.
- ``triggers.sql``: per-table AFTER INSERT/DELETE triggers on both sides that
  recompute the opposite side from the mapping views, guarded by a one-row
  ``sync_guard`` table so propagation never re-enters itself.

OID columns are TEXT holding the retagged natural key (``'P:' || ssn``), so
materialization and replay stay deterministic — no autoincrement surrogates.
"""

from __future__ import annotations

from typing import Dict, List

from . import algebra as A
from .engine import header
from .patterns import CompiledTransform
from .schema import (
    FD,
    MVD,
    DomainIn,
    DomainNotIn,
    Inclusion,
    NotNull,
    Schema,
    is_oid_sort,
)
from .values import Const, is_null


def _ident(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


def _constraint_text(c) -> str:
    from .dsl import print_constraint

    return print_constraint(c)


def _literal(v) -> str:
    if is_null(v):
        return "NULL"
    if isinstance(v, Const):
        if isinstance(v.token, int):
            return str(v.token)
        return "'" + str(v.token).replace("'", "''") + "'"
    return "'" + f"{v.tag}:{v.payload}".replace("'", "''") + "'"


def _pred_sql(p) -> str:
    if isinstance(p, A.PTrue):
        return "1 = 1"
    if isinstance(p, A.PFalse):
        return "1 = 0"
    if isinstance(p, A.AttrEqAttr):
        return f"{_ident(p.left)} = {_ident(p.right)}"
    if isinstance(p, A.AttrEqConst):
        return f"{_ident(p.attr)} = {_literal(p.const)}"
    if isinstance(p, A.AttrNeqConst):
        return f"{_ident(p.attr)} <> {_literal(p.const)}"
    if isinstance(p, A.IsNull):
        return f"{_ident(p.attr)} IS NULL"
    if isinstance(p, A.IsNotNull):
        return f"{_ident(p.attr)} IS NOT NULL"
    if isinstance(p, A.And):
        return " AND ".join(f"({_pred_sql(q)})" for q in p.parts)
    raise TypeError(f"not a predicate: {p!r}")


def expr_sql(expr, schema: Schema) -> str:
    """Render an algebra expression as a SELECT statement (set semantics:
    every stage is wrapped in SELECT DISTINCT)."""
    cols = [name for name, _ in header(expr, schema)]
    return _expr_sql(expr, schema, cols)


def _sub(expr, schema, alias: str) -> str:
    cols = [name for name, _ in header(expr, schema)]
    return f"({_expr_sql(expr, schema, cols)}) AS {alias}"


def _expr_sql(expr, schema: Schema, cols) -> str:
    if isinstance(expr, A.RelationRef):
        sel = ", ".join(_ident(c) for c in cols)
        return f"SELECT DISTINCT {sel} FROM {_ident(expr.name)}"
    if isinstance(expr, A.Project):
        sel = ", ".join(_ident(c) for c in expr.attrs)
        return f"SELECT DISTINCT {sel} FROM {_sub(expr.expr, schema, 's0')}"
    if isinstance(expr, A.Select):
        inner = [name for name, _ in header(expr.expr, schema)]
        sel = ", ".join(_ident(c) for c in inner)
        return (
            f"SELECT DISTINCT {sel} FROM {_sub(expr.expr, schema, 's0')} "
            f"WHERE {_pred_sql(expr.predicate)}"
        )
    if isinstance(expr, A.Rename):
        ren = dict(expr.pairs)
        inner = [name for name, _ in header(expr.expr, schema)]
        sel = ", ".join(
            f"{_ident(c)} AS {_ident(ren[c])}" if c in ren else _ident(c) for c in inner
        )
        return f"SELECT DISTINCT {sel} FROM {_sub(expr.expr, schema, 's0')}"
    if isinstance(expr, A.Product):
        lcols = [name for name, _ in header(expr.left, schema)]
        rcols = [name for name, _ in header(expr.right, schema)]
        sel = ", ".join(
            [f"s0.{_ident(c)}" for c in lcols] + [f"s1.{_ident(c)}" for c in rcols]
        )
        return (
            f"SELECT DISTINCT {sel} FROM {_sub(expr.left, schema, 's0')} "
            f"CROSS JOIN {_sub(expr.right, schema, 's1')}"
        )
    if isinstance(expr, A.NaturalJoin):
        sel = ", ".join(_ident(c) for c in cols)
        return (
            f"SELECT DISTINCT {sel} FROM {_sub(expr.left, schema, 's0')} "
            f"NATURAL JOIN {_sub(expr.right, schema, 's1')}"
        )
    if isinstance(expr, A.FullOuterNaturalJoin):
        # left fold; requires a dialect with FULL OUTER JOIN (noted in README)
        parts = [_sub(op, schema, f"s{i}") for i, op in enumerate(expr.operands)]
        sel = ", ".join(_ident(c) for c in cols)
        joined = parts[0]
        for p in parts[1:]:
            joined = f"{joined} NATURAL FULL OUTER JOIN {p}"
        return f"SELECT DISTINCT {sel} FROM {joined}"
    if isinstance(expr, A.Union):
        return (
            f"{_expr_sql(expr.left, schema, cols)} UNION {_expr_sql(expr.right, schema, cols)}"
        )
    if isinstance(expr, A.Intersect):
        return (
            f"{_expr_sql(expr.left, schema, cols)} INTERSECT "
            f"{_expr_sql(expr.right, schema, cols)}"
        )
    if isinstance(expr, A.Diff):
        return (
            f"{_expr_sql(expr.left, schema, cols)} EXCEPT {_expr_sql(expr.right, schema, cols)}"
        )
    if isinstance(expr, A.ExtendNull):
        inner = [name for name, _ in header(expr.expr, schema)]
        sel = ", ".join(
            [_ident(c) for c in inner] + [f"NULL AS {_ident(c)}" for c in expr.attrs]
        )
        return f"SELECT DISTINCT {sel} FROM {_sub(expr.expr, schema, 's0')}"
    raise TypeError(f"not an algebra expression: {expr!r}")


def _coerced_view_sql(view_expr, source: Schema, target_rel) -> str:
    """A forward/backward view as SQL, coercing columns whose sort changes at
    the mapping boundary: VALUE→OID mints ``'tag:' || key``; OID→VALUE strips
    the tag prefix."""
    view_header = header(view_expr, source)
    selects = []
    for (col, got_sort), want in zip(view_header, target_rel.attributes):
        if is_oid_sort(want.sort) and not is_oid_sort(got_sort):
            selects.append(f"'{want.sort.tag}:' || {_ident(col)} AS {_ident(col)}")
        elif is_oid_sort(got_sort) and not is_oid_sort(want.sort):
            selects.append(
                f"substr({_ident(col)}, instr({_ident(col)}, ':') + 1) AS {_ident(col)}"
            )
        else:
            selects.append(_ident(col))
    inner = expr_sql(view_expr, source)
    return f"SELECT DISTINCT {', '.join(selects)} FROM ({inner}) AS v0"


def _is_key_fd(c: FD, rel) -> bool:
    return set(c.lhs) | set(c.rhs) >= set(rel.attr_names())


def _table_ddl(schema: Schema, unsupported: List[str]) -> str:
    out = []
    fks: Dict[str, List[str]] = {r.name: [] for r in schema.relations}
    keys: Dict[str, List[tuple]] = {r.name: [] for r in schema.relations}
    checks: Dict[str, List[str]] = {r.name: [] for r in schema.relations}
    extra_not_null: Dict[str, set] = {r.name: set() for r in schema.relations}

    for c in schema.constraints:
        if isinstance(c, FD):
            rel = schema.relation(c.relation)
            if _is_key_fd(c, rel):
                if c.lhs not in keys[c.relation]:
                    keys[c.relation].append(c.lhs)
            else:
                unsupported.append(f"non-key functional dependency: {_constraint_text(c)}")
        elif isinstance(c, MVD):
            unsupported.append(f"multivalued dependency: {_constraint_text(c)}")
        elif isinstance(c, Inclusion):
            if (
                not c.bidirectional
                and c.from_relation != c.to_relation
                and len(c.from_attrs) == 1
                and c.to_attrs == (schema.relation(c.to_relation).attr_names()[0],)
            ):
                fks[c.from_relation].append(
                    f"FOREIGN KEY ({_ident(c.from_attrs[0])}) REFERENCES "
                    f"{_ident(c.to_relation)} ({_ident(c.to_attrs[0])})"
                )
            else:
                unsupported.append(f"inclusion dependency: {_constraint_text(c)}")
        elif isinstance(c, DomainIn):
            consts = ", ".join(_literal(Const(v) if not isinstance(v, Const) else v) for v in c.constants)
            checks[c.relation].append(f"CHECK ({_ident(c.attr)} IN ({consts}))")
        elif isinstance(c, DomainNotIn):
            consts = ", ".join(_literal(Const(v) if not isinstance(v, Const) else v) for v in c.constants)
            checks[c.relation].append(f"CHECK ({_ident(c.attr)} NOT IN ({consts}))")
        elif isinstance(c, NotNull):
            extra_not_null[c.relation].add(c.attr)
        else:
            unsupported.append(f"algebraic constraint: {_constraint_text(c)}")

    for rel in schema.relations:
        lines = []
        for a in rel.attributes:
            null = "" if (a.nullable and a.name not in extra_not_null[rel.name]) else " NOT NULL"
            lines.append(f"  {_ident(a.name)} TEXT{null}")
        for i, key in enumerate(keys[rel.name]):
            kind = "PRIMARY KEY" if i == 0 else "UNIQUE"
            lines.append(f"  {kind} ({', '.join(_ident(a) for a in key)})")
        lines.extend("  " + ck for ck in checks[rel.name])
        lines.extend("  " + fk for fk in fks[rel.name])
        out.append(f"CREATE TABLE {_ident(rel.name)} (\n" + ",\n".join(lines) + "\n);")
    return "\n\n".join(out) + "\n"


def emit_sql(t: CompiledTransform) -> Dict[str, str]:
    """Return the bundle as {filename: text}; deterministic for a given
    transform."""
    unsupported_s: List[str] = []
    unsupported_t: List[str] = []
    schema_s = _table_ddl(t.source, unsupported_s)
    schema_t = _table_ddl(t.target, unsupported_t)

    mat = ["BEGIN;"]
    for rel in t.target.relations:
        view = A.normalize(t.fwd.view(rel.name))
        mat.append(
            f"CREATE TABLE {_ident(rel.name)} AS\n{_coerced_view_sql(view, t.source, rel)};"
        )
    mat.append("COMMIT;")
    materialize = "\n\n".join(mat) + "\n"

    trig = [
        "-- one-row guard: triggers no-op while a propagation round is running",
        "CREATE TABLE sync_guard (flag INTEGER NOT NULL);",
        "",
        "BEGIN;",
    ]

    def _propagation_body(writer_schema, reader_schema, mapping) -> List[str]:
        body = ["  INSERT INTO sync_guard VALUES (1);"]
        for rel in writer_schema.relations:
            view = A.normalize(mapping.view(rel.name))
            body.append(f"  DELETE FROM {_ident(rel.name)};")
            body.append(
                f"  INSERT INTO {_ident(rel.name)}\n"
                f"  {_coerced_view_sql(view, reader_schema, rel)};"
            )
        body.append("  DELETE FROM sync_guard;")
        return body

    for side, schema, other, mapping in (
        ("s", t.source, t.target, t.fwd),
        ("t", t.target, t.source, t.bwd),
    ):
        for rel in schema.relations:
            for event in ("INSERT", "DELETE"):
                name = f"sync_{side}_{rel.name}_{event.lower()}"
                trig.append(
                    f"CREATE TRIGGER {_ident(name)} AFTER {event} ON {_ident(rel.name)}\n"
                    "WHEN (SELECT count(*) FROM sync_guard) = 0\n"
                    "BEGIN"
                )
                trig.extend(_propagation_body(other, schema, mapping))
                trig.append("END;")
                trig.append("")
    trig.append("COMMIT;")
    triggers = "\n".join(trig) + "\n"

    readme = [
        "SQL bundle",
        "==========",
        "",
        "Files:",
        "  schema_s.sql     source-side DDL",
        "  schema_t.sql     target-side DDL",
        "  materialize.sql  initial target materialization from the forward views",
        "  triggers.sql     synchronization triggers (both directions) with loop guard",
        "",
        "Conventions:",
        "  - every column is TEXT; OID columns hold the retagged natural key",
        "    ('P:' || ssn), so materialization and replay are deterministic;",
        "  - propagation is full recomputation of the opposite side inside the",
        "    trigger, guarded by the one-row sync_guard table;",
        "  - updates must run one transaction at a time (serializable);",
        "  - FULL OUTER JOIN, when present in a view, requires a dialect that",
        "    supports it (e.g. SQLite >= 3.39 or PostgreSQL).",
        "",
    ]
    unsup = sorted(set(unsupported_s)) + sorted(set(unsupported_t))
    if unsup:
        readme.append("Constraints not expressible as declarative DDL in this dialect;")
        readme.append("they remain enforced by the in-memory simulator and must be")
        readme.append("asserted externally (never silently dropped):")
        for side_name, items in (("source", sorted(set(unsupported_s))), ("target", sorted(set(unsupported_t)))):
            for u in items:
                readme.append(f"  [{side_name}] {u}")
    else:
        readme.append("All constraints were expressible as declarative DDL.")
    readme.append("")

    return {
        "schema_s.sql": schema_s,
        "schema_t.sql": schema_t,
        "materialize.sql": materialize,
        "triggers.sql": triggers,
        "README": "\n".join(readme),
    }
