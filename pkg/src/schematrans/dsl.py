"""Text front end: parsers and printers for schemas, algebra expressions,
transformation plans, instances, and update scripts.

All printers are deterministic, and ``parse_schema(print_schema(s))`` is
structurally the identity.  Identifiers may contain hyphens (``has-phone``),
matched greedily only when the hyphen glues alphanumeric runs together; a
spaced ``-`` is the difference operator.

Statement-oriented files are ';'-terminated with ``#`` line comments.
"""

from __future__ import annotations

import re
from typing import List, Optional, Tuple as Tup

from . import algebra as A
from .errors import ParseError
from .patterns import (
    AbsorbDecl,
    EntityDecl,
    HorizontalDecomposition,
    NullElimination,
    OidIntroduction,
    RelationshipDecl,
    RenameAttr,
    VerticalDecomposition,
)
from .schema import (
    VALUE,
    AlgebraicDisjoint,
    AlgebraicEmpty,
    AlgebraicEq,
    AlgebraicSubset,
    AttributeSpec,
    DomainIn,
    DomainNotIn,
    FD,
    Inclusion,
    Mapping,
    MVD,
    NotNull,
    OidSort,
    RelationSignature,
    Schema,
    is_oid_sort,
)
from .transducer import DELETE, INSERT, SOURCE, TARGET, Transaction, UpdateOp
from .values import NULL, Const, Oid, format_value

# --- tokenizer ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<int>-?\d+\b)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*(?:-[A-Za-z0-9_]+)*)
  | (?P<op><=>|->>|->|<=|==|!=|[(){}\[\],;.:=*<>/-])
    """,
    re.VERBOSE,
)


class Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind, self.text, self.line, self.col = kind, text, line, col

    def __repr__(self):
        return f"Token({self.kind}, {self.text!r}, {self.line}:{self.col})"


def tokenize(text: str) -> List[Token]:
    tokens = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        tok = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, tok, line, col))
        newlines = tok.count("\n")
        if newlines:
            line += newlines
            col = len(tok) - tok.rfind("\n")
        else:
            col += len(tok)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def cur(self) -> Token:
        return self.tokens[self.i]

    def error(self, msg: str):
        raise ParseError(msg, self.cur.line, self.cur.col)

    def at(self, text: str) -> bool:
        return self.cur.text == text and self.cur.kind != "string"

    def at_kind(self, kind: str) -> bool:
        return self.cur.kind == kind

    def take(self) -> Token:
        tok = self.cur
        self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}, found {self.cur.text!r}")
        return self.take()

    def expect_ident(self) -> str:
        if not self.at_kind("ident"):
            self.error(f"expected identifier, found {self.cur.text!r}")
        return self.take().text

    def ident_list(self) -> Tup[str, ...]:
        names = [self.expect_ident()]
        while self.at(","):
            self.take()
            names.append(self.expect_ident())
        return tuple(names)

    # --- values ---------------------------------------------------------

    def value(self):
        if self.at("NULL"):
            self.take()
            return NULL
        if self.at_kind("string"):
            raw = self.take().text
            return Const(_unquote(raw))
        if self.at_kind("int"):
            return Const(int(self.take().text))
        if self.at_kind("ident"):
            tag = self.take().text
            self.expect(":")
            if self.at_kind("int"):
                return Oid(tag, int(self.take().text))
            if self.at_kind("string"):
                return Oid(tag, _unquote(self.take().text))
            return Oid(tag, self.expect_ident())
        self.error(f"expected a value, found {self.cur.text!r}")

    # --- algebra --------------------------------------------------------

    def algebra(self):
        tok = self.cur
        if not self.at_kind("ident"):
            self.error(f"expected an algebra expression, found {tok.text!r}")
        name = tok.text
        if name == "pi":
            self.take()
            self.expect("[")
            attrs = () if self.at("]") else self.ident_list()
            self.expect("]")
            self.expect("(")
            e = self.algebra()
            self.expect(")")
            return A.Project(attrs, e)
        if name == "sigma":
            self.take()
            self.expect("[")
            pred = self.predicate()
            self.expect("]")
            self.expect("(")
            e = self.algebra()
            self.expect(")")
            return A.Select(pred, e)
        if name == "rho":
            self.take()
            self.expect("[")
            pairs = [self._rename_pair()]
            while self.at(","):
                self.take()
                pairs.append(self._rename_pair())
            self.expect("]")
            self.expect("(")
            e = self.algebra()
            self.expect(")")
            return A.Rename(tuple(pairs), e)
        if name == "extendnull":
            self.take()
            self.expect("[")
            attrs = self.ident_list()
            self.expect("]")
            self.expect("(")
            e = self.algebra()
            self.expect(")")
            return A.ExtendNull(e, attrs)
        if name in ("product", "join", "union", "intersect", "diff", "outerjoin"):
            self.take()
            self.expect("(")
            args = [self.algebra()]
            while self.at(","):
                self.take()
                args.append(self.algebra())
            self.expect(")")
            return self._combine(name, args, tok)
        self.take()
        return A.RelationRef(name)

    def _rename_pair(self):
        old = self.expect_ident()
        self.expect("/")
        new = self.expect_ident()
        return (old, new)

    def _combine(self, name, args, tok):
        binary = {
            "product": A.Product,
            "join": A.NaturalJoin,
            "union": A.Union,
            "intersect": A.Intersect,
            "diff": A.Diff,
        }
        if name == "outerjoin":
            if len(args) < 2:
                raise ParseError("outerjoin needs at least two operands", tok.line, tok.col)
            return A.FullOuterNaturalJoin(tuple(args))
        if name == "diff" and len(args) != 2:
            raise ParseError("diff takes exactly two operands", tok.line, tok.col)
        node = binary[name]
        out = args[0]
        for arg in args[1:]:
            out = node(out, arg)
        if len(args) < 2:
            raise ParseError(f"{name} needs at least two operands", tok.line, tok.col)
        return out

    def predicate(self):
        parts = [self._atom()]
        while self.at("and"):
            self.take()
            parts.append(self._atom())
        if len(parts) == 1:
            return parts[0]
        return A.And(tuple(parts))

    def _atom(self):
        if self.at("true"):
            self.take()
            return A.PTrue()
        if self.at("false"):
            self.take()
            return A.PFalse()
        attr = self.expect_ident()
        if self.at("is"):
            self.take()
            if self.at("not"):
                self.take()
                self.expect("null")
                return A.IsNotNull(attr)
            self.expect("null")
            return A.IsNull(attr)
        if self.at("="):
            self.take()
            if self.at_kind("ident"):
                return A.AttrEqAttr(attr, self.take().text)
            return A.AttrEqConst(attr, self._const())
        if self.at("!="):
            self.take()
            return A.AttrNeqConst(attr, self._const())
        self.error(f"expected a comparison after {attr!r}")

    def _const(self) -> Const:
        if self.at_kind("string"):
            return Const(_unquote(self.take().text))
        if self.at_kind("int"):
            return Const(int(self.take().text))
        self.error("expected a constant")


def _unquote(raw: str) -> str:
    return raw[1:-1].replace('\\"', '"').replace("\\\\", "\\")


def parse_algebra(text: str):
    """Parse a single algebra expression (trailing ';' optional)."""
    p = _Parser(text)
    e = p.algebra()
    if p.at(";"):
        p.take()
    if not p.at_kind("eof"):
        p.error(f"trailing input after expression: {p.cur.text!r}")
    return e


def parse_query_file(text: str) -> Tup[object, ...]:
    """Parse a file of ';'-terminated algebra expressions."""
    p = _Parser(text)
    out = []
    while not p.at_kind("eof"):
        out.append(p.algebra())
        p.expect(";")
    return tuple(out)


# --- schema files ------------------------------------------------------------


def parse_schema(text: str) -> Schema:
    p = _Parser(text)
    relations: List[RelationSignature] = []
    constraints = []
    rel_names = set()
    while not p.at_kind("eof"):
        kw = p.expect_ident()
        if kw == "relation":
            relations.append(_parse_relation(p))
            rel_names.add(relations[-1].name)
        elif kw == "fd":
            rel = p.expect_ident()
            p.expect(":")
            lhs = p.ident_list()
            p.expect("->")
            rhs = p.ident_list()
            constraints.append(FD(rel, lhs, rhs))
        elif kw == "key":
            rel = p.expect_ident()
            p.expect(":")
            lhs = p.ident_list()
            sig = next((r for r in relations if r.name == rel), None)
            if sig is None:
                p.error(f"key declared before relation {rel}")
            rhs = tuple(a for a in sig.attr_names() if a not in lhs)
            constraints.append(FD(rel, lhs, rhs))
        elif kw == "mvd":
            rel = p.expect_ident()
            p.expect(":")
            lhs = p.ident_list()
            p.expect("->>")
            rhs = p.ident_list()
            constraints.append(MVD(rel, lhs, rhs))
        elif kw in ("inclusion", "inclusion2"):
            f_rel, f_attrs = _parse_endpoint(p)
            p.expect("<=>") if kw == "inclusion2" else p.expect("<=")
            t_rel, t_attrs = _parse_endpoint(p)
            constraints.append(Inclusion(f_rel, f_attrs, t_rel, t_attrs, kw == "inclusion2"))
        elif kw in ("domain_in", "domain_not_in"):
            rel = p.expect_ident()
            p.expect(".")
            attr = p.expect_ident()
            p.expect("in")
            p.expect("{")
            consts = [p._const()]
            while p.at(","):
                p.take()
                consts.append(p._const())
            p.expect("}")
            kind = DomainIn if kw == "domain_in" else DomainNotIn
            constraints.append(kind(rel, attr, tuple(consts)))
        elif kw == "not_null":
            rel = p.expect_ident()
            p.expect(".")
            constraints.append(NotNull(rel, p.expect_ident()))
        elif kw == "assert_eq":
            lhs = p.algebra()
            p.expect("==")
            constraints.append(AlgebraicEq(lhs, p.algebra()))
        elif kw == "assert_subset":
            lhs = p.algebra()
            p.expect("<=")
            constraints.append(AlgebraicSubset(lhs, p.algebra()))
        elif kw == "assert_disjoint":
            lhs = p.algebra()
            p.expect(",")
            constraints.append(AlgebraicDisjoint(lhs, p.algebra()))
        elif kw == "assert_empty":
            constraints.append(AlgebraicEmpty(p.algebra()))
        else:
            p.error(f"unknown statement keyword {kw!r}")
        p.expect(";")
    return Schema(tuple(relations), tuple(constraints))


def _parse_relation(p: _Parser) -> RelationSignature:
    name = p.expect_ident()
    p.expect("(")
    attrs = []
    while True:
        a_name = p.expect_ident()
        sort = VALUE
        nullable = False
        if p.at("VALUE"):
            p.take()
        elif p.at("OID"):
            p.take()
            p.expect("(")
            sort = OidSort(p.expect_ident())
            p.expect(")")
        if p.at("NOT"):
            p.take()
            p.expect("NULL")
        elif p.at("NULLABLE"):
            p.take()
            nullable = True
        attrs.append(AttributeSpec(a_name, sort, nullable))
        if p.at(","):
            p.take()
            continue
        break
    p.expect(")")
    return RelationSignature(name, tuple(attrs))


def _parse_endpoint(p: _Parser) -> Tup[str, Tup[str, ...]]:
    rel = p.expect_ident()
    if p.at("["):
        p.take()
        attrs = p.ident_list()
        p.expect("]")
        return rel, attrs
    p.expect(".")
    return rel, (p.expect_ident(),)


# --- plan files ----------------------------------------------------------------


def parse_plan(text: str) -> Tup[object, ...]:
    p = _Parser(text)
    steps: List[object] = []
    oid_clauses: List[object] = []

    def flush_oid():
        if oid_clauses:
            steps.append(OidIntroduction(tuple(oid_clauses)))
            oid_clauses.clear()

    while not p.at_kind("eof"):
        kw = p.expect_ident()
        if kw != "oid":
            flush_oid()
        if kw == "vertical":
            rel = p.expect_ident()
            p.expect("->")
            out_l = p.expect_ident()
            p.expect("(")
            left = p.ident_list()
            p.expect(")")
            out_r = p.expect_ident()
            p.expect("(")
            right = p.ident_list()
            p.expect(")")
            p.expect("on")
            p.expect("(")
            shared = () if p.at(")") else p.ident_list()
            p.expect(")")
            steps.append(VerticalDecomposition(rel, left, right, shared, out_l, out_r))
        elif kw == "horizontal":
            rel = p.expect_ident()
            p.expect("->")
            out_t = p.expect_ident()
            out_f = p.expect_ident()
            p.expect("where")
            steps.append(HorizontalDecomposition(rel, p._atom(), out_t, out_f))
        elif kw == "null_elim":
            rel = p.expect_ident()
            p.expect(".")
            if p.at("("):
                p.take()
                attrs = p.ident_list()
                p.expect(")")
            else:
                attrs = (p.expect_ident(),)
            p.expect("->")
            out_without = p.expect_ident()
            out_with = p.expect_ident()
            steps.append(NullElimination(rel, attrs, out_without, out_with))
        elif kw == "rename":
            rel = p.expect_ident()
            p.expect(".")
            old = p.expect_ident()
            p.expect("->")
            steps.append(RenameAttr(rel, old, p.expect_ident()))
        elif kw == "oid":
            oid_clauses.append(_parse_oid_clause(p))
        else:
            p.error(f"unknown plan keyword {kw!r}")
        p.expect(";")
    flush_oid()
    return tuple(steps)


def _parse_oid_clause(p: _Parser):
    kind = p.expect_ident()
    if kind == "entity":
        name = p.expect_ident()
        p.expect("key")
        p.expect("(")
        first = p.expect_ident()
        if p.at("."):
            p.take()
            key_rel, key_attr = first, p.expect_ident()
        else:
            key_rel, key_attr = name, first
        p.expect(")")
        p.expect("tag")
        tag = p.expect_ident()
        oid_attr = name[0].lower() + "oid"
        subtype_of = None
        id_table = None
        while p.at_kind("ident") and p.cur.text in ("as", "id", "subtype_of"):
            opt = p.take().text
            if opt == "as":
                oid_attr = p.expect_ident()
            elif opt == "id":
                p.expect("(")
                id_table = p.expect_ident()
                p.expect(")")
            else:
                p.expect("(")
                subtype_of = p.expect_ident()
                p.expect(")")
        return EntityDecl(name, tag, key_rel, key_attr, oid_attr, subtype_of, id_table)
    if kind == "relationship":
        rel = p.expect_ident()
        new_name = None
        if p.at("->"):
            p.take()
            new_name = p.expect_ident()
        p.expect("fk")
        p.expect("(")
        fks = []
        while True:
            attr = p.expect_ident()
            p.expect("->")
            fks.append((attr, p.expect_ident()))
            if p.at(","):
                p.take()
                continue
            break
        p.expect(")")
        return RelationshipDecl(rel, tuple(fks), new_name)
    if kind == "absorb":
        rel = p.expect_ident()
        p.expect("=")
        minuend = p.expect_ident()
        p.expect("-")
        return AbsorbDecl(rel, minuend, p.expect_ident())
    p.error(f"unknown oid clause {kind!r}")


# --- instance files --------------------------------------------------------------


def parse_instance(text: str, schema: Schema):
    from .engine import Instance

    p = _Parser(text)
    rels = {r.name: set() for r in schema.relations}
    while not p.at_kind("eof"):
        name = p.expect_ident()
        if name not in rels:
            p.error(f"unknown relation {name!r}")
        p.expect("(")
        row = []
        if not p.at(")"):
            row.append(p.value())
            while p.at(","):
                p.take()
                row.append(p.value())
        p.expect(")")
        arity = len(schema.relation(name).attributes)
        if len(row) != arity:
            p.error(f"{name} expects {arity} values, got {len(row)}")
        rels[name].add(tuple(row))
        if p.at(";"):
            p.take()
    return Instance({name: frozenset(rows) for name, rows in rels.items()})


# --- update scripts ----------------------------------------------------------------


def parse_script(text: str) -> Tup[Transaction, ...]:
    p = _Parser(text)
    txs: List[Transaction] = []
    while not p.at_kind("eof"):
        kw = p.expect_ident()
        if kw != "begin":
            p.error(f"expected 'begin', found {kw!r}")
        side_tok = p.expect_ident()
        if side_tok not in (SOURCE, TARGET):
            p.error(f"side must be SOURCE or TARGET, found {side_tok!r}")
        p.expect(";")
        ops: List[UpdateOp] = []
        while not p.at("commit"):
            op_kw = p.expect_ident()
            if op_kw not in ("insert", "delete"):
                p.error(f"expected insert/delete/commit, found {op_kw!r}")
            rel = p.expect_ident()
            p.expect("(")
            row = []
            if not p.at(")"):
                row.append(p.value())
                while p.at(","):
                    p.take()
                    row.append(p.value())
            p.expect(")")
            p.expect(";")
            ops.append(
                UpdateOp(side_tok, INSERT if op_kw == "insert" else DELETE, rel, tuple(row))
            )
        p.expect("commit")
        p.expect(";")
        if not ops:
            p.error("empty transaction")
        txs.append(Transaction(tuple(ops)))
    return tuple(txs)


# --- printers ------------------------------------------------------------------


def print_algebra(e) -> str:
    if isinstance(e, A.RelationRef):
        return e.name
    if isinstance(e, A.Project):
        return f"pi[{', '.join(e.attrs)}]({print_algebra(e.expr)})"
    if isinstance(e, A.Select):
        return f"sigma[{print_predicate(e.predicate)}]({print_algebra(e.expr)})"
    if isinstance(e, A.Rename):
        pairs = ", ".join(f"{o}/{n}" for o, n in e.pairs)
        return f"rho[{pairs}]({print_algebra(e.expr)})"
    if isinstance(e, A.Product):
        return f"product({print_algebra(e.left)}, {print_algebra(e.right)})"
    if isinstance(e, A.NaturalJoin):
        return f"join({print_algebra(e.left)}, {print_algebra(e.right)})"
    if isinstance(e, A.FullOuterNaturalJoin):
        return f"outerjoin({', '.join(print_algebra(op) for op in e.operands)})"
    if isinstance(e, A.Union):
        return f"union({print_algebra(e.left)}, {print_algebra(e.right)})"
    if isinstance(e, A.Intersect):
        return f"intersect({print_algebra(e.left)}, {print_algebra(e.right)})"
    if isinstance(e, A.Diff):
        return f"diff({print_algebra(e.left)}, {print_algebra(e.right)})"
    if isinstance(e, A.ExtendNull):
        return f"extendnull[{', '.join(e.attrs)}]({print_algebra(e.expr)})"
    raise TypeError(f"not an algebra expression: {e!r}")


def print_predicate(p) -> str:
    if isinstance(p, A.PTrue):
        return "true"
    if isinstance(p, A.PFalse):
        return "false"
    if isinstance(p, A.AttrEqAttr):
        return f"{p.left} = {p.right}"
    if isinstance(p, A.AttrEqConst):
        return f"{p.attr} = {_print_const(p.const)}"
    if isinstance(p, A.AttrNeqConst):
        return f"{p.attr} != {_print_const(p.const)}"
    if isinstance(p, A.IsNull):
        return f"{p.attr} is null"
    if isinstance(p, A.IsNotNull):
        return f"{p.attr} is not null"
    if isinstance(p, A.And):
        return " and ".join(print_predicate(q) for q in p.parts)
    raise TypeError(f"not a predicate: {p!r}")


def _print_const(c) -> str:
    if isinstance(c, Const):
        return format_value(c)
    return format_value(Const(c))


def _print_endpoint(rel: str, attrs) -> str:
    if len(attrs) == 1:
        return f"{rel}.{attrs[0]}"
    return f"{rel}[{', '.join(attrs)}]"


def print_constraint(c) -> str:
    if isinstance(c, FD):
        return f"fd {c.relation}: {', '.join(c.lhs)} -> {', '.join(c.rhs)};"
    if isinstance(c, MVD):
        return f"mvd {c.relation}: {', '.join(c.lhs)} ->> {', '.join(c.rhs)};"
    if isinstance(c, Inclusion):
        arrow = "<=>" if c.bidirectional else "<="
        kw = "inclusion2" if c.bidirectional else "inclusion"
        return (
            f"{kw} {_print_endpoint(c.from_relation, c.from_attrs)} {arrow} "
            f"{_print_endpoint(c.to_relation, c.to_attrs)};"
        )
    if isinstance(c, DomainIn):
        vals = ", ".join(_print_const(v) for v in c.constants)
        return f"domain_in {c.relation}.{c.attr} in {{{vals}}};"
    if isinstance(c, DomainNotIn):
        vals = ", ".join(_print_const(v) for v in c.constants)
        return f"domain_not_in {c.relation}.{c.attr} in {{{vals}}};"
    if isinstance(c, NotNull):
        return f"not_null {c.relation}.{c.attr};"
    if isinstance(c, AlgebraicEq):
        return f"assert_eq {print_algebra(c.lhs)} == {print_algebra(c.rhs)};"
    if isinstance(c, AlgebraicSubset):
        return f"assert_subset {print_algebra(c.lhs)} <= {print_algebra(c.rhs)};"
    if isinstance(c, AlgebraicDisjoint):
        return f"assert_disjoint {print_algebra(c.lhs)}, {print_algebra(c.rhs)};"
    if isinstance(c, AlgebraicEmpty):
        return f"assert_empty {print_algebra(c.expr)};"
    raise TypeError(f"not a constraint: {c!r}")


def print_schema(schema: Schema) -> str:
    lines = []
    for rel in schema.relations:
        attrs = []
        for a in rel.attributes:
            sort = "VALUE" if not is_oid_sort(a.sort) else f"OID({a.sort.tag})"
            null = "NULLABLE" if a.nullable else "NOT NULL"
            attrs.append(f"{a.name} {sort} {null}")
        lines.append(f"relation {rel.name}({', '.join(attrs)});")
    for c in schema.constraints:
        lines.append(print_constraint(c))
    return "\n".join(lines) + "\n"


def print_mapping(mapping: Mapping, normalize: bool = True) -> str:
    lines = []
    for name, expr in mapping.views:
        e = A.normalize(expr) if normalize else expr
        lines.append(f"{name} = {print_algebra(e)};")
    return "\n".join(lines) + "\n"


def print_instance(inst) -> str:
    from .values import value_sort_key

    lines = []
    for name in sorted(inst.rels):
        rows = sorted(inst.rels[name], key=lambda r: tuple(value_sort_key(v) for v in r))
        for row in rows:
            lines.append(f"{name}({', '.join(format_value(v) for v in row)})")
    return "\n".join(lines) + ("\n" if lines else "")
