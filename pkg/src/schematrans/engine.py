"""Evaluation core: headers, instances, set-semantics evaluation, constraint
checking, view unfolding and mapping application."""

from __future__ import annotations

from typing import Dict, FrozenSet, Tuple as Tup

from . import algebra as A
from .errors import (
    HeaderClash,
    HeaderMismatch,
    MissingView,
    UnknownAttribute,
    UnknownRelation,
)
from .schema import (
    VALUE,
    AlgebraicDisjoint,
    AlgebraicEmpty,
    AlgebraicEq,
    AlgebraicSubset,
    DomainIn,
    DomainNotIn,
    FD,
    Inclusion,
    Mapping,
    MVD,
    NotNull,
    OidSort,
    Schema,
    is_oid_sort,
    validate_schema,
)
from .values import NULL, Const, Oid, is_null, retag, untag, value_sort_key

Row = Tup  # tuple of Value
Header = Tup  # tuple of (name, sort)


class Instance:
    """Finite relation contents per relation name, with set semantics."""

    __slots__ = ("rels",)

    def __init__(self, rels: Dict[str, FrozenSet[Row]]):
        self.rels = {name: frozenset(rows) for name, rows in rels.items()}

    @classmethod
    def empty(cls, schema: Schema) -> "Instance":
        return cls({r.name: frozenset() for r in schema.relations})

    def rows(self, name: str) -> FrozenSet[Row]:
        return self.rels.get(name, frozenset())

    def with_rows(self, name: str, rows) -> "Instance":
        out = dict(self.rels)
        out[name] = frozenset(rows)
        return Instance(out)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        keys = set(self.rels) | set(other.rels)
        return all(self.rows(k) == other.rows(k) for k in keys)

    def __hash__(self):
        return hash(frozenset((k, v) for k, v in self.rels.items() if v))

    def __repr__(self):
        parts = []
        for name in sorted(self.rels):
            rows = sorted(self.rels[name], key=lambda t: tuple(value_sort_key(v) for v in t))
            parts.append(f"{name}={list(rows)!r}")
        return "Instance(" + ", ".join(parts) + ")"

    def total_tuples(self) -> int:
        return sum(len(v) for v in self.rels.values())


def instance_diagnostics(instance: Instance, schema: Schema) -> list:
    """Check an instance conforms to its schema's signatures and NULL flags."""
    diags = []
    for name in instance.rels:
        if not schema.has_relation(name):
            diags.append(f"unknown relation {name}")
    for rel in schema.relations:
        for row in instance.rows(rel.name):
            if len(row) != len(rel.attributes):
                diags.append(f"{rel.name}: tuple arity {len(row)} != {len(rel.attributes)}")
                continue
            for attr, v in zip(rel.attributes, row):
                if is_null(v):
                    if not attr.nullable:
                        diags.append(f"{rel.name}.{attr.name}: NULL in NOT NULL position")
                elif isinstance(v, Oid):
                    if not is_oid_sort(attr.sort) or attr.sort.tag != v.tag:
                        diags.append(f"{rel.name}.{attr.name}: OID {v!r} in {attr.sort} position")
                elif isinstance(v, Const):
                    if is_oid_sort(attr.sort):
                        diags.append(f"{rel.name}.{attr.name}: constant {v!r} in OID position")
    return diags


# --- headers -----------------------------------------------------------------


def _sorts_joinable(s1, s2) -> bool:
    return s1 == s2


def header(expr, schema: Schema) -> Header:
    """Output attributes (name, sort) of an expression, or raise."""
    if isinstance(expr, A.RelationRef):
        if not schema.has_relation(expr.name):
            raise UnknownRelation(expr.name)
        rel = schema.relation(expr.name)
        return tuple((a.name, a.sort) for a in rel.attributes)
    if isinstance(expr, A.Project):
        h = header(expr.expr, schema)
        names = [n for n, _ in h]
        if len(set(expr.attrs)) != len(expr.attrs):
            raise HeaderClash(f"duplicate attributes in projection {expr.attrs}")
        out = []
        for a in expr.attrs:
            if a not in names:
                raise UnknownAttribute(f"projection attribute {a} not in {names}")
            out.append(h[names.index(a)])
        return tuple(out)
    if isinstance(expr, A.Select):
        h = header(expr.expr, schema)
        names = {n: s for n, s in h}
        for a in A.pred_attrs(expr.predicate):
            if a not in names:
                raise UnknownAttribute(f"selection attribute {a} not in {sorted(names)}")
        _check_pred_sorts(expr.predicate, names)
        return h
    if isinstance(expr, A.Rename):
        h = header(expr.expr, schema)
        names = [n for n, _ in h]
        mapping = dict(expr.pairs)
        for old in mapping:
            if old not in names:
                raise UnknownAttribute(f"rename of unknown attribute {old}")
        out = tuple((mapping.get(n, n), s) for n, s in h)
        if len({n for n, _ in out}) != len(out):
            raise HeaderClash(f"rename produces duplicate names: {[n for n, _ in out]}")
        return out
    if isinstance(expr, A.Product):
        hl = header(expr.left, schema)
        hr = header(expr.right, schema)
        if {n for n, _ in hl} & {n for n, _ in hr}:
            raise HeaderClash("product operands share attribute names")
        return hl + hr
    if isinstance(expr, A.NaturalJoin):
        hl = header(expr.left, schema)
        hr = header(expr.right, schema)
        left_names = {n: s for n, s in hl}
        for n, s in hr:
            if n in left_names and not _sorts_joinable(left_names[n], s):
                raise HeaderMismatch(f"join attribute {n} has incompatible sorts")
        return hl + tuple((n, s) for n, s in hr if n not in left_names)
    if isinstance(expr, A.FullOuterNaturalJoin):
        if not expr.operands:
            raise HeaderMismatch("outer join needs at least one operand")
        h = header(expr.operands[0], schema)
        for op in expr.operands[1:]:
            hr = header(op, schema)
            left_names = {n: s for n, s in h}
            for n, s in hr:
                if n in left_names and not _sorts_joinable(left_names[n], s):
                    raise HeaderMismatch(f"outer join attribute {n} has incompatible sorts")
            h = h + tuple((n, s) for n, s in hr if n not in left_names)
        return h
    if isinstance(expr, (A.Union, A.Intersect, A.Diff)):
        hl = header(expr.left, schema)
        hr = header(expr.right, schema)
        if hl != hr:
            raise HeaderMismatch(f"set operation headers differ: {hl} vs {hr}")
        return hl
    if isinstance(expr, A.ExtendNull):
        h = header(expr.expr, schema)
        if {n for n, _ in h} & set(expr.attrs):
            raise HeaderClash("extend-null attribute already present")
        return h + tuple((a, VALUE) for a in expr.attrs)
    raise TypeError(f"not an algebra expression: {expr!r}")


def _check_pred_sorts(p, sorts: dict) -> None:
    if isinstance(p, A.And):
        for q in p.parts:
            _check_pred_sorts(q, sorts)
        return
    if isinstance(p, A.AttrEqAttr):
        if sorts[p.left] != sorts[p.right]:
            raise HeaderMismatch(f"comparison {p.left} = {p.right} across sorts")
    if isinstance(p, (A.AttrEqConst, A.AttrNeqConst)):
        if is_oid_sort(sorts[p.attr]):
            raise HeaderMismatch(f"comparison of OID attribute {p.attr} with a constant")


# --- evaluation ----------------------------------------------------------------


def _eval_pred(p, row: Row, pos: Dict[str, int]) -> bool:
    if isinstance(p, A.PTrue):
        return True
    if isinstance(p, A.PFalse):
        return False
    if isinstance(p, A.And):
        return all(_eval_pred(q, row, pos) for q in p.parts)
    if isinstance(p, A.IsNull):
        return is_null(row[pos[p.attr]])
    if isinstance(p, A.IsNotNull):
        return not is_null(row[pos[p.attr]])
    if isinstance(p, A.AttrEqAttr):
        a, b = row[pos[p.left]], row[pos[p.right]]
        return not is_null(a) and not is_null(b) and a == b
    if isinstance(p, A.AttrEqConst):
        a = row[pos[p.attr]]
        return not is_null(a) and a == p.const
    if isinstance(p, A.AttrNeqConst):
        a = row[pos[p.attr]]
        return not is_null(a) and a != p.const
    raise TypeError(f"not a predicate: {p!r}")


def evaluate(expr, instance: Instance, schema: Schema) -> FrozenSet[Row]:
    """Standard set-semantics evaluation; see header() for well-formedness."""
    if isinstance(expr, A.RelationRef):
        header(expr, schema)
        return instance.rows(expr.name)
    if isinstance(expr, A.Project):
        h = header(expr.expr, schema)
        names = [n for n, _ in h]
        idx = [names.index(a) for a in expr.attrs]
        rows = evaluate(expr.expr, instance, schema)
        return frozenset(tuple(r[i] for i in idx) for r in rows)
    if isinstance(expr, A.Select):
        h = header(expr, schema)
        pos = {n: i for i, (n, _) in enumerate(h)}
        rows = evaluate(expr.expr, instance, schema)
        return frozenset(r for r in rows if _eval_pred(expr.predicate, r, pos))
    if isinstance(expr, A.Rename):
        header(expr, schema)
        return evaluate(expr.expr, instance, schema)
    if isinstance(expr, A.Product):
        header(expr, schema)
        left = evaluate(expr.left, instance, schema)
        right = evaluate(expr.right, instance, schema)
        return frozenset(l + r for l in left for r in right)
    if isinstance(expr, A.NaturalJoin):
        hl = header(expr.left, schema)
        hr = header(expr.right, schema)
        return _natural_join(
            evaluate(expr.left, instance, schema),
            hl,
            evaluate(expr.right, instance, schema),
            hr,
        )[0]
    if isinstance(expr, A.FullOuterNaturalJoin):
        h = header(expr.operands[0], schema)
        rows = evaluate(expr.operands[0], instance, schema)
        for op in expr.operands[1:]:
            hr = header(op, schema)
            rows, h = _outer_join(rows, h, evaluate(op, instance, schema), hr)
        return rows
    if isinstance(expr, A.Union):
        header(expr, schema)
        return evaluate(expr.left, instance, schema) | evaluate(expr.right, instance, schema)
    if isinstance(expr, A.Intersect):
        header(expr, schema)
        return evaluate(expr.left, instance, schema) & evaluate(expr.right, instance, schema)
    if isinstance(expr, A.Diff):
        header(expr, schema)
        return evaluate(expr.left, instance, schema) - evaluate(expr.right, instance, schema)
    if isinstance(expr, A.ExtendNull):
        header(expr, schema)
        rows = evaluate(expr.expr, instance, schema)
        pad = (NULL,) * len(expr.attrs)
        return frozenset(r + pad for r in rows)
    raise TypeError(f"not an algebra expression: {expr!r}")


def _join_plan(hl: Header, hr: Header):
    left_names = [n for n, _ in hl]
    right_names = [n for n, _ in hr]
    shared = [n for n in right_names if n in left_names]
    li = [left_names.index(n) for n in shared]
    ri = [right_names.index(n) for n in shared]
    rest = [i for i, n in enumerate(right_names) if n not in left_names]
    out_header = hl + tuple(hr[i] for i in rest)
    return li, ri, rest, out_header


def _natural_join(left, hl, right, hr):
    li, ri, rest, out_header = _join_plan(hl, hr)
    by_key = {}
    for r in right:
        key = tuple(r[i] for i in ri)
        if any(is_null(v) for v in key):
            continue
        by_key.setdefault(key, []).append(r)
    out = set()
    for l in left:
        key = tuple(l[i] for i in li)
        if any(is_null(v) for v in key):
            continue
        for r in by_key.get(key, ()):
            out.add(l + tuple(r[i] for i in rest))
    return frozenset(out), out_header


def _outer_join(left, hl, right, hr):
    """One fold step of the n-ary full outer natural join: matched tuples join
    on non-NULL equality of shared attributes, unmatched tuples from either
    side are padded with NULL."""
    li, ri, rest, out_header = _join_plan(hl, hr)
    by_key = {}
    for r in right:
        key = tuple(r[i] for i in ri)
        if not any(is_null(v) for v in key):
            by_key.setdefault(key, []).append(r)
    out = set()
    matched_right = set()
    for l in left:
        key = tuple(l[i] for i in li)
        matches = [] if any(is_null(v) for v in key) else by_key.get(key, [])
        if matches:
            for r in matches:
                matched_right.add(r)
                out.add(l + tuple(r[i] for i in rest))
        else:
            out.add(l + (NULL,) * len(rest))
    right_names = [n for n, _ in hr]
    left_names = [n for n, _ in hl]
    for r in right:
        if r in matched_right:
            continue
        padded = [NULL] * len(left_names)
        for n_idx, n in enumerate(left_names):
            if n in right_names:
                padded[n_idx] = r[right_names.index(n)]
        out.add(tuple(padded) + tuple(r[i] for i in rest))
    return frozenset(out), out_header


# --- constraint checking -------------------------------------------------------


def check_constraint(c, instance: Instance, schema: Schema) -> bool:
    """True iff the instance satisfies the constraint.  FD/MVD grouping treats
    NULL as an ordinary distinct value."""
    if isinstance(c, FD):
        rel = schema.relation(c.relation)
        names = list(rel.attr_names())
        li = [names.index(a) for a in c.lhs]
        ri = [names.index(a) for a in c.rhs]
        seen = {}
        for row in instance.rows(c.relation):
            key = tuple(row[i] for i in li)
            val = tuple(row[i] for i in ri)
            if seen.setdefault(key, val) != val:
                return False
        return True
    if isinstance(c, MVD):
        rel = schema.relation(c.relation)
        names = list(rel.attr_names())
        li = [names.index(a) for a in c.lhs]
        ri = [names.index(a) for a in c.rhs]
        rest = [i for i in range(len(names)) if i not in li and i not in ri]
        groups = {}
        for row in instance.rows(c.relation):
            key = tuple(row[i] for i in li)
            groups.setdefault(key, set()).add(
                (tuple(row[i] for i in ri), tuple(row[i] for i in rest))
            )
        for pairs in groups.values():
            ys = {y for y, _ in pairs}
            zs = {z for _, z in pairs}
            if len(pairs) != len(ys) * len(zs):
                return False
        return True
    if isinstance(c, Inclusion):
        from_sig = schema.relation(c.from_relation)
        to_sig = schema.relation(c.to_relation)
        mixed = any(
            from_sig.attr(fa).sort != to_sig.attr(ta).sort
            for fa, ta in zip(c.from_attrs, c.to_attrs)
        )
        if c.bidirectional and mixed and c.from_relation == c.to_relation:
            # key-surrogate correspondence: checked per tuple, the OID column
            # must be the retagged key column
            return _check_surrogate(c, instance, schema)
        fn = list(from_sig.attr_names())
        tn = list(to_sig.attr_names())
        fi = [fn.index(a) for a in c.from_attrs]
        ti = [tn.index(a) for a in c.to_attrs]
        fset = {_untag_tuple(tuple(r[i] for i in fi)) for r in instance.rows(c.from_relation)}
        tset = {_untag_tuple(tuple(r[i] for i in ti)) for r in instance.rows(c.to_relation)}
        if c.bidirectional:
            return fset == tset
        return fset <= tset
    if isinstance(c, DomainIn):
        rel = schema.relation(c.relation)
        i = list(rel.attr_names()).index(c.attr)
        allowed = set(c.constants)
        return all(row[i] in allowed for row in instance.rows(c.relation))
    if isinstance(c, DomainNotIn):
        rel = schema.relation(c.relation)
        i = list(rel.attr_names()).index(c.attr)
        banned = set(c.constants)
        return all(row[i] not in banned for row in instance.rows(c.relation))
    if isinstance(c, NotNull):
        rel = schema.relation(c.relation)
        i = list(rel.attr_names()).index(c.attr)
        return all(not is_null(row[i]) for row in instance.rows(c.relation))
    if isinstance(c, AlgebraicEq):
        return evaluate(c.lhs, instance, schema) == evaluate(c.rhs, instance, schema)
    if isinstance(c, AlgebraicSubset):
        return evaluate(c.lhs, instance, schema) <= evaluate(c.rhs, instance, schema)
    if isinstance(c, AlgebraicDisjoint):
        return not (evaluate(c.lhs, instance, schema) & evaluate(c.rhs, instance, schema))
    if isinstance(c, AlgebraicEmpty):
        return not evaluate(c.expr, instance, schema)
    raise TypeError(f"not a constraint: {c!r}")


def _untag_tuple(t):
    return tuple(untag(v) for v in t)


def _check_surrogate(c: Inclusion, instance: Instance, schema: Schema) -> bool:
    rel = schema.relation(c.from_relation)
    names = list(rel.attr_names())
    for fa, ta in zip(c.from_attrs, c.to_attrs):
        sa, sb = rel.attr(fa).sort, rel.attr(ta).sort
        if is_oid_sort(sa):
            oid_attr, key_attr, tag = fa, ta, sa.tag
        elif is_oid_sort(sb):
            oid_attr, key_attr, tag = ta, fa, sb.tag
        else:
            continue
        oi, ki = names.index(oid_attr), names.index(key_attr)
        for row in instance.rows(c.from_relation):
            if is_null(row[oi]) or is_null(row[ki]):
                if is_null(row[oi]) != is_null(row[ki]):
                    return False
                continue
            if row[oi] != retag(row[ki], tag):
                return False
    return True


def satisfies_all(instance: Instance, schema: Schema):
    """Return the first violated constraint, or None."""
    for c in schema.constraints:
        if not check_constraint(c, instance, schema):
            return c
    return None


# --- mappings ------------------------------------------------------------------


def validate_mapping(source: Schema, target: Schema, mapping: Mapping) -> list:
    diags = []
    views = {}
    for name, expr in mapping.views:
        if name in views:
            diags.append(f"relation {name} has more than one view")
        views[name] = expr
    for rel in target.relations:
        if rel.name not in views:
            diags.append(f"relation {rel.name} has no view")
    for name, expr in mapping.views:
        if not target.has_relation(name):
            diags.append(f"view defines unknown target relation {name}")
            continue
        bad_refs = [
            r for r in sorted(A.relations_referenced(expr)) if not source.has_relation(r)
        ]
        if bad_refs:
            diags.append(f"view for {name} references non-source relation(s): {bad_refs}")
            continue
        try:
            h = header(expr, source)
        except Exception as exc:  # header errors become diagnostics
            diags.append(f"view for {name}: {exc}")
            continue
        rel = target.relation(name)
        if len(h) != len(rel.attributes):
            diags.append(f"view for {name}: arity {len(h)} != {len(rel.attributes)}")
            continue
        for (hn, hs), attr in zip(h, rel.attributes):
            if hn != attr.name:
                diags.append(f"view for {name}: output attribute {hn} != {attr.name}")
            elif hs != attr.sort and not _retag_compatible(hs, attr.sort):
                diags.append(f"view for {name}: sort of {hn} is {hs}, expected {attr.sort}")
    return diags


def _retag_compatible(have, want) -> bool:
    # a VALUE column may be retagged into OID (surrogate minting) and an OID
    # column untagged back into VALUE (natural-key recovery)
    return (have == VALUE and is_oid_sort(want)) or (is_oid_sort(have) and want == VALUE)


def apply_mapping(mapping: Mapping, instance: Instance, source: Schema, target: Schema) -> Instance:
    """Evaluate every view and coerce values into the target attribute sorts."""
    rels = {}
    for rel in target.relations:
        expr = mapping.view(rel.name)
        if expr is None:
            raise MissingView(rel.name)
        rows = evaluate(expr, instance, source)
        coerced = set()
        for row in rows:
            out = []
            for attr, v in zip(rel.attributes, row):
                if is_oid_sort(attr.sort):
                    out.append(retag(v, attr.sort.tag))
                else:
                    out.append(untag(v))
            coerced.add(tuple(out))
        rels[rel.name] = frozenset(coerced)
    return Instance(rels)


def unfold_query(query, views: Mapping):
    """Rewrite a query over schema A into one over schema B by substituting
    each relation reference with its defining view."""
    view_map = views.as_dict()
    missing = [r for r in sorted(A.relations_referenced(query)) if r not in view_map]
    if missing:
        raise MissingView(", ".join(missing))
    return A.substitute_relations(query, view_map)
