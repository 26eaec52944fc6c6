"""Relational-algebra AST and selection predicates.

Expressions are immutable trees.  Evaluation, header computation and
constraint checking live in `engine`; this module only defines the shapes
plus purely syntactic helpers (substitution, normalization).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple as Tup

from .values import Const, Token

# --- selection predicates --------------------------------------------------


@dataclass(frozen=True)
class PTrue:
    pass


@dataclass(frozen=True)
class PFalse:
    pass


@dataclass(frozen=True)
class AttrEqAttr:
    left: str
    right: str


@dataclass(frozen=True)
class AttrEqConst:
    attr: str
    const: Const


@dataclass(frozen=True)
class AttrNeqConst:
    attr: str
    const: Const


@dataclass(frozen=True)
class IsNull:
    attr: str


@dataclass(frozen=True)
class IsNotNull:
    attr: str


@dataclass(frozen=True)
class And:
    parts: Tup["Predicate", ...]


Predicate = object  # union of the classes above


def pred_attrs(p) -> tuple:
    if isinstance(p, (PTrue, PFalse)):
        return ()
    if isinstance(p, AttrEqAttr):
        return (p.left, p.right)
    if isinstance(p, (AttrEqConst, AttrNeqConst)):
        return (p.attr,)
    if isinstance(p, (IsNull, IsNotNull)):
        return (p.attr,)
    if isinstance(p, And):
        out = []
        for q in p.parts:
            out.extend(pred_attrs(q))
        return tuple(out)
    raise TypeError(f"not a predicate: {p!r}")


def negate_atom(p):
    """Negation of an atomic predicate; used by horizontal decomposition."""
    if isinstance(p, PTrue):
        return PFalse()
    if isinstance(p, PFalse):
        return PTrue()
    if isinstance(p, AttrEqConst):
        return AttrNeqConst(p.attr, p.const)
    if isinstance(p, AttrNeqConst):
        return AttrEqConst(p.attr, p.const)
    if isinstance(p, IsNull):
        return IsNotNull(p.attr)
    if isinstance(p, IsNotNull):
        return IsNull(p.attr)
    return None


def rename_pred(p, mapping: dict):
    """Rewrite attribute names in a predicate (old name -> new name)."""
    if isinstance(p, (PTrue, PFalse)):
        return p
    if isinstance(p, AttrEqAttr):
        return AttrEqAttr(mapping.get(p.left, p.left), mapping.get(p.right, p.right))
    if isinstance(p, AttrEqConst):
        return AttrEqConst(mapping.get(p.attr, p.attr), p.const)
    if isinstance(p, AttrNeqConst):
        return AttrNeqConst(mapping.get(p.attr, p.attr), p.const)
    if isinstance(p, IsNull):
        return IsNull(mapping.get(p.attr, p.attr))
    if isinstance(p, IsNotNull):
        return IsNotNull(mapping.get(p.attr, p.attr))
    if isinstance(p, And):
        return And(tuple(rename_pred(q, mapping) for q in p.parts))
    raise TypeError(f"not a predicate: {p!r}")


# --- algebra expressions ---------------------------------------------------


@dataclass(frozen=True)
class RelationRef:
    name: str


@dataclass(frozen=True)
class Project:
    attrs: Tup[str, ...]
    expr: "AlgebraExpr"


@dataclass(frozen=True)
class Select:
    predicate: Predicate
    expr: "AlgebraExpr"


@dataclass(frozen=True)
class Rename:
    # pairs of (old, new), applied simultaneously
    pairs: Tup[Tup[str, str], ...]
    expr: "AlgebraExpr"


@dataclass(frozen=True)
class Product:
    left: "AlgebraExpr"
    right: "AlgebraExpr"


@dataclass(frozen=True)
class NaturalJoin:
    left: "AlgebraExpr"
    right: "AlgebraExpr"


@dataclass(frozen=True)
class FullOuterNaturalJoin:
    # folded left to right in the given order; operand order is significant
    operands: Tup["AlgebraExpr", ...]


@dataclass(frozen=True)
class Union:
    left: "AlgebraExpr"
    right: "AlgebraExpr"


@dataclass(frozen=True)
class Intersect:
    left: "AlgebraExpr"
    right: "AlgebraExpr"


@dataclass(frozen=True)
class Diff:
    left: "AlgebraExpr"
    right: "AlgebraExpr"


@dataclass(frozen=True)
class ExtendNull:
    """Append NULL-valued columns; shorthand for a product with a one-row
    all-NULL constant relation.  Used by the NULL-elimination backward view."""

    expr: "AlgebraExpr"
    attrs: Tup[str, ...]


AlgebraExpr = object  # union of the classes above


def children(e):
    if isinstance(e, RelationRef):
        return ()
    if isinstance(e, (Project, Select, Rename, ExtendNull)):
        return (e.expr,)
    if isinstance(e, (Product, NaturalJoin, Union, Intersect, Diff)):
        return (e.left, e.right)
    if isinstance(e, FullOuterNaturalJoin):
        return e.operands
    raise TypeError(f"not an algebra expression: {e!r}")


def rebuild(e, kids):
    if isinstance(e, RelationRef):
        return e
    if isinstance(e, Project):
        return Project(e.attrs, kids[0])
    if isinstance(e, Select):
        return Select(e.predicate, kids[0])
    if isinstance(e, Rename):
        return Rename(e.pairs, kids[0])
    if isinstance(e, ExtendNull):
        return ExtendNull(kids[0], e.attrs)
    if isinstance(e, Product):
        return Product(kids[0], kids[1])
    if isinstance(e, NaturalJoin):
        return NaturalJoin(kids[0], kids[1])
    if isinstance(e, Union):
        return Union(kids[0], kids[1])
    if isinstance(e, Intersect):
        return Intersect(kids[0], kids[1])
    if isinstance(e, Diff):
        return Diff(kids[0], kids[1])
    if isinstance(e, FullOuterNaturalJoin):
        return FullOuterNaturalJoin(tuple(kids))
    raise TypeError(f"not an algebra expression: {e!r}")


def relations_referenced(e) -> set:
    if isinstance(e, RelationRef):
        return {e.name}
    out = set()
    for k in children(e):
        out |= relations_referenced(k)
    return out


def substitute_relations(e, views: dict):
    """Replace each RelationRef by its view; references without a view stay."""
    if isinstance(e, RelationRef):
        return views.get(e.name, e)
    kids = [substitute_relations(k, views) for k in children(e)]
    return rebuild(e, kids)


# --- normalization ---------------------------------------------------------
#
# Composed mapping views come out of plan unfolding as deeply nested
# project/select/rename chains over the source relations.  `normalize`
# applies meaning-preserving local rewrites so the printed views take the
# compact rename(project(select(base))) shape.  Rewrites:
#   - fuse nested projections, selections (conjunction) and renames
#   - commute a selection below a projection (predicate attrs are always
#     available below a projection that the selection could see)
#   - hoist renames outward through projections and selections
#   - drop identity renames and full-width identity projections (the latter
#     only when the column order is unchanged, so headers stay stable)


def _flatten_and(p):
    if isinstance(p, And):
        out = []
        for q in p.parts:
            f = _flatten_and(q)
            out.extend(f.parts if isinstance(f, And) else [f])
        return And(tuple(out))
    return p


def conjoin(a, b):
    parts = []
    for p in (a, b):
        f = _flatten_and(p)
        parts.extend(f.parts if isinstance(f, And) else [f])
    parts = [p for p in parts if not isinstance(p, PTrue)]
    if not parts:
        return PTrue()
    if len(parts) == 1:
        return parts[0]
    return And(tuple(parts))


def _normalize_once(e):
    if isinstance(e, Project):
        inner = e.expr
        if isinstance(inner, Project):
            return Project(e.attrs, inner.expr), True
        if isinstance(inner, Rename):
            # hoist rename: project the pre-rename names, rename afterwards
            back = {new: old for old, new in inner.pairs}
            pre = tuple(back.get(a, a) for a in e.attrs)
            pairs = tuple((o, n) for o, n in inner.pairs if o in pre)
            out = Project(pre, inner.expr)
            return (Rename(pairs, out) if pairs else out), True
    if isinstance(e, Select):
        inner = e.expr
        if isinstance(inner, Select):
            return Select(conjoin(inner.predicate, e.predicate), inner.expr), True
        if isinstance(inner, Project):
            if set(pred_attrs(e.predicate)) <= set(inner.attrs):
                return Project(inner.attrs, Select(e.predicate, inner.expr)), True
        if isinstance(inner, Rename):
            back = {new: old for old, new in inner.pairs}
            return Rename(inner.pairs, Select(rename_pred(e.predicate, back), inner.expr)), True
    if isinstance(e, Rename):
        if not e.pairs or all(o == n for o, n in e.pairs):
            return e.expr, True
        inner = e.expr
        if isinstance(inner, Rename):
            # compose: apply inner first, then outer
            merged = []
            outer = dict(e.pairs)
            for o, n in inner.pairs:
                merged.append((o, outer.pop(n, n)))
            merged.extend(outer.items())
            merged = [(o, n) for o, n in merged if o != n]
            return Rename(tuple(merged), inner.expr), True
    return e, False


def normalize(e):
    kids = [normalize(k) for k in children(e)]
    e = rebuild(e, kids)
    changed = True
    while changed:
        e, changed = _normalize_once(e)
        if changed:
            kids = [normalize(k) for k in children(e)]
            e = rebuild(e, kids)
    return e
