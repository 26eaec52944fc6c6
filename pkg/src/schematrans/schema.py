"""First-order database schemas: relation signatures, constraints, mappings.

A schema is a pair of a relation alphabet and a set of constraints over it.
Everything here is value-semantic and immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple as Tup

from . import algebra
from .values import Const

VALUE = "VALUE"


@dataclass(frozen=True)
class OidSort:
    tag: str

    def __repr__(self):
        return f"OID({self.tag})"


def is_oid_sort(sort) -> bool:
    return isinstance(sort, OidSort)


@dataclass(frozen=True)
class AttributeSpec:
    name: str
    sort: object = VALUE  # VALUE or OidSort(tag)
    nullable: bool = False
    # finite domain used only by the enumeration oracle; not a constraint
    enum_domain: Optional[Tup[Const, ...]] = None


@dataclass(frozen=True)
class RelationSignature:
    name: str
    attributes: Tup[AttributeSpec, ...]

    def attr_names(self) -> Tup[str, ...]:
        return tuple(a.name for a in self.attributes)

    def attr(self, name: str) -> AttributeSpec:
        for a in self.attributes:
            if a.name == name:
                return a
        raise KeyError(f"{self.name} has no attribute {name}")

    def has_attr(self, name: str) -> bool:
        return any(a.name == name for a in self.attributes)


# --- constraints -------------------------------------------------------------


@dataclass(frozen=True)
class FD:
    relation: str
    lhs: Tup[str, ...]
    rhs: Tup[str, ...]


@dataclass(frozen=True)
class MVD:
    relation: str
    lhs: Tup[str, ...]
    rhs: Tup[str, ...]


@dataclass(frozen=True)
class Inclusion:
    from_relation: str
    from_attrs: Tup[str, ...]
    to_relation: str
    to_attrs: Tup[str, ...]
    bidirectional: bool = False


@dataclass(frozen=True)
class DomainIn:
    relation: str
    attr: str
    constants: Tup[Const, ...]


@dataclass(frozen=True)
class DomainNotIn:
    relation: str
    attr: str
    constants: Tup[Const, ...]


@dataclass(frozen=True)
class NotNull:
    relation: str
    attr: str


@dataclass(frozen=True)
class AlgebraicEq:
    lhs: object
    rhs: object


@dataclass(frozen=True)
class AlgebraicSubset:
    lhs: object
    rhs: object


@dataclass(frozen=True)
class AlgebraicDisjoint:
    lhs: object
    rhs: object


@dataclass(frozen=True)
class AlgebraicEmpty:
    expr: object


Constraint = object  # union of the classes above


@dataclass(frozen=True)
class Schema:
    relations: Tup[RelationSignature, ...]
    constraints: Tup[Constraint, ...] = ()

    def relation(self, name: str) -> RelationSignature:
        for r in self.relations:
            if r.name == name:
                return r
        raise KeyError(f"no relation {name}")

    def has_relation(self, name: str) -> bool:
        return any(r.name == name for r in self.relations)

    def relation_names(self) -> Tup[str, ...]:
        return tuple(r.name for r in self.relations)


@dataclass(frozen=True)
class Mapping:
    """One view per target relation, each an algebra expression over the
    source alphabet.  Keys are target relation names."""

    views: Tup[Tup[str, object], ...]  # (target relation name, AlgebraExpr)

    def view(self, name: str):
        for n, e in self.views:
            if n == name:
                return e
        return None

    def as_dict(self) -> dict:
        return dict(self.views)


# --- validation --------------------------------------------------------------


def _attr_sort(schema: Schema, rel: str, attr: str):
    return schema.relation(rel).attr(attr).sort


def _check_ref(schema: Schema, rel: str, attrs, diags, ctx: str):
    if not schema.has_relation(rel):
        diags.append(f"{ctx}: unknown relation {rel}")
        return False
    sig = schema.relation(rel)
    ok = True
    for a in attrs:
        if not sig.has_attr(a):
            diags.append(f"{ctx}: unknown attribute {rel}.{a}")
            ok = False
    return ok


def _algebraic_sorts_ok(schema: Schema, expr, diags, ctx: str) -> None:
    # sort discipline inside expressions is enforced by engine.header at
    # evaluation time; here we only check relation references exist
    for name in sorted(algebra.relations_referenced(expr)):
        if not schema.has_relation(name):
            diags.append(f"{ctx}: unknown relation {name}")


def validate_schema(schema: Schema) -> list:
    """Structural well-formedness diagnostics; empty list means valid."""
    diags = []
    seen = set()
    for r in schema.relations:
        if r.name in seen:
            diags.append(f"relation {r.name}: duplicate relation name")
        seen.add(r.name)
        if not r.attributes:
            diags.append(f"relation {r.name}: must have at least one attribute")
        names = [a.name for a in r.attributes]
        for n in names:
            if names.count(n) > 1:
                diags.append(f"relation {r.name}: duplicate attribute {n}")
                break
    for c in schema.constraints:
        ctx = f"constraint {c}"
        if isinstance(c, (FD, MVD)):
            _check_ref(schema, c.relation, tuple(c.lhs) + tuple(c.rhs), diags, ctx)
        elif isinstance(c, Inclusion):
            ok = _check_ref(schema, c.from_relation, c.from_attrs, diags, ctx)
            ok &= _check_ref(schema, c.to_relation, c.to_attrs, diags, ctx)
            if ok:
                if len(c.from_attrs) != len(c.to_attrs):
                    diags.append(f"{ctx}: arity mismatch")
                else:
                    for fa, ta in zip(c.from_attrs, c.to_attrs):
                        fs = _attr_sort(schema, c.from_relation, fa)
                        ts = _attr_sort(schema, c.to_relation, ta)
                        if fs != ts and not c.bidirectional:
                            diags.append(f"{ctx}: sort mismatch on {fa}/{ta}")
                        # a bidirectional inclusion between an OID column and
                        # a VALUE column is the key-surrogate correspondence
                        # and is checked modulo retagging
        elif isinstance(c, (DomainIn, DomainNotIn, NotNull)):
            _check_ref(schema, c.relation, (c.attr,), diags, ctx)
            if isinstance(c, (DomainIn, DomainNotIn)) and is_oid_sort(
                schema.relation(c.relation).attr(c.attr).sort
                if schema.has_relation(c.relation) and schema.relation(c.relation).has_attr(c.attr)
                else VALUE
            ):
                diags.append(f"{ctx}: domain constraint on OID attribute")
        elif isinstance(c, (AlgebraicEq, AlgebraicSubset, AlgebraicDisjoint)):
            _algebraic_sorts_ok(schema, c.lhs, diags, ctx)
            _algebraic_sorts_ok(schema, c.rhs, diags, ctx)
        elif isinstance(c, AlgebraicEmpty):
            _algebraic_sorts_ok(schema, c.expr, diags, ctx)
        else:
            diags.append(f"{ctx}: unknown constraint kind")
    return diags


def fd_closure(schema: Schema, relation: str, attrs) -> set:
    """Attribute closure of `attrs` under the schema's FDs on `relation`."""
    closure = set(attrs)
    changed = True
    while changed:
        changed = False
        for c in schema.constraints:
            if isinstance(c, FD) and c.relation == relation:
                if set(c.lhs) <= closure and not set(c.rhs) <= closure:
                    closure |= set(c.rhs)
                    changed = True
    return closure
