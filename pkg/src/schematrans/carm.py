"""CARM validation and derivation.

A schema is in CARM form when every relation is 6NF-shaped — all-OID, or
OID(s) plus exactly one VALUE attribute — and the constraints are only key
dependencies, unary inclusion dependencies between OID attributes, and the
OID ⇄ natural-key bidirectional inclusions inside identification tables.
Relations partition into entity anchors, identification tables, attribute
facts, and relationship facts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple as Tup

from .errors import NotInCarmForm
from .patterns import CompiledTransform, compose_plan
from .schema import FD, Inclusion, NotNull, Schema, is_oid_sort

ANCHOR = "anchor"
IDENTIFICATION = "identification"
ATTRIBUTE_FACT = "attribute-fact"
RELATIONSHIP_FACT = "relationship-fact"


@dataclass(frozen=True)
class CarmSchema:
    schema: Schema
    anchors: Tup[str, ...]
    identification_tables: Tup[str, ...]
    attribute_facts: Tup[str, ...]
    relationship_facts: Tup[str, ...]

    def partition_of(self, relation: str) -> str:
        if relation in self.anchors:
            return ANCHOR
        if relation in self.identification_tables:
            return IDENTIFICATION
        if relation in self.attribute_facts:
            return ATTRIBUTE_FACT
        if relation in self.relationship_facts:
            return RELATIONSHIP_FACT
        raise KeyError(relation)


def _classify_relation(rel) -> str:
    oid = [a for a in rel.attributes if is_oid_sort(a.sort)]
    val = [a for a in rel.attributes if not is_oid_sort(a.sort)]
    if len(val) == 0:
        return ANCHOR if len(oid) == 1 else RELATIONSHIP_FACT
    return ATTRIBUTE_FACT  # identification tables are refined via constraints


def check_carm_form(schema: Schema) -> list:
    """Diagnostics; empty iff the schema is in CARM form."""
    diags = []
    id_tables = set()
    for c in schema.constraints:
        if isinstance(c, Inclusion) and c.bidirectional and c.from_relation == c.to_relation:
            rel = schema.relation(c.from_relation) if schema.has_relation(c.from_relation) else None
            if (
                rel is not None
                and len(c.from_attrs) == 1
                and len(c.to_attrs) == 1
                and is_oid_sort(rel.attr(c.from_attrs[0]).sort)
                and not is_oid_sort(rel.attr(c.to_attrs[0]).sort)
            ):
                id_tables.add(c.from_relation)

    for rel in schema.relations:
        oid = [a for a in rel.attributes if is_oid_sort(a.sort)]
        val = [a for a in rel.attributes if not is_oid_sort(a.sort)]
        if any(a.nullable for a in rel.attributes):
            diags.append(f"relation {rel.name}: NULLABLE attribute in CARM form")
        if not oid:
            diags.append(f"relation {rel.name}: no OID attribute")
        elif len(val) > 1:
            diags.append(
                f"relation {rel.name}: {len(val)} non-OID attributes alongside OIDs "
                f"(6NF shape allows at most one)"
            )
        if val and len(oid) > 1:
            diags.append(
                f"relation {rel.name}: mixes several OID attributes with a value attribute"
            )

    for c in schema.constraints:
        if isinstance(c, FD):
            rel = schema.relation(c.relation)
            non_lhs = [a for a in rel.attr_names() if a not in c.lhs]
            if not set(c.rhs) >= set(non_lhs):
                # keys only: the FD must determine the whole relation
                diags.append(f"constraint {c}: non-key functional dependency")
            continue
        if isinstance(c, Inclusion):
            if len(c.from_attrs) != 1 or len(c.to_attrs) != 1:
                diags.append(f"constraint {c}: non-unary inclusion dependency")
                continue
            f_rel = schema.relation(c.from_relation)
            t_rel = schema.relation(c.to_relation)
            f_oid = is_oid_sort(f_rel.attr(c.from_attrs[0]).sort)
            t_oid = is_oid_sort(t_rel.attr(c.to_attrs[0]).sort)
            if f_oid and t_oid:
                continue
            if (
                c.bidirectional
                and c.from_relation == c.to_relation
                and f_oid
                and not t_oid
                and c.from_relation in id_tables
            ):
                continue  # OID ⇄ natural key inside an identification table
            diags.append(f"constraint {c}: inclusion dependency not among OID attributes")
            continue
        if isinstance(c, NotNull):
            continue
        diags.append(f"constraint {c}: not allowed in CARM form")
    return diags


def classify_carm(schema: Schema) -> CarmSchema:
    """Partition an already-validated CARM schema."""
    id_tables = set()
    for c in schema.constraints:
        if (
            isinstance(c, Inclusion)
            and c.bidirectional
            and c.from_relation == c.to_relation
            and len(c.from_attrs) == 1
        ):
            rel = schema.relation(c.from_relation)
            if is_oid_sort(rel.attr(c.from_attrs[0]).sort) and not is_oid_sort(
                rel.attr(c.to_attrs[0]).sort
            ):
                id_tables.add(c.from_relation)
    anchors, idents, attr_facts, rel_facts = [], [], [], []
    for rel in schema.relations:
        if rel.name in id_tables:
            idents.append(rel.name)
        else:
            kind = _classify_relation(rel)
            {ANCHOR: anchors, ATTRIBUTE_FACT: attr_facts, RELATIONSHIP_FACT: rel_facts}[
                kind
            ].append(rel.name)
    return CarmSchema(schema, tuple(anchors), tuple(idents), tuple(attr_facts), tuple(rel_facts))


def derive_carm(source: Schema, plan) -> tuple:
    """Compose the plan, require the result to be in CARM form, and return the
    classified CARM with the end-to-end transform."""
    t = compose_plan(source, plan)
    diags = check_carm_form(t.target)
    if diags:
        raise NotInCarmForm(diags)
    return classify_carm(t.target), t


def _dot_quote(s: str) -> str:
    return '"' + s.replace('"', '\\"') + '"'


def export_conceptual_dot(carm: CarmSchema) -> str:
    """Deterministic DOT rendering: anchors as boxes, attribute facts as edges
    to value ovals, relationship facts as diamonds between anchors,
    identification tables as reference-mode annotations on their anchor."""
    schema = carm.schema

    def anchor_of(fact: str, attr) -> str:
        # prefer the anchor linked to this fact column by an inclusion
        # (several anchors may share an OID tag, e.g. a subtype hierarchy)
        for c in schema.constraints:
            if not isinstance(c, Inclusion):
                continue
            if c.from_relation == fact and c.from_attrs == (attr.name,) and c.to_relation in carm.anchors:
                return c.to_relation
            if c.to_relation == fact and c.to_attrs == (attr.name,) and c.from_relation in carm.anchors:
                return c.from_relation
        for name in carm.anchors:
            rel = schema.relation(name)
            if rel.attributes[0].sort.tag == attr.sort.tag:
                return name
        return ""

    # reference modes: identification table natural-key attribute per anchor
    refmode = {}
    for name in carm.identification_tables:
        rel = schema.relation(name)
        oid = next(a for a in rel.attributes if is_oid_sort(a.sort))
        key = next(a for a in rel.attributes if not is_oid_sort(a.sort))
        refmode[anchor_of(name, oid)] = key.name

    # subtype inclusions: anchor-to-anchor unary OID inclusions
    subtypes = []
    for c in schema.constraints:
        if (
            isinstance(c, Inclusion)
            and not c.bidirectional
            and c.from_relation in carm.anchors
            and c.to_relation in carm.anchors
        ):
            subtypes.append((c.from_relation, c.to_relation))

    lines = ["digraph carm {", "  rankdir=LR;", "  node [fontname=Helvetica];"]
    for name in carm.anchors:
        label = name if name not in refmode else f"{name}\\n({refmode[name]})"
        lines.append(f"  {_dot_quote(name)} [shape=box, label={_dot_quote(label)}];")
    for name in carm.attribute_facts:
        rel = schema.relation(name)
        oid = next(a for a in rel.attributes if is_oid_sort(a.sort))
        val = next(a for a in rel.attributes if not is_oid_sort(a.sort))
        vnode = f"{name}.{val.name}"
        lines.append(f"  {_dot_quote(vnode)} [shape=oval, label={_dot_quote(val.name)}];")
        lines.append(
            f"  {_dot_quote(anchor_of(name, oid))} -> {_dot_quote(vnode)} "
            f"[label={_dot_quote(name)}];"
        )
    for name in carm.relationship_facts:
        rel = schema.relation(name)
        lines.append(f"  {_dot_quote(name)} [shape=diamond];")
        for a in rel.attributes:
            lines.append(
                f"  {_dot_quote(anchor_of(name, a))} -> {_dot_quote(name)} "
                f"[label={_dot_quote(a.name)}, dir=none];"
            )
    for sub, sup in subtypes:
        lines.append(
            f"  {_dot_quote(sub)} -> {_dot_quote(sup)} [label=\"isa\", arrowhead=onormal];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
