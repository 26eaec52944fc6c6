"""Bounded-exhaustive enumeration of legal instances over finite domains."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterator, Optional, Tuple as Tup

from . import algebra as A
from .engine import Instance, check_constraint
from .errors import DomainMissing
from .schema import (
    AlgebraicDisjoint,
    AlgebraicEmpty,
    AlgebraicEq,
    AlgebraicSubset,
    DomainIn,
    DomainNotIn,
    FD,
    Inclusion,
    MVD,
    NotNull,
    Schema,
    is_oid_sort,
)
from .values import NULL, Const, Oid, value_sort_key


@dataclass(frozen=True)
class DomainSpec:
    """Finite domains for enumeration: a default VALUE domain, plus OID
    payload domains per tag (defaulting to the VALUE domain's tokens)."""

    default: Optional[Tup[Const, ...]] = None
    oid_payloads: Tup[Tup[str, Tup[object, ...]], ...] = ()
    per_attr: Tup[Tup[str, Tup[object, ...]], ...] = ()  # keyed by attribute name

    def value_domain(self, attr) -> Tup[Const, ...]:
        for name, tokens in self.per_attr:
            if name == attr.name:
                return _consts(tokens)
        if attr.enum_domain is not None:
            return _consts(attr.enum_domain)
        if self.default is None:
            raise DomainMissing(f"attribute {attr.name} has no finite domain")
        return _consts(self.default)

    def oid_domain(self, tag: str) -> Tup[Oid, ...]:
        for t, payloads in self.oid_payloads:
            if t == tag:
                return tuple(Oid(tag, p) for p in payloads)
        if self.default is None:
            raise DomainMissing(f"OID tag {tag} has no finite domain")
        return tuple(Oid(tag, c.token) for c in _consts(self.default))


def _consts(tokens) -> Tup[Const, ...]:
    return tuple(t if isinstance(t, Const) else Const(t) for t in tokens)


def candidate_values(attr, domains: DomainSpec):
    if is_oid_sort(attr.sort):
        vals = list(domains.oid_domain(attr.sort.tag))
    else:
        vals = list(domains.value_domain(attr))
    if attr.nullable:
        vals.append(NULL)
    vals.sort(key=value_sort_key)
    return vals


def candidate_tuples(relation, domains: DomainSpec):
    per_attr = [candidate_values(a, domains) for a in relation.attributes]
    rows = [tuple(row) for row in itertools.product(*per_attr)]
    rows.sort(key=lambda t: tuple(value_sort_key(v) for v in t))
    return rows


def constraint_relations(c) -> frozenset:
    if isinstance(c, (FD, MVD, DomainIn, DomainNotIn, NotNull)):
        return frozenset({c.relation})
    if isinstance(c, Inclusion):
        return frozenset({c.from_relation, c.to_relation})
    if isinstance(c, (AlgebraicEq, AlgebraicSubset, AlgebraicDisjoint)):
        return frozenset(A.relations_referenced(c.lhs) | A.relations_referenced(c.rhs))
    if isinstance(c, AlgebraicEmpty):
        return frozenset(A.relations_referenced(c.expr))
    raise TypeError(f"not a constraint: {c!r}")


def legal_instances(
    schema: Schema, domains: DomainSpec, max_tuples: Optional[int] = None
) -> Iterator[Instance]:
    """Yield every instance within the per-relation size bound that satisfies
    all constraints.  Order: increasing total tuple count, ties broken by the
    depth-first order over relations in declaration order with tuples in
    lexicographic value order.  The empty instance, when legal, comes first.
    """
    rels = list(schema.relations)
    cands = {r.name: candidate_tuples(r, domains) for r in rels}
    bounds = {
        r.name: len(cands[r.name]) if max_tuples is None else min(max_tuples, len(cands[r.name]))
        for r in rels
    }
    # constraints become checkable once the last relation they mention is set
    last_idx = {}
    order = [r.name for r in rels]
    pending: Dict[int, list] = {i: [] for i in range(len(rels))}
    for c in schema.constraints:
        mentioned = constraint_relations(c)
        idx = max((order.index(n) for n in mentioned if n in order), default=0)
        pending[idx].append(c)

    results = []

    def assign(i: int, acc: dict):
        if i == len(rels):
            results.append(Instance(dict(acc)))
            return
        name = rels[i].name
        options = []
        for size in range(bounds[name] + 1):
            for combo in itertools.combinations(cands[name], size):
                options.append(frozenset(combo))
        for rows in options:
            acc[name] = rows
            partial = Instance({k: v for k, v in acc.items()})
            if all(check_constraint(c, partial, schema) for c in pending[i]):
                assign(i + 1, acc)
        del acc[name]

    if rels:
        assign(0, {})
    else:
        results.append(Instance({}))
    results.sort(key=lambda inst: inst.total_tuples())
    yield from results
