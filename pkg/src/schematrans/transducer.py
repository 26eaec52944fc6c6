"""In-memory simulation of the transducer: twin synchronized databases.

A TwinState holds a source instance and a target instance bound by a
CompiledTransform.  Transactions (insert/delete batches on one side) are
applied tentatively; the opposite side is recomputed wholesale from the
mapping.  A transaction is rejected — leaving the state untouched — if either
side would violate its constraints, or if a target-side update is not
representable in the source (fwd(bwd(t')) ≠ t').  Each accepted transaction
advances the epoch by exactly one: propagation runs once, never re-entrantly,
which is the in-memory analogue of the SQL trigger loop guard.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple as Tup

from .engine import Instance, apply_mapping, satisfies_all, unfold_query
from .errors import ConstraintViolation, NotRepresentable
from .patterns import CompiledTransform

SOURCE = "SOURCE"
TARGET = "TARGET"
INSERT = "INSERT"
DELETE = "DELETE"


@dataclass(frozen=True)
class UpdateOp:
    side: str  # SOURCE | TARGET
    kind: str  # INSERT | DELETE
    relation: str
    row: Tup[object, ...]


@dataclass(frozen=True)
class Transaction:
    ops: Tup[UpdateOp, ...]

    @property
    def side(self) -> str:
        return self.ops[0].side

    def __post_init__(self):
        if not self.ops:
            raise ValueError("empty transaction")
        if len({op.side for op in self.ops}) != 1:
            raise ValueError("transaction mixes sides")


@dataclass(frozen=True)
class TwinState:
    transform: CompiledTransform
    s_instance: Instance
    t_instance: Instance
    epoch: int = 0

    @classmethod
    def initial(cls, transform: CompiledTransform, s_instance: Instance) -> "TwinState":
        violated = satisfies_all(s_instance, transform.source)
        if violated is not None:
            raise ConstraintViolation(SOURCE, violated, None)
        t_instance = apply_mapping(
            transform.fwd, s_instance, transform.source, transform.target
        )
        violated = satisfies_all(t_instance, transform.target)
        if violated is not None:
            raise ConstraintViolation(TARGET, violated, None)
        return cls(transform, s_instance, t_instance, 0)

    def check_sync(self) -> bool:
        t = self.transform
        return (
            apply_mapping(t.fwd, self.s_instance, t.source, t.target) == self.t_instance
            and apply_mapping(t.bwd, self.t_instance, t.target, t.source) == self.s_instance
        )


def _apply_ops(instance: Instance, ops) -> Instance:
    rels = {name: set(rows) for name, rows in instance.rels.items()}
    for op in ops:
        if op.relation not in rels:
            raise ConstraintViolation(op.side, f"unknown relation {op.relation}", op.row)
        if op.kind == INSERT:
            rels[op.relation].add(tuple(op.row))
        elif op.kind == DELETE:
            rels[op.relation].discard(tuple(op.row))
        else:
            raise ValueError(f"unknown op kind {op.kind}")
    return Instance({name: frozenset(rows) for name, rows in rels.items()})


def apply_transaction(state: TwinState, tx: Transaction) -> TwinState:
    """Apply a transaction atomically; raises TransactionRejected subtypes,
    leaving the caller's state valid and unchanged."""
    t = state.transform
    if tx.side == SOURCE:
        new_s = _apply_ops(state.s_instance, tx.ops)
        violated = satisfies_all(new_s, t.source)
        if violated is not None:
            raise ConstraintViolation(SOURCE, violated, None)
        new_t = apply_mapping(t.fwd, new_s, t.source, t.target)
        violated = satisfies_all(new_t, t.target)
        if violated is not None:
            raise ConstraintViolation(TARGET, violated, None)
    else:
        new_t = _apply_ops(state.t_instance, tx.ops)
        violated = satisfies_all(new_t, t.target)
        if violated is not None:
            raise ConstraintViolation(TARGET, violated, None)
        new_s = apply_mapping(t.bwd, new_t, t.target, t.source)
        violated = satisfies_all(new_s, t.source)
        if violated is not None:
            raise ConstraintViolation(SOURCE, violated, None)
        round_trip = apply_mapping(t.fwd, new_s, t.source, t.target)
        if round_trip != new_t:
            witness = _first_difference(round_trip, new_t)
            raise NotRepresentable(witness)
    return TwinState(t, new_s, new_t, state.epoch + 1)


def _first_difference(a: Instance, b: Instance):
    from .values import value_sort_key

    for name in sorted(set(a.rels) | set(b.rels)):
        delta = a.rels.get(name, frozenset()) ^ b.rels.get(name, frozenset())
        if delta:
            row = min(delta, key=lambda r: tuple(value_sort_key(v) for v in r))
            return (name, row)
    return None


def translate_query(q, transform: CompiledTransform, side: str):
    """Rewrite a query over one side into the other side's vocabulary by
    unfolding through the appropriate mapping direction."""
    if side == TARGET:
        return unfold_query(q, transform.fwd)
    return unfold_query(q, transform.bwd)
