"""Bounded-exhaustive legal-instance enumeration."""

import pytest

from schematrans.engine import satisfies_all
from schematrans.enumeration import DomainSpec, legal_instances
from schematrans.errors import DomainMissing
from schematrans.schema import FD, AttributeSpec, RelationSignature, Schema

S = Schema(
    (
        RelationSignature(
            "p", (AttributeSpec("a"), AttributeSpec("b"), AttributeSpec("c"))
        ),
    ),
    (FD("p", ("b",), ("c",)),),
)

DOMS = DomainSpec(default=(0, 1))


def test_49_legal_instances():
    # 7 legal {c-choices} per b value (8 subsets of {(b,0),(b,1)} minus the
    # one violating b -> c), independently for b=0 and b=1; each paired with
    # any subset of a-values ... collapsing to the frozen brute-force count.
    assert sum(1 for _ in legal_instances(S, DOMS, None)) == 49


def test_empty_instance_first_and_all_legal():
    seq = list(legal_instances(S, DOMS, None))
    assert all(len(r) == 0 for r in seq[0].rels.values())
    assert all(satisfies_all(i, S) is None for i in seq)


def test_sorted_by_total_tuple_count():
    sizes = [sum(len(r) for r in i.rels.values()) for i in legal_instances(S, DOMS, None)]
    assert sizes == sorted(sizes)


def test_max_tuples_one_gives_nine():
    assert sum(1 for _ in legal_instances(S, DOMS, 1)) == 9


def test_per_attr_override():
    doms = DomainSpec(default=(0,), per_attr=(("c", ("k", "j")),))
    seq = list(legal_instances(S, doms, 1))
    # a,b from {0}; c from {"k","j"}: empty + two singletons
    assert len(seq) == 3


def test_domain_missing():
    with pytest.raises(DomainMissing):
        list(legal_instances(S, DomainSpec(), 1))


def test_enumeration_deterministic():
    a = list(legal_instances(S, DOMS, 2))
    b = list(legal_instances(S, DOMS, 2))
    assert a == b
