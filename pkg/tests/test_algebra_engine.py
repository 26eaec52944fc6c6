"""Evaluator, header inference, and constraint checking."""

import pytest

import schematrans as st
from schematrans import algebra as A
from schematrans.engine import Instance, evaluate, header, satisfies_all
from schematrans.errors import HeaderError
from schematrans.schema import (
    FD,
    AlgebraicEq,
    AttributeSpec,
    Inclusion,
    RelationSignature,
    Schema,
)
from schematrans.values import NULL, Const

S = Schema(
    (
        RelationSignature(
            "p", (AttributeSpec("a"), AttributeSpec("b"), AttributeSpec("c"))
        ),
    ),
    (FD("p", ("b",), ("c",)),),
)


def rows(*tuples):
    return frozenset(tuple(Const(v) if v is not None else NULL for v in t) for t in tuples)


def inst(**rels):
    return Instance({k: v for k, v in rels.items()})


def test_project_select_rename():
    i = inst(p=rows((1, 2, 3), (4, 2, 3)))
    q = A.Project(("a",), A.RelationRef("p"))
    assert evaluate(q, i, S) == rows((1,), (4,))
    sel = A.Select(A.AttrEqConst("a", Const(1)), A.RelationRef("p"))
    assert evaluate(sel, i, S) == rows((1, 2, 3))
    ren = A.Rename((("a", "x"),), A.RelationRef("p"))
    assert header(ren, S)[0][0] == "x"


def test_join_is_product_plus_select_on_shared():
    T = Schema(
        (
            RelationSignature("q", (AttributeSpec("a"), AttributeSpec("b"))),
            RelationSignature("r", (AttributeSpec("b"), AttributeSpec("c"))),
        )
    )
    i = inst(q=rows((1, 2), (5, 6)), r=rows((2, 3)))
    j = evaluate(A.NaturalJoin(A.RelationRef("q"), A.RelationRef("r")), i, T)
    assert j == rows((1, 2, 3))


def test_null_never_joins():
    T = Schema(
        (
            RelationSignature("q", (AttributeSpec("a"), AttributeSpec("b", nullable=True))),
            RelationSignature("r", (AttributeSpec("b", nullable=True), AttributeSpec("c"))),
        )
    )
    i = inst(q={(Const(1), NULL)}, r={(NULL, Const(3))})
    j = evaluate(A.NaturalJoin(A.RelationRef("q"), A.RelationRef("r")), i, T)
    assert j == frozenset()


def test_outer_join_pads_with_null():
    T = Schema(
        (
            RelationSignature("q", (AttributeSpec("a"), AttributeSpec("b"))),
            RelationSignature("r", (AttributeSpec("b"), AttributeSpec("c"))),
        )
    )
    i = inst(q=rows((1, 2)), r=rows((9, 3)))
    oj = evaluate(
        A.FullOuterNaturalJoin((A.RelationRef("q"), A.RelationRef("r"))), i, T
    )
    assert (Const(1), Const(2), NULL) in oj
    assert (NULL, Const(9), Const(3)) in oj


def test_header_clash_rejected():
    with pytest.raises(HeaderError):
        header(A.Product(A.RelationRef("p"), A.RelationRef("p")), S)


def test_fd_checking():
    ok = inst(p=rows((1, 2, 3), (9, 2, 3)))
    bad = inst(p=rows((1, 2, 3), (1, 2, 4)))
    assert satisfies_all(ok, S) is None
    assert isinstance(satisfies_all(bad, S), FD)


def test_inclusion_bidirectional():
    T = Schema(
        (
            RelationSignature("q", (AttributeSpec("b"),)),
            RelationSignature("r", (AttributeSpec("b"),)),
        ),
        (Inclusion("q", ("b",), "r", ("b",), True),),
    )
    assert satisfies_all(inst(q=rows((1,)), r=rows((1,))), T) is None
    assert satisfies_all(inst(q=rows((1,)), r=rows((1,), (2,))), T) is not None


def test_trivial_algebraic_eq_always_holds():
    e = A.Project(("a",), A.RelationRef("p"))
    T = Schema(S.relations, (AlgebraicEq(e, e),))
    assert satisfies_all(inst(p=rows((1, 2, 3))), T) is None


def test_apply_mapping_round_trip(vertical_plan):
    i = inst(p=rows((0, 0, 1), (1, 0, 1), (0, 1, 0)))
    t = st.apply_mapping(vertical_plan.fwd, i, vertical_plan.source, vertical_plan.target)
    back = st.apply_mapping(vertical_plan.bwd, t, vertical_plan.target, vertical_plan.source)
    assert back == i
