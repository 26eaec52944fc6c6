"""Twin-database simulator: sync invariants, atomicity, representability."""

import dataclasses

import pytest

import schematrans as st
from schematrans import algebra as A
from schematrans import dsl
from schematrans.engine import Instance, apply_mapping, evaluate
from schematrans.errors import ConstraintViolation, NotRepresentable
from schematrans.schema import Schema
from schematrans.transducer import (
    DELETE,
    INSERT,
    SOURCE,
    TARGET,
    Transaction,
    TwinState,
    apply_transaction,
    translate_query,
)
from schematrans.values import Const

from conftest import read_fixture


def rows(*tuples):
    return frozenset(tuple(Const(v) for v in t) for t in tuples)


@pytest.fixture()
def vstate(vertical_plan):
    init = Instance({"p": rows((0, 0, 1), (1, 1, 0))})
    return TwinState.initial(vertical_plan, init)


def tx(side, *ops):
    return Transaction(tuple(st.UpdateOp(side, k, r, row) for k, r, row in ops))


def test_initial_state_synced(vstate):
    assert vstate.check_sync()
    assert vstate.epoch == 0


def test_source_insert_propagates(vstate, vertical_plan):
    new = apply_transaction(
        vstate, tx(SOURCE, (INSERT, "p", (Const(1), Const(0), Const(1))))
    )
    assert new.epoch == 1
    assert (Const(1), Const(0)) in new.t_instance.rows("q")
    assert new.check_sync()


def test_source_reject_is_atomic(vstate):
    # (0,0,0) breaks FD b -> c given existing (0,0,1)
    with pytest.raises(ConstraintViolation):
        apply_transaction(vstate, tx(SOURCE, (INSERT, "p", (Const(0), Const(0), Const(0)))))
    assert vstate.epoch == 0 and vstate.check_sync()


def test_target_insert_propagates_back(vstate):
    new = apply_transaction(
        vstate,
        tx(
            TARGET,
            (INSERT, "q", (Const(1), Const(0))),
        ),
    )
    assert (Const(1), Const(0), Const(1)) in new.s_instance.rows("p")
    assert new.epoch == 1 and new.check_sync()


def test_target_unrepresentable_rejected(vertical_plan):
    # strip the q.b = r.b inclusion so a dangling q row passes the target
    # constraints but cannot be expressed by any source instance
    weak = dataclasses.replace(
        vertical_plan, target=Schema(vertical_plan.target.relations, ())
    )
    state = TwinState.initial(weak, Instance({"p": rows((0, 0, 1))}))
    with pytest.raises(NotRepresentable):
        apply_transaction(state, tx(TARGET, (INSERT, "q", (Const(1), Const(1)))))


def test_delete_and_insert_in_one_transaction(vstate):
    new = apply_transaction(
        vstate,
        tx(
            SOURCE,
            (DELETE, "p", (Const(0), Const(0), Const(1))),
            (INSERT, "p", (Const(0), Const(0), Const(0))),
        ),
    )
    assert (Const(0), Const(0), Const(0)) in new.s_instance.rows("p")
    assert new.check_sync() and new.epoch == 1


def test_transaction_must_not_mix_sides():
    with pytest.raises(ValueError):
        Transaction(
            (
                st.UpdateOp(SOURCE, INSERT, "p", ()),
                st.UpdateOp(TARGET, INSERT, "q", ()),
            )
        )


def test_replay_is_deterministic(vstate, vertical_plan):
    txs = dsl.parse_script(
        'begin SOURCE; insert p(1, 0, 1); commit;\n'
        'begin TARGET; insert q(0, 1); insert r(1, 0); commit;\n'
    )
    states = []
    for _ in range(2):
        s = vstate
        for t in txs:
            s = apply_transaction(s, t)
        states.append(s)
    assert states[0] == states[1]


def test_translate_query_both_directions(vstate, vertical_plan):
    q_t = dsl.parse_algebra("pi[a](q)")
    translated = translate_query(q_t, vertical_plan, TARGET)
    assert A.relations_referenced(translated) == {"p"}
    assert evaluate(translated, vstate.s_instance, vertical_plan.source) == evaluate(
        q_t, vstate.t_instance, vertical_plan.target
    )
    q_s = dsl.parse_algebra("pi[a, b](p)")
    translated_s = translate_query(q_s, vertical_plan, SOURCE)
    assert A.relations_referenced(translated_s) <= {"q", "r"}
    assert evaluate(translated_s, vstate.t_instance, vertical_plan.target) == evaluate(
        q_s, vstate.s_instance, vertical_plan.source
    )


def test_fixture_script_outcomes(worked_plan, worked_instance):
    txs = dsl.parse_script(read_fixture("worked_updates.script"))
    assert len(txs) >= 12
    expected = [
        True, True, True, True, False, False, False,  # source side
        True, True, False, True, False, False, False, True, True,  # target side
    ]
    state = TwinState.initial(worked_plan, worked_instance)
    for tx_, want_accept in zip(txs, expected):
        prev = state
        try:
            state = apply_transaction(state, tx_)
            accepted = True
        except st.TransactionRejected:
            accepted = False
        assert accepted == want_accept
        if accepted:
            assert state.epoch == prev.epoch + 1
            assert state.check_sync()
        else:
            assert state == prev
