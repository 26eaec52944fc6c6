"""Acceptance criteria. Each test is one numbered criterion; tolerances and
frozen oracle values are stated inline."""

import dataclasses
import time

import pytest

import schematrans as st
from schematrans import dsl
from schematrans.carm import check_carm_form, derive_carm, export_conceptual_dot
from schematrans.engine import Instance, apply_mapping, evaluate, satisfies_all
from schematrans.enumeration import DomainSpec, legal_instances
from schematrans.losslessness import (
    COUNTEREXAMPLE,
    VERIFIED,
    VerificationConfig,
    verify_equivalence,
)
from schematrans.schema import (
    AlgebraicDisjoint,
    AlgebraicEq,
    Schema,
)
from schematrans.transducer import (
    SOURCE,
    TARGET,
    TwinState,
    apply_transaction,
    translate_query,
)

from conftest import fixture_path, load_schema, read_fixture, read_golden

DOMS01 = DomainSpec(default=(0, 1))


def cfg(tuples=None, domains=DOMS01):
    return VerificationConfig(domains=domains, max_tuples_per_relation=tuples)


# --- 1. vertical-decomposition losslessness ------------------------------------


def test_criterion_1_vertical_losslessness(vertical_plan):
    t0 = time.monotonic()
    count = sum(1 for _ in legal_instances(vertical_plan.source, DOMS01, None))
    assert count == 49
    report = verify_equivalence(vertical_plan, cfg())
    assert report.status == VERIFIED
    assert report.instances_checked == 98  # 49 forward + 49 backward
    assert time.monotonic() - t0 < 5.0


# --- 2. horizontal-decomposition losslessness ----------------------------------


H_DOMS = DomainSpec(default=(0, 1), per_attr=(("c", ("k", "j")),))


def test_criterion_2_horizontal_losslessness(horizontal_plan):
    t0 = time.monotonic()
    report = verify_equivalence(horizontal_plan, cfg(tuples=3, domains=H_DOMS))
    assert report.status == VERIFIED
    assert report.instances_checked == 90

    # mutation test: drop each of the six U constraints in turn; equivalence
    # must fail at least for the coverage and disjointness constraints
    failed = set()
    for i, dropped in enumerate(horizontal_plan.target.constraints):
        weakened = Schema(
            horizontal_plan.target.relations,
            tuple(c for j, c in enumerate(horizontal_plan.target.constraints) if j != i),
        )
        broken = dataclasses.replace(horizontal_plan, target=weakened)
        rep = verify_equivalence(broken, cfg(tuples=3, domains=H_DOMS))
        if rep.status == COUNTEREXAMPLE:
            failed.add(type(dropped))
    assert AlgebraicEq in failed  # coverage: pi_b q = pi_b r1 UNION pi_b r2
    assert AlgebraicDisjoint in failed  # disjointness: pi_b r1 INTERSECT pi_b r2 = {}
    assert time.monotonic() - t0 < 30.0


# --- 3. composed-plan equivalence ----------------------------------------------


def test_criterion_3_composed_equivalence(vertical_plan, horizontal_plan, composed_plan):
    report = verify_equivalence(composed_plan, cfg(tuples=3, domains=H_DOMS))
    assert report.status == VERIFIED

    # composed-map evaluation equals stepwise evaluation on every instance
    for inst in legal_instances(composed_plan.source, H_DOMS, 3):
        mid = apply_mapping(
            vertical_plan.fwd, inst, vertical_plan.source, vertical_plan.target
        )
        stepwise = apply_mapping(
            horizontal_plan.fwd, mid, horizontal_plan.source, horizontal_plan.target
        )
        composed = apply_mapping(
            composed_plan.fwd, inst, composed_plan.source, composed_plan.target
        )
        assert composed == stepwise


# --- 4. OID-introduction fidelity ----------------------------------------------


def test_criterion_4_oid_fidelity(minioid_plan):
    # golden text: the paper's displayed target schema and six constraints
    assert dsl.print_schema(minioid_plan.target) == read_golden(
        "minioid_target_schema.txt"
    )
    paper_constraints = {
        "fd Employee: ssn -> name;",
        "inclusion2 Employee.eoid <=> Employee.ssn;",
        "inclusion works-in.eoid <= Employee.eoid;",
        "inclusion works-in.doid <= Department.doid;",
        "inclusion2 Department.doid <=> Department.depname;",
        "fd Department: depname -> address;",
    }
    assert {dsl.print_constraint(c) for c in minioid_plan.target.constraints} == (
        paper_constraints
    )
    report = verify_equivalence(minioid_plan, cfg(tuples=3))
    assert report.status == VERIFIED
    assert report.instances_checked == 834


# --- 5. worked-example end-to-end ----------------------------------------------


FIG5_NAMES = [
    "Person", "Person-ssn", "has-name", "has-phone", "Employee",
    "works-in", "Department", "Department-name", "has-address",
]


def test_criterion_5_worked_example(worked_plan, worked_instance):
    assert [r.name for r in worked_plan.target.relations] == FIG5_NAMES
    assert check_carm_form(worked_plan.target) == []
    assert dsl.print_mapping(worked_plan.fwd) == read_golden("worked_fwd.txt")

    # (a) 5-row handcrafted instance with NULL-department rows
    assert satisfies_all(worked_instance, worked_plan.source) is None
    image = apply_mapping(
        worked_plan.fwd, worked_instance, worked_plan.source, worked_plan.target
    )
    back = apply_mapping(
        worked_plan.bwd, image, worked_plan.target, worked_plan.source
    )
    assert back == worked_instance

    # (b) all legal instances with <= 2 tuples over 2-value domains
    report = verify_equivalence(worked_plan, cfg(tuples=2))
    assert report.status == VERIFIED
    assert report.instances_checked == 666


# --- 6. transducer synchronization invariant -----------------------------------


def test_criterion_6_transducer_sync(worked_plan, worked_instance):
    txs = dsl.parse_script(read_fixture("worked_updates.script"))
    assert len(txs) >= 12
    assert {tx.side for tx in txs} == {SOURCE, TARGET}
    state = TwinState.initial(worked_plan, worked_instance)
    accepts = rejects = 0
    for tx in txs:
        prev = state
        try:
            state = apply_transaction(state, tx)
        except st.TransactionRejected:
            rejects += 1
            assert state == prev  # bit-identical state on rejection
            continue
        accepts += 1
        assert state.epoch == prev.epoch + 1  # exactly one propagation
        # t = fwd(s) and s = bwd(t), exactly
        assert state.t_instance == apply_mapping(
            worked_plan.fwd, state.s_instance, worked_plan.source, worked_plan.target
        )
        assert state.s_instance == apply_mapping(
            worked_plan.bwd, state.t_instance, worked_plan.target, worked_plan.source
        )
    assert accepts > 0 and rejects > 0


# --- 7. query translation soundness ---------------------------------------------


def test_criterion_7_query_translation(vertical_plan):
    target_queries = dsl.parse_query_file(read_fixture("queries_vertical_target.alg"))
    source_queries = dsl.parse_query_file(read_fixture("queries_vertical_source.alg"))
    assert len(target_queries) >= 10 and len(source_queries) >= 10

    instances = list(legal_instances(vertical_plan.source, DOMS01, None))
    assert len(instances) == 49
    for s_inst in instances:
        t_inst = apply_mapping(
            vertical_plan.fwd, s_inst, vertical_plan.source, vertical_plan.target
        )
        for q in target_queries:
            translated = translate_query(q, vertical_plan, TARGET)
            assert evaluate(translated, s_inst, vertical_plan.source) == evaluate(
                q, t_inst, vertical_plan.target
            )
        for q in source_queries:
            translated = translate_query(q, vertical_plan, SOURCE)
            assert evaluate(translated, t_inst, vertical_plan.target) == evaluate(
                q, s_inst, vertical_plan.source
            )


# --- 8. determinism ---------------------------------------------------------------


def test_criterion_8_determinism(capsys):
    from schematrans.cli import main

    def run(*argv):
        assert main(list(argv)) == 0
        return capsys.readouterr().out

    plan_args = (
        "plan",
        "--schema", fixture_path("worked.schema"),
        "--plan", fixture_path("worked.plan"),
    )
    sql_args = (
        "emit",
        "--schema", fixture_path("worked.schema"),
        "--plan", fixture_path("worked.plan"),
        "--format", "sql",
    )
    dot_args = (
        "emit",
        "--schema", fixture_path("worked.schema"),
        "--plan", fixture_path("worked.plan"),
        "--format", "dot",
    )
    for args in (plan_args, sql_args, dot_args):
        outputs = [run(*args) for _ in range(3)]
        assert outputs[0] == outputs[1] == outputs[2]
        assert outputs[0]  # non-empty
