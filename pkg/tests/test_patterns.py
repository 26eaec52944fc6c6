"""Transformation patterns and plan composition."""

import pytest

import schematrans as st
from schematrans import algebra as A
from schematrans import dsl
from schematrans.errors import PatternError, StepError
from schematrans.patterns import (
    VerticalDecomposition,
    classify_tables,
    compose_plan,
)
from schematrans.schema import FD, Inclusion

from conftest import load_schema, read_fixture


def test_vertical_produces_paper_t(vertical_plan):
    t = vertical_plan
    assert [r.name for r in t.target.relations] == ["q", "r"]
    assert FD("r", ("b",), ("c",)) in t.target.constraints
    assert Inclusion("q", ("b",), "r", ("b",), True) in t.target.constraints
    assert dsl.print_mapping(t.fwd) == "q = pi[a, b](p);\nr = pi[b, c](p);\n"
    assert dsl.print_mapping(t.bwd) == "p = join(q, r);\n"


def test_vertical_requires_justifying_dependency():
    s = load_schema("vertical_s.schema")
    bad = VerticalDecomposition("p", ("a", "c"), ("a", "b"), ("a",), "x", "y")
    with pytest.raises(PatternError):
        st.apply_step(s, bad)


def test_horizontal_produces_six_u_constraints(horizontal_plan):
    printed = sorted(dsl.print_constraint(c) for c in horizontal_plan.target.constraints)
    assert printed == sorted(
        [
            "fd r1: b -> c;",
            "fd r2: b -> c;",
            'domain_in r1.c in {"k"};',
            'domain_not_in r2.c in {"k"};',
            "assert_eq pi[b](q) == union(pi[b](r1), pi[b](r2));",
            "assert_disjoint pi[b](r1), pi[b](r2);",
        ]
    )


def test_horizontal_bwd_is_union(horizontal_plan):
    assert dsl.print_algebra(horizontal_plan.bwd.view("r")) == "union(r1, r2)"


def test_null_elim_fragments(worked_plan):
    # after null_elim, nodep0/wdep0 exist mid-plan; check the composed views
    fwd = worked_plan.fwd.as_dict()
    emp = dsl.print_algebra(A.normalize(fwd["Employee"]))
    assert emp == "rho[ssn/poid](pi[ssn](sigma[depname is not null](Source)))"


def test_oid_classification():
    mini = load_schema("minioid.schema")
    cls = classify_tables(mini)
    assert set(cls.entities) == {"Employee", "Department"}
    assert set(cls.relationships) == {"works-in"}


def test_step_error_carries_index():
    s = load_schema("vertical_s.schema")
    steps = dsl.parse_plan(read_fixture("vertical.plan"))
    bad = steps + (VerticalDecomposition("q", ("a",), ("b",), (), "x", "y"),)
    with pytest.raises(StepError) as exc:
        compose_plan(s, bad)
    assert exc.value.index == 1


def test_composed_views_substituted(composed_plan):
    # views of the composed plan mention only source relations
    for _, e in composed_plan.fwd.views:
        assert A.relations_referenced(e) == {"p"}
    for _, e in composed_plan.bwd.views:
        assert A.relations_referenced(e) <= {"q", "r1", "r2"}


def test_empty_plan_is_identity():
    s = load_schema("vertical_s.schema")
    t = compose_plan(s, ())
    assert t.target == s
    assert dsl.print_mapping(t.fwd) == "p = p;\n"
