"""CARM form checking, classification, derivation, DOT export."""

import pytest

from schematrans import dsl
from schematrans.carm import (
    ANCHOR,
    ATTRIBUTE_FACT,
    IDENTIFICATION,
    RELATIONSHIP_FACT,
    check_carm_form,
    classify_carm,
    derive_carm,
)
from schematrans.errors import NotInCarmForm
from schematrans.schema import (
    FD,
    AttributeSpec,
    OidSort,
    RelationSignature,
    Schema,
)

from conftest import load_schema, read_fixture, read_golden

FIG5_NAMES = [
    "Person",
    "Person-ssn",
    "has-name",
    "has-phone",
    "Employee",
    "works-in",
    "Department",
    "Department-name",
    "has-address",
]


def worked_carm():
    return derive_carm(
        load_schema("worked.schema"), dsl.parse_plan(read_fixture("worked.plan"))
    )


def test_worked_example_is_carm(worked_plan):
    assert check_carm_form(worked_plan.target) == []


def test_worked_relation_names(worked_plan):
    assert [r.name for r in worked_plan.target.relations] == FIG5_NAMES


def test_partition():
    carm, _ = worked_carm()
    assert set(carm.anchors) == {"Person", "Employee", "Department"}
    assert set(carm.identification_tables) == {"Person-ssn", "Department-name"}
    assert set(carm.attribute_facts) == {"has-name", "has-phone", "has-address"}
    assert set(carm.relationship_facts) == {"works-in"}
    assert carm.partition_of("Person") == ANCHOR
    assert carm.partition_of("Person-ssn") == IDENTIFICATION
    assert carm.partition_of("has-name") == ATTRIBUTE_FACT
    assert carm.partition_of("works-in") == RELATIONSHIP_FACT


def test_two_value_attrs_diagnosed():
    # post-OID Employee(eoid,ssn,name) still needs a vertical split to 6NF
    s = Schema(
        (
            RelationSignature(
                "Employee",
                (
                    AttributeSpec("eoid", OidSort("E")),
                    AttributeSpec("ssn"),
                    AttributeSpec("name"),
                ),
            ),
        ),
        (FD("Employee", ("eoid",), ("ssn", "name")),),
    )
    diags = check_carm_form(s)
    assert any("Employee" in d for d in diags)


def test_nullable_attribute_diagnosed():
    s = Schema(
        (
            RelationSignature(
                "f",
                (AttributeSpec("x", OidSort("E")), AttributeSpec("v", nullable=True)),
            ),
        )
    )
    assert check_carm_form(s)


def test_derive_carm_rejects_non_carm_plan():
    s = load_schema("vertical_s.schema")
    with pytest.raises(NotInCarmForm):
        derive_carm(s, dsl.parse_plan(read_fixture("vertical.plan")))


def test_classify_carm_matches_derive(worked_plan):
    carm = classify_carm(worked_plan.target)
    derived, _ = worked_carm()
    assert carm.anchors == derived.anchors
    assert carm.relationship_facts == derived.relationship_facts


def test_dot_golden():
    from schematrans.carm import export_conceptual_dot

    carm, _ = worked_carm()
    assert export_conceptual_dot(carm) == read_golden("worked_conceptual.dot")


def test_dot_mentions_structure():
    dot = read_golden("worked_conceptual.dot")
    for name in ("Person", "Employee", "Department", "works-in", "isa"):
        assert name in dot
