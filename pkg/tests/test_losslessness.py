"""Bounded losslessness verification."""

import dataclasses

import pytest

from schematrans.enumeration import DomainSpec
from schematrans.losslessness import (
    COUNTEREXAMPLE,
    DOMAIN_MISSING,
    EQUIVALENCE,
    FORWARD_DOMINANCE,
    VERIFIED,
    VerificationConfig,
    verify,
    verify_dominance,
    verify_equivalence,
)
from schematrans.schema import Inclusion, Schema

DOMS = DomainSpec(default=(0, 1))


def cfg(tuples=None, direction=EQUIVALENCE, domains=DOMS):
    return VerificationConfig(
        domains=domains, max_tuples_per_relation=tuples, direction=direction
    )


def test_vertical_equivalence_verified(vertical_plan):
    rep = verify_equivalence(vertical_plan, cfg())
    assert rep.status == VERIFIED
    assert rep.instances_checked == 98  # 49 legal instances per side


def test_vertical_dominance_verified(vertical_plan):
    rep = verify_dominance(vertical_plan, cfg(direction=FORWARD_DOMINANCE))
    assert rep.status == VERIFIED
    assert rep.instances_checked == 49


def test_dropping_inclusion_yields_counterexample(vertical_plan):
    t = vertical_plan
    weakened = Schema(
        t.target.relations,
        tuple(c for c in t.target.constraints if not isinstance(c, Inclusion)),
    )
    broken = dataclasses.replace(t, target=weakened)
    rep = verify_equivalence(broken, cfg())
    assert rep.status == COUNTEREXAMPLE
    assert rep.counterexample is not None
    # the witness lives on the target side: a q/r pair that does not join back
    assert rep.counterexample.direction == "backward"


def test_counterexample_report_renders(vertical_plan):
    t = dataclasses.replace(
        vertical_plan,
        target=Schema(vertical_plan.target.relations, ()),
    )
    rep = verify_equivalence(t, cfg())
    assert "COUNTEREXAMPLE" in rep.render_text()


def test_zero_bound_checks_only_empty(vertical_plan):
    rep = verify_equivalence(vertical_plan, cfg(tuples=0))
    assert rep.status == VERIFIED
    assert rep.instances_checked == 2  # the empty instance on each side


def test_domain_missing_status(vertical_plan):
    rep = verify(vertical_plan, cfg(domains=DomainSpec()))
    assert rep.status == DOMAIN_MISSING


def test_dispatch_respects_direction(vertical_plan):
    rep = verify(vertical_plan, cfg(direction=FORWARD_DOMINANCE))
    assert rep.direction == FORWARD_DOMINANCE
    assert rep.instances_checked == 49


def test_horizontal_equivalence(horizontal_plan):
    doms = DomainSpec(default=(0, 1), per_attr=(("c", ("k", "j")),))
    rep = verify_equivalence(horizontal_plan, cfg(tuples=3, domains=doms))
    assert rep.status == VERIFIED
    assert rep.instances_checked == 90
