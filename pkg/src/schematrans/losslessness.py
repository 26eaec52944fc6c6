"""Bounded-exhaustive verification of dominance and equivalence.

verify_dominance enumerates every legal source instance within the configured
bounds and checks (a) the forward image is legal in the target schema and
(b) the backward view applied to the image recovers the original instance.
verify_equivalence additionally enumerates legal *target* instances directly
(not images), which is exactly what catches surjectivity failures.

The certificate is only as strong as the bounds; the report carries them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple as Tup

from .engine import Instance, apply_mapping, satisfies_all
from .enumeration import DomainSpec, legal_instances
from .errors import DomainMissing
from .patterns import CompiledTransform

FORWARD_DOMINANCE = "FORWARD_DOMINANCE"
EQUIVALENCE = "EQUIVALENCE"

VERIFIED = "VERIFIED"
COUNTEREXAMPLE = "COUNTEREXAMPLE"
DOMAIN_MISSING = "DOMAIN_MISSING"


@dataclass(frozen=True)
class VerificationConfig:
    domains: DomainSpec
    max_tuples_per_relation: Optional[int] = None
    direction: str = EQUIVALENCE

    def __post_init__(self):
        if self.max_tuples_per_relation is not None and self.max_tuples_per_relation < 0:
            raise ValueError("max_tuples_per_relation must be >= 0")
        if self.direction not in (FORWARD_DOMINANCE, EQUIVALENCE):
            raise ValueError(f"unknown direction {self.direction!r}")


@dataclass(frozen=True)
class Counterexample:
    direction: str  # which dominance check failed
    source_instance: Instance
    image_instance: Optional[Instance]
    roundtrip_instance: Optional[Instance]
    violated: object  # a constraint object, or the string "round-trip"


@dataclass(frozen=True)
class VerificationReport:
    status: str
    instances_checked: int
    direction: str
    max_tuples_per_relation: Optional[int]
    counterexample: Optional[Counterexample] = None
    detail: str = ""

    def render_text(self) -> str:
        lines = [
            f"status: {self.status}",
            f"direction: {self.direction}",
            f"instances_checked: {self.instances_checked}",
            "bound: "
            + (
                "unbounded"
                if self.max_tuples_per_relation is None
                else f"<= {self.max_tuples_per_relation} tuples/relation"
            ),
        ]
        if self.detail:
            lines.append(f"detail: {self.detail}")
        ce = self.counterexample
        if ce is not None:
            lines.append(f"counterexample ({ce.direction}):")
            lines.append(f"  instance: {_render_instance(ce.source_instance)}")
            if ce.image_instance is not None:
                lines.append(f"  image: {_render_instance(ce.image_instance)}")
            if ce.roundtrip_instance is not None:
                lines.append(f"  round-trip: {_render_instance(ce.roundtrip_instance)}")
            lines.append(f"  violated: {ce.violated}")
        return "\n".join(lines)


def _render_instance(inst: Instance) -> str:
    from .values import format_value, value_sort_key

    parts = []
    for name in sorted(inst.rels):
        rows = sorted(inst.rels[name], key=lambda r: tuple(value_sort_key(v) for v in r))
        for row in rows:
            parts.append(f"{name}({', '.join(format_value(v) for v in row)})")
    return "{" + "; ".join(parts) + "}"


def _check_direction(t: CompiledTransform, cfg: VerificationConfig, label: str):
    """One dominance pass: every legal t.source instance must map to a legal
    t.target instance and come back unchanged.  Returns (count, counterexample)."""
    count = 0
    for inst in legal_instances(t.source, cfg.domains, cfg.max_tuples_per_relation):
        count += 1
        image = apply_mapping(t.fwd, inst, t.source, t.target)
        violated = satisfies_all(image, t.target)
        if violated is not None:
            return count, Counterexample(label, inst, image, None, violated)
        back = apply_mapping(t.bwd, image, t.target, t.source)
        if back != inst:
            return count, Counterexample(label, inst, image, back, "round-trip")
    return count, None


def verify_dominance(t: CompiledTransform, cfg: VerificationConfig) -> VerificationReport:
    try:
        count, ce = _check_direction(t, cfg, "forward")
    except DomainMissing as exc:
        return VerificationReport(
            DOMAIN_MISSING, 0, FORWARD_DOMINANCE, cfg.max_tuples_per_relation, None, str(exc)
        )
    status = VERIFIED if ce is None else COUNTEREXAMPLE
    return VerificationReport(status, count, FORWARD_DOMINANCE, cfg.max_tuples_per_relation, ce)


def verify_equivalence(t: CompiledTransform, cfg: VerificationConfig) -> VerificationReport:
    try:
        fwd_count, ce = _check_direction(t, cfg, "forward")
        if ce is None:
            bwd_count, ce = _check_direction(t.swapped(), cfg, "backward")
        else:
            bwd_count = 0
    except DomainMissing as exc:
        return VerificationReport(
            DOMAIN_MISSING, 0, EQUIVALENCE, cfg.max_tuples_per_relation, None, str(exc)
        )
    status = VERIFIED if ce is None else COUNTEREXAMPLE
    return VerificationReport(
        status, fwd_count + bwd_count, EQUIVALENCE, cfg.max_tuples_per_relation, ce
    )


def verify(t: CompiledTransform, cfg: VerificationConfig) -> VerificationReport:
    if cfg.direction == FORWARD_DOMINANCE:
        return verify_dominance(t, cfg)
    return verify_equivalence(t, cfg)
