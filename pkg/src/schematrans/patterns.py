"""Lossless transformation patterns: each step application yields the target
schema, the constraints of both sides, and the mapping views in both
directions; steps compose into end-to-end bidirectional mappings."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple as Tup

from . import algebra as A
from .engine import validate_mapping
from .errors import (
    AttributeNotNullable,
    AttributePartitionInvalid,
    DanglingForeignKey,
    MissingKey,
    NoJustifyingDependency,
    PatternError,
    StepError,
    UnsupportedCondition,
)
from .schema import (
    VALUE,
    AlgebraicDisjoint,
    AlgebraicEmpty,
    AlgebraicEq,
    AlgebraicSubset,
    AttributeSpec,
    DomainIn,
    DomainNotIn,
    FD,
    Inclusion,
    Mapping,
    MVD,
    NotNull,
    OidSort,
    RelationSignature,
    Schema,
    fd_closure,
    is_oid_sort,
    validate_schema,
)

# --- step declarations -------------------------------------------------------


@dataclass(frozen=True)
class VerticalDecomposition:
    relation: str
    left_attrs: Tup[str, ...]
    right_attrs: Tup[str, ...]
    shared_attrs: Tup[str, ...]
    out_left: str
    out_right: str


@dataclass(frozen=True)
class HorizontalDecomposition:
    relation: str
    condition: object  # atomic predicate
    out_true: str
    out_false: str


@dataclass(frozen=True)
class NullElimination:
    relation: str
    attrs: Tup[str, ...]  # one or more NULLABLE attributes that are null together
    out_without: str
    out_with: str


@dataclass(frozen=True)
class RenameAttr:
    relation: str
    old: str
    new: str


@dataclass(frozen=True)
class EntityDecl:
    name: str
    tag: str
    key_relation: str  # in-place mode: the entity table itself
    key_attr: str
    oid_attr: str
    subtype_of: Optional[str] = None
    id_table: Optional[str] = None  # anchor mode only; None = "<name>-<key_attr>"


@dataclass(frozen=True)
class RelationshipDecl:
    relation: str
    fks: Tup[Tup[str, str], ...]  # (attribute, entity name)
    new_name: Optional[str] = None


@dataclass(frozen=True)
class AbsorbDecl:
    relation: str  # unary relation to drop
    minuend: str  # entity name
    subtrahend: str  # entity name; the relation equals minuend minus subtrahend


@dataclass(frozen=True)
class OidIntroduction:
    """Clauses in declaration order; that order fixes the order of the new
    relations in the target schema (an anchor-mode entity is immediately
    followed by its identification table)."""

    clauses: Tup[object, ...]  # EntityDecl | RelationshipDecl | AbsorbDecl

    @property
    def entities(self) -> Tup[EntityDecl, ...]:
        return tuple(c for c in self.clauses if isinstance(c, EntityDecl))

    @property
    def relationships(self) -> Tup[RelationshipDecl, ...]:
        return tuple(c for c in self.clauses if isinstance(c, RelationshipDecl))

    @property
    def absorbs(self) -> Tup[AbsorbDecl, ...]:
        return tuple(c for c in self.clauses if isinstance(c, AbsorbDecl))


TransformStep = object  # union of the classes above


@dataclass(frozen=True)
class CompiledTransform:
    source: Schema
    target: Schema
    fwd: Mapping  # target relations over the source alphabet
    bwd: Mapping  # source relations over the target alphabet
    provenance: Tup[TransformStep, ...] = ()

    def swapped(self) -> "CompiledTransform":
        return CompiledTransform(self.target, self.source, self.bwd, self.fwd, self.provenance)


# --- helpers -------------------------------------------------------------------


def _identity_views(schema: Schema, exclude=()) -> list:
    return [(r.name, A.RelationRef(r.name)) for r in schema.relations if r.name not in exclude]


def _constraint_mentions(c, rel: str) -> bool:
    from .enumeration import constraint_relations

    return rel in constraint_relations(c)


def _subst_algebraic(c, views: dict):
    if isinstance(c, AlgebraicEq):
        return AlgebraicEq(A.substitute_relations(c.lhs, views), A.substitute_relations(c.rhs, views))
    if isinstance(c, AlgebraicSubset):
        return AlgebraicSubset(A.substitute_relations(c.lhs, views), A.substitute_relations(c.rhs, views))
    if isinstance(c, AlgebraicDisjoint):
        return AlgebraicDisjoint(A.substitute_relations(c.lhs, views), A.substitute_relations(c.rhs, views))
    if isinstance(c, AlgebraicEmpty):
        return AlgebraicEmpty(A.substitute_relations(c.expr, views))
    raise TypeError(c)


def _is_algebraic(c) -> bool:
    return isinstance(c, (AlgebraicEq, AlgebraicSubset, AlgebraicDisjoint, AlgebraicEmpty))


def _fresh_check(schema: Schema, names) -> None:
    for n in names:
        if schema.has_relation(n):
            raise PatternError(f"output relation name {n} already exists")


def _make_transform(source, target, fwd_views, bwd_views, step) -> CompiledTransform:
    fwd = Mapping(tuple(fwd_views))
    bwd = Mapping(tuple(bwd_views))
    t = CompiledTransform(source, target, fwd, bwd, (step,))
    diags = validate_schema(target)
    diags += validate_mapping(source, target, fwd)
    diags += validate_mapping(target, source, bwd)
    if diags:
        raise PatternError("; ".join(diags))
    return t


# --- vertical decomposition ----------------------------------------------------


def _justifies_vertical(schema: Schema, step: VerticalDecomposition) -> bool:
    shared = set(step.shared_attrs)
    left_rest = set(step.left_attrs) - shared
    right_rest = set(step.right_attrs) - shared
    closure = fd_closure(schema, step.relation, shared)
    if left_rest <= closure or right_rest <= closure:
        return True
    for c in schema.constraints:
        if isinstance(c, MVD) and c.relation == step.relation and set(c.lhs) <= shared:
            if set(c.rhs) - shared in (left_rest, right_rest):
                return True
    return False


def apply_vertical(schema: Schema, step: VerticalDecomposition) -> CompiledTransform:
    rel = schema.relation(step.relation)
    all_attrs = set(rel.attr_names())
    left, right, shared = set(step.left_attrs), set(step.right_attrs), set(step.shared_attrs)
    if left | right != all_attrs or shared != left & right:
        raise AttributePartitionInvalid(
            f"{step.relation}: left {sorted(left)} / right {sorted(right)} / shared {sorted(shared)}"
        )
    for a in step.shared_attrs:
        if rel.attr(a).nullable:
            raise AttributePartitionInvalid(
                f"{step.relation}.{a}: shared attribute may not be NULLABLE"
            )
    if not _justifies_vertical(schema, step):
        raise NoJustifyingDependency(
            f"no FD/MVD/key justifies splitting {step.relation} on {sorted(shared)}"
        )
    _fresh_check(schema, [step.out_left, step.out_right])

    def specs(names):
        return tuple(rel.attr(a) for a in names)

    out_left = RelationSignature(step.out_left, specs(step.left_attrs))
    out_right = RelationSignature(step.out_right, specs(step.right_attrs))
    relations = tuple(
        r for r in schema.relations if r.name != step.relation
    ) + (out_left, out_right)

    base = A.RelationRef(step.relation)
    fwd_views = _identity_views(schema, exclude={step.relation}) + [
        (step.out_left, A.Project(tuple(step.left_attrs), base)),
        (step.out_right, A.Project(tuple(step.right_attrs), base)),
    ]
    join = A.NaturalJoin(A.RelationRef(step.out_left), A.RelationRef(step.out_right))
    if list(out_left.attr_names()) + [
        a for a in out_right.attr_names() if a not in out_left.attr_names()
    ] != list(rel.attr_names()):
        join = A.Project(rel.attr_names(), join)
    bwd_subst = {step.relation: join}
    bwd_views = _identity_views(schema, exclude={step.relation}) + [(step.relation, join)]

    # every FD on the split relation distributes over the fragments that
    # contain its lhs; on the reconstructing join the fragment FDs chain
    # through the shared attributes, so an original FD is preserved exactly
    # when its rhs lies in the closure of its lhs under all fragment FDs
    fragment_fds = []
    for c in schema.constraints:
        if isinstance(c, FD) and c.relation == step.relation:
            for side_name, side_attrs in ((step.out_left, left), (step.out_right, right)):
                if not set(c.lhs) <= side_attrs:
                    continue
                rhs_part = tuple(a for a in c.rhs if a in side_attrs and a not in c.lhs)
                if rhs_part:
                    fragment_fds.append(FD(side_name, c.lhs, rhs_part))

    def _fragment_closure(attrs):
        closure = set(attrs)
        changed = True
        while changed:
            changed = False
            for f in fragment_fds:
                if set(f.lhs) <= closure and not set(f.rhs) <= closure:
                    closure |= set(f.rhs)
                    changed = True
        return closure

    constraints = []
    emitted_fragment_fds = set()
    for c in schema.constraints:
        if not _constraint_mentions(c, step.relation):
            constraints.append(c)
            continue
        if isinstance(c, FD):
            if not set(c.rhs) <= _fragment_closure(c.lhs):
                raise PatternError(f"dependency {c} spans both fragments")
            for side_name, side_attrs in ((step.out_left, left), (step.out_right, right)):
                if not set(c.lhs) <= side_attrs:
                    continue
                rhs_part = tuple(a for a in c.rhs if a in side_attrs and a not in c.lhs)
                f = FD(side_name, c.lhs, rhs_part)
                if rhs_part and f not in emitted_fragment_fds:
                    constraints.append(f)
                    emitted_fragment_fds.add(f)
        elif isinstance(c, MVD):
            attrs = set(c.lhs) | set(c.rhs)
            placed = False
            for side_name, side_attrs in ((step.out_left, left), (step.out_right, right)):
                if attrs <= side_attrs:
                    constraints.append(MVD(side_name, c.lhs, c.rhs))
                    placed = True
            if not placed:
                raise PatternError(f"dependency {c} spans both fragments")
        elif isinstance(c, NotNull):
            for side_name, side_attrs in ((step.out_left, left), (step.out_right, right)):
                if c.attr in side_attrs:
                    constraints.append(NotNull(side_name, c.attr))
        elif isinstance(c, (DomainIn, DomainNotIn)):
            for side_name, side_attrs in ((step.out_left, left), (step.out_right, right)):
                if c.attr in side_attrs:
                    constraints.append(type(c)(side_name, c.attr, c.constants))
        elif isinstance(c, Inclusion):
            def retarget(rel_name, attrs):
                if rel_name != step.relation:
                    return rel_name
                if set(attrs) <= left:
                    return step.out_left
                if set(attrs) <= right:
                    return step.out_right
                raise PatternError(f"inclusion endpoint {attrs} spans both fragments")

            constraints.append(
                Inclusion(
                    retarget(c.from_relation, c.from_attrs),
                    c.from_attrs,
                    retarget(c.to_relation, c.to_attrs),
                    c.to_attrs,
                    c.bidirectional,
                )
            )
        elif _is_algebraic(c):
            # an emptiness assertion over a selection of the split relation
            # follows the fragment holding all the predicate's attributes
            # (a selection is empty iff its projection is)
            retargeted = None
            if (
                isinstance(c, AlgebraicEmpty)
                and isinstance(c.expr, A.Select)
                and isinstance(c.expr.expr, A.RelationRef)
                and c.expr.expr.name == step.relation
            ):
                p_attrs = set(A.pred_attrs(c.expr.predicate))
                for side_name, side_attrs in ((step.out_left, left), (step.out_right, right)):
                    if p_attrs <= side_attrs:
                        retargeted = AlgebraicEmpty(
                            A.Select(c.expr.predicate, A.RelationRef(side_name))
                        )
                        break
            constraints.append(retargeted or _subst_algebraic(c, bwd_subst))
        else:
            raise PatternError(f"cannot propagate constraint {c}")
    if step.shared_attrs:
        constraints.append(
            Inclusion(step.out_left, tuple(step.shared_attrs), step.out_right, tuple(step.shared_attrs), True)
        )
    else:
        constraints.append(
            AlgebraicEq(
                A.Project((), A.RelationRef(step.out_left)),
                A.Project((), A.RelationRef(step.out_right)),
            )
        )

    target = Schema(relations, tuple(constraints))
    return _make_transform(schema, target, fwd_views, bwd_views, step)


# --- horizontal decomposition ----------------------------------------------------


_ATOMS = (A.PTrue, A.PFalse, A.AttrEqConst, A.AttrNeqConst, A.IsNull, A.IsNotNull)


def _branch_constraints(rel_name: str, cond) -> list:
    if isinstance(cond, A.AttrEqConst):
        return [DomainIn(rel_name, cond.attr, (cond.const,))]
    if isinstance(cond, A.AttrNeqConst):
        return [DomainNotIn(rel_name, cond.attr, (cond.const,))]
    if isinstance(cond, A.IsNotNull):
        return [NotNull(rel_name, cond.attr)]
    if isinstance(cond, (A.PTrue,)):
        return []
    # generalized conditions become algebraic assertions on the branch
    return [AlgebraicEmpty(A.Select(A.negate_atom(cond), A.RelationRef(rel_name)))]


def apply_horizontal(schema: Schema, step: HorizontalDecomposition) -> CompiledTransform:
    rel = schema.relation(step.relation)
    cond = step.condition
    if not isinstance(cond, _ATOMS):
        raise UnsupportedCondition(f"condition must be an atomic predicate, got {cond!r}")
    neg = A.negate_atom(cond)
    for a in A.pred_attrs(cond):
        if not rel.has_attr(a):
            raise UnsupportedCondition(f"{step.relation} has no attribute {a}")
        if rel.attr(a).nullable and not isinstance(cond, (A.IsNull, A.IsNotNull)):
            raise UnsupportedCondition(
                f"{step.relation}.{a} is NULLABLE; apply NULL-elimination first"
            )
    _fresh_check(schema, [step.out_true, step.out_false])

    out_true = RelationSignature(step.out_true, rel.attributes)
    out_false = RelationSignature(step.out_false, rel.attributes)
    relations = tuple(r for r in schema.relations if r.name != step.relation) + (
        out_true,
        out_false,
    )

    base = A.RelationRef(step.relation)
    fwd_views = _identity_views(schema, exclude={step.relation}) + [
        (step.out_true, A.Select(cond, base)),
        (step.out_false, A.Select(neg, base)),
    ]
    union = A.Union(A.RelationRef(step.out_true), A.RelationRef(step.out_false))
    bwd_views = _identity_views(schema, exclude={step.relation}) + [(step.relation, union)]
    bwd_subst = {step.relation: union}

    constraints = []
    for c in schema.constraints:
        if not _constraint_mentions(c, step.relation):
            constraints.append(c)
            continue
        if isinstance(c, (FD, MVD)):
            constraints.append(type(c)(step.out_true, c.lhs, c.rhs))
            constraints.append(type(c)(step.out_false, c.lhs, c.rhs))
        elif isinstance(c, (DomainIn, DomainNotIn)):
            constraints.append(type(c)(step.out_true, c.attr, c.constants))
            constraints.append(type(c)(step.out_false, c.attr, c.constants))
        elif isinstance(c, NotNull):
            constraints.append(NotNull(step.out_true, c.attr))
            constraints.append(NotNull(step.out_false, c.attr))
        elif isinstance(c, Inclusion):
            constraints.extend(_split_inclusion(c, step.relation, step.out_true, step.out_false))
        elif _is_algebraic(c):
            constraints.append(_subst_algebraic(c, bwd_subst))
        else:
            raise PatternError(f"cannot propagate constraint {c}")
    constraints.extend(_branch_constraints(step.out_true, cond))
    constraints.extend(_branch_constraints(step.out_false, neg))
    # the key-projection coverage and disjointness pair is added once per
    # inclusion endpoint by _split_inclusion; add the generic branch
    # disjointness only for non-trivial conditions (TRUE makes one branch empty)
    target = Schema(relations, tuple(constraints))
    return _make_transform(schema, target, fwd_views, bwd_views, step)


def _split_inclusion(c: Inclusion, rel: str, out_true: str, out_false: str) -> list:
    """Image of an inclusion dependency touching the horizontally decomposed
    relation: the untouched side is equated with (or contained in) the union
    of the branch projections, and the branch projections are disjoint."""

    def proj(rel_name, attrs):
        return A.Project(tuple(attrs), A.RelationRef(rel_name))

    out = []
    if c.to_relation == rel and c.from_relation != rel:
        union = A.Union(proj(out_true, c.to_attrs), proj(out_false, c.to_attrs))
        kind = AlgebraicEq if c.bidirectional else AlgebraicSubset
        out.append(kind(proj(c.from_relation, c.from_attrs), union))
        out.append(AlgebraicDisjoint(proj(out_true, c.to_attrs), proj(out_false, c.to_attrs)))
    elif c.from_relation == rel and c.to_relation != rel:
        union = A.Union(proj(out_true, c.from_attrs), proj(out_false, c.from_attrs))
        kind = AlgebraicEq if c.bidirectional else AlgebraicSubset
        out.append(kind(union, proj(c.to_relation, c.to_attrs)) if not c.bidirectional else AlgebraicEq(proj(c.to_relation, c.to_attrs), union))
        out.append(AlgebraicDisjoint(proj(out_true, c.from_attrs), proj(out_false, c.from_attrs)))
    else:
        raise PatternError(f"inclusion {c} relates the decomposed relation to itself")
    return out


# --- NULL elimination -------------------------------------------------------------


def _null_together_patterns(rel: str, first: str, other: str):
    """The two emptiness assertions declaring that `first` and `other` are
    NULL on exactly the same rows of `rel`."""
    base = A.RelationRef(rel)
    return (
        AlgebraicEmpty(A.Select(A.And((A.IsNull(first), A.IsNotNull(other))), base)),
        AlgebraicEmpty(A.Select(A.And((A.IsNotNull(first), A.IsNull(other))), base)),
    )


def apply_null_elimination(schema: Schema, step: NullElimination) -> CompiledTransform:
    rel = schema.relation(step.relation)
    if not step.attrs:
        raise AttributeNotNullable("no attributes given")
    for a in step.attrs:
        if not rel.has_attr(a):
            raise AttributeNotNullable(f"{step.relation} has no attribute {a}")
        if not rel.attr(a).nullable:
            raise AttributeNotNullable(f"{step.relation}.{a} is not NULLABLE")
    first = step.attrs[0]
    consumed = set()
    for other in step.attrs[1:]:
        pats = _null_together_patterns(step.relation, first, other)
        for p in pats:
            if p not in schema.constraints:
                raise PatternError(
                    f"attributes {first} and {other} of {step.relation} are not declared "
                    f"NULL-together (missing {p})"
                )
            consumed.add(p)
    _fresh_check(schema, [step.out_without, step.out_with])

    gone = set(step.attrs)
    rest_attrs = tuple(a for a in rel.attributes if a.name not in gone)
    out_without = RelationSignature(step.out_without, rest_attrs)
    out_with = RelationSignature(
        step.out_with,
        tuple(
            AttributeSpec(a.name, a.sort, False, a.enum_domain) if a.name in gone else a
            for a in rel.attributes
        ),
    )
    relations = tuple(r for r in schema.relations if r.name != step.relation) + (
        out_without,
        out_with,
    )

    base = A.RelationRef(step.relation)
    rest_names = tuple(a.name for a in rest_attrs)
    fwd_views = _identity_views(schema, exclude={step.relation}) + [
        (step.out_without, A.Project(rest_names, A.Select(A.IsNull(first), base))),
        (step.out_with, A.Select(A.IsNotNull(first), base)),
    ]
    padded = A.ExtendNull(A.RelationRef(step.out_without), tuple(step.attrs))
    # ExtendNull appends at the end; restore the original column order
    if rest_names + tuple(step.attrs) != rel.attr_names():
        padded = A.Project(rel.attr_names(), padded)
    union = A.Union(padded, A.RelationRef(step.out_with))
    bwd_views = _identity_views(schema, exclude={step.relation}) + [(step.relation, union)]
    bwd_subst = {step.relation: union}

    rest_set = set(rest_names)
    constraints = []
    for c in schema.constraints:
        if c in consumed:
            continue
        if not _constraint_mentions(c, step.relation):
            constraints.append(c)
            continue
        if isinstance(c, (FD, MVD)):
            attrs = set(c.lhs) | set(c.rhs)
            if attrs <= rest_set:
                constraints.append(type(c)(step.out_without, c.lhs, c.rhs))
            constraints.append(type(c)(step.out_with, c.lhs, c.rhs))
        elif isinstance(c, (DomainIn, DomainNotIn)):
            if c.attr in rest_set:
                constraints.append(type(c)(step.out_without, c.attr, c.constants))
            constraints.append(type(c)(step.out_with, c.attr, c.constants))
        elif isinstance(c, NotNull):
            if c.attr in rest_set:
                constraints.append(NotNull(step.out_without, c.attr))
            constraints.append(NotNull(step.out_with, c.attr))
        elif isinstance(c, Inclusion):
            endpoints = []
            if c.from_relation == step.relation:
                endpoints.append(set(c.from_attrs))
            if c.to_relation == step.relation:
                endpoints.append(set(c.to_attrs))
            if any(ep & gone for ep in endpoints):
                raise PatternError(f"inclusion {c} references an eliminated attribute")
            constraints.extend(
                _split_inclusion(c, step.relation, step.out_without, step.out_with)
            )
        elif _is_algebraic(c):
            constraints.append(_subst_algebraic(c, bwd_subst))
        else:
            raise PatternError(f"cannot propagate constraint {c}")

    target = Schema(relations, tuple(constraints))
    return _make_transform(schema, target, fwd_views, bwd_views, step)


# --- attribute rename ----------------------------------------------------------------


def apply_rename_attr(schema: Schema, step: RenameAttr) -> CompiledTransform:
    rel = schema.relation(step.relation)
    if not rel.has_attr(step.old):
        raise PatternError(f"{step.relation} has no attribute {step.old}")
    if rel.has_attr(step.new):
        raise PatternError(f"{step.relation} already has attribute {step.new}")
    new_rel = RelationSignature(
        rel.name,
        tuple(
            AttributeSpec(step.new, a.sort, a.nullable, a.enum_domain)
            if a.name == step.old
            else a
            for a in rel.attributes
        ),
    )
    relations = tuple(new_rel if r.name == rel.name else r for r in schema.relations)
    ren = {step.old: step.new}
    back = {step.new: step.old}
    fwd_views = _identity_views(schema, exclude={rel.name}) + [
        (rel.name, A.Rename(((step.old, step.new),), A.RelationRef(rel.name)))
    ]
    bwd_views = _identity_views(schema, exclude={rel.name}) + [
        (rel.name, A.Rename(((step.new, step.old),), A.RelationRef(rel.name)))
    ]
    constraints = [_rename_constraint_attrs(c, rel.name, ren) for c in schema.constraints]
    target = Schema(relations, tuple(constraints))
    return _make_transform(schema, target, fwd_views, bwd_views, step)


def _rename_constraint_attrs(c, rel: str, ren: dict):
    def rn(attrs):
        return tuple(ren.get(a, a) for a in attrs)

    if isinstance(c, (FD, MVD)) and c.relation == rel:
        return type(c)(rel, rn(c.lhs), rn(c.rhs))
    if isinstance(c, Inclusion):
        fa = rn(c.from_attrs) if c.from_relation == rel else c.from_attrs
        ta = rn(c.to_attrs) if c.to_relation == rel else c.to_attrs
        return Inclusion(c.from_relation, fa, c.to_relation, ta, c.bidirectional)
    if isinstance(c, (DomainIn, DomainNotIn)) and c.relation == rel:
        return type(c)(rel, ren.get(c.attr, c.attr), c.constants)
    if isinstance(c, NotNull) and c.relation == rel:
        return NotNull(rel, ren.get(c.attr, c.attr))
    if _is_algebraic(c):
        sub = {rel: A.Rename(tuple((n, o) for o, n in ren.items()), A.RelationRef(rel))}
        return _subst_algebraic(c, sub)
    return c


# --- OID introduction ----------------------------------------------------------------
#
# Two usage styles share one step type.  When an entity declaration names an
# existing relation as its own key relation, that table simply gains the OID
# attribute in front (5NF style).  Otherwise the entity is a fresh anchor:
# a unary OID relation plus an identification table pairing the OID with the
# natural key, both derived from the declared key column.


def _clauses(step: OidIntroduction):
    return tuple(step.entities) + tuple(step.relationships) + tuple(step.absorbs)


def _entity_by_name(step: OidIntroduction, name: str) -> EntityDecl:
    for e in step.entities:
        if e.name == name:
            return e
    raise DanglingForeignKey(f"no entity named {name}")


def _is_inplace(schema: Schema, e: EntityDecl) -> bool:
    return e.name == e.key_relation and schema.has_relation(e.name)


def _id_table_name(e: EntityDecl) -> str:
    return e.id_table or f"{e.name}-{e.key_attr}"


def _recovery_table(schema: Schema, step: OidIntroduction, e: EntityDecl) -> str:
    """Relation joining the entity's OID back to its natural key."""
    while e.subtype_of is not None:
        e = _entity_by_name(step, e.subtype_of)
    if _is_inplace(schema, e):
        return e.name
    return _id_table_name(e)


def _product_pair_idiom(base, key: str, out_first: str, out_second: str):
    k1, k2 = f"{key}_1", f"{key}_2"
    left = A.Rename(((key, k1),), A.Project((key,), base))
    right = A.Rename(((key, k2),), A.Project((key,), base))
    return A.Rename(
        ((k1, out_first), (k2, out_second)),
        A.Select(A.AttrEqAttr(k1, k2), A.Product(left, right)),
    )


def apply_oid_introduction(schema: Schema, step: OidIntroduction) -> CompiledTransform:
    touched = set()  # pre-OID relations consumed by the step
    rewires = {}  # pre-OID relation -> {attr: (oid_attr, OidSort)}
    renames = {}  # pre-OID relation -> post-OID name
    new_sigs = {}
    fwd_views = {}
    bwd_views = {}
    added_constraints = []

    for e in step.entities:
        if not schema.has_relation(e.key_relation):
            raise MissingKey(f"entity {e.name}: key relation {e.key_relation} does not exist")
        key_rel = schema.relation(e.key_relation)
        if not key_rel.has_attr(e.key_attr):
            raise MissingKey(f"entity {e.name}: {e.key_relation} has no attribute {e.key_attr}")
        closure = fd_closure(schema, e.key_relation, {e.key_attr})
        if not set(key_rel.attr_names()) <= closure:
            raise MissingKey(
                f"entity {e.name}: {e.key_attr} is not a declared key of {e.key_relation}"
            )
        if is_oid_sort(key_rel.attr(e.key_attr).sort):
            raise MissingKey(f"entity {e.name}: key attribute is already an OID")
        sort = OidSort(e.tag)
        base = A.RelationRef(e.key_relation)
        if _is_inplace(schema, e):
            touched.add(e.name)
            renames[e.name] = e.name
            rewires.setdefault(e.name, {})
            new_sigs[e.name] = RelationSignature(
                e.name,
                (AttributeSpec(e.oid_attr, sort, False),) + key_rel.attributes,
            )
            k1 = f"{e.key_attr}_1"
            fwd_views[e.name] = A.Rename(
                ((k1, e.oid_attr),),
                A.Select(
                    A.AttrEqAttr(k1, e.key_attr),
                    A.Product(A.Rename(((e.key_attr, k1),), A.Project((e.key_attr,), base)), base),
                ),
            )
            bwd_views[e.name] = A.Project(key_rel.attr_names(), A.RelationRef(e.name))
            added_constraints.append(
                Inclusion(e.name, (e.oid_attr,), e.name, (e.key_attr,), True)
            )
        else:
            _fresh_check(schema, [e.name])
            new_sigs[e.name] = RelationSignature(
                e.name, (AttributeSpec(e.oid_attr, sort, False),)
            )
            fwd_views[e.name] = A.Rename(
                ((e.key_attr, e.oid_attr),), A.Project((e.key_attr,), base)
            )
            if e.subtype_of is not None:
                sup = _entity_by_name(step, e.subtype_of)
                added_constraints.append(
                    Inclusion(e.name, (e.oid_attr,), sup.name, (sup.oid_attr,), False)
                )
            else:
                idn = _id_table_name(e)
                _fresh_check(schema, [idn])
                new_sigs[idn] = RelationSignature(
                    idn,
                    (
                        AttributeSpec(e.oid_attr, sort, False),
                        AttributeSpec(e.key_attr, VALUE, False),
                    ),
                )
                fwd_views[idn] = _product_pair_idiom(base, e.key_attr, e.oid_attr, e.key_attr)
                added_constraints.append(FD(idn, (e.oid_attr,), (e.key_attr,)))
                added_constraints.append(FD(idn, (e.key_attr,), (e.oid_attr,)))
                added_constraints.append(Inclusion(idn, (e.oid_attr,), idn, (e.key_attr,), True))
                added_constraints.append(Inclusion(idn, (e.oid_attr,), e.name, (e.oid_attr,), True))

    for r in step.relationships:
        if not schema.has_relation(r.relation):
            raise DanglingForeignKey(f"relationship {r.relation} does not exist")
        sig = schema.relation(r.relation)
        new_name = r.new_name or r.relation
        if new_name != r.relation:
            _fresh_check(schema, [new_name])
        touched.add(r.relation)
        renames[r.relation] = new_name
        rw = {}
        pairs = []
        for attr, entity_name in r.fks:
            if not sig.has_attr(attr):
                raise DanglingForeignKey(f"{r.relation} has no attribute {attr}")
            ent = _entity_by_name(step, entity_name)
            if sig.attr(attr).nullable:
                raise DanglingForeignKey(f"{r.relation}.{attr}: rewired attribute may not be NULLABLE")
            rw[attr] = (ent.oid_attr, OidSort(ent.tag), ent)
            pairs.append((attr, ent.oid_attr))
        if len({oid for oid, _, _ in rw.values()}) != len(rw):
            raise DanglingForeignKey(f"{r.relation}: two foreign keys rewire to the same OID attribute")
        rewires[r.relation] = rw
        new_sigs[new_name] = RelationSignature(
            new_name,
            tuple(
                AttributeSpec(rw[a.name][0], rw[a.name][1], a.nullable, None)
                if a.name in rw
                else a
                for a in sig.attributes
            ),
        )
        fwd_views[new_name] = A.Rename(tuple(pairs), A.RelationRef(r.relation))
        # recover natural keys by joining through the identification tables
        expr = A.RelationRef(new_name)
        out_names = []
        post_rename = []
        for a in sig.attributes:
            if a.name in rw:
                _, _, ent = rw[a.name]
                root = ent
                while root.subtype_of is not None:
                    root = _entity_by_name(step, root.subtype_of)
                expr = A.NaturalJoin(expr, A.RelationRef(_recovery_table(schema, step, ent)))
                out_names.append(root.key_attr)
                if root.key_attr != a.name:
                    post_rename.append((root.key_attr, a.name))
            else:
                out_names.append(a.name)
        bwd = A.Project(tuple(out_names), expr)
        if post_rename:
            bwd = A.Rename(tuple(post_rename), bwd)
        bwd_views[r.relation] = bwd

    absorbed = set()
    for ab in step.absorbs:
        if not schema.has_relation(ab.relation):
            raise PatternError(f"absorb: relation {ab.relation} does not exist")
        sig = schema.relation(ab.relation)
        minuend = _entity_by_name(step, ab.minuend)
        subtrahend = _entity_by_name(step, ab.subtrahend)
        if minuend.oid_attr != subtrahend.oid_attr:
            raise PatternError("absorb: entities must share an OID attribute name")
        if len(sig.attributes) != 1:
            raise PatternError(f"absorb: {ab.relation} must be unary")
        root = minuend
        while root.subtype_of is not None:
            root = _entity_by_name(step, root.subtype_of)
        touched.add(ab.relation)
        absorbed.add(ab.relation)
        diff = A.Diff(A.RelationRef(minuend.name), A.RelationRef(subtrahend.name))
        bwd = A.Project(
            (root.key_attr,),
            A.NaturalJoin(diff, A.RelationRef(_recovery_table(schema, step, root))),
        )
        if sig.attributes[0].name != root.key_attr:
            bwd = A.Rename(((root.key_attr, sig.attributes[0].name),), bwd)
        bwd_views[ab.relation] = bwd

    # anchor coverage: the anchor equals the (rewired) key column of the
    # relation it was derived from
    for e in step.entities:
        if _is_inplace(schema, e):
            continue
        src_rel = renames.get(e.key_relation, e.key_relation)
        rw = rewires.get(e.key_relation, {})
        col = rw[e.key_attr][0] if e.key_attr in rw else e.key_attr
        if e.key_attr not in rw:
            raise DanglingForeignKey(
                f"entity {e.name}: key column {e.key_relation}.{e.key_attr} is not "
                f"rewired into the OID sort"
            )
        added_constraints.append(Inclusion(e.name, (e.oid_attr,), src_rel, (col,), True))

    # untouched relations pass through
    relations = []
    for r in schema.relations:
        if r.name not in touched:
            relations.append(r)
            fwd_views[r.name] = A.RelationRef(r.name)
            bwd_views[r.name] = A.RelationRef(r.name)
    for clause in step.clauses:
        if isinstance(clause, EntityDecl):
            relations.append(new_sigs[clause.name])
            if not _is_inplace(schema, clause) and clause.subtype_of is None:
                relations.append(new_sigs[_id_table_name(clause)])
        elif isinstance(clause, RelationshipDecl):
            relations.append(new_sigs[clause.new_name or clause.relation])

    # image the old constraints
    bwd_subst = dict(bwd_views.items())
    constraints = []
    from .enumeration import constraint_relations

    for c in schema.constraints:
        mentioned = constraint_relations(c)
        if mentioned & absorbed:
            continue
        if not (mentioned & touched):
            constraints.append(c)
            continue
        constraints.append(_image_constraint_oid(c, schema, step, renames, rewires, bwd_subst))
    constraints = [c for c in constraints if c is not None] + added_constraints

    target = Schema(tuple(relations), tuple(constraints))
    fwd = [(r.name, fwd_views[r.name]) for r in target.relations]
    bwd = [(r.name, bwd_views[r.name]) for r in schema.relations]
    return _make_transform(schema, target, fwd, bwd, step)


def _image_constraint_oid(c, schema, step, renames, rewires, bwd_subst):
    def new_rel(name):
        return renames.get(name, name)

    def new_attrs(rel, attrs):
        rw = rewires.get(rel, {})
        return tuple(rw[a][0] if a in rw else a for a in attrs)

    if isinstance(c, (FD, MVD)):
        return type(c)(new_rel(c.relation), new_attrs(c.relation, c.lhs), new_attrs(c.relation, c.rhs))
    if isinstance(c, (DomainIn, DomainNotIn)):
        rw = rewires.get(c.relation, {})
        if c.attr in rw:
            raise PatternError(f"domain constraint {c} on a rewired foreign-key attribute")
        return type(c)(new_rel(c.relation), c.attr, c.constants)
    if isinstance(c, NotNull):
        return NotNull(new_rel(c.relation), new_attrs(c.relation, (c.attr,))[0])
    if isinstance(c, Inclusion):
        # a foreign key whose source column is rewired is duplicated onto the
        # OID attributes: its target becomes the entity's OID column
        fa = list(c.from_attrs)
        ta = list(c.to_attrs)
        from_rw = rewires.get(c.from_relation, {})
        to_rw = rewires.get(c.to_relation, {})
        for i, (f, t) in enumerate(zip(fa, ta)):
            f_re = f in from_rw
            t_re = t in to_rw
            if f_re and t_re:
                fa[i], ta[i] = from_rw[f][0], to_rw[t][0]
            elif f_re:
                ent = from_rw[f][2]
                if ent.key_attr != t:
                    raise DanglingForeignKey(f"inclusion {c} does not end at the key of {ent.name}")
                fa[i] = from_rw[f][0]
                ta[i] = ent.oid_attr
                return Inclusion(new_rel(c.from_relation), tuple(fa), ent.name, tuple(ta), c.bidirectional)
            elif t_re:
                ent = to_rw[t][2]
                if ent.key_attr != f:
                    raise DanglingForeignKey(f"inclusion {c} does not start at the key of {ent.name}")
                ta[i] = to_rw[t][0]
                fa[i] = ent.oid_attr
                return Inclusion(ent.name, tuple(fa), new_rel(c.to_relation), tuple(ta), c.bidirectional)
        return Inclusion(new_rel(c.from_relation), tuple(fa), new_rel(c.to_relation), tuple(ta), c.bidirectional)
    if _is_algebraic(c):
        return _subst_algebraic(c, bwd_subst)
    raise PatternError(f"cannot propagate constraint {c}")


# --- table classification --------------------------------------------------------


@dataclass(frozen=True)
class Classification:
    entities: Tup[str, ...]
    relationships: Tup[str, ...]
    undecided: Tup[str, ...]


def classify_tables(schema: Schema) -> Classification:
    """Rule-of-thumb suggestion: a relationship candidate sources a foreign
    key; an entity candidate is the target of a foreign key from a
    relationship candidate.  Tables matching both or neither are undecided."""
    fks = [c for c in schema.constraints if isinstance(c, Inclusion)]
    rel_cand = {c.from_relation for c in fks}
    ent_cand = {c.to_relation for c in fks if c.from_relation in rel_cand}
    names = schema.relation_names()
    entities = tuple(n for n in names if n in ent_cand and n not in rel_cand)
    relationships = tuple(n for n in names if n in rel_cand and n not in ent_cand)
    undecided = tuple(n for n in names if n not in entities and n not in relationships)
    return Classification(entities, relationships, undecided)


# --- plan composition --------------------------------------------------------------


def apply_step(schema: Schema, step) -> CompiledTransform:
    if isinstance(step, VerticalDecomposition):
        return apply_vertical(schema, step)
    if isinstance(step, HorizontalDecomposition):
        return apply_horizontal(schema, step)
    if isinstance(step, NullElimination):
        return apply_null_elimination(schema, step)
    if isinstance(step, RenameAttr):
        return apply_rename_attr(schema, step)
    if isinstance(step, OidIntroduction):
        return apply_oid_introduction(schema, step)
    raise TypeError(f"not a transform step: {step!r}")


def compose_plan(source: Schema, steps) -> CompiledTransform:
    """Apply steps in order; the composed forward views unfold each step's
    views through its predecessors, and symmetrically for the backward views."""
    current = source
    fwd_total = {r.name: A.RelationRef(r.name) for r in source.relations}
    bwd_total = {r.name: A.RelationRef(r.name) for r in source.relations}
    provenance = []
    for i, step in enumerate(steps):
        try:
            t = apply_step(current, step)
        except PatternError as exc:
            raise StepError(i, exc) from exc
        step_fwd = t.fwd.as_dict()
        step_bwd = t.bwd.as_dict()
        fwd_total = {
            name: A.substitute_relations(expr, fwd_total) for name, expr in step_fwd.items()
        }
        bwd_total = {
            name: A.substitute_relations(expr, step_bwd) for name, expr in bwd_total.items()
        }
        current = t.target
        provenance.append(step)
    fwd = Mapping(tuple((r.name, fwd_total[r.name]) for r in current.relations))
    bwd = Mapping(tuple((r.name, bwd_total[r.name]) for r in source.relations))
    return CompiledTransform(source, current, fwd, bwd, tuple(provenance))
