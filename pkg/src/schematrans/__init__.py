"""Lossless relational schema transformations: pattern compiler, bounded
losslessness verifier, conceptual-schema (CARM) deriver, bidirectional
transducer simulator, and SQL/DOT code generation."""

from . import algebra
from .carm import (
    CarmSchema,
    check_carm_form,
    classify_carm,
    derive_carm,
    export_conceptual_dot,
)
from .dsl import (
    parse_algebra,
    parse_instance,
    parse_plan,
    parse_query_file,
    parse_schema,
    parse_script,
    print_algebra,
    print_constraint,
    print_instance,
    print_mapping,
    print_schema,
)
from .engine import Instance, apply_mapping, evaluate, header, satisfies_all
from .enumeration import DomainSpec, legal_instances
from .errors import (
    ConstraintViolation,
    DanglingForeignKey,
    DomainMissing,
    NotInCarmForm,
    NotRepresentable,
    ParseError,
    PatternError,
    SchemaTransError,
    StepError,
    TransactionRejected,
)
from .losslessness import (
    COUNTEREXAMPLE,
    DOMAIN_MISSING,
    EQUIVALENCE,
    FORWARD_DOMINANCE,
    VERIFIED,
    Counterexample,
    VerificationConfig,
    VerificationReport,
    verify,
    verify_dominance,
    verify_equivalence,
)
from .patterns import (
    AbsorbDecl,
    CompiledTransform,
    EntityDecl,
    HorizontalDecomposition,
    NullElimination,
    OidIntroduction,
    RelationshipDecl,
    RenameAttr,
    VerticalDecomposition,
    apply_step,
    classify_tables,
    compose_plan,
)
from .schema import (
    FD,
    MVD,
    VALUE,
    AlgebraicDisjoint,
    AlgebraicEmpty,
    AlgebraicEq,
    AlgebraicSubset,
    AttributeSpec,
    DomainIn,
    DomainNotIn,
    Inclusion,
    Mapping,
    NotNull,
    OidSort,
    RelationSignature,
    Schema,
    validate_schema,
)
from .sqlgen import emit_sql, expr_sql
from .transducer import (
    DELETE,
    INSERT,
    SOURCE,
    TARGET,
    Transaction,
    TwinState,
    UpdateOp,
    apply_transaction,
    translate_query,
)
from .values import NULL, Const, Oid

__version__ = "0.1.0"
