"""Exception hierarchy shared by all modules."""


class SchemaTransError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(SchemaTransError):
    """Raised by the DSL front end; carries line/column information."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        loc = ""
        if line is not None:
            loc = f"{line}:{column if column is not None else '?'}: "
        super().__init__(f"{loc}{message}")


class HeaderError(SchemaTransError):
    """Base for algebra header computation failures."""


class UnknownRelation(HeaderError):
    pass


class UnknownAttribute(HeaderError):
    pass


class HeaderClash(HeaderError):
    pass


class HeaderMismatch(HeaderError):
    pass


class DomainMissing(SchemaTransError):
    """An attribute has no finite domain for enumeration."""


class MissingView(SchemaTransError):
    """A query references a relation for which the mapping has no view."""


class PatternError(SchemaTransError):
    """Base for transformation-step failures."""


class NoJustifyingDependency(PatternError):
    pass


class AttributePartitionInvalid(PatternError):
    pass


class UnsupportedCondition(PatternError):
    pass


class AttributeNotNullable(PatternError):
    pass


class MissingKey(PatternError):
    pass


class DanglingForeignKey(PatternError):
    pass


class StepError(PatternError):
    """Wraps a pattern error with the failing step's index in a plan."""

    def __init__(self, index, cause):
        self.index = index
        self.cause = cause
        super().__init__(f"step {index}: {cause}")


class NotInCarmForm(SchemaTransError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


class TransactionRejected(SchemaTransError):
    """Base for transducer rejections; state is left unchanged."""


class ConstraintViolation(TransactionRejected):
    def __init__(self, side, constraint, witness=None):
        self.side = side
        self.constraint = constraint
        self.witness = witness
        super().__init__(f"{side}: constraint violated: {constraint}")


class NotRepresentable(TransactionRejected):
    def __init__(self, witness=None):
        self.witness = witness
        super().__init__(f"target update not representable in source (witness: {witness})")


class UnsupportedConstraintForDialect(SchemaTransError):
    pass
