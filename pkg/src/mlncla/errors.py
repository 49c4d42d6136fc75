"""Exception hierarchy shared across the package."""


class MLNError(Exception):
    """Base class for all mlncla errors."""


class MLNSyntaxError(MLNError):
    """Malformed model or evidence file. Carries 1-based line/column."""

    def __init__(self, message, line, column):
        super().__init__(f"line {line}, col {column}: {message}")
        self.line = line
        self.column = column


class MLNValidationError(MLNError):
    """Well-formed input that violates a semantic constraint
    (undeclared predicate, arity mismatch, variable type conflict, ...)."""


class GroundingCapError(MLNError):
    """Grounding would exceed the configured clause cap."""

    def __init__(self, formula_text, estimated, cap):
        super().__init__(
            f"grounding of {formula_text!r} would produce ~{estimated} clauses "
            f"(cap {cap}); raise the cap or shrink the domains"
        )
        self.formula_text = formula_text
        self.estimated = estimated
        self.cap = cap


class InferenceError(MLNError):
    """Inference refused or failed (e.g. too many free atoms for exact)."""


class LearningError(MLNError):
    """Weight learning failed (diverging step, non-finite objective, ...)."""


class StructureLearningUnsupported(MLNError):
    """The structure-learning branch was reached but no hook is installed."""


class KnowledgeListError(MLNError):
    """Invalid knowledge-list operation (bad index, formula mismatch, ...)."""


class SerializationError(MLNError):
    """Corrupt or version-incompatible knowledge-list file."""
