"""Exception hierarchy for pc-net operations."""


class PcNetError(Exception):
    """Base class for every domain error raised by this package."""


class ParseError(PcNetError):
    """Malformed pc-net text."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class SchemaError(PcNetError):
    """Well-formed JSON that does not describe a pc-net."""


class InvalidNet(PcNetError):
    """An operation requiring a valid net was given one with validation errors."""

    def __init__(self, report):
        self.report = report
        errors = [i for i in report.issues if i.severity == "error"]
        lines = "; ".join(f"{i.location}: {i.message}" for i in errors[:5])
        super().__init__(f"{len(errors)} validation error(s): {lines}")


class UnknownConcept(PcNetError, KeyError):
    pass


class UnknownFeature(PcNetError, KeyError):
    pass


class UnknownAction(PcNetError, KeyError):
    pass


class NotASubconcept(PcNetError):
    pass


class ZeroPriorAncestor(PcNetError):
    pass


class NotInternal(PcNetError):
    pass


class ChildDiagramMissing(PcNetError):
    pass


class FeatureSetMismatch(PcNetError):
    pass


class CoverInvalid(PcNetError):
    pass


class NotInCover(PcNetError):
    pass


class LeafNotSpecializable(PcNetError):
    pass


class NotSiblingComplete(PcNetError):
    pass


class CoverSpaceTooLarge(PcNetError):
    pass


class DiagramMissing(PcNetError):
    pass


class EvidenceError(PcNetError):
    """Evidence that cannot be applied to a model."""


class UnobservedFeatureInEvidence(EvidenceError):
    pass


class UnknownState(EvidenceError):
    pass


class EvidenceImpossible(EvidenceError):
    pass


class JointTooLarge(PcNetError):
    pass


class InitInvalid(PcNetError):
    pass


# KeyError.__str__ wraps the message in quotes; keep the plain message.
for _cls in (UnknownConcept, UnknownFeature, UnknownAction):
    _cls.__str__ = Exception.__str__
del _cls
