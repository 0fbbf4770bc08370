"""Exception hierarchy.

Every toolkit error derives from :class:`AeropipeError` and carries the exit
code the command-line front end reports for it: 1 for validation problems in
plans or data, 2 for unreadable or corrupt files.
"""


class AeropipeError(Exception):
    exit_code = 1


class ValidationError(AeropipeError):
    exit_code = 1


class FormatError(AeropipeError):
    """A file exists but its contents cannot be decoded."""

    exit_code = 2


# core-mesh
class DegenerateElement(ValidationError):
    pass


class InvertedElement(ValidationError):
    pass


class InvalidMesh(ValidationError):
    pass


# io
class MalformedCase(FormatError):
    pass


class UnsupportedVariable(FormatError):
    pass


class UnsupportedElement(FormatError):
    pass


class UnsupportedIdMode(FormatError):
    pass


class CorruptVariableFile(FormatError):
    pass


class CorruptContainer(FormatError):
    pass


class UnsupportedVersion(FormatError):
    pass


class IncompleteMaterial(ValidationError):
    pass


class CorruptTrace(FormatError):
    pass


# config
class ParseError(ValidationError):
    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class UnknownElementError(ValidationError):
    """Strict-mode rejection of an XML element or attribute."""


class CyclicPipeline(ValidationError):
    pass


class UnknownFilter(ValidationError):
    pass


class IncompletePlan(ValidationError):
    pass


class UnknownRegion(ValidationError):
    pass


class UnknownDamping(ValidationError):
    pass


class UnknownMaterial(ValidationError):
    pass


# filters
class ShapeError(ValidationError):
    pass


class InsufficientSteps(ValidationError):
    pass


class FilterError(AeropipeError):
    """Wraps an error raised while executing a pipeline filter."""

    def __init__(self, filter_id, cause):
        super().__init__(f"filter '{filter_id}': {cause}")
        self.filter_id = filter_id
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 2 if isinstance(cause, OSError) else 1)


# solver
class UnassignedElement(ValidationError):
    pass


class InterfaceMismatch(ValidationError):
    pass


class MissingSource(ValidationError):
    pass


class LinearSolveFailure(AeropipeError):
    pass


class UnknownNode(ValidationError):
    pass


# postproc
class InsufficientSamples(ValidationError):
    pass
