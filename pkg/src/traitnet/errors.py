"""Exception hierarchy shared by all traitnet modules.

Everything user-facing derives from TraitnetError. ValidationError and its
subclasses map to CLI exit code 2, NumericError to exit code 3.
"""


class TraitnetError(Exception):
    pass


class ValidationError(TraitnetError):
    pass


class ShapeError(ValidationError):
    pass


class ConfigurationError(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class IntegrityError(ValidationError):
    pass


class SizingError(ValidationError):
    pass


class FormatError(ValidationError):
    pass


class EmptyMediaError(ValidationError):
    pass


class FaceAbsentError(ValidationError):
    pass


class ModalityMissingError(ValidationError):
    pass


class AssemblyError(ValidationError):
    pass


class DatasetError(ValidationError):
    pass


class EvaluationError(ValidationError):
    pass


class ConnectivityError(ValidationError):
    def __init__(self, message, components=None):
        super().__init__(message)
        self.components = components or []


class NumericError(TraitnetError):
    pass


class ProbeError(NumericError):
    pass
