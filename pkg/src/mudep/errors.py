"""Exception hierarchy shared by all mudep modules."""


class MudepError(Exception):
    """Base class for all mudep errors."""


class UnknownType(MudepError):
    """A type name was used that is not present in the registry."""


class ConformanceError(MudepError):
    """A value does not match the shape required by its type."""


class LoadError(MudepError):
    """A manifest function could not be resolved by the backend."""

    def __init__(self, symbol: str, detail: str = ""):
        self.symbol = symbol
        super().__init__(f"cannot resolve function {symbol!r}" + (f": {detail}" if detail else ""))


class SchemaError(MudepError):
    """A declarative input document failed validation."""

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{message}" + (f" (at {location})" if location else ""))


class PathTypeError(MudepError):
    """A field path does not exist in the function's type tree."""


class IRValidationError(MudepError):
    """An app IR document references undeclared locals, types, or callees."""


class StageError(MudepError):
    """A pipeline stage failed or was run against stale upstream artifacts."""
