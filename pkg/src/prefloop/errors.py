"""Exception hierarchy shared by all prefloop modules."""


class PrefloopError(Exception):
    """Base class for every error raised by this package."""


# -- repository ----------------------------------------------------------


class ParseError(PrefloopError):
    """A repository document could not be parsed."""


class ValidationError(PrefloopError):
    """A document parsed but violates a structural invariant."""


class UnknownFeatureError(PrefloopError):
    """Feature id not present in the repository."""


class UnknownValueError(PrefloopError):
    """Value id not declared for the given feature."""


class KindMismatchError(PrefloopError):
    """Operation applied to a feature of the wrong kind."""


class DomainError(PrefloopError):
    """Numeric argument outside its documented domain."""


# -- model adapters ------------------------------------------------------


class ExtractionFormatError(PrefloopError):
    """Extraction reply unusable even after the single repair pass."""


class IllegalValueError(PrefloopError):
    """Extraction produced a value the repository does not declare."""

    def __init__(self, feature_id: str, value: str = ""):
        self.feature_id = feature_id
        self.value = value
        detail = f" (got {value!r})" if value else ""
        super().__init__(f"illegal value for feature {feature_id!r}{detail}")


class NotMockImageError(PrefloopError):
    """Mock extraction asked to read an image without an embedded profile."""


class BackendUnreachableError(PrefloopError):
    """A model backend failed after the configured retry."""


# -- preference engine ---------------------------------------------------


class EmptyGroupError(PrefloopError):
    """Effect size requested for an empty liked or disliked group."""


class InsufficientDataError(PrefloopError):
    """Cumulative statistic requested before any weighted data arrived."""


# -- sampling ------------------------------------------------------------


class EmptyDomainError(PrefloopError):
    """Roulette sampling over an empty value set."""


# -- prompt assembly -----------------------------------------------------


class AssemblyFormatError(PrefloopError):
    """Prompt-assembly model reply unusable after the repair attempt."""


class HardConstraintViolationError(PrefloopError):
    """Assembled positive prompt dropped the initial prompt's subject."""


# -- session / config / storage ------------------------------------------


class ConfigError(PrefloopError):
    """Invalid configuration value or combination."""


class WrongPhaseError(PrefloopError):
    """Session operation invoked outside its legal phase."""


class UnknownImageError(PrefloopError):
    """Annotation refers to an image id not in the current candidates."""


class RoundLimitReachedError(PrefloopError):
    """Session hit its configured round cap."""


class StoreError(PrefloopError):
    """Session store could not read or write."""


class SessionNotFoundError(PrefloopError):
    """No session with the requested id."""


class SchemaVersionMismatchError(PrefloopError):
    """Persisted document uses an unsupported schema version."""
