"""Exception types shared across the package."""


class KinetreeError(Exception):
    """Base class for all package-specific errors."""


class SchemaError(KinetreeError):
    """Input data violates a structural contract (ids, lengths, fields)."""


class ShapeError(KinetreeError):
    """Tensor or matrix shapes are inconsistent."""


class LimitError(KinetreeError):
    """A joint value lies outside its limits."""


class ConfigError(KinetreeError):
    """A configuration value or file is invalid."""


class EmptyPartError(KinetreeError):
    """An operation received a part with no points."""


class DataError(KinetreeError):
    """A dataset record or checkpoint is corrupt."""


class VersionError(KinetreeError):
    """A persisted artifact has an unsupported format version."""


class StructuralError(KinetreeError):
    """A pipeline invariant was violated (signals an upstream bug)."""
