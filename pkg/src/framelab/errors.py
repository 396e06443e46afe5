"""Exception taxonomy shared by all framelab modules.

Each class maps to a distinct CLI exit code (see :mod:`framelab.cli`).
"""


class FramelabError(Exception):
    """Base class for all package errors."""


class DomainError(FramelabError):
    """A coordinate point lies outside the chart domain."""


class GeometryError(FramelabError):
    """A flow step left the fundamental domain and no identification applies."""


class ArgumentError(FramelabError, ValueError):
    """An argument violates an operation precondition."""


class CapabilityError(FramelabError):
    """The requested quantity is undefined for this model (e.g. no complex
    structure, wrong fiber degree, odd-dimension chirality)."""


class ConfigurationError(FramelabError):
    """A model configuration is unusable (e.g. pathological sampling)."""


class TruncationError(FramelabError):
    """A Fourier truncation cannot represent the requested object exactly."""


class ModelError(FramelabError):
    """An assembled operator violates its contract (e.g. not positive)."""


class DegreeError(FramelabError):
    """A form-degree is out of range for the requested operation."""


class SchemaError(FramelabError):
    """An experiment configuration failed schema validation."""
