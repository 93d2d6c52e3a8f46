"""Exception types shared across the package."""


class MuxembedError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(MuxembedError):
    """An edge or node references a type that the schema does not declare."""


class EdgeFileError(MuxembedError):
    """An input file row could not be parsed."""


class NodeReferenceError(MuxembedError):
    """A file row references a node that does not exist in the graph."""


class SplitInfeasibleError(MuxembedError):
    """An edge type is too small (or too dense) to produce the requested split."""


class WalkConfigError(MuxembedError):
    """Walk generation was requested without a usable meta-path schema."""


class AttributeMissingError(MuxembedError):
    """Inductive-mode operation on a node type without attribute vectors."""


class MetricUndefinedError(MuxembedError):
    """A metric was requested on an empty score list."""


class EvaluationError(MuxembedError):
    """Evaluation references a node without an embedding."""


class NumericAbortError(MuxembedError):
    """Training produced a non-finite loss; carries diagnostic detail."""


class ConfigError(MuxembedError):
    """A run configuration is invalid or inconsistent with its inputs."""
