"""Typed errors shared by the library, the HTTP service and the CLI.

Each error carries a stable ``kind`` string so the service can map it to an
HTTP status and the CLI can map it to an exit code without matching on
message text.
"""


class OpbayesError(Exception):
    """Base class for all toolkit errors."""

    kind = "Error"


class MalformedManifest(OpbayesError):
    """A manifest or histogram-store record does not match the schema."""

    kind = "MalformedManifest"


class DuplicateId(OpbayesError):
    """Two samples in one dataset share an id."""

    kind = "DuplicateId"


class UnknownLabel(OpbayesError):
    """A record's label is neither ``malware`` nor ``benign``."""

    kind = "UnknownLabel"


class MissingFile(OpbayesError):
    """A referenced input file does not exist."""

    kind = "MissingFile"


class EmptyClass(OpbayesError):
    """An operation needs at least one sample of a class and got none."""

    kind = "EmptyClass"


class DimensionMismatch(OpbayesError):
    """A vector's length does not match the model's feature count."""

    kind = "DimensionMismatch"


class EmptyTestSet(OpbayesError):
    """An evaluation was asked to score zero samples."""

    kind = "EmptyTestSet"


class DegenerateSplit(OpbayesError):
    """A train/test split would leave a class empty on one side."""

    kind = "DegenerateSplit"


class InvalidConfig(OpbayesError):
    """A configuration value is outside its allowed domain."""

    kind = "InvalidConfig"


class ModelFormatError(OpbayesError):
    """A model file fails schema or invariant checks."""

    kind = "ModelFormatError"
