"""Exception hierarchy shared across the toolkit."""


class Hmm2tcError(Exception):
    """Base class for all toolkit errors."""


class DataError(Hmm2tcError):
    """Invalid input data or violated contract (dimensions, labels, splits)."""


class FormatError(DataError):
    """Malformed file content (WAV header, feature file, model file, manifest)."""


class NumericError(Hmm2tcError):
    """Numerical failure: unstable analysis frame, no admissible state path."""
