"""Exception hierarchy shared across the toolkit."""


class ReczillaError(Exception):
    """Base class for all toolkit errors."""


class ParseError(ReczillaError):
    """A line of an input file could not be parsed."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class EmptyDatasetError(ReczillaError):
    """The input contains no interactions."""


class UnsupportedSchemeError(ReczillaError):
    """The requested split scheme cannot be applied to this dataset."""


class InfeasibleError(ReczillaError):
    """The requested synthetic dataset parameters are unsatisfiable."""


class FitError(ReczillaError):
    """Training failed (invalid hyperparameters, singular system, ...)."""


class FitTimeoutError(ReczillaError):
    """Training exceeded its time budget.

    ``partial_progress`` is True when some work completed before the budget
    ran out (e.g. a few SGD epochs).
    """

    def __init__(self, message, partial_progress=False):
        super().__init__(message)
        self.partial_progress = partial_progress


class ResourceLimitError(ReczillaError):
    """A configured resource cap (e.g. dense-solve item cap) was exceeded."""


class MetricError(ReczillaError):
    """A metric could not be computed for the given context."""


class UnknownMetricError(MetricError):
    """The metric name does not parse; carries the list of valid bases."""

    def __init__(self, name, valid_bases):
        super().__init__(
            f"unknown metric {name!r}; valid bases: {', '.join(valid_bases)}"
        )
        self.name = name
        self.valid_bases = list(valid_bases)


class SchemaError(ReczillaError):
    """A persisted file carries an unexpected schema version."""

    def __init__(self, expected, found):
        super().__init__(f"schema mismatch: expected {expected!r}, found {found!r}")
        self.expected = expected
        self.found = found
