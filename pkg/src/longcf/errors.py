"""Exception hierarchy.

Every error raised by the package derives from :class:`LongcfError`. The
subclasses are grouped by how the command line maps them to exit codes:
:class:`ConfigError` is a usage problem, :class:`InfeasibleConstraints` means
the search space is empty, everything else is a data problem.
"""


class LongcfError(Exception):
    """Base class for all package errors."""


class ConfigError(LongcfError):
    """Invalid run configuration or argument."""


class DataError(LongcfError):
    """Input data does not satisfy its declared contract."""


class MissingFile(DataError):
    def __init__(self, path):
        super().__init__(f"file not found: {path}")
        self.path = str(path)


class MalformedDocument(DataError):
    def __init__(self, field, reason):
        super().__init__(f"malformed document at {field!r}: {reason}")
        self.field = field


class DuplicateFeatureName(DataError):
    def __init__(self, name):
        super().__init__(f"duplicate feature name: {name!r}")
        self.name = name


class EmptyLevelList(DataError):
    def __init__(self, name):
        super().__init__(f"categorical feature {name!r} needs at least 2 distinct levels")
        self.name = name


class MissingColumn(DataError):
    def __init__(self, name):
        super().__init__(f"missing column: {name!r}")
        self.name = name


class MissingValue(DataError):
    def __init__(self, row, feature):
        super().__init__(f"row {row}: empty value for {feature!r}")
        self.row, self.feature = row, feature


class UnknownLevel(DataError):
    def __init__(self, row, feature, value):
        super().__init__(f"row {row}: unknown level {value!r} for {feature!r}")
        self.row, self.feature, self.value = row, feature, value


class NonFiniteValue(DataError):
    def __init__(self, row, feature):
        super().__init__(f"row {row}: non-finite or unparsable value for {feature!r}")
        self.row, self.feature = row, feature


class BadLabel(DataError):
    def __init__(self, row):
        super().__init__(f"row {row}: label must be 0 or 1")
        self.row = row


class RowCountMismatch(DataError):
    def __init__(self, n1, n2):
        super().__init__(f"time points have different row counts: {n1} vs {n2}")
        self.n1, self.n2 = n1, n2


class AlignmentError(DataError):
    def __init__(self, row, id1, id2):
        super().__init__(f"row {row}: id {id1!r} at time 1 but {id2!r} at time 2")
        self.row = row


class SchemaMismatch(DataError):
    """A vector, row or model does not conform to the schema it is used with."""


class EmptyInput(DataError):
    """An aggregate was requested over nothing."""


class STooLarge(DataError):
    def __init__(self, s, n):
        super().__init__(f"index-set size s={s} exceeds the {n} observed changes")
        self.s, self.n = s, n


class NoLabels(DataError):
    """Training requires a labeled dataset."""


class DegenerateLabels(DataError):
    """Training labels contain a single class."""


class TooFewParents(LongcfError):
    """Crossover needs at least two parents."""


class InfeasibleConstraints(LongcfError):
    """No candidate can satisfy the structural search constraints."""
