"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: UsageError -> 1, ParameterError and
ConstructionError -> 2, DataFormatError -> 3, BoundFailure -> 4.
"""


class CodehomError(Exception):
    """Base class for all package errors."""


class UsageError(CodehomError):
    """Caller misuse: dimension mismatch, wrong operand field, bad arity."""


class ParameterError(CodehomError):
    """Invalid or inconsistent parameter combination."""


class DataFormatError(CodehomError):
    """Malformed or mismatched serialized data."""


class ConstructionError(CodehomError):
    """A randomized construction exhausted its retry budget."""


class BoundFailure(CodehomError):
    """An empirical error bound was violated (selftest outcome)."""
