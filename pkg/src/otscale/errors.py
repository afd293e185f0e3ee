"""Exception hierarchy shared by every otscale module."""


class OTScaleError(Exception):
    """Base class for all errors raised by otscale."""


class DomainError(OTScaleError, ValueError):
    """An argument lies outside the domain of a divergence."""


class DimensionError(OTScaleError, ValueError):
    """Array shapes do not agree."""


class UnderflowError(OTScaleError, ArithmeticError):
    """A kernel entry exp(-lambda * C_ij) rounded to zero."""


class NumericalError(OTScaleError, ArithmeticError):
    """A scaling update produced a nonpositive or non-finite quantity.

    Attributes
    ----------
    index : int or None
        Row/column index (in ``[0, 2n)``) being updated, when known.
    value : float or None
        The offending value.
    update : int or None
        Update counter of the solver run, filled in by :func:`otscale.solve`.
    """

    def __init__(self, message, index=None, value=None, update=None):
        super().__init__(message)
        self.index = index
        self.value = value
        self.update = update

    def __str__(self):
        parts = [self.args[0]]
        if self.update is not None:
            parts.append(f"update={self.update}")
        if self.index is not None:
            parts.append(f"index={self.index}")
        if self.value is not None:
            parts.append(f"value={self.value!r}")
        return " | ".join(str(p) for p in parts)


class DegenerateError(OTScaleError, ValueError):
    """Sampling was requested from an all-zero violation vector (already converged)."""


class FormatError(OTScaleError, ValueError):
    """An input file does not follow the expected binary layout."""
