"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
failures onto its documented exit statuses without a lookup table.
"""


class DensityError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class DataError(DensityError):
    """Malformed or insufficient input data."""

    exit_code = 3


class NumericError(DensityError):
    """A numerical procedure failed or diverged."""

    exit_code = 4


class FilterEmpty(DataError):
    """No base function survives the include/exclude tag filters."""


class RetryExhausted(NumericError):
    """A resampling loop hit its retry bound."""


class DegeneratePdf(NumericError):
    """Normalization constant is zero, subnormal or non-finite."""


class LowAcceptance(NumericError):
    """Rejection sampler acceptance rate fell below the allowed floor."""


class InsufficientPoints(DataError):
    """Fewer non-identical neighbours than requested.

    Parameters
    ----------
    needed : int
        The requested neighbour count ``k``.
    available : int
        The smallest number of usable neighbours over all queries.
    """

    def __init__(self, needed, available):
        self.needed = needed
        self.available = available
        super().__init__(
            f"need {needed} non-identical neighbours, only {available} available"
        )


class ShapeMismatch(DataError):
    """Array shapes are inconsistent with the model or with each other."""


class LengthMismatch(ShapeMismatch):
    """Paired vectors differ in length."""


class EmptySample(DataError):
    """A sample that must be non-empty was empty."""


class DegenerateSample(DataError):
    """Sample has zero spread on some axis or too few points."""


class AllZero(NumericError):
    """An estimated density has zero total mass on the evaluation grid."""


class NonFiniteLoss(NumericError):
    """Training loss became NaN or infinite."""


class AllDiverged(NumericError):
    """Every ensemble member diverged during training."""
