"""Exception types shared across the package."""


class FFLabError(Exception):
    """Base class for all package-specific errors."""


class FieldMismatch(FFLabError):
    """Operands belong to different field specs."""


class DivisionByZero(FFLabError):
    """Multiplicative inverse of zero requested."""


class NoProperSubfield(FFLabError):
    """A proper subfield was required but the field is prime (m = 1)."""


class ZeroInDenominator(FFLabError):
    """A ratio/inverse operation met a set containing zero."""


class ZeroDilation(FFLabError):
    """Dilation by zero collapses a set to a point."""


class ZeroInSumset(FFLabError):
    """0 in A+B, so reciprocals of the sumset are undefined."""


class ZeroInSet(FFLabError):
    """Operation requires a zero-free set."""


class InvalidParams(FFLabError):
    """Malformed family/sweep parameters."""


class OracleTooLarge(FFLabError):
    """Brute-force oracle requested beyond its size cap."""


class TooFewPoints(FFLabError):
    """At least two points are needed to span a line."""


class WeightSumBelowK(FFLabError):
    """Popularity split called with sum(f) < K."""


class EmptyGraph(FFLabError):
    """A pair graph with no edges cannot be extracted from."""


class DegenerateX(FFLabError):
    """All elements of X coincide."""


class ChainDegenerate(FFLabError):
    """The proof chain cannot start because T*(A, B) = 0."""


class HypothesisUncheckable(FFLabError):
    """Subfield coset scan infeasible at this field size."""


class PartialFailure(FFLabError):
    """A sweep finished with per-instance errors; they are attached."""

    def __init__(self, message, failures):
        super().__init__(message)
        self.failures = failures
