"""Exception hierarchy shared across the package."""


class OrderingICAError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(OrderingICAError, ValueError):
    pass


class RankDeficient(OrderingICAError):
    """Covariance of the input does not span all channels."""


class DomainError(OrderingICAError, ValueError):
    pass


class DegenerateCandidate(OrderingICAError):
    """A candidate vector vanished after projection onto the complement."""


class DegenerateRow(DegenerateCandidate):
    pass


class AllCandidatesDegenerate(OrderingICAError):
    pass


class IllConditionedComplement(OrderingICAError):
    pass


class MixingGenerationFailed(OrderingICAError):
    pass


class ZeroVector(OrderingICAError, ValueError):
    pass


class FormatError(OrderingICAError):
    """Malformed matrix or record file.

    ``offset`` is a byte offset for binary files, ``line`` a 1-based line
    number for text files.
    """

    def __init__(self, message, offset=None, line=None):
        super().__init__(message)
        self.offset = offset
        self.line = line


class ChecksumMismatch(OrderingICAError):
    pass
