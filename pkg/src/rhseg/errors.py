"""Exception types shared across the toolkit."""


class RhsegError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatch(RhsegError):
    pass


class DeadRegion(RhsegError):
    pass


class SelfMerge(RhsegError):
    pass


class LevelOutOfRange(RhsegError):
    pass


class BandMismatch(RhsegError):
    pass


class IndivisibleImage(RhsegError):
    pass


class ShapeMismatch(RhsegError):
    pass


class HeaderMismatch(RhsegError):
    pass


class ShortFile(RhsegError):
    pass


class TooManyLabels(RhsegError):
    pass


class InfeasibleLayout(RhsegError):
    pass


class WorkerPanic(RhsegError):
    def __init__(self, section_id, cause=None):
        super().__init__(f"section {section_id} failed twice: {cause}")
        self.section_id = section_id
        self.cause = cause


class WorkerUnreachable(RhsegError):
    pass


class ValidationFailure(RhsegError):
    pass


class ProtocolError(RhsegError):
    """Base class for wire-format violations."""


class BadMagic(ProtocolError):
    pass


class BadVersion(ProtocolError):
    pass


class Truncated(ProtocolError):
    pass


class UnknownType(ProtocolError):
    pass
