"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures to the
documented process status without a lookup table.
"""


class ArincLabError(Exception):
    exit_code = 2


class PayloadOverflowError(ArincLabError, ValueError):
    pass


class MalformedHexError(ArincLabError, ValueError):
    pass


class SampleRateTooLowError(ArincLabError, ValueError):
    pass


class ProfileError(ArincLabError, ValueError):
    pass


class IndeterminateBitError(ArincLabError, ValueError):
    def __init__(self, cell: int, level: float):
        super().__init__(
            f"bit cell {cell}: active level {level:+.3f} V is outside the HI/LO bands"
        )
        self.cell = cell
        self.level = level


class ShortTraceError(ArincLabError, ValueError):
    pass


class NoRisingEdgeError(ArincLabError, ValueError):
    pass


class ScenarioError(ArincLabError, ValueError):
    pass


class BusContentionError(ArincLabError):
    exit_code = 3

    def __init__(self, time: float, drivers: list[str]):
        super().__init__(
            f"bus contention at t={time:.6f} s: {', '.join(drivers)} driving simultaneously"
        )
        self.time = time
        self.drivers = list(drivers)


class EmptyRecordingError(ArincLabError, ValueError):
    pass


class InsufficientTrainingDataError(ArincLabError, ValueError):
    exit_code = 4


class EmptyClassError(ArincLabError, ValueError):
    exit_code = 4


class TraceFormatError(ArincLabError, ValueError):
    pass


class MalformedHeaderError(TraceFormatError):
    pass


class NonMonotonicTimeError(TraceFormatError):
    pass


class NonContiguousIndexError(TraceFormatError):
    pass


class MessageLogError(ArincLabError, ValueError):
    pass


class DecreasingTimestampError(MessageLogError):
    pass
