"""Rogue transmitter/receiver behaviour: geo-fence trigger, capture, playback,
spoofing and fuzzing.

Longitudes are signed east-positive and latitudes north-positive. Fence
bounds are given the way a chart reads them: ``west_of=77.3`` means
77.3 degrees W, i.e. longitude < -77.3.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Union

from . import codec
from .codec import DataPayload, DecodedMessage, Label, LabelRegistry
from .errors import EmptyRecordingError, ScenarioError

WORD_SLOT_BITS = 36  # 32 data bits + 4-bit minimum inter-word gap


@dataclass(frozen=True)
class GeoFence:
    west_of: float | None = None
    south_of: float | None = None

    def __post_init__(self):
        if self.west_of is None and self.south_of is None:
            raise ValueError("geo-fence needs at least one bound")

    def to_dict(self) -> dict:
        return {"west_of": self.west_of, "south_of": self.south_of}


def geofence_triggered(fence: GeoFence, lon: float, lat: float) -> bool:
    """Instantaneous fence test for an east-positive ``lon`` / north-positive ``lat``."""
    if fence.west_of is not None and lon < -fence.west_of:
        return True
    if fence.south_of is not None and lat < fence.south_of:
        return True
    return False


class GeoFenceMonitor:
    """Latched fence: once any position has tripped it, it stays tripped."""

    def __init__(self, fence: GeoFence):
        self.fence = fence
        self.fired = False

    def update(self, lon: float, lat: float) -> bool:
        if not self.fired and geofence_triggered(self.fence, lon, lat):
            self.fired = True
        return self.fired


# --- capture (rogue receiver) --------------------------------------------


@dataclass(frozen=True)
class CaptureFilter:
    """Select words by label and an optional predicate on the decoded message.

    An empty label set captures every label.
    """

    labels: frozenset[int] = frozenset()
    predicate: Callable[[DecodedMessage], bool] | None = None

    @classmethod
    def of(cls, *labels: Union[Label, int, str], predicate=None) -> CaptureFilter:
        return cls(frozenset(codec.as_label(x).octal_value for x in labels), predicate)

    def matches(self, word: int, registry: LabelRegistry | None = None) -> bool:
        msg = codec.decode_word(word, registry)
        if self.labels and msg.label.octal_value not in self.labels:
            return False
        return self.predicate is None or bool(self.predicate(msg))


def warning_bit_set(bit: int = 11) -> Callable[[DecodedMessage], bool]:
    """Predicate: the given word bit (11-29) of the data field is 1."""

    def pred(msg: DecodedMessage) -> bool:
        return bool((msg.data_field >> (bit - 11)) & 1)

    return pred


def _entry_word(entry) -> int:
    if isinstance(entry, int):
        return entry
    if hasattr(entry, "word"):
        return entry.word
    return entry[1]


def record_capture(log: Iterable, capture: CaptureFilter, registry=None) -> list[int]:
    """Words from ``log`` that pass ``capture``, in log order.

    ``log`` may hold bus log entries, ``(timestamp, word)`` pairs or bare
    words. This is also what a rogue receiver exfiltrates.
    """
    words = (_entry_word(e) for e in log)
    return [w for w in words if capture.matches(w, registry)]


# --- attack plans ----------------------------------------------------------


def word_slot(bit_rate: float) -> float:
    return WORD_SLOT_BITS / bit_rate


@dataclass(frozen=True)
class Playback:
    """Replay ``recording`` back-to-back once every ``cadence`` seconds."""

    recording: tuple[int, ...]
    cadence: float

    def __post_init__(self):
        if not self.recording:
            raise EmptyRecordingError("playback recording is empty")
        if not self.cadence > 0:
            raise ValueError("cadence must be positive")

    def check_capacity(self, bit_rate: float) -> None:
        if len(self.recording) * word_slot(bit_rate) > self.cadence:
            raise ScenarioError(
                f"{len(self.recording)} words do not fit in a {self.cadence} s cadence"
            )

    def transmissions(self, start: float, end: float, bit_rate: float) -> Iterator[tuple[float, int]]:
        slot = word_slot(bit_rate)
        k = 0
        while True:
            base = start + k * self.cadence
            if base >= end:
                return
            for j, w in enumerate(self.recording):
                t = base + j * slot
                if t >= end:
                    return
                yield t, w
            k += 1


@dataclass(frozen=True)
class Spoof:
    """Send one crafted, structurally valid word every ``cadence`` seconds."""

    label: Label
    payload: Union[DataPayload, int]
    cadence: float
    sdi: int = 0
    ssm: int = 0

    def __post_init__(self):
        if not self.cadence > 0:
            raise ValueError("cadence must be positive")

    @property
    def word(self) -> int:
        return codec.encode_word(self.label, self.sdi, self.payload, self.ssm)

    def check_capacity(self, bit_rate: float) -> None:
        if word_slot(bit_rate) > self.cadence:
            raise ScenarioError("spoof cadence is shorter than one word slot")

    def transmissions(self, start, end, bit_rate):
        w = self.word
        k = 0
        while (t := start + k * self.cadence) < end:
            yield t, w
            k += 1


def _fuzz_words(seed: int, parity_valid_fraction: float) -> Iterator[int]:
    rng = random.Random(seed)
    while True:
        raw = rng.getrandbits(32)
        valid = rng.random() < parity_valid_fraction
        yield codec.with_parity(raw, valid)


def fuzz_stream(seed: int, count: int, parity_valid_fraction: float) -> list[int]:
    """``count`` random words; each is odd-parity with probability ``f``."""
    if not 0.0 <= parity_valid_fraction <= 1.0:
        raise ValueError("parity_valid_fraction must lie in [0, 1]")
    gen = _fuzz_words(seed, parity_valid_fraction)
    return [next(gen) for _ in range(count)]


@dataclass(frozen=True)
class Fuzz:
    seed: int
    rate: float  # words per second
    parity_valid_fraction: float = 0.5

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("fuzz rate must be positive")
        if not 0.0 <= self.parity_valid_fraction <= 1.0:
            raise ValueError("parity_valid_fraction must lie in [0, 1]")

    def check_capacity(self, bit_rate: float) -> None:
        if self.rate * word_slot(bit_rate) > 1.0:
            raise ScenarioError(
                f"fuzz rate {self.rate} words/s exceeds bus capacity {1 / word_slot(bit_rate):.1f}"
            )

    def transmissions(self, start, end, bit_rate):
        gen = _fuzz_words(self.seed, self.parity_valid_fraction)
        k = 0
        while (t := start + k / self.rate) < end:
            yield t, next(gen)
            k += 1


AttackPlan = Union[Playback, Spoof, Fuzz]


def build_playback(recording: Iterable[int], cadence: float) -> Playback:
    return Playback(tuple(recording), cadence)
