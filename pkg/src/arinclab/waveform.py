"""Bipolar return-to-zero waveform synthesis, decoding and edge features.

A word is sent bit 1 first. Each bit cell of length ``1/bit_rate`` drives
the bus from NULL to the HI (1) or LO (0) level at the transmitter's slew
rate, holds, and ramps back so it reaches NULL exactly at the half-cell
boundary. The second half-cell stays at NULL. When the slew is too slow to
reach the level within a quarter cell the pulse becomes a triangle that
peaks at the quarter-cell point.

Times in a :class:`VoltageTrace` are relative to the trigger: the first
upward +2.5 V crossing, like an oscilloscope set to trigger on the rise of
the first HI bit.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import codec
from .errors import (
    IndeterminateBitError,
    NoRisingEdgeError,
    ProfileError,
    SampleRateTooLowError,
    ShortTraceError,
)

DEFAULT_SAMPLE_RATE = 12.5e6
TRIGGER_LEVEL = 2.5
HI_MIN, HI_MAX = 6.5, 13.0
NULL_BAND = 2.5
WORD_BITS = 32
MIN_OVERSAMPLING = 20

SLOW_BAND = (12_000.0, 14_500.0)
FAST_RATE = 100_000.0


@dataclass(frozen=True)
class TransmitterProfile:
    """Electrical personality of one bus driver.

    ``slew_rate`` is in V/µs, ``noise_sigma`` in volts, ``jitter_sigma`` in
    seconds.
    """

    name: str
    hi_level: float = 10.0
    lo_level: float = -10.0
    slew_rate: float = 5.05
    noise_sigma: float = 0.0
    bit_rate: float = 12_500.0
    jitter_sigma: float = 0.0

    def __post_init__(self):
        if not HI_MIN <= self.hi_level <= HI_MAX:
            raise ProfileError(f"{self.name}: hi_level {self.hi_level} V outside +6.5..+13 V")
        if not -HI_MAX <= self.lo_level <= -HI_MIN:
            raise ProfileError(f"{self.name}: lo_level {self.lo_level} V outside -13..-6.5 V")
        if not self.slew_rate > 0:
            raise ProfileError(f"{self.name}: slew_rate must be positive")
        if self.noise_sigma < 0 or self.jitter_sigma < 0:
            raise ProfileError(f"{self.name}: noise and jitter sigmas must be >= 0")
        slow = SLOW_BAND[0] <= self.bit_rate <= SLOW_BAND[1]
        # high speed tolerates the usual +-1 % clock error
        fast = abs(self.bit_rate - FAST_RATE) <= 0.01 * FAST_RATE
        if not (slow or fast):
            raise ProfileError(
                f"{self.name}: bit_rate {self.bit_rate} is neither 12-14.5 kbps nor 100 kbps"
            )

    @property
    def bit_period(self) -> float:
        return 1.0 / self.bit_rate

    def replace(self, **changes) -> TransmitterProfile:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "hi_level": self.hi_level,
            "lo_level": self.lo_level,
            "slew_rate": self.slew_rate,
            "noise_sigma": self.noise_sigma,
            "bit_rate": self.bit_rate,
            "jitter_sigma": self.jitter_sigma,
        }

    @classmethod
    def from_dict(cls, name: str, data: dict) -> TransmitterProfile:
        known = {"hi_level", "lo_level", "slew_rate", "noise_sigma", "bit_rate", "jitter_sigma"}
        extra = set(data) - known - {"name"}
        if extra:
            raise ProfileError(f"{name}: unknown profile fields {sorted(extra)}")
        return cls(name=name, **{k: float(v) for k, v in data.items() if k in known})


# Fast-edged avionics driver and a slow-edged bench tool, both low speed.
EGPWS_PROFILE = TransmitterProfile("EGPWS", slew_rate=5.05)
ALTADT_PROFILE = TransmitterProfile("AltaDT", slew_rate=0.937)


@dataclass
class VoltageTrace:
    sample_rate: float
    times: np.ndarray
    voltages: np.ndarray
    word_index: int = 1

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.voltages = np.asarray(self.voltages, dtype=float)
        if self.times.shape != self.voltages.shape or self.times.ndim != 1:
            raise ValueError("times and voltages must be 1-D arrays of equal length")

    def __len__(self) -> int:
        return self.times.size

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.times.tolist(), self.voltages.tolist()))


@dataclass(frozen=True)
class EdgeFeatures:
    rising_slope: float  # V/µs
    hi_peak: float
    lo_peak: float
    rise_time_10_90: float  # seconds


@dataclass(frozen=True)
class TraceDecode:
    word: int
    confidence: np.ndarray = field(repr=False)
    parity_valid: bool = True


def word_bits(word: int) -> list[int]:
    """Bits in transmission order (bit 1 first)."""
    return [(word >> i) & 1 for i in range(WORD_BITS)]


def _cell_knots(start: float, level: float, half: float, slew: float):
    ramp = abs(level) / slew
    if 2 * ramp <= half:
        return (
            (start, 0.0),
            (start + ramp, level),
            (start + half - ramp, level),
            (start + half, 0.0),
        )
    peak = math.copysign(slew * half / 2, level)
    return ((start, 0.0), (start + half / 2, peak), (start + half, 0.0))


def waveform_knots(
    word: int,
    profile: TransmitterProfile,
    cell_starts: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Breakpoints of the noiseless piecewise-linear waveform.

    Times are absolute, with the nominal first cell starting at 0.
    """
    period = profile.bit_period
    half = period / 2
    slew = profile.slew_rate * 1e6
    if cell_starts is None:
        cell_starts = np.arange(WORD_BITS) * period
    ts: list[float] = []
    vs: list[float] = []
    for start, bit in zip(cell_starts, word_bits(word)):
        level = profile.hi_level if bit else profile.lo_level
        for t, v in _cell_knots(float(start), level, half, slew):
            ts.append(t)
            vs.append(v)
    return np.asarray(ts), np.asarray(vs)


def trigger_offset(word: int, profile: TransmitterProfile, cell_starts=None) -> float:
    """Absolute time of the first upward +2.5 V crossing.

    Falls back to the start of the first cell when no HI pulse reaches the
    trigger level.
    """
    period = profile.bit_period
    slew = profile.slew_rate * 1e6
    if cell_starts is None:
        cell_starts = np.arange(WORD_BITS) * period
    peak = min(profile.hi_level, slew * period / 4)
    if peak >= TRIGGER_LEVEL:
        for start, bit in zip(cell_starts, word_bits(word)):
            if bit:
                return float(start) + TRIGGER_LEVEL / slew
    return float(cell_starts[0])


def synthesize_trace(
    word: int,
    profile: TransmitterProfile,
    sample_rate: float = DEFAULT_SAMPLE_RATE,
    *,
    rng: np.random.Generator | None = None,
    seed=None,
    word_index: int = 1,
    pre_cells: float = 1.0,
    post_cells: float = 1.0,
) -> VoltageTrace:
    """Render one word as a sampled differential voltage trace.

    The capture spans ``pre_cells`` bit periods of NULL before the word and
    ``post_cells`` after it. Noise and jitter come from ``rng`` (or a fresh
    generator seeded with ``seed``).
    """
    if sample_rate < MIN_OVERSAMPLING * profile.bit_rate:
        raise SampleRateTooLowError(
            f"sample rate {sample_rate:g} Hz < {MIN_OVERSAMPLING} x bit rate {profile.bit_rate:g}"
        )
    if rng is None:
        rng = np.random.default_rng(seed)
    period = profile.bit_period
    starts = np.arange(WORD_BITS) * period
    if profile.jitter_sigma > 0:
        # bounded so neighbouring cells never overlap
        jitter = rng.normal(0.0, profile.jitter_sigma, WORD_BITS)
        starts = starts + np.clip(jitter, -period / 4, period / 4)
    knot_t, knot_v = waveform_knots(word, profile, starts)
    origin = trigger_offset(word, profile, starts)

    t_begin = -pre_cells * period
    t_end = (WORD_BITS + post_cells) * period
    j0 = math.floor((t_begin - origin) * sample_rate)
    j1 = math.ceil((t_end - origin) * sample_rate)
    times = np.arange(j0, j1 + 1) / sample_rate
    volts = np.interp(times + origin, knot_t, knot_v, left=0.0, right=0.0)
    if profile.noise_sigma > 0:
        # clipped at 5 sigma so |v| <= 13 V + 5 sigma holds for every sample
        noise = rng.normal(0.0, profile.noise_sigma, times.size)
        volts = volts + np.clip(noise, -5 * profile.noise_sigma, 5 * profile.noise_sigma)
    return VoltageTrace(sample_rate, times, volts, word_index)


def synthesize_batch(
    words,
    profile: TransmitterProfile,
    sample_rate: float = DEFAULT_SAMPLE_RATE,
    seed: int = 0,
    first_index: int = 1,
) -> list[VoltageTrace]:
    """Synthesize many words; word number ``n`` uses the child seed ``(seed, n - 1)``.

    Per-trace seeding keeps results identical whether the batch is rendered
    in one call or split across workers (pass each chunk its ``first_index``).
    """
    return [
        synthesize_trace(
            w,
            profile,
            sample_rate,
            rng=np.random.default_rng([seed, first_index + i - 1]),
            word_index=first_index + i,
        )
        for i, w in enumerate(words)
    ]


def _crossing_time(t: np.ndarray, v: np.ndarray, idx: int, level: float) -> float:
    """Interpolated time where the segment ending at ``idx`` crosses ``level``."""
    if idx == 0:
        return float(t[0])
    v0, v1 = v[idx - 1], v[idx]
    if v1 == v0:
        return float(t[idx])
    frac = (level - v0) / (v1 - v0)
    return float(t[idx - 1] + frac * (t[idx] - t[idx - 1]))


def _grid_start(trace: VoltageTrace) -> float:
    """Locate the start of the first bit cell from the first departure from NULL."""
    t, v = trace.times, trace.voltages
    out = np.flatnonzero(np.abs(v) >= NULL_BAND)
    if out.size == 0:
        raise ShortTraceError("trace never leaves the NULL band")
    i = int(out[0])
    sign = 1.0 if v[i] > 0 else -1.0
    t_a = _crossing_time(t, sign * v, i, NULL_BAND)
    beyond = np.flatnonzero(sign * v[i:] >= 2 * NULL_BAND)
    if beyond.size:
        k = i + int(beyond[0])
        t_b = _crossing_time(t, sign * v, k, 2 * NULL_BAND)
        if t_b > t_a:
            slope = NULL_BAND / (t_b - t_a)
            return t_a - NULL_BAND / slope
    return t_a


def decode_trace(trace: VoltageTrace, bit_rate: float) -> TraceDecode:
    """Recover the word carried by a trace.

    The cell grid is anchored on the first bit's leading edge. Each bit is
    classified from the mean voltage over the central 40 % of its active
    half-cell, which stays on the plateau even when the ramps take up most
    of the half-cell. ``confidence`` is the margin (volts) between that mean
    and the nearest HI/LO threshold.
    """
    period = 1.0 / bit_rate
    half = period / 2
    start = _grid_start(trace)
    t, v = trace.times, trace.voltages
    if t[-1] < start + (WORD_BITS - 1) * period + 0.7 * half:
        raise ShortTraceError("trace does not span 32 bit cells")

    cells = start + np.arange(WORD_BITS) * period
    lo_idx = np.searchsorted(t, cells + 0.3 * half, side="left")
    hi_idx = np.searchsorted(t, cells + 0.7 * half, side="right")
    csum = np.concatenate(([0.0], np.cumsum(v)))
    counts = hi_idx - lo_idx
    if np.any(counts <= 0):
        raise ShortTraceError("too few samples per bit cell")
    means = (csum[hi_idx] - csum[lo_idx]) / counts

    word = 0
    for i, m in enumerate(means):
        if m >= HI_MIN:
            word |= 1 << i
        elif m > -HI_MIN:
            raise IndeterminateBitError(i, float(m))
    confidence = np.abs(means) - HI_MIN
    return TraceDecode(word=word, confidence=confidence, parity_valid=codec.is_valid(word))


def _first_pulse(v: np.ndarray, sign: float) -> np.ndarray:
    """Samples of the first pulse of the given polarity.

    The pulse opens at the trigger level and closes back at 0 V; the
    hysteresis keeps noise on a slow ramp from splitting the pulse.
    """
    out = np.flatnonzero(sign * v >= TRIGGER_LEVEL)
    if out.size == 0:
        return v[:0]
    a = int(out[0])
    back = np.flatnonzero(sign * v[a:] <= 0.0)
    b = a + int(back[0]) if back.size else v.size
    return v[a:b]


def _plateau(pulse: np.ndarray) -> float:
    ext = pulse[np.argmax(np.abs(pulse))]
    return float(np.median(pulse[np.abs(pulse) >= 0.8 * abs(ext)]))


def measure_edge(trace: VoltageTrace) -> EdgeFeatures:
    """Fingerprint features from the leading edge of the first positive pulse.

    ``hi_peak``/``lo_peak`` are medians of the samples within 20 % of the
    extreme of the first HI/LO pulse, so they do not depend on how many ones
    the word carries. The slope is the least-squares fit over the 10 %-90 %
    portion of the first NULL-to-HI ramp.
    """
    t, v = trace.times, trace.voltages
    hi_pulse = _first_pulse(v, 1.0)
    if hi_pulse.size == 0:
        raise NoRisingEdgeError("trace has no HI pulse")
    hi_peak = _plateau(hi_pulse)
    lo_pulse = _first_pulse(v, -1.0)
    lo_peak = _plateau(lo_pulse) if lo_pulse.size else 0.0

    lo_lvl, mid_lvl, hi_lvl = 0.1 * hi_peak, 0.5 * hi_peak, 0.9 * hi_peak
    above = v >= mid_lvl
    ups = np.flatnonzero(above[1:] & ~above[:-1]) + 1
    if ups.size == 0:
        raise NoRisingEdgeError("no upward crossing of half the HI level")
    mid = int(ups[0])
    below_lo = np.flatnonzero(v[:mid] < lo_lvl)
    if below_lo.size == 0:
        raise NoRisingEdgeError("rising edge does not start from NULL")
    a = int(below_lo[-1]) + 1
    over_hi = np.flatnonzero(v[mid:] > hi_lvl)
    if over_hi.size == 0:
        raise NoRisingEdgeError("rising edge never reaches 90 % of HI")
    b = mid + int(over_hi[0])
    seg_t, seg_v = t[a:b], v[a:b]
    keep = (seg_v >= lo_lvl) & (seg_v <= hi_lvl)
    seg_t, seg_v = seg_t[keep], seg_v[keep]
    if seg_t.size < 2:
        raise NoRisingEdgeError("too few samples on the rising edge to fit a slope")
    tc = seg_t - seg_t.mean()
    slope = float(np.dot(tc, seg_v - seg_v.mean()) / np.dot(tc, tc))
    if slope <= 0:
        raise NoRisingEdgeError("fitted rising slope is not positive")
    return EdgeFeatures(
        rising_slope=slope * 1e-6,
        hi_peak=hi_peak,
        lo_peak=lo_peak,
        rise_time_10_90=0.8 * hi_peak / slope,
    )
