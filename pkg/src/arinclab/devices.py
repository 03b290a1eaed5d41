"""Behavioural models of the two line-replaceable units on the bus.

The EGPWS turns a flight sample into label 203 (altitude) and label 270
(GPWS discrete) words. The MFD is a small state machine that jumps to its
terrain page whenever a terrain warning arrives, and only a restart cycle
brings the moving map back.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

from . import codec
from .codec import ALTITUDE_LABEL, GPWS_LABEL, Bnr, Discrete, Label

BNR_ALTITUDE_MAX = (1 << 18) - 1


@dataclass(frozen=True)
class FlightSample:
    time: float
    lon: float  # degrees, east positive
    lat: float  # degrees, north positive
    alt_ft: float


@dataclass(frozen=True)
class TerrainPatch:
    lon_min: float
    lon_max: float
    lat_min: float
    lat_max: float
    elevation_ft: float

    def contains(self, lon: float, lat: float) -> bool:
        return self.lon_min <= lon <= self.lon_max and self.lat_min <= lat <= self.lat_max


@dataclass(frozen=True)
class Terrain:
    """Flat ground at ``elevation_ft`` with optional rectangular plateaus.

    Later patches win where they overlap.
    """

    elevation_ft: float = 0.0
    patches: tuple[TerrainPatch, ...] = ()

    def elevation(self, lon: float, lat: float) -> float:
        for patch in reversed(self.patches):
            if patch.contains(lon, lat):
                return patch.elevation_ft
        return self.elevation_ft


EMISSION_SOURCES = ("gpws_discrete", "altitude_bnr", "static")


@dataclass(frozen=True)
class Emission:
    """One periodic label in a transmitter's schedule.

    ``static`` emissions send the fixed 19-bit ``value`` (used for the
    non-standard extra labels a real EGPWS puts on the bus).
    """

    label: Label
    period: float
    source: str = "static"
    value: int = 0
    offset: float = 0.0

    def __post_init__(self):
        if self.source not in EMISSION_SOURCES:
            raise ValueError(f"unknown emission source {self.source!r}")
        if not self.period > 0:
            raise ValueError("emission period must be positive")


DEFAULT_SCHEDULE = (
    Emission(GPWS_LABEL, 0.1, "gpws_discrete"),
    Emission(ALTITUDE_LABEL, 0.05, "altitude_bnr"),
)


@dataclass(frozen=True)
class EgpwsConfig:
    warning_threshold_ft: float = 1000.0
    warning_bit: int = 11
    sdi: int = 0
    discrete_ssm: int = 0b00
    altitude_ssm: int = 0b11
    terrain: Terrain = field(default_factory=Terrain)
    extra: tuple[Emission, ...] = ()

    def __post_init__(self):
        if not 11 <= self.warning_bit <= 29:
            raise ValueError("warning_bit must be a data bit (11-29)")


def terrain_warning(sample: FlightSample, config: EgpwsConfig) -> bool:
    agl = sample.alt_ft - config.terrain.elevation(sample.lon, sample.lat)
    return agl < config.warning_threshold_ft


def gpws_discrete_word(warning: bool, config: EgpwsConfig = EgpwsConfig()) -> int:
    bits = (1 << (config.warning_bit - 11)) if warning else 0
    return codec.encode_word(GPWS_LABEL, config.sdi, Discrete(bits), config.discrete_ssm)


def altitude_word(alt_ft: float, config: EgpwsConfig = EgpwsConfig()) -> int:
    magnitude = min(max(int(round(alt_ft)), 0), BNR_ALTITUDE_MAX)
    return codec.encode_word(
        ALTITUDE_LABEL, config.sdi, Bnr(magnitude, padding_bits=1), config.altitude_ssm
    )


def emission_word(emission: Emission, sample: FlightSample, config: EgpwsConfig) -> int:
    if emission.source == "gpws_discrete":
        return gpws_discrete_word(terrain_warning(sample, config), config)
    if emission.source == "altitude_bnr":
        return altitude_word(sample.alt_ft, config)
    return codec.encode_word(emission.label, config.sdi, emission.value, 0)


def egpws_emit(
    sample: FlightSample,
    config: EgpwsConfig = EgpwsConfig(),
    schedule: tuple[Emission, ...] = DEFAULT_SCHEDULE,
) -> list[int]:
    """Every word the EGPWS would produce for ``sample`` (schedule, then extras)."""
    return [emission_word(e, sample, config) for e in (*schedule, *config.extra)]


# --- MFD -----------------------------------------------------------------


class Display(str, Enum):
    NAV_MAP = "NAV_MAP"
    TERRAIN_DISPLAY = "TERRAIN_DISPLAY"
    CONFIG_MODE = "CONFIG_MODE"
    BOOTING = "BOOTING"


@dataclass(frozen=True)
class MfdConfig:
    hold_time: float = 1.0
    boot_time: float = 2.0
    warning_bit: int = 11
    warning_label: Label = GPWS_LABEL


@dataclass(frozen=True)
class MfdState:
    display: Display = Display.NAV_MAP
    terrain_warning_active: bool = False
    restart_count: int = 0
    taws_enabled: bool = True
    error_count: int = 0
    last_warning_at: float | None = None
    boot_target: Display | None = None


def mfd_receive(
    state: MfdState, word: int, time: float = 0.0, config: MfdConfig = MfdConfig()
) -> MfdState:
    """Apply one received word.

    Parity errors only bump ``error_count``. A valid warning word with TAWS
    enabled forces the terrain page. A valid warning-clear word drops the
    warning flag once ``hold_time`` has passed since the last warning, but
    the display stays on the terrain page until the unit is restarted.
    """
    if state.display is Display.BOOTING:
        return state
    if not codec.is_valid(word):
        return replace(state, error_count=state.error_count + 1)
    if state.display is Display.CONFIG_MODE:
        return state
    raw_label, _, data, _, _ = codec.split_fields(word)
    if codec.reverse_label_bits(raw_label) != config.warning_label.octal_value:
        return state
    warning = bool((data >> (config.warning_bit - 11)) & 1)
    if warning:
        if not state.taws_enabled:
            return state
        return replace(
            state,
            display=Display.TERRAIN_DISPLAY,
            terrain_warning_active=True,
            last_warning_at=time,
        )
    if state.terrain_warning_active and (
        state.last_warning_at is None or time - state.last_warning_at >= config.hold_time
    ):
        return replace(state, terrain_warning_active=False)
    return state


def mfd_begin_restart(state: MfdState, disable_taws: bool = True) -> MfdState:
    """Power-cycle the unit; it boots toward the next step of the recovery.

    From any operating page the unit boots into configuration mode, where
    the crew may switch TAWS off. From configuration mode it boots back to
    the moving map with the saved configuration.
    """
    current = state.boot_target if state.display is Display.BOOTING else state.display
    if current is Display.CONFIG_MODE:
        target, taws = Display.NAV_MAP, state.taws_enabled
    else:
        target = Display.CONFIG_MODE
        taws = state.taws_enabled and not disable_taws
    return replace(
        state,
        display=Display.BOOTING,
        boot_target=target,
        taws_enabled=taws,
        terrain_warning_active=False,
        last_warning_at=None,
        restart_count=state.restart_count + 1,
    )


def mfd_finish_boot(state: MfdState) -> MfdState:
    if state.display is not Display.BOOTING:
        return state
    return replace(state, display=state.boot_target, boot_target=None)


def mfd_restart_recovery(state: MfdState, disable_taws: bool = True) -> MfdState:
    """One complete restart (boot included)."""
    return mfd_finish_boot(mfd_begin_restart(state, disable_taws))
