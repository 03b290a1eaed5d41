"""ARINC 429 bus security lab.

Word codec, bipolar RZ waveform synthesis, a discrete-event bus with a
relay-switched rogue transmitter, and a slope-fingerprint IDS.
"""

from .codec import (
    Bcd,
    Bnr,
    DecodedMessage,
    Discrete,
    Label,
    LabelRegistry,
    Opaque,
    decode_word,
    encode_word,
    is_valid,
    parse_hex,
    word_hex,
)
from .errors import ArincLabError, BusContentionError
from .waveform import (
    ALTADT_PROFILE,
    EGPWS_PROFILE,
    TransmitterProfile,
    VoltageTrace,
    decode_trace,
    measure_edge,
    synthesize_trace,
)

__version__ = "0.1.0"

__all__ = [
    "ALTADT_PROFILE",
    "ArincLabError",
    "Bcd",
    "Bnr",
    "BusContentionError",
    "DecodedMessage",
    "Discrete",
    "EGPWS_PROFILE",
    "Label",
    "LabelRegistry",
    "Opaque",
    "TransmitterProfile",
    "VoltageTrace",
    "decode_trace",
    "decode_word",
    "encode_word",
    "is_valid",
    "measure_edge",
    "parse_hex",
    "synthesize_trace",
    "word_hex",
]
