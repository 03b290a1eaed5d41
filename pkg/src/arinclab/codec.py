"""ARINC 429 word codec.

Words are plain ``int`` values in ``0 .. 2**32 - 1``. Bit numbering follows
the standard's 1-based convention, with bit 1 the least significant bit of
the integer:

    bit 32      parity (odd)
    bits 31-30  SSM
    bits 29-11  data (bit 29 MSB)
    bits 10-9   SDI
    bits 8-1    label, stored bit-reversed (bit 1 is the label MSB)

Hex text is always 8 uppercase digits with bit 32 first.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Union

from .errors import MalformedHexError, PayloadOverflowError

WORD_MASK = 0xFFFFFFFF
DATA_BITS = 19
DATA_MASK = (1 << DATA_BITS) - 1
DATA_SHIFT = 10
SDI_SHIFT = 8
SSM_SHIFT = 29
PARITY_BIT = 1 << 31

_HEX_RE = re.compile(r"[0-9A-Fa-f]{8}")


class Parity(Enum):
    ODD = "odd"
    EVEN = "even"


def _reverse8(byte: int) -> int:
    out = 0
    for _ in range(8):
        out = (out << 1) | (byte & 1)
        byte >>= 1
    return out


_REVERSE8 = tuple(_reverse8(b) for b in range(256))


def reverse_label_bits(byte: int) -> int:
    """Reverse the bit order of one label byte (an involution)."""
    return _REVERSE8[byte & 0xFF]


def popcount(word: int) -> int:
    return bin(word & WORD_MASK).count("1")


def parity_of(word: int) -> Parity:
    return Parity.ODD if popcount(word) & 1 else Parity.EVEN


def is_valid(word: int) -> bool:
    return popcount(word) & 1 == 1


def word_hex(word: int) -> str:
    return f"{word & WORD_MASK:08X}"


def parse_hex(text: str) -> int:
    """Parse the 8-digit hex rendering of a word (either letter case)."""
    text = text.strip()
    if text[:2] in ("0x", "0X"):
        text = text[2:]
    if not _HEX_RE.fullmatch(text):
        raise MalformedHexError(f"expected exactly 8 hex digits, got {text!r}")
    return int(text, 16)


@dataclass(frozen=True, order=True)
class Label:
    """A label identified by its octal value (0o000-0o377)."""

    octal_value: int

    def __post_init__(self):
        if not 0 <= self.octal_value <= 0o377:
            raise ValueError(f"label {self.octal_value:o} outside 000-377")

    @property
    def raw_byte(self) -> int:
        """The byte as it sits in bits 8-1 of a word."""
        return reverse_label_bits(self.octal_value)

    @classmethod
    def from_raw(cls, raw_byte: int) -> Label:
        return cls(reverse_label_bits(raw_byte))

    @classmethod
    def parse(cls, text: str) -> Label:
        """Parse octal text such as ``"203"`` or ``"0o203"``."""
        text = text.strip().lower()
        if text.startswith("0o"):
            text = text[2:]
        if not re.fullmatch(r"[0-7]{1,3}", text):
            raise ValueError(f"not an octal label: {text!r}")
        return cls(int(text, 8))

    def __str__(self) -> str:
        return label_octal_string(self)


def label_octal_string(label: Label) -> str:
    return f"{label.octal_value:03o}"


def as_label(value: Union[Label, int, str]) -> Label:
    if isinstance(value, Label):
        return value
    if isinstance(value, str):
        return Label.parse(value)
    return Label(value)


# --- data payloads -------------------------------------------------------


@dataclass(frozen=True)
class Bnr:
    """Unsigned binary magnitude sitting above ``padding_bits`` low bits.

    ``pad`` keeps whatever the padding bits held so a decoded word
    re-encodes bit-exactly.
    """

    magnitude: int
    padding_bits: int = 1
    units: str = ""
    pad: int = 0

    def to_field(self) -> int:
        width = DATA_BITS - self.padding_bits
        if not 0 <= self.magnitude < (1 << width):
            raise PayloadOverflowError(
                f"BNR magnitude {self.magnitude} does not fit {width} bits"
            )
        if not 0 <= self.pad < (1 << self.padding_bits):
            raise PayloadOverflowError(f"padding value {self.pad} too wide")
        return (self.magnitude << self.padding_bits) | self.pad


@dataclass(frozen=True)
class Bcd:
    """Decimal digits, most significant first.

    The 19-bit field holds four 4-bit digits and a 3-bit leading digit, so
    at most five digits fit and the leading one is limited to 0-7.
    """

    digits: tuple[int, ...]

    def to_field(self) -> int:
        if len(self.digits) > 5:
            raise PayloadOverflowError("BCD field holds at most 5 digits")
        value = 0
        for i, d in enumerate(reversed(self.digits)):
            limit = 7 if i == 4 else 9
            if not 0 <= d <= limit:
                raise PayloadOverflowError(f"BCD digit {d} out of range at position {i}")
            value |= d << (4 * i)
        return value

    @classmethod
    def from_field(cls, value: int) -> Bcd:
        digits = [(value >> (4 * i)) & 0xF for i in range(4)]
        digits.append((value >> 16) & 0x7)
        return cls(tuple(reversed(digits)))


@dataclass(frozen=True)
class Discrete:
    bits: int

    def to_field(self) -> int:
        if not 0 <= self.bits <= DATA_MASK:
            raise PayloadOverflowError(f"discrete field {self.bits:#x} exceeds 19 bits")
        return self.bits

    def bit(self, word_bit: int) -> bool:
        """Test a flag by its word bit number (11-29)."""
        return bool((self.bits >> (word_bit - 11)) & 1)


@dataclass(frozen=True)
class Opaque:
    bits: int

    def to_field(self) -> int:
        if not 0 <= self.bits <= DATA_MASK:
            raise PayloadOverflowError(f"data field {self.bits:#x} exceeds 19 bits")
        return self.bits


DataPayload = Union[Bnr, Bcd, Discrete, Opaque]


# --- label format registry -----------------------------------------------


@dataclass(frozen=True)
class LabelFormat:
    kind: str  # "bnr" | "bcd" | "discrete" | "opaque"
    name: str = ""
    units: str = ""
    padding_bits: int = 0

    def __post_init__(self):
        if self.kind not in ("bnr", "bcd", "discrete", "opaque"):
            raise ValueError(f"unknown data format {self.kind!r}")
        if not 0 <= self.padding_bits < DATA_BITS:
            raise ValueError("padding_bits must be within the data field")

    def interpret(self, field_value: int) -> DataPayload:
        if self.kind == "bnr":
            return Bnr(
                magnitude=field_value >> self.padding_bits,
                padding_bits=self.padding_bits,
                units=self.units,
                pad=field_value & ((1 << self.padding_bits) - 1),
            )
        if self.kind == "bcd":
            return Bcd.from_field(field_value)
        if self.kind == "discrete":
            return Discrete(field_value)
        return Opaque(field_value)


@dataclass
class LabelRegistry:
    """Maps labels to data formats; unknown labels decode as :class:`Opaque`."""

    formats: dict[int, LabelFormat] = field(default_factory=dict)

    def register(self, label: Union[Label, int, str], fmt: LabelFormat) -> None:
        self.formats[as_label(label).octal_value] = fmt

    def lookup(self, label: Label) -> LabelFormat:
        return self.formats.get(label.octal_value, LabelFormat("opaque"))

    @classmethod
    def from_mapping(cls, table: Mapping[str, Mapping]) -> LabelRegistry:
        """Build a registry from ``{"203": {"kind": "bnr", ...}, ...}``."""
        reg = cls()
        for key, fmt in table.items():
            reg.register(key, LabelFormat(**fmt))
        return reg

    def to_mapping(self) -> dict[str, dict]:
        return {
            f"{k:03o}": {
                "kind": f.kind,
                "name": f.name,
                "units": f.units,
                "padding_bits": f.padding_bits,
            }
            for k, f in sorted(self.formats.items())
        }


ALTITUDE_LABEL = Label(0o203)
GPWS_LABEL = Label(0o270)


def default_registry() -> LabelRegistry:
    return LabelRegistry(
        {
            ALTITUDE_LABEL.octal_value: LabelFormat(
                "bnr", name="altitude", units="ft MSL", padding_bits=1
            ),
            GPWS_LABEL.octal_value: LabelFormat("discrete", name="GPWS discrete"),
        }
    )


DEFAULT_REGISTRY = default_registry()


# --- encode / decode -----------------------------------------------------


SSM_BNR_MEANINGS = {
    0b00: "Failure Warning",
    0b01: "No Computed Data",
    0b10: "Functional Test",
    0b11: "Normal Operation",
}


@dataclass(frozen=True)
class DecodedMessage:
    label: Label
    sdi: int
    data: DataPayload
    ssm: int
    parity_valid: bool

    @property
    def data_field(self) -> int:
        return self.data.to_field()

    def encode(self) -> int:
        return encode_word(self.label, self.sdi, self.data, self.ssm)

    def ssm_meaning(self) -> str | None:
        # SSM semantics are only modelled for BNR payloads.
        if isinstance(self.data, Bnr):
            return SSM_BNR_MEANINGS[self.ssm]
        return None


def split_fields(word: int) -> tuple[int, int, int, int, int]:
    """Return ``(label_raw_byte, sdi, data_field, ssm, parity_bit)``."""
    word &= WORD_MASK
    return (
        word & 0xFF,
        (word >> SDI_SHIFT) & 0b11,
        (word >> DATA_SHIFT) & DATA_MASK,
        (word >> SSM_SHIFT) & 0b11,
        word >> 31,
    )


def decode_word(word: int, registry: LabelRegistry | None = None) -> DecodedMessage:
    """Split a word into its fields; never raises on parity.

    Even-parity words decode normally with ``parity_valid=False`` so that
    receivers can count and log them.
    """
    registry = registry or DEFAULT_REGISTRY
    raw_label, sdi, data, ssm, _ = split_fields(word)
    label = Label.from_raw(raw_label)
    return DecodedMessage(
        label=label,
        sdi=sdi,
        data=registry.lookup(label).interpret(data),
        ssm=ssm,
        parity_valid=is_valid(word),
    )


def encode_word(
    label: Union[Label, int, str],
    sdi: int,
    data: Union[DataPayload, int],
    ssm: int,
) -> int:
    """Assemble a word and set bit 32 so the result has odd parity.

    ``data`` is either a payload object or the raw 19-bit field value.
    """
    label = as_label(label)
    if not 0 <= sdi <= 0b11:
        raise ValueError(f"SDI {sdi} is not a 2-bit value")
    if not 0 <= ssm <= 0b11:
        raise ValueError(f"SSM {ssm} is not a 2-bit value")
    field_value = data if isinstance(data, int) else data.to_field()
    if not 0 <= field_value <= DATA_MASK:
        raise PayloadOverflowError(f"data field {field_value:#x} exceeds 19 bits")
    word = (
        label.raw_byte
        | (sdi << SDI_SHIFT)
        | (field_value << DATA_SHIFT)
        | (ssm << SSM_SHIFT)
    )
    if not popcount(word) & 1:
        word |= PARITY_BIT
    return word


def with_parity(word: int, valid: bool = True) -> int:
    """Force bit 32 so the word has odd (``valid``) or even parity."""
    word &= ~PARITY_BIT & WORD_MASK
    if is_valid(word) != valid:
        word |= PARITY_BIT
    return word


def breakdown(word: int, registry: LabelRegistry | None = None) -> list[tuple[str, str]]:
    """Step-by-step hex to fields conversion, as rows of (step, text)."""
    msg = decode_word(word, registry)
    raw_label, sdi, data, ssm, parity = split_fields(word)
    bits = f"{word & WORD_MASK:032b}"
    grouped = " ".join(bits[i : i + 4] for i in range(0, 32, 4))
    rows = [
        ("hex", word_hex(word)),
        ("binary", grouped),
        ("label (as received)", f"{raw_label:08b}"),
        ("label (reversed)", f"{msg.label.octal_value:08b}"),
        ("label (octal)", label_octal_string(msg.label)),
        ("SDI", f"{sdi:02b}"),
        ("data field", f"{data:019b}"),
        ("SSM", f"{ssm:02b}"),
        ("parity bit", str(parity)),
    ]
    payload = msg.data
    if isinstance(payload, Bnr):
        units = f" {payload.units}" if payload.units else ""
        rows.append(("payload", f"BNR {payload.magnitude:,}{units}"))
    elif isinstance(payload, Bcd):
        rows.append(("payload", "BCD " + "".join(str(d) for d in payload.digits)))
    elif isinstance(payload, Discrete):
        rows.append(("payload", f"Discrete {payload.bits:019b}"))
    else:
        rows.append(("payload", f"Opaque {payload.bits:#07x}"))
    meaning = msg.ssm_meaning()
    if meaning:
        rows.append(("SSM meaning", meaning))
    rows.append(("parity", "OK (odd)" if msg.parity_valid else "PARITY INVALID (even)"))
    return rows
