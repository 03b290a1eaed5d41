from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from arinclab import codec
from arinclab.codec import Bcd, Bnr, Discrete, Label, LabelFormat, LabelRegistry, Opaque, Parity
from arinclab.errors import MalformedHexError, PayloadOverflowError

words = st.integers(min_value=0, max_value=0xFFFFFFFF)


def naive_popcount(word: int) -> int:
    n = 0
    for i in range(32):
        if word & (1 << i):
            n += 1
    return n


def naive_reverse(byte: int) -> int:
    bits = f"{byte:08b}"
    return int(bits[::-1], 2)


# --- parity ------------------------------------------------------------------


def test_parity_examples():
    assert codec.parity_of(0xE189A8C1) is Parity.ODD
    assert codec.parity_of(0x00000000) is Parity.EVEN
    assert codec.parity_of(0x800000FF) is Parity.ODD
    assert naive_popcount(0x800000FF) % 2 == 1


@given(words)
def test_parity_matches_bit_loop(w):
    assert codec.is_valid(w) == (naive_popcount(w) % 2 == 1)


@given(words, st.booleans())
def test_with_parity_forces_state(w, valid):
    out = codec.with_parity(w, valid)
    assert codec.is_valid(out) is valid
    assert out & 0x7FFFFFFF == w & 0x7FFFFFFF


# --- labels ------------------------------------------------------------------


def test_label_reversal_is_involution_and_matches_string_reverse():
    for b in range(256):
        assert codec.reverse_label_bits(b) == naive_reverse(b)
        assert codec.reverse_label_bits(codec.reverse_label_bits(b)) == b


def test_label_octal_string():
    assert codec.label_octal_string(Label.from_raw(0b11000001)) == "203"
    assert codec.label_octal_string(Label.from_raw(0)) == "000"
    assert codec.label_octal_string(Label.from_raw(0xFF)) == "377"


def test_label_parse_and_range():
    assert Label.parse("270").octal_value == 0o270
    assert Label(0o270).raw_byte == 0x1D
    with pytest.raises(ValueError):
        Label(0o400)
    with pytest.raises(ValueError):
        Label.parse("9")


# --- worked example ---------------------------------------------------------


def test_decode_worked_example():
    msg = codec.decode_word(0xE189A8C1)
    assert msg.label == Label(0o203)
    assert msg.sdi == 0
    assert msg.ssm == 0b11
    assert msg.parity_valid
    assert isinstance(msg.data, Bnr)
    assert msg.data.magnitude == 12597
    assert msg.data.units == "ft MSL"
    assert msg.ssm_meaning() == "Normal Operation"


def test_encode_worked_example():
    w = codec.encode_word(Label(0o203), 0, Bnr(12597, padding_bits=1), 0b11)
    assert w == 0xE189A8C1


def test_decode_flipped_bit_one():
    bad = codec.decode_word(0xE189A8C0)
    assert not bad.parity_valid
    assert naive_popcount(0xE189A8C0) % 2 == 0
    # bit 1 is the label MSB, so clearing it moves the label from 203 to 003
    assert bad.label.octal_value == 0o003
    good = codec.decode_word(0xE189A8C1)
    assert (bad.sdi, bad.ssm, bad.data_field) == (good.sdi, good.ssm, good.data_field)


def test_decode_flipped_parity_bit_keeps_fields():
    good = codec.decode_word(0xE189A8C1)
    bad = codec.decode_word(0x6189A8C1)
    assert not bad.parity_valid
    assert (bad.label, bad.sdi, bad.ssm, bad.data) == (good.label, good.sdi, good.ssm, good.data)


def test_decode_all_zero_fields():
    msg = codec.decode_word(0x80000000)
    assert msg.label.octal_value == 0
    assert (msg.sdi, msg.ssm, msg.data_field) == (0, 0, 0)
    assert msg.parity_valid


def test_encode_small_examples():
    assert codec.encode_word(Label(0), 0, Discrete(0), 0) == 0x80000000
    assert codec.encode_word(Label(0o377), 0, Discrete(0), 0) == 0x800000FF


def test_field_positions():
    raw, sdi, data, ssm, p = codec.split_fields(0xE189A8C1)
    assert raw == 0xC1
    assert sdi == 0
    assert data == 25194
    assert ssm == 3
    assert p == 1


def test_unregistered_label_is_opaque():
    w = codec.encode_word(Label(0o350), 1, 0x1234, 2)
    msg = codec.decode_word(w)
    assert isinstance(msg.data, Opaque)
    assert msg.data.bits == 0x1234
    assert msg.ssm_meaning() is None


def test_discrete_ssm_uninterpreted():
    w = codec.encode_word(Label(0o270), 0, Discrete(1), 0b11)
    assert codec.decode_word(w).ssm_meaning() is None


# --- payload limits ---------------------------------------------------------


def test_bnr_overflow():
    with pytest.raises(PayloadOverflowError):
        codec.encode_word(Label(0o203), 0, Bnr(1 << 18, padding_bits=1), 3)
    codec.encode_word(Label(0o203), 0, Bnr((1 << 18) - 1, padding_bits=1), 3)


def test_raw_field_overflow():
    with pytest.raises(PayloadOverflowError):
        codec.encode_word(Label(0o203), 0, 1 << 19, 3)


def test_bcd_limits_and_roundtrip():
    assert Bcd.from_field(Bcd((1, 2, 3, 4, 5)).to_field()) == Bcd((1, 2, 3, 4, 5))
    with pytest.raises(PayloadOverflowError):
        Bcd((8, 0, 0, 0, 0)).to_field()
    with pytest.raises(PayloadOverflowError):
        Bcd((1, 0, 0, 0, 0, 0)).to_field()


def test_discrete_bit_by_word_number():
    d = Discrete(0b101)
    assert d.bit(11) and not d.bit(12) and d.bit(13)


def test_sdi_ssm_range_checked():
    with pytest.raises(ValueError):
        codec.encode_word(Label(1), 4, 0, 0)
    with pytest.raises(ValueError):
        codec.encode_word(Label(1), 0, 0, 4)


# --- round trips ---------------------------------------------------------------


@given(
    st.integers(0, 0o377),
    st.integers(0, 3),
    st.integers(0, 3),
    st.integers(0, (1 << 19) - 1),
)
def test_encode_decode_roundtrip_fields(label, sdi, ssm, data):
    w = codec.encode_word(Label(label), sdi, data, ssm)
    assert naive_popcount(w) % 2 == 1
    msg = codec.decode_word(w)
    assert (msg.label.octal_value, msg.sdi, msg.ssm, msg.data_field) == (label, sdi, ssm, data)
    assert msg.encode() == w


@given(words)
def test_encode_of_decode_is_identity_on_valid_words(w):
    w = codec.with_parity(w, True)
    assert codec.decode_word(w).encode() == w


def test_parity_closure_exhaustive_labels():
    for label in range(256):
        for data in (0, 1, 0x7FFFF, 0x2AAAA):
            w = codec.encode_word(Label(label), label & 3, data, (label >> 2) & 3)
            assert naive_popcount(w) % 2 == 1


# --- hex text ----------------------------------------------------------------


def test_hex_text():
    assert codec.word_hex(0xe189a8c1) == "E189A8C1"
    assert codec.parse_hex("e189a8c1") == 0xE189A8C1
    assert codec.parse_hex("0xE189A8C1") == 0xE189A8C1
    for bad in ("ZZZ", "E189A8C", "E189A8C11", "GG000000", ""):
        with pytest.raises(MalformedHexError):
            codec.parse_hex(bad)


# --- registry and breakdown ---------------------------------------------------


def test_registry_mapping_roundtrip():
    reg = codec.default_registry()
    again = LabelRegistry.from_mapping(reg.to_mapping())
    assert again.formats == reg.formats


def test_registry_extension_without_code():
    reg = LabelRegistry.from_mapping({"100": {"kind": "bcd", "name": "freq"}})
    w = codec.encode_word(Label(0o100), 0, Bcd((1, 2, 3, 4, 5)), 0)
    assert codec.decode_word(w, reg).data == Bcd((1, 2, 3, 4, 5))
    with pytest.raises(ValueError):
        LabelFormat("float")


def test_breakdown_rows():
    rows = dict(codec.breakdown(0xE189A8C1))
    assert rows["binary"] == "1110 0001 1000 1001 1010 1000 1100 0001"
    assert rows["label (as received)"] == "11000001"
    assert rows["label (reversed)"] == "10000011"
    assert rows["label (octal)"] == "203"
    assert rows["payload"] == "BNR 12,597 ft MSL"
    assert "OK" in rows["parity"]
    assert "PARITY INVALID" in dict(codec.breakdown(0xE189A8C0))["parity"]
