"""Wire format tests: layouts, round-trips, quantizer behavior."""

import math
from random import Random

import pytest
from hypothesis import given, strategies as st

from abpsim.codec import (
    NO_CLUSTER,
    DecodingError,
    EncodingError,
    HelloPacket,
    ProtocolVariant,
    Quantizer,
    decode_hello,
    encode_hello,
    format_bits,
    packet_size_bits,
)

ALL_VARIANTS = list(ProtocolVariant)


def random_packet(rng, variant):
    if variant in (ProtocolVariant.LID, ProtocolVariant.HD):
        return HelloPacket(mh_id=rng.randrange(255))
    if variant is ProtocolVariant.VC:
        return HelloPacket(
            mh_id=rng.randrange(255),
            ch_id=rng.randrange(256),
            chc_q=rng.randrange(256),
        )
    return HelloPacket(
        mh_id=rng.randrange(255),
        ch_id=rng.randrange(256),
        chc_q=rng.randrange(256),
        option=rng.randrange(16),
        bp_code=rng.randrange(256),
    )


def test_packet_sizes():
    assert packet_size_bits(ProtocolVariant.LID) == 8
    assert packet_size_bits(ProtocolVariant.HD) == 8
    assert packet_size_bits(ProtocolVariant.VC) == 32
    assert packet_size_bits(ProtocolVariant.ABP) == 36


def test_abp_zero_packet_is_all_zero_bits():
    pkt = HelloPacket(mh_id=0, ch_id=0, chc_q=0, option=0, bp_code=0)
    assert encode_hello(pkt, ProtocolVariant.ABP) == "0" * 36


def test_abp_known_layout():
    pkt = HelloPacket(mh_id=1, ch_id=255, chc_q=8, option=10, bp_code=1)
    bits = encode_hello(pkt, ProtocolVariant.ABP)
    assert bits == "00000001" + "11111111" + "00001000" + "1010" + "00000001"
    assert decode_hello(bits, ProtocolVariant.ABP) == pkt
    assert format_bits(bits, ProtocolVariant.ABP) == (
        "00000001 11111111 00001000 1010 00000001"
    )


def test_lid_packet_is_just_the_id():
    assert encode_hello(HelloPacket(mh_id=7), ProtocolVariant.LID) == "00000111"


def test_decode_zero_abp():
    pkt = decode_hello("0" * 36, ProtocolVariant.ABP)
    assert pkt == HelloPacket(mh_id=0, ch_id=0, chc_q=0, option=0, bp_code=0)


def test_wrong_length_rejected():
    with pytest.raises(DecodingError):
        decode_hello("0" * 8, ProtocolVariant.ABP)
    with pytest.raises(DecodingError):
        decode_hello("0" * 36, ProtocolVariant.LID)


def test_non_binary_rejected():
    with pytest.raises(DecodingError):
        decode_hello("0000000x", ProtocolVariant.LID)


def test_field_overflow_names_field():
    with pytest.raises(EncodingError, match="option"):
        encode_hello(HelloPacket(mh_id=1, option=16), ProtocolVariant.ABP)
    with pytest.raises(EncodingError, match="mh_id"):
        encode_hello(HelloPacket(mh_id=255), ProtocolVariant.LID)


def test_uncarried_fields_must_stay_default():
    with pytest.raises(EncodingError, match="ch_id"):
        encode_hello(HelloPacket(mh_id=1, ch_id=5), ProtocolVariant.LID)
    with pytest.raises(EncodingError, match="option"):
        encode_hello(HelloPacket(mh_id=1, option=3), ProtocolVariant.VC)


def test_vc_reserved_bits_must_be_zero():
    bits = "0" * 24 + "00000001"
    with pytest.raises(DecodingError, match="reserved"):
        decode_hello(bits, ProtocolVariant.VC)


def test_roundtrip_randomized():
    rng = Random(2024)
    for variant in ALL_VARIANTS:
        for _ in range(500):
            pkt = random_packet(rng, variant)
            bits = encode_hello(pkt, variant)
            assert len(bits) == packet_size_bits(variant)
            assert decode_hello(bits, variant) == pkt


@given(
    mh_id=st.integers(0, 254),
    ch_id=st.integers(0, 255),
    chc_q=st.integers(0, 255),
    option=st.integers(0, 15),
    bp_code=st.integers(0, 255),
)
def test_roundtrip_property_abp(mh_id, ch_id, chc_q, option, bp_code):
    pkt = HelloPacket(mh_id, ch_id, chc_q, option, bp_code)
    bits = encode_hello(pkt, ProtocolVariant.ABP)
    assert len(bits) == 36
    assert decode_hello(bits, ProtocolVariant.ABP) == pkt


def test_quantizer_zero():
    assert Quantizer(0.05).quantize(0.0) == 0


def test_quantizer_table_scale():
    # 3.8 / 0.05 = 76: the reference competence values are exact on this grid.
    assert Quantizer(0.05).quantize(3.8) == 76


def test_quantizer_clamps():
    q = Quantizer(0.05)
    assert q.quantize(1e6) == 255
    assert q.quantize(-3.0) == 0


def test_quantizer_rejects_nonfinite():
    q = Quantizer(0.05)
    for bad in (math.nan, math.inf, -math.inf):
        with pytest.raises(ValueError):
            q.quantize(bad)


def test_quantizer_rejects_bad_scale():
    with pytest.raises(ValueError):
        Quantizer(0.0)


@given(st.floats(-50, 50), st.floats(-50, 50))
def test_quantizer_monotone(x, y):
    q = Quantizer(0.05)
    lo, hi = sorted((x, y))
    assert q.quantize(lo) <= q.quantize(hi)


@given(st.floats(-10, 20))
def test_quantizer_bounded_error(x):
    q = Quantizer(0.05)
    clamped = min(max(x, 0.0), 255 * q.scale)
    assert abs(q.roundtrip(x) - clamped) <= q.scale / 2 + 1e-12
