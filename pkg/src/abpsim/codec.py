"""Bit-exact Hello packet codec for the four clustering protocol variants.

Hello messages are the only control traffic in the simulator. Packet sizes
are 8, 8, 32 and 36 bits for LID, HD, VC and ABP respectively. The ABP
layout is MH_ID(8) | CH_ID(8) | CHC(8) | Option(4) | BP(8), most significant
bit first. LID and HD packets carry only the sender id; VC packets carry
MH_ID(8) | CH_ID(8) | Vote(8) | Reserved(8).

A bit-string here is a plain ``str`` of '0'/'1' characters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

__all__ = [
    "NO_CLUSTER",
    "MAX_NODE_ID",
    "ProtocolVariant",
    "HelloPacket",
    "Quantizer",
    "EncodingError",
    "DecodingError",
    "packet_size_bits",
    "encode_hello",
    "decode_hello",
    "format_bits",
]

# Reserved CH_ID code meaning "not a member of any cluster". An unsigned
# 8-bit field cannot hold a negative sentinel, so 255 is reserved and valid
# node ids are 0..254.
NO_CLUSTER = 255
MAX_NODE_ID = 254


class ProtocolVariant(Enum):
    LID = "LID"
    HD = "HD"
    VC = "VC"
    ABP = "ABP"


_PACKET_BITS = {
    ProtocolVariant.LID: 8,
    ProtocolVariant.HD: 8,
    ProtocolVariant.VC: 32,
    ProtocolVariant.ABP: 36,
}

# Field layout per variant: (name, width in bits).
_LAYOUT = {
    ProtocolVariant.LID: (("mh_id", 8),),
    ProtocolVariant.HD: (("mh_id", 8),),
    ProtocolVariant.VC: (("mh_id", 8), ("ch_id", 8), ("chc_q", 8), ("_reserved", 8)),
    ProtocolVariant.ABP: (
        ("mh_id", 8),
        ("ch_id", 8),
        ("chc_q", 8),
        ("option", 4),
        ("bp_code", 8),
    ),
}


class EncodingError(ValueError):
    """A packet field does not fit the wire format of the chosen variant."""


class DecodingError(ValueError):
    """A bit-string cannot be parsed as a packet of the chosen variant."""


def packet_size_bits(variant: ProtocolVariant) -> int:
    """Wire size of one Hello packet, in bits."""
    return _PACKET_BITS[variant]


@dataclass(frozen=True)
class HelloPacket:
    """One Hello control message.

    Fields not carried by a variant must sit at their defaults, otherwise
    encoding fails (the information would be silently lost on the wire).
    """

    mh_id: int
    ch_id: int = NO_CLUSTER
    chc_q: int = 0
    option: int = 0
    bp_code: int = 0

    def field(self, name: str) -> int:
        if name == "_reserved":
            return 0
        return getattr(self, name)


def _check_range(name: str, value: int, width: int) -> None:
    if not isinstance(value, int) or isinstance(value, bool):
        raise EncodingError(f"field {name} must be an integer, got {value!r}")
    if not 0 <= value < (1 << width):
        raise EncodingError(
            f"field {name} value {value} does not fit {width} bits"
        )


def encode_hello(packet: HelloPacket, variant: ProtocolVariant) -> str:
    """Encode a packet into exactly packet_size_bits(variant) bits, MSB first."""
    if not 0 <= packet.mh_id <= MAX_NODE_ID:
        raise EncodingError(f"field mh_id value {packet.mh_id} outside 0..{MAX_NODE_ID}")
    carried = {name for name, _ in _LAYOUT[variant]}
    for name, default in (
        ("ch_id", NO_CLUSTER),
        ("chc_q", 0),
        ("option", 0),
        ("bp_code", 0),
    ):
        if name not in carried and packet.field(name) != default:
            raise EncodingError(
                f"field {name} is not carried by {variant.value} packets"
            )
    parts = []
    for name, width in _LAYOUT[variant]:
        value = packet.field(name)
        _check_range(name, value, width)
        parts.append(format(value, f"0{width}b"))
    return "".join(parts)


def decode_hello(bits: str, variant: ProtocolVariant) -> HelloPacket:
    """Exact inverse of encode_hello on all valid packets."""
    expected = _PACKET_BITS[variant]
    if len(bits) != expected:
        raise DecodingError(
            f"{variant.value} packet must be {expected} bits, got {len(bits)}"
        )
    if any(c not in "01" for c in bits):
        raise DecodingError("bit-string may contain only '0' and '1'")
    values = {}
    pos = 0
    for name, width in _LAYOUT[variant]:
        values[name] = int(bits[pos : pos + width], 2)
        pos += width
    if values.pop("_reserved", 0) != 0:
        raise DecodingError("reserved bits must be zero in VC packets")
    if values["mh_id"] > MAX_NODE_ID:
        raise DecodingError(f"mh_id {values['mh_id']} outside 0..{MAX_NODE_ID}")
    return HelloPacket(**values)


def format_bits(bits: str, variant: ProtocolVariant) -> str:
    """Group a raw bit-string by field boundaries for debug output."""
    groups = []
    pos = 0
    for _, width in _LAYOUT[variant]:
        groups.append(bits[pos : pos + width])
        pos += width
    return " ".join(groups)


@dataclass(frozen=True)
class Quantizer:
    """Fixed-point quantizer for the 8-bit competence (CHC) field.

    One code step equals ``scale`` competence units, so codes 0..255 cover
    [0, 255*scale]. The default scale of 0.05 suits battery values on a
    small unit scale; use 0.5 for percentage-scale batteries.
    """

    scale: float = 0.05

    def __post_init__(self) -> None:
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"quantizer scale must be positive, got {self.scale}")

    def quantize(self, value: float) -> int:
        if not math.isfinite(value):
            raise ValueError(f"cannot quantize non-finite value {value!r}")
        clamped = min(max(value, 0.0), 255.0 * self.scale)
        return min(round(clamped / self.scale), 255)

    def dequantize(self, code: int) -> float:
        if not 0 <= code <= 255:
            raise ValueError(f"code {code} outside 0..255")
        return code * self.scale

    def roundtrip(self, value: float) -> float:
        """The on-wire representation of a competence value."""
        return self.dequantize(self.quantize(value))
