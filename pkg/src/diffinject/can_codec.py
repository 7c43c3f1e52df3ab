"""CAN 2.0A frame encoding, CRC-15, bit stuffing and attack schedules.

Bits use bus polarity: 0 is dominant, 1 is recessive.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .campaign import MessageSpec, count_dominant_groups
from .errors import StructuralError, ParameterError

CRC15_POLY = 0x4599  # x^15 + x^14 + x^10 + x^8 + x^7 + x^4 + x^3 + 1, top bit implicit
STUFF_LIMIT = 5


def crc15(bits: Sequence[int]) -> int:
    """CAN CRC-15 over unstuffed bits (SOF through the end of DATA), init 0."""
    crc = 0
    for b in bits:
        feedback = (int(b) & 1) ^ ((crc >> 14) & 1)
        crc = (crc << 1) & 0x7FFF
        if feedback:
            crc ^= CRC15_POLY
    return crc


def _to_bits(value: int, width: int) -> list[int]:
    return [(value >> (width - 1 - i)) & 1 for i in range(width)]


@dataclass(frozen=True)
class CanFrame:
    id: int
    dlc: int = 0
    data: bytes = b""

    def __post_init__(self):
        object.__setattr__(self, "data", bytes(self.data))
        if not 0 <= self.id < 1 << 11:
            raise StructuralError(f"identifier 0x{self.id:x} does not fit in 11 bits")
        if not 0 <= self.dlc <= 8:
            raise StructuralError(f"dlc {self.dlc} outside 0..8")
        if len(self.data) != self.dlc:
            raise StructuralError(f"dlc {self.dlc} but {len(self.data)} data bytes")

    def unstuffed_fields(self) -> list[tuple[str, list[int]]]:
        fields = [
            ("SOF", [0]),
            ("ID", _to_bits(self.id, 11)),
            ("RTR", [0]),
            ("IDE", [0]),
            ("r0", [0]),
            ("DLC", _to_bits(self.dlc, 4)),
        ]
        if self.data:
            fields.append(("DATA", [b for byte in self.data for b in _to_bits(byte, 8)]))
        return fields

    @property
    def crc(self) -> int:
        return crc15([b for _, bits in self.unstuffed_fields() for b in bits])


@dataclass(frozen=True)
class BitStream:
    bits: tuple[int, ...]
    annotations: tuple[str, ...]

    def __post_init__(self):
        if len(self.bits) != len(self.annotations):
            raise StructuralError("bits and annotations differ in length")

    def __len__(self):
        return len(self.bits)

    def to_string(self) -> str:
        return "".join(str(b) for b in self.bits)

    def stuffed_region(self) -> list[int]:
        return [b for b, tag in zip(self.bits, self.annotations) if tag in _STUFFED_TAGS]

    def to_dict(self) -> dict:
        return {
            "bits": self.to_string(),
            "annotated": [{"bit": b, "field": tag} for b, tag in zip(self.bits, self.annotations)],
        }


_STUFFED_TAGS = {"SOF", "ID", "RTR", "IDE", "r0", "DLC", "DATA", "CRC", "STUFF"}


def stuff(bits: Sequence[int], tags: Sequence[str] | None = None):
    """Insert an opposite-polarity bit after every 5 identical bits.

    Returns ``(bits, tags)``; inserted bits are tagged ``STUFF``.
    """
    tags = list(tags) if tags is not None else ["" for _ in bits]
    out, out_tags = [], []
    run, last = 0, None
    for b, tag in zip(bits, tags):
        out.append(b)
        out_tags.append(tag)
        run = run + 1 if b == last else 1
        last = b
        if run == STUFF_LIMIT:
            last = 1 - b
            out.append(last)
            out_tags.append("STUFF")
            run = 1
    return out, out_tags


def destuff(bits: Sequence[int]) -> list[int]:
    """Inverse of ``stuff``: drop the bit following each run of 5 identical bits."""
    out = []
    run, last = 0, None
    skip = False
    for b in bits:
        if skip:
            if b == last:
                raise StructuralError("stuff error: six identical consecutive bits")
            skip = False
            run, last = 1, b
            continue
        out.append(b)
        run = run + 1 if b == last else 1
        last = b
        if run == STUFF_LIMIT:
            skip = True
    return out


def encode_frame(f: CanFrame, ack_dominant: bool = True) -> BitStream:
    """Bit stream of a data frame as it appears on the bus.

    SOF through CRC is stuffed. With ``ack_dominant`` the ACK slot carries
    the dominant bit a receiving node (or the attacker) asserts; otherwise it
    is left recessive as a lone transmitter sends it.
    """
    head, head_tags = [], []
    for tag, bits in f.unstuffed_fields():
        head += bits
        head_tags += [tag] * len(bits)
    crc_bits = _to_bits(crc15(head), 15)
    bits, tags = stuff(head + crc_bits, head_tags + ["CRC"] * 15)
    tail = [("CRC_DEL", 1), ("ACK", 0 if ack_dominant else 1), ("ACK_DEL", 1)] + [("EOF", 1)] * 7
    for tag, b in tail:
        bits.append(b)
        tags.append(tag)
    return BitStream(tuple(bits), tuple(tags))


def unstuffed_bits(bs: BitStream) -> list[int]:
    """Frame bits SOF..CRC with the stuff bits removed, using the annotations."""
    return [b for b, tag in zip(bs.bits, bs.annotations) if tag in _STUFFED_TAGS and tag != "STUFF"]


@dataclass(frozen=True)
class AttackSchedule:
    intervals: tuple[tuple[float, float], ...]
    bit_time: float

    def to_dict(self) -> dict:
        return {"bit_time": self.bit_time, "intervals": [list(iv) for iv in self.intervals]}


def attack_schedule(bs: BitStream | Sequence[int], bit_time: float) -> AttackSchedule:
    """One radiation interval per maximal run of dominant bits."""
    if not bit_time > 0:
        raise ParameterError("bit_time must be > 0")
    bits = list(bs.bits if isinstance(bs, BitStream) else bs)
    intervals = []
    i = 0
    while i < len(bits):
        if bits[i] == 0:
            j = i
            while j < len(bits) and bits[j] == 0:
                j += 1
            intervals.append((i * bit_time, j * bit_time))
            i = j
        else:
            i += 1
    return AttackSchedule(tuple(intervals), bit_time)


def frame_to_message_spec(bs: BitStream | Sequence[int]) -> MessageSpec:
    """Idle-bus view: the line is recessive throughout, the stream is the target."""
    bits = list(bs.bits if isinstance(bs, BitStream) else bs)
    return MessageSpec(bits, [1] * len(bits))


def dominant_census(bs: BitStream) -> tuple[int, int]:
    return count_dominant_groups(bs.bits)


def parse_hex_bytes(text: str) -> bytes:
    text = text.replace(" ", "").replace(":", "")
    if text.lower().startswith("0x"):
        text = text[2:]
    try:
        return bytes.fromhex(text)
    except ValueError as exc:
        raise ParameterError(f"bad hex data {text!r}: {exc}") from None


FIG8_FRAME = CanFrame(id=0x001, dlc=0)
