"""Fixed-width bit strings backed by Python integers, bit 0 first.

Slicing is MSB-first: bit index 0 is the most significant bit of `value`,
so slice(0, w) of a width-w string is the string itself and concatenation
appends on the right.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable


@dataclass(frozen=True)
class BitString:
    width: int
    value: int

    def __post_init__(self) -> None:
        if self.width < 0:
            raise ValueError(f"negative width {self.width}")
        if not 0 <= self.value < (1 << self.width):
            raise ValueError(f"value {self.value} does not fit in {self.width} bits")

    def __xor__(self, other: "BitString") -> "BitString":
        if self.width != other.width:
            raise ValueError(f"width mismatch: {self.width} vs {other.width}")
        return BitString(self.width, self.value ^ other.value)

    def slice(self, start: int, stop: int) -> "BitString":
        if not 0 <= start <= stop <= self.width:
            raise ValueError(f"slice {start}:{stop} outside width {self.width}")
        width = stop - start
        return BitString(width, (self.value >> (self.width - stop)) & ((1 << width) - 1))

    def bit(self, index: int) -> int:
        if not 0 <= index < self.width:
            raise ValueError(f"bit index {index} outside width {self.width}")
        return (self.value >> (self.width - 1 - index)) & 1

    def flip(self, index: int) -> "BitString":
        """Copy with the bit at `index` toggled."""
        if not 0 <= index < self.width:
            raise ValueError(f"bit index {index} outside width {self.width}")
        return BitString(self.width, self.value ^ (1 << (self.width - 1 - index)))


def concat(parts: Iterable[BitString]) -> BitString:
    width = 0
    value = 0
    for part in parts:
        width += part.width
        value = (value << part.width) | part.value
    return BitString(width, value)


def random_bits(width: int, rng: random.Random) -> BitString:
    return BitString(width, rng.getrandbits(width) if width else 0)


def pack_records(parts: Iterable[BitString]) -> bytes:
    """Frame bit strings for transport: 4-byte big-endian bit length, then the
    payload packed MSB-first and zero-padded to a byte boundary."""
    out = bytearray()
    for part in parts:
        if part.width >= 1 << 32:
            raise ValueError(f"record of {part.width} bits exceeds the 32-bit frame")
        out += part.width.to_bytes(4, "big")
        nbytes = (part.width + 7) // 8
        padded = part.value << (nbytes * 8 - part.width) if part.width else 0
        out += padded.to_bytes(nbytes, "big")
    return bytes(out)


def unpack_records(data: bytes) -> list[BitString]:
    parts: list[BitString] = []
    pos = 0
    while pos < len(data):
        if pos + 4 > len(data):
            raise ValueError(f"truncated record header at byte {pos}")
        width = int.from_bytes(data[pos : pos + 4], "big")
        pos += 4
        nbytes = (width + 7) // 8
        if pos + nbytes > len(data):
            raise ValueError(f"truncated record payload at byte {pos}")
        raw = int.from_bytes(data[pos : pos + nbytes], "big")
        pos += nbytes
        pad = nbytes * 8 - width
        if raw & ((1 << pad) - 1):
            raise ValueError("nonzero padding bits in record")
        parts.append(BitString(width, raw >> pad))
    return parts
