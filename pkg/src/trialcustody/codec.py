"""Canonical byte encoding used for everything that gets hashed or signed.

One deterministic, length-prefixed layout; field order is fixed by the
caller and documented in docs/wire_format.md.  Integers are big-endian and
unsigned; variable-length values carry a u32 length prefix; lists carry a
u32 element count followed by the encoded elements.
"""

from __future__ import annotations

from typing import Callable, List, TypeVar

U32_MAX = 2**32 - 1
U64_MAX = 2**64 - 1

T = TypeVar("T")


class CodecError(Exception):
    """Malformed canonical bytes (truncated, trailing data, bad prefix)."""


def encode_u32(value: int) -> bytes:
    if not 0 <= value <= U32_MAX:
        raise CodecError(f"u32 out of range: {value}")
    return value.to_bytes(4, "big")


def encode_u64(value: int) -> bytes:
    if not 0 <= value <= U64_MAX:
        raise CodecError(f"u64 out of range: {value}")
    return value.to_bytes(8, "big")


def encode_bytes(value: bytes) -> bytes:
    return encode_u32(len(value)) + value


def encode_str(value: str) -> bytes:
    return encode_bytes(value.encode("utf-8"))


def encode_list(items: List[bytes]) -> bytes:
    """Encode a list whose elements are already canonically encoded."""
    return encode_u32(len(items)) + b"".join(items)


class Reader:
    """Sequential decoder over one canonical byte string."""

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    def _take(self, n: int) -> bytes:
        if self._pos + n > len(self._data):
            raise CodecError("truncated input")
        chunk = self._data[self._pos : self._pos + n]
        self._pos += n
        return chunk

    def u32(self) -> int:
        return int.from_bytes(self._take(4), "big")

    def u64(self) -> int:
        return int.from_bytes(self._take(8), "big")

    def bytes(self) -> bytes:
        return self._take(self.u32())

    def str(self) -> str:
        raw = self.bytes()
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CodecError("invalid utf-8 in string field") from exc

    def list(self, element: Callable[["Reader"], T]) -> List[T]:
        count = self.u32()
        return [element(self) for _ in range(count)]

    def expect_eof(self) -> None:
        if self._pos != len(self._data):
            raise CodecError(f"{len(self._data) - self._pos} trailing bytes")
