"""Deterministic canonical byte encoding for everything that gets hashed.

Hash agreement across nodes needs bit-exact bytes, so the encoding is a
fixed binary form rather than a text format:

- unsigned integer: 8 bytes big-endian (values must fit in 64 bits)
- byte sequence / UTF-8 text: 8-byte big-endian byte length, then the bytes
- list: 8-byte big-endian element count, then the element encodings in order
- record: field encodings concatenated in declared order, no tags or padding

Python values map onto this as ``int`` (unsigned), ``bytes``, ``str``,
``list``/``tuple`` (count-prefixed list) and :class:`Record` (a tuple marked
as a record, encoded without a count prefix). Decoding is schema-driven via
:class:`ByteReader` because records carry no tags.
"""

from __future__ import annotations

from typing import Union

U64_MAX = (1 << 64) - 1

CanonicalValue = Union[int, bytes, str, list, tuple, "Record"]


class EncodingError(ValueError):
    pass


class DecodeError(ValueError):
    pass


class Record(tuple):
    """Marks a tuple of fields to be encoded in order with no count prefix."""

    __slots__ = ()


def encode_uint(value: int) -> bytes:
    if not isinstance(value, int) or isinstance(value, bool):
        raise EncodingError(f"expected unsigned integer, got {type(value).__name__}")
    if value < 0 or value > U64_MAX:
        raise EncodingError(f"integer out of 64-bit unsigned range: {value}")
    return value.to_bytes(8, "big")


def encode_bytes(value: bytes) -> bytes:
    return encode_uint(len(value)) + bytes(value)


def encode_text(value: str) -> bytes:
    return encode_bytes(value.encode("utf-8"))


def encode_canonical(value: CanonicalValue) -> bytes:
    """Encode a value tree into canonical bytes."""
    if isinstance(value, bool):
        raise EncodingError("bool is not a canonical value")
    if isinstance(value, int):
        return encode_uint(value)
    if isinstance(value, (bytes, bytearray, memoryview)):
        return encode_bytes(bytes(value))
    if isinstance(value, str):
        return encode_text(value)
    if isinstance(value, Record):
        return b"".join(encode_canonical(field) for field in value)
    if isinstance(value, (list, tuple)):
        body = b"".join(encode_canonical(item) for item in value)
        return encode_uint(len(value)) + body
    raise EncodingError(f"cannot canonically encode {type(value).__name__}")


class ByteReader:
    """Sequential reader for canonical bytes; the caller supplies the shape.

    Every read checks the declared length against the remaining input so a
    corrupted length prefix fails cleanly instead of over-allocating.
    """

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    @property
    def remaining(self) -> int:
        return len(self._data) - self._pos

    def read_uint(self) -> int:
        if self.remaining < 8:
            raise DecodeError("truncated integer")
        value = int.from_bytes(self._data[self._pos : self._pos + 8], "big")
        self._pos += 8
        return value

    def read_bytes(self) -> bytes:
        length = self.read_uint()
        if length > self.remaining:
            raise DecodeError(f"length {length} overruns remaining {self.remaining} bytes")
        value = self._data[self._pos : self._pos + length]
        self._pos += length
        return value

    def read_text(self) -> str:
        raw = self.read_bytes()
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError(f"invalid UTF-8 text: {exc}") from exc

    def read_count(self) -> int:
        count = self.read_uint()
        # No element encodes to fewer than 8 bytes, so this bounds list sizes.
        if count > self.remaining:
            raise DecodeError(f"list count {count} overruns remaining input")
        return count

    def expect_end(self) -> None:
        if self.remaining != 0:
            raise DecodeError(f"{self.remaining} trailing bytes after value")
