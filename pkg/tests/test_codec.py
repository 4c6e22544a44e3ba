"""Canonical encoding: fixed byte layouts, round-trips, and injectivity."""

import random

import pytest

from pams.codec import (
    ByteReader,
    DecodeError,
    EncodingError,
    Record,
    encode_bytes,
    encode_canonical,
    encode_text,
    encode_uint,
)


def test_uint_layout():
    assert encode_uint(5) == bytes([0, 0, 0, 0, 0, 0, 0, 5])
    assert encode_uint(0) == b"\x00" * 8
    assert encode_uint(2**64 - 1) == b"\xff" * 8


def test_text_layout():
    assert encode_text("AB") == bytes([0, 0, 0, 0, 0, 0, 0, 2]) + b"AB"
    assert encode_text("") == b"\x00" * 8


def test_uint_bounds():
    with pytest.raises(EncodingError):
        encode_uint(-1)
    with pytest.raises(EncodingError):
        encode_uint(2**64)


def test_bytes_and_text_round_trip():
    blob = b"\x00\xff binary \x01"
    reader = ByteReader(encode_bytes(blob) + encode_text("héllo"))
    assert reader.read_bytes() == blob
    assert reader.read_text() == "héllo"
    reader.expect_end()


def test_reader_rejects_truncation_and_trailing():
    data = encode_text("hello")
    with pytest.raises(DecodeError):
        ByteReader(data[:-1]).read_text()
    reader = ByteReader(data + b"\x00")
    reader.read_text()
    with pytest.raises(DecodeError):
        reader.expect_end()


def test_record_and_list_nesting():
    value = Record(("po", 3, [b"a", b"bb"], Record((1, "x"))))
    data = encode_canonical(value)
    reader = ByteReader(data)
    assert reader.read_text() == "po"
    assert reader.read_uint() == 3
    assert reader.read_count() == 2
    assert reader.read_bytes() == b"a"
    assert reader.read_bytes() == b"bb"
    assert reader.read_uint() == 1
    assert reader.read_text() == "x"
    reader.expect_end()


def test_list_vs_record_distinction():
    # Lists carry a count prefix; records are bare concatenation.
    assert encode_canonical([1, 2]) == encode_uint(2) + encode_uint(1) + encode_uint(2)
    assert encode_canonical(Record((1, 2))) == encode_uint(1) + encode_uint(2)


def test_unsupported_type_rejected():
    with pytest.raises(EncodingError):
        encode_canonical(1.5)
    with pytest.raises(EncodingError):
        encode_canonical(None)


def test_fixed_shape_injectivity_fuzz():
    """10^4 random distinct (text, bytes, uint) records encode distinctly."""
    rng = random.Random(20260814)
    seen: dict[bytes, tuple] = {}
    alphabet = "abcdefghij|,:"
    for _ in range(10_000):
        value = (
            "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 12))),
            bytes(rng.randrange(256) for _ in range(rng.randrange(0, 12))),
            rng.randrange(2**40),
        )
        encoded = encode_canonical(Record(value))
        if encoded in seen:
            assert seen[encoded] == value, "two values share one encoding"
        seen[encoded] = value


def test_adjacent_field_boundaries_do_not_collide():
    # ("ab", "c") and ("a", "bc") must differ thanks to length prefixes.
    a = encode_canonical(Record(("ab", "c")))
    b = encode_canonical(Record(("a", "bc")))
    assert a != b
