"""Digest and keyed-tag behavior against published SHA3-512 test vectors."""

import hashlib

import pytest

from pams.hashing import Digest, MacSecret, ZERO_DIGEST, mac_tag, mac_verify, sha3_512

# FIPS 202 / NIST CAVP vectors for SHA3-512 (message bytes -> hex digest).
FIPS_VECTORS = [
    (
        b"",
        "a69f73cca23a9ac5c8b567dc185a756e97c982164fe25859e0d1dcc1475c80a6"
        "15b2123af1f5f94c11e3e9402c3ac558f500199d95b6d3e301758586281dcd26",
    ),
    (
        b"abc",
        "b751850b1a57168a5693cd924b6b096e08f621827444f70d884f5d0240d2712e"
        "10e116e9192af3c91a7ec57647e3934057340b4cf408d5a56592f8274eec53f0",
    ),
    (
        b"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq",
        "04a371e84ecfb5b8b77cb48610fca8182dd457ce6f326a0fd3d7ec2f1e91636d"
        "ee691fbe0c985302ba1b0d8dc78c086346b533b49c030d99a27daf1139d6e75e",
    ),
    (
        b"abcdefghbcdefghicdefghijdefghijkefghijklfghijklmghijklmnhijklmno"
        b"ijklmnopjklmnopqklmnopqrlmnopqrsmnopqrstnopqrstu",
        "afebb2ef542e6579c50cad06d2e578f9f8dd6881d7dc824d26360feebf18a4fa"
        "73e3261122948efcfd492e74e82e2189ed0fb440d187f382270cb455f21dd185",
    ),
    (
        b"a" * 1_000_000,
        "3c3a876da14034ab60627c077bb98f7e120a2a5370212dffb3385a18d4f38859"
        "ed311d0a9d5141ce9cc5c66ee689b266a8aa18ace8282a0e0db596c90b0a7b87",
    ),
]


@pytest.mark.parametrize("message,expected", FIPS_VECTORS, ids=["empty", "abc", "448bit", "896bit", "1M"])
def test_fips_vectors(message, expected):
    assert sha3_512(message).hex() == expected


def test_digest_is_64_bytes():
    assert len(sha3_512(b"x")) == 64
    assert len(ZERO_DIGEST) == 64 and set(ZERO_DIGEST) == {0}
    with pytest.raises(ValueError):
        Digest(b"\x00" * 63)


def test_digest_hex_round_trip():
    d = sha3_512(b"round trip")
    assert Digest.from_hex(d.hex()) == d
    with pytest.raises(ValueError):
        Digest.from_hex("zz" * 64)


def test_mac_tag_is_prefix_keyed_hash():
    # Independent route: the tag must equal a plain hash of secret || message.
    secret = MacSecret(b"\x07" * 32)
    msg = b"approve this block"
    expected = hashlib.sha3_512(bytes(secret) + msg).digest()
    assert bytes(mac_tag(secret, msg)) == expected


def test_mac_verify_accepts_only_exact_tag():
    secret = MacSecret.generate()
    other = MacSecret.generate()
    msg = b"payload"
    tag = mac_tag(secret, msg)
    assert mac_verify(secret, msg, tag)
    assert not mac_verify(other, msg, tag)
    assert not mac_verify(secret, msg + b"x", tag)
    flipped = Digest(bytes(tag[:-1]) + bytes([tag[-1] ^ 1]))
    assert not mac_verify(secret, msg, flipped)


def test_secret_sizes_and_hex():
    s = MacSecret.generate()
    assert len(s) == 32
    assert MacSecret.from_hex(s.hex()) == s
    with pytest.raises(ValueError):
        MacSecret(b"short")
