"""SHA3-512 digests and the shared-secret MAC used for validator approvals.

Every hash in the system is SHA3-512 (FIPS 202), giving 64-byte digests
rendered as 128 lowercase hex characters in APIs, logs, and QR payloads.
Approvals are authenticated with ``sha3_512(secret || message)``; the sponge
construction is not subject to length extension, so the plain prefix-keyed
form is a sound MAC here.
"""

from __future__ import annotations

import hashlib
import secrets as _secrets

DIGEST_LEN = 64
SECRET_LEN = 32


class Digest(bytes):
    """A 64-byte SHA3-512 digest. Construction validates the length."""

    def __new__(cls, value: bytes) -> "Digest":
        if len(value) != DIGEST_LEN:
            raise ValueError(f"digest must be {DIGEST_LEN} bytes, got {len(value)}")
        return super().__new__(cls, value)

    @classmethod
    def from_hex(cls, text: str) -> "Digest":
        return cls(bytes.fromhex(text))

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Digest({self.hex()[:16]}...)"


ZERO_DIGEST = Digest(b"\x00" * DIGEST_LEN)


class MacSecret(bytes):
    """A 32-byte validator approval secret. Never printed in full."""

    def __new__(cls, value: bytes) -> "MacSecret":
        if len(value) != SECRET_LEN:
            raise ValueError(f"secret must be {SECRET_LEN} bytes, got {len(value)}")
        return super().__new__(cls, value)

    @classmethod
    def generate(cls) -> "MacSecret":
        return cls(_secrets.token_bytes(SECRET_LEN))

    @classmethod
    def from_hex(cls, text: str) -> "MacSecret":
        return cls(bytes.fromhex(text))

    def __repr__(self) -> str:
        return "MacSecret(<redacted>)"

    __str__ = __repr__


def sha3_512(data: bytes) -> Digest:
    """FIPS 202 SHA3-512 of ``data``."""
    return Digest(hashlib.sha3_512(data).digest())


def mac_tag(secret: MacSecret, message: bytes) -> Digest:
    """Approval tag: sha3_512(secret || message)."""
    return sha3_512(bytes(secret) + message)


def mac_verify(secret: MacSecret, message: bytes, tag: bytes) -> bool:
    """Constant-content check: recompute and compare byte-for-byte."""
    return bytes(mac_tag(secret, message)) == bytes(tag)
