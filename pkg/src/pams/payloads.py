"""Typed transaction payloads and their canonical byte schemas.

Each tx_type names a versioned payload schema (field order is part of the
canonical-encoding contract; any change bumps the ``.vN`` suffix). Payloads
travel as canonical bytes inside transactions and as plain JSON objects at
the HTTP API; this module converts between the two.

Schema kinds: ``u64``, ``text``, ``digest`` (64-byte hash reference),
``("list", kind)`` and ``("record", fields)``.
"""

from __future__ import annotations

from typing import Any

from .codec import ByteReader, DecodeError, encode_bytes, encode_text, encode_uint
from .hashing import Digest

# Procurement workflow.
PR_SUBMIT = "pr.submit.v1"
PR_OPEN_CANVASS = "pr.open_canvass.v1"
AOC_SUBMIT = "aoc.submit.v1"
PO_ISSUE = "po.issue.v1"
DELIVERY_RECORD = "delivery.record.v1"
INSPECTION_RECORD = "inspection.record.v1"
PO_CLOSE = "po.close.v1"
PR_REJECT = "pr.reject.v1"

# Asset registry and custody.
ASSET_REGISTER = "asset.register.v1"
MR_ISSUE = "mr.issue.v1"
MR_TRANSFER = "mr.transfer.v1"
ASSET_DISPOSE = "asset.dispose.v1"

# Administration.
ADMIN_ADD_USER = "admin.add_user.v1"
ADMIN_DEACTIVATE_USER = "admin.deactivate_user.v1"
ADMIN_ADD_VALIDATOR = "admin.add_validator.v1"
ADMIN_REMOVE_VALIDATOR = "admin.remove_validator.v1"

PROCUREMENT_TYPES = (
    PR_SUBMIT,
    PR_OPEN_CANVASS,
    AOC_SUBMIT,
    PO_ISSUE,
    DELIVERY_RECORD,
    INSPECTION_RECORD,
    PO_CLOSE,
    PR_REJECT,
)
ASSET_TYPES = (ASSET_REGISTER, MR_ISSUE, MR_TRANSFER, ASSET_DISPOSE)
ADMIN_TYPES = (
    ADMIN_ADD_USER,
    ADMIN_DEACTIVATE_USER,
    ADMIN_ADD_VALIDATOR,
    ADMIN_REMOVE_VALIDATOR,
)

SCHEMAS: dict[str, list[tuple[str, Any]]] = {
    PR_SUBMIT: [
        ("lines", ("list", ("record", [
            ("description", "text"),
            ("quantity", "u64"),
            ("unit", "text"),
            ("specs", "text"),
        ]))),
    ],
    PR_OPEN_CANVASS: [("pr_ref", "digest")],
    AOC_SUBMIT: [
        ("pr_ref", "digest"),
        ("quotes", ("list", ("record", [
            ("supplier", "text"),
            ("unit_prices", ("list", "u64")),
        ]))),
        ("winner_index", "u64"),
    ],
    PO_ISSUE: [("aoc_ref", "digest")],
    DELIVERY_RECORD: [
        ("po_ref", "digest"),
        ("lines", ("list", ("record", [
            ("received", "u64"),
            ("remarks", "text"),
        ]))),
    ],
    INSPECTION_RECORD: [
        ("dc_ref", "digest"),
        ("verdicts", ("list", ("record", [
            ("passed", "u64"),
            ("reason", "text"),
        ]))),
    ],
    PO_CLOSE: [("po_ref", "digest")],
    PR_REJECT: [("pr_ref", "digest")],
    ASSET_REGISTER: [
        ("po_ref", "digest"),
        ("asset_uid", "text"),
        ("description", "text"),
    ],
    MR_ISSUE: [("asset_uid", "text"), ("custodian", "text")],
    MR_TRANSFER: [("asset_uid", "text"), ("custodian", "text")],
    ASSET_DISPOSE: [("asset_uid", "text"), ("reason", "text")],
    ADMIN_ADD_USER: [
        ("user_id", "text"),
        ("display_name", "text"),
        ("roles", ("list", "text")),
    ],
    ADMIN_DEACTIVATE_USER: [("user_id", "text")],
    ADMIN_ADD_VALIDATOR: [("validator_id", "text")],
    ADMIN_REMOVE_VALIDATOR: [("validator_id", "text")],
}

ALL_TYPES = tuple(SCHEMAS)


def _encode_kind(kind: Any, value: Any) -> bytes:
    if kind == "u64":
        if not isinstance(value, int) or isinstance(value, bool) or value < 0:
            raise DecodeError(f"expected unsigned integer, got {value!r}")
        return encode_uint(value)
    if kind == "text":
        if not isinstance(value, str):
            raise DecodeError(f"expected text, got {type(value).__name__}")
        return encode_text(value)
    if kind == "digest":
        return encode_bytes(bytes(Digest(bytes(value))))
    tag = kind[0]
    if tag == "list":
        if not isinstance(value, (list, tuple)):
            raise DecodeError(f"expected list, got {type(value).__name__}")
        return encode_uint(len(value)) + b"".join(_encode_kind(kind[1], v) for v in value)
    if tag == "record":
        out = []
        for name, sub in kind[1]:
            if name not in value:
                raise DecodeError(f"missing field {name!r}")
            out.append(_encode_kind(sub, value[name]))
        return b"".join(out)
    raise DecodeError(f"unknown schema kind {kind!r}")


def _decode_kind(kind: Any, reader: ByteReader) -> Any:
    if kind == "u64":
        return reader.read_uint()
    if kind == "text":
        return reader.read_text()
    if kind == "digest":
        raw = reader.read_bytes()
        try:
            return Digest(raw)
        except ValueError as exc:
            raise DecodeError(str(exc)) from exc
    tag = kind[0]
    if tag == "list":
        count = reader.read_count()
        return [_decode_kind(kind[1], reader) for _ in range(count)]
    if tag == "record":
        return {name: _decode_kind(sub, reader) for name, sub in kind[1]}
    raise DecodeError(f"unknown schema kind {kind!r}")


def encode_payload(tx_type: str, payload: dict) -> bytes:
    """Canonical bytes for a payload dict; raises DecodeError if malformed."""
    if tx_type not in SCHEMAS:
        raise DecodeError(f"unknown tx_type {tx_type!r}")
    return _encode_kind(("record", SCHEMAS[tx_type]), payload)


def decode_payload(tx_type: str, data: bytes) -> dict:
    """Parse canonical payload bytes back into a dict, consuming all input."""
    if tx_type not in SCHEMAS:
        raise DecodeError(f"unknown tx_type {tx_type!r}")
    reader = ByteReader(data)
    value = _decode_kind(("record", SCHEMAS[tx_type]), reader)
    reader.expect_end()
    return value


def _kind_to_json(kind: Any, value: Any) -> Any:
    if kind == "digest":
        return value.hex()
    if kind in ("u64", "text"):
        return value
    if kind[0] == "list":
        return [_kind_to_json(kind[1], v) for v in value]
    return {name: _kind_to_json(sub, value[name]) for name, sub in kind[1]}


def _kind_from_json(kind: Any, value: Any) -> Any:
    if kind == "digest":
        if not isinstance(value, str):
            raise DecodeError("digest references must be 128-char hex strings")
        try:
            return Digest.from_hex(value)
        except ValueError as exc:
            raise DecodeError(f"bad digest hex: {exc}") from exc
    if kind in ("u64", "text"):
        return value
    if kind[0] == "list":
        if not isinstance(value, list):
            raise DecodeError("expected a JSON array")
        return [_kind_from_json(kind[1], v) for v in value]
    if not isinstance(value, dict):
        raise DecodeError("expected a JSON object")
    out = {}
    for name, sub in kind[1]:
        if name not in value:
            raise DecodeError(f"missing field {name!r}")
        out[name] = _kind_from_json(sub, value[name])
    return out


def payload_to_json(tx_type: str, payload: dict) -> dict:
    """Render a payload dict with digests as hex, for the HTTP API."""
    return _kind_to_json(("record", SCHEMAS[tx_type]), payload)


def payload_from_json(tx_type: str, obj: dict) -> dict:
    """Parse an API JSON payload object (hex digests) into internal form."""
    if tx_type not in SCHEMAS:
        raise DecodeError(f"unknown tx_type {tx_type!r}")
    return _kind_from_json(("record", SCHEMAS[tx_type]), obj)
