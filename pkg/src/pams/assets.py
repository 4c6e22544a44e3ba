"""PP&E asset registry, memorandum-receipt custody chain, and QR payloads.

An asset is one physical unit, registered by the property custodian after a
passed inspection. Custody is an append-only history of MR records; the
latest record names the current custodian. Each asset gets a printable QR
token that resolves against the ledger, so a label stays valid as custody
changes:

    PAMS1|<asset_uid>|<reg_tx_hex>|<checksum>

where checksum is the first 8 hex chars of sha3_512 over the UTF-8 bytes of
``PAMS1|<asset_uid>|<reg_tx_hex>``.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Optional

from . import errors
from .codec import Record
from .errors import TxError
from .hashing import Digest, sha3_512
from .state import ROLE_CUSTODIAN, State, encode_optional_digest

if TYPE_CHECKING:  # pragma: no cover
    from .ledger import Transaction

QR_VERSION = "PAMS1"
_HEX_CHARS = set(string.hexdigits.lower()) - set("ABCDEF")

STATUS_IN_STOCK = "InStock"
STATUS_ISSUED = "Issued"
STATUS_DISPOSED = "Disposed"


@dataclass(frozen=True)
class AssetRecord:
    asset_uid: str
    description: str
    source_po: Digest
    reg_tx: Digest
    status: str
    custodian: Optional[str] = None

    def to_canonical(self) -> Record:
        return Record((
            self.asset_uid,
            self.description,
            bytes(self.source_po),
            bytes(self.reg_tx),
            self.status,
            self.custodian or "",
        ))


@dataclass(frozen=True)
class MrRecord:
    mr_tx: Digest
    asset_uid: str
    custodian: str
    issued_by: str
    timestamp: int

    def to_canonical(self) -> Record:
        return Record((
            bytes(self.mr_tx),
            self.asset_uid,
            self.custodian,
            self.issued_by,
            self.timestamp,
        ))


@dataclass(frozen=True)
class QrPayload:
    asset_uid: str
    reg_tx_hex: str
    checksum: str


class QrDecodeError(ValueError):
    def __init__(self, code: str, detail: str = ""):
        self.code = code
        self.detail = detail
        super().__init__(f"{code}: {detail}" if detail else code)


def _qr_checksum(asset_uid: str, reg_tx_hex: str) -> str:
    prefix = f"{QR_VERSION}|{asset_uid}|{reg_tx_hex}"
    return sha3_512(prefix.encode("utf-8")).hex()[:8]


def qr_encode(asset: AssetRecord) -> str:
    """Printable QR token for a registered asset."""
    reg_hex = asset.reg_tx.hex()
    return f"{QR_VERSION}|{asset.asset_uid}|{reg_hex}|{_qr_checksum(asset.asset_uid, reg_hex)}"


def qr_decode(text: str) -> QrPayload:
    """Parse and check a QR token; corrupted tokens never parse silently."""
    parts = text.split("|")
    if len(parts) != 4:
        raise QrDecodeError("BadShape", f"expected 4 fields, got {len(parts)}")
    version, asset_uid, reg_tx_hex, checksum = parts
    if version != QR_VERSION:
        raise QrDecodeError("BadVersion", version)
    if not asset_uid:
        raise QrDecodeError("BadShape", "empty asset uid")
    if len(reg_tx_hex) != 128 or not set(reg_tx_hex) <= _HEX_CHARS:
        raise QrDecodeError("BadShape", "registration reference is not 128 lowercase hex chars")
    if len(checksum) != 8 or not set(checksum) <= _HEX_CHARS:
        raise QrDecodeError("BadShape", "checksum is not 8 lowercase hex chars")
    if checksum != _qr_checksum(asset_uid, reg_tx_hex):
        raise QrDecodeError("ChecksumMismatch")
    return QrPayload(asset_uid=asset_uid, reg_tx_hex=reg_tx_hex, checksum=checksum)


def qr_png(text: str, module_px: int = 8, border_modules: int = 4) -> bytes:
    """Render the token as a QR image (error-correction level M), PNG bytes."""
    import cv2  # deferred: not needed on the consensus path

    params = cv2.QRCodeEncoder_Params()
    params.correction_level = cv2.QRCODE_ENCODER_CORRECT_LEVEL_M
    encoder = cv2.QRCodeEncoder_create(params)
    matrix = encoder.encode(text)
    scaled = cv2.resize(
        matrix,
        (matrix.shape[1] * module_px, matrix.shape[0] * module_px),
        interpolation=cv2.INTER_NEAREST,
    )
    pad = border_modules * module_px
    framed = cv2.copyMakeBorder(
        scaled, pad, pad, pad, pad, cv2.BORDER_CONSTANT, value=255
    )
    ok, buf = cv2.imencode(".png", framed)
    if not ok:  # pragma: no cover - imencode only fails on bad args
        raise RuntimeError("PNG encoding failed")
    return buf.tobytes()


@dataclass(frozen=True)
class VerificationResult:
    found: bool
    asset_uid: str
    status: Optional[str] = None
    custodian: Optional[str] = None
    history: tuple[MrRecord, ...] = ()
    reg_tx_confirmed: bool = False


def verify_asset(state: State, payload: QrPayload) -> VerificationResult:
    """Resolve a decoded QR token against the ledger state. Read-only."""
    asset = state.assets.get(payload.asset_uid)
    if asset is None:
        return VerificationResult(found=False, asset_uid=payload.asset_uid)
    reg_tx = Digest.from_hex(payload.reg_tx_hex)
    confirmed = bytes(reg_tx) == bytes(asset.reg_tx) and reg_tx in state.applied_tx_ids
    history = tuple(mr for mr in state.mr_history if mr.asset_uid == payload.asset_uid)
    return VerificationResult(
        found=True,
        asset_uid=payload.asset_uid,
        status=asset.status,
        custodian=asset.custodian,
        history=history,
        reg_tx_confirmed=confirmed,
    )


# -- transaction handlers (called from apply_tx on a fresh state copy) --------


def _require_target_user(state: State, user_id: str) -> None:
    user = state.users.get(user_id)
    if user is None:
        raise TxError(errors.UNKNOWN_USER, user_id)
    if not user.active:
        raise TxError(errors.UNKNOWN_USER, f"{user_id} is inactive")


def handle_register(state: State, tx: "Transaction", payload: dict) -> None:
    state.require_author(tx.author_id, ROLE_CUSTODIAN)
    po = state.lookup(state.pos, payload["po_ref"], "purchase order")
    if not po.inspection_passed:
        raise TxError(errors.INSPECTION_NOT_PASSED, po.po_id.hex())
    uid = payload["asset_uid"]
    if not uid or "|" in uid:
        raise TxError(errors.PAYLOAD_INVARIANT, "asset_uid must be non-empty without '|'")
    if uid in state.assets:
        raise TxError(errors.DUPLICATE_ASSET_UID, uid)
    state.assets[uid] = AssetRecord(
        asset_uid=uid,
        description=payload["description"],
        source_po=po.po_id,
        reg_tx=tx.tx_id,
        status=STATUS_IN_STOCK,
    )


def handle_issue_mr(state: State, tx: "Transaction", payload: dict) -> None:
    state.require_author(tx.author_id, ROLE_CUSTODIAN)
    asset = state.lookup(state.assets, payload["asset_uid"], "asset")
    if asset.status != STATUS_IN_STOCK:
        raise TxError(errors.WRONG_ASSET_STATUS, f"{asset.asset_uid} is {asset.status}")
    _require_target_user(state, payload["custodian"])
    state.assets[asset.asset_uid] = replace(
        asset, status=STATUS_ISSUED, custodian=payload["custodian"]
    )
    state.mr_history.append(MrRecord(
        mr_tx=tx.tx_id,
        asset_uid=asset.asset_uid,
        custodian=payload["custodian"],
        issued_by=tx.author_id,
        timestamp=tx.timestamp,
    ))


def handle_transfer(state: State, tx: "Transaction", payload: dict) -> None:
    state.require_author(tx.author_id, ROLE_CUSTODIAN)
    asset = state.lookup(state.assets, payload["asset_uid"], "asset")
    if asset.status != STATUS_ISSUED:
        raise TxError(errors.WRONG_ASSET_STATUS, f"{asset.asset_uid} is {asset.status}")
    _require_target_user(state, payload["custodian"])
    if payload["custodian"] == asset.custodian:
        raise TxError(errors.SELF_TRANSFER, payload["custodian"])
    state.assets[asset.asset_uid] = replace(asset, custodian=payload["custodian"])
    state.mr_history.append(MrRecord(
        mr_tx=tx.tx_id,
        asset_uid=asset.asset_uid,
        custodian=payload["custodian"],
        issued_by=tx.author_id,
        timestamp=tx.timestamp,
    ))


def handle_dispose(state: State, tx: "Transaction", payload: dict) -> None:
    state.require_author(tx.author_id, ROLE_CUSTODIAN)
    asset = state.lookup(state.assets, payload["asset_uid"], "asset")
    if asset.status == STATUS_DISPOSED:
        raise TxError(errors.WRONG_ASSET_STATUS, f"{asset.asset_uid} already disposed")
    if not payload["reason"]:
        raise TxError(errors.PAYLOAD_INVARIANT, "disposal reason must be non-empty")
    state.assets[asset.asset_uid] = replace(
        asset, status=STATUS_DISPOSED, custodian=None
    )
