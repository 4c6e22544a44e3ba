"""Materialized ledger state: users, validators, documents, assets.

The state is what you get by replaying every committed transaction in chain
order. It is rebuilt from the block log at startup and advanced by one
immutable snapshot per block; all stored objects are frozen dataclasses, so
``copy()`` only duplicates the containers.

``fingerprint()`` canonically encodes the whole state (maps sorted by key)
and hashes it, giving the byte-exact replay-equivalence check used by crash
recovery and the simulator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

from . import errors
from .codec import Record, encode_canonical
from .errors import TxError
from .hashing import Digest, sha3_512

if TYPE_CHECKING:  # pragma: no cover
    from .assets import AssetRecord, MrRecord
    from .procurement import (
        AbstractOfCanvass,
        DeliveryChecklist,
        InspectionReport,
        PurchaseOrder,
        PurchaseRequest,
    )

ROLE_EMPLOYEE = "employee"
ROLE_CANVASSER = "canvasser"
ROLE_INSPECTOR = "inspector"
ROLE_CUSTODIAN = "property_custodian"
ROLE_ADMIN = "administrator"

ALL_ROLES = frozenset(
    {ROLE_EMPLOYEE, ROLE_CANVASSER, ROLE_INSPECTOR, ROLE_CUSTODIAN, ROLE_ADMIN}
)

DEFAULT_MIN_QUOTES = 3


@dataclass(frozen=True)
class UserRecord:
    user_id: str
    display_name: str
    roles: tuple[str, ...]  # sorted
    active: bool

    def to_canonical(self) -> Record:
        return Record((self.user_id, self.display_name, list(self.roles), int(self.active)))


@dataclass
class State:
    """Materialized state after applying blocks [0, height)."""

    height: int = 0
    min_quotes: int = DEFAULT_MIN_QUOTES
    users: dict[str, UserRecord] = field(default_factory=dict)
    validators: list[str] = field(default_factory=list)  # admin registration order
    prs: dict[Digest, "PurchaseRequest"] = field(default_factory=dict)
    aocs: dict[Digest, "AbstractOfCanvass"] = field(default_factory=dict)
    pos: dict[Digest, "PurchaseOrder"] = field(default_factory=dict)
    dcs: dict[Digest, "DeliveryChecklist"] = field(default_factory=dict)
    irs: dict[Digest, "InspectionReport"] = field(default_factory=dict)
    assets: dict[str, "AssetRecord"] = field(default_factory=dict)
    mr_history: list["MrRecord"] = field(default_factory=list)
    applied_tx_ids: set[Digest] = field(default_factory=set)

    def copy(self) -> "State":
        return State(
            height=self.height,
            min_quotes=self.min_quotes,
            users=dict(self.users),
            validators=list(self.validators),
            prs=dict(self.prs),
            aocs=dict(self.aocs),
            pos=dict(self.pos),
            dcs=dict(self.dcs),
            irs=dict(self.irs),
            assets=dict(self.assets),
            mr_history=list(self.mr_history),
            applied_tx_ids=set(self.applied_tx_ids),
        )

    def fingerprint(self) -> Digest:
        """Hash of the full state; equal fingerprints mean equal state."""
        body = Record((
            self.height,
            self.min_quotes,
            [self.users[k].to_canonical() for k in sorted(self.users)],
            list(self.validators),
            [self.prs[k].to_canonical() for k in sorted(self.prs)],
            [self.aocs[k].to_canonical() for k in sorted(self.aocs)],
            [self.pos[k].to_canonical() for k in sorted(self.pos)],
            [self.dcs[k].to_canonical() for k in sorted(self.dcs)],
            [self.irs[k].to_canonical() for k in sorted(self.irs)],
            [self.assets[k].to_canonical() for k in sorted(self.assets)],
            [mr.to_canonical() for mr in self.mr_history],
            sorted(bytes(t) for t in self.applied_tx_ids),
        ))
        return sha3_512(encode_canonical(body))

    # -- validation helpers used by all transaction handlers -----------------

    def require_author(self, author_id: str, role: str) -> UserRecord:
        """Author must exist, be active, and hold ``role``."""
        user = self.users.get(author_id)
        if user is None:
            raise TxError(errors.UNKNOWN_AUTHOR, author_id)
        if not user.active:
            raise TxError(errors.INACTIVE_AUTHOR, author_id)
        if role not in user.roles:
            raise TxError(errors.ROLE_FORBIDDEN, role)
        return user

    def lookup(self, table: dict, ref, kind: str):
        doc = table.get(ref)
        if doc is None:
            key = ref.hex() if isinstance(ref, bytes) else str(ref)
            raise TxError(errors.UNKNOWN_REFERENCE, f"{kind} {key}")
        return doc


def encode_optional_digest(value: Optional[Digest]) -> bytes:
    # Empty bytes for absent; a real digest is always 64 bytes.
    return bytes(value) if value is not None else b""
