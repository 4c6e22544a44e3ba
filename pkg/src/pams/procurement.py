"""The five-stage procurement workflow as a deterministic state machine.

``apply_tx`` is the single validation entry point consensus uses: it checks
structure, author, role, references, and status transitions in that order,
and either returns a new state snapshot or raises :class:`TxError` leaving
the input state untouched.

Document flow: PurchaseRequest (Submitted) -> canvass opened -> abstract of
canvass with >= min_quotes supplier quotes -> purchase order to the winning
supplier -> delivery checklist -> inspection -> close (or reject while the
request is still pre-order). A failed inspection leaves the PO Delivered and
re-opens delivery: the custodian records a fresh checklist for the
re-delivered goods, which then gets its own inspection.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Optional

from . import assets, errors, payloads
from .codec import DecodeError, Record
from .errors import TxError
from .hashing import Digest
from .state import (
    ALL_ROLES,
    ROLE_ADMIN,
    ROLE_CANVASSER,
    ROLE_CUSTODIAN,
    ROLE_EMPLOYEE,
    ROLE_INSPECTOR,
    State,
    UserRecord,
    encode_optional_digest,
)

if TYPE_CHECKING:  # pragma: no cover
    from .ledger import Transaction

PR_SUBMITTED = "Submitted"
PR_UNDER_CANVASS = "UnderCanvass"
PR_ORDERED = "Ordered"
PR_CLOSED = "Closed"
PR_REJECTED = "Rejected"

PO_OPEN = "Open"
PO_DELIVERED = "Delivered"
PO_CLOSED = "Closed"
PO_CANCELLED = "Cancelled"  # reserved; no transition produces it yet


@dataclass(frozen=True)
class PrLine:
    description: str
    quantity: int
    unit: str
    specs: str

    def to_canonical(self) -> Record:
        return Record((self.description, self.quantity, self.unit, self.specs))


@dataclass(frozen=True)
class PurchaseRequest:
    pr_id: Digest
    requester: str
    lines: tuple[PrLine, ...]
    status: str
    aoc_ref: Optional[Digest] = None

    def to_canonical(self) -> Record:
        return Record((
            bytes(self.pr_id),
            self.requester,
            [line.to_canonical() for line in self.lines],
            self.status,
            encode_optional_digest(self.aoc_ref),
        ))


@dataclass(frozen=True)
class Quote:
    supplier: str
    unit_prices: tuple[int, ...]

    def to_canonical(self) -> Record:
        return Record((self.supplier, list(self.unit_prices)))


@dataclass(frozen=True)
class AbstractOfCanvass:
    aoc_id: Digest
    pr_ref: Digest
    quotes: tuple[Quote, ...]
    winner_index: int

    def to_canonical(self) -> Record:
        return Record((
            bytes(self.aoc_id),
            bytes(self.pr_ref),
            [q.to_canonical() for q in self.quotes],
            self.winner_index,
        ))


@dataclass(frozen=True)
class PoLine:
    description: str
    quantity: int
    unit: str
    unit_price: int

    def to_canonical(self) -> Record:
        return Record((self.description, self.quantity, self.unit, self.unit_price))


@dataclass(frozen=True)
class PurchaseOrder:
    po_id: Digest
    aoc_ref: Digest
    pr_ref: Digest
    supplier: str
    lines: tuple[PoLine, ...]
    status: str
    dc_refs: tuple[Digest, ...] = ()
    inspection_passed: bool = False

    def to_canonical(self) -> Record:
        return Record((
            bytes(self.po_id),
            bytes(self.aoc_ref),
            bytes(self.pr_ref),
            self.supplier,
            [line.to_canonical() for line in self.lines],
            self.status,
            [bytes(d) for d in self.dc_refs],
            int(self.inspection_passed),
        ))


@dataclass(frozen=True)
class DcLine:
    expected: int
    received: int
    remarks: str

    def to_canonical(self) -> Record:
        return Record((self.expected, self.received, self.remarks))


@dataclass(frozen=True)
class DeliveryChecklist:
    dc_id: Digest
    po_ref: Digest
    lines: tuple[DcLine, ...]
    ir_ref: Optional[Digest] = None

    def to_canonical(self) -> Record:
        return Record((
            bytes(self.dc_id),
            bytes(self.po_ref),
            [line.to_canonical() for line in self.lines],
            encode_optional_digest(self.ir_ref),
        ))


@dataclass(frozen=True)
class Verdict:
    passed: bool
    reason: str

    def to_canonical(self) -> Record:
        return Record((int(self.passed), self.reason))


@dataclass(frozen=True)
class InspectionReport:
    ir_id: Digest
    dc_ref: Digest
    inspector: str
    verdicts: tuple[Verdict, ...]
    all_pass: bool

    def to_canonical(self) -> Record:
        return Record((
            bytes(self.ir_id),
            bytes(self.dc_ref),
            self.inspector,
            [v.to_canonical() for v in self.verdicts],
            int(self.all_pass),
        ))


def select_winning_quote(quotes: list[dict], pr_lines: tuple[PrLine, ...]) -> int:
    """Lowest total price wins; ties go to the earliest-submitted quote."""
    if not quotes:
        raise TxError(errors.PAYLOAD_INVARIANT, "no quotes")
    totals = []
    for i, quote in enumerate(quotes):
        prices = quote["unit_prices"]
        if len(prices) != len(pr_lines):
            raise TxError(
                errors.PAYLOAD_INVARIANT,
                f"quote {i} prices {len(prices)} lines, request has {len(pr_lines)}",
            )
        totals.append(sum(p * line.quantity for p, line in zip(prices, pr_lines)))
    return min(range(len(totals)), key=lambda i: (totals[i], i))


# -- handlers -----------------------------------------------------------------


def _handle_submit_pr(state: State, tx: "Transaction", payload: dict) -> None:
    state.require_author(tx.author_id, ROLE_EMPLOYEE)
    lines = payload["lines"]
    if not lines:
        raise TxError(errors.PAYLOAD_INVARIANT, "purchase request needs at least one line")
    for i, line in enumerate(lines):
        if line["quantity"] < 1:
            raise TxError(errors.PAYLOAD_INVARIANT, f"line {i} quantity must be positive")
    state.prs[tx.tx_id] = PurchaseRequest(
        pr_id=tx.tx_id,
        requester=tx.author_id,
        lines=tuple(PrLine(l["description"], l["quantity"], l["unit"], l["specs"]) for l in lines),
        status=PR_SUBMITTED,
    )


def _handle_open_canvass(state: State, tx: "Transaction", payload: dict) -> None:
    state.require_author(tx.author_id, ROLE_CANVASSER)
    pr = state.lookup(state.prs, payload["pr_ref"], "purchase request")
    if pr.status != PR_SUBMITTED:
        raise TxError(errors.INVALID_TRANSITION, f"{pr.status} -> UnderCanvass")
    state.prs[pr.pr_id] = replace(pr, status=PR_UNDER_CANVASS)


def _handle_submit_aoc(state: State, tx: "Transaction", payload: dict) -> None:
    state.require_author(tx.author_id, ROLE_CANVASSER)
    pr = state.lookup(state.prs, payload["pr_ref"], "purchase request")
    if pr.status != PR_UNDER_CANVASS:
        raise TxError(errors.INVALID_TRANSITION, f"abstract of canvass on {pr.status} request")
    if pr.aoc_ref is not None:
        raise TxError(errors.INVALID_TRANSITION, "request already has an abstract of canvass")
    quotes = payload["quotes"]
    if len(quotes) < state.min_quotes:
        raise TxError(
            errors.PAYLOAD_INVARIANT,
            f"{len(quotes)} quotes, minimum is {state.min_quotes}",
        )
    winner = select_winning_quote(quotes, pr.lines)
    if payload["winner_index"] != winner:
        raise TxError(
            errors.PAYLOAD_INVARIANT,
            f"winner_index {payload['winner_index']} but lowest total is quote {winner}",
        )
    state.aocs[tx.tx_id] = AbstractOfCanvass(
        aoc_id=tx.tx_id,
        pr_ref=pr.pr_id,
        quotes=tuple(Quote(q["supplier"], tuple(q["unit_prices"])) for q in quotes),
        winner_index=winner,
    )
    state.prs[pr.pr_id] = replace(pr, aoc_ref=tx.tx_id)


def _handle_issue_po(state: State, tx: "Transaction", payload: dict) -> None:
    state.require_author(tx.author_id, ROLE_CANVASSER)
    aoc = state.lookup(state.aocs, payload["aoc_ref"], "abstract of canvass")
    pr = state.lookup(state.prs, aoc.pr_ref, "purchase request")
    if pr.status != PR_UNDER_CANVASS:
        raise TxError(errors.INVALID_TRANSITION, f"issue order on {pr.status} request")
    winner = aoc.quotes[aoc.winner_index]
    state.pos[tx.tx_id] = PurchaseOrder(
        po_id=tx.tx_id,
        aoc_ref=aoc.aoc_id,
        pr_ref=pr.pr_id,
        supplier=winner.supplier,
        lines=tuple(
            PoLine(line.description, line.quantity, line.unit, price)
            for line, price in zip(pr.lines, winner.unit_prices)
        ),
        status=PO_OPEN,
    )
    state.prs[pr.pr_id] = replace(pr, status=PR_ORDERED)


def _latest_checklist(state: State, po: PurchaseOrder) -> Optional[DeliveryChecklist]:
    if not po.dc_refs:
        return None
    return state.dcs[po.dc_refs[-1]]


def _handle_record_delivery(state: State, tx: "Transaction", payload: dict) -> None:
    state.require_author(tx.author_id, ROLE_CUSTODIAN)
    po = state.lookup(state.pos, payload["po_ref"], "purchase order")
    if po.status == PO_DELIVERED:
        # Re-delivery is only open while the latest checklist failed inspection.
        latest = _latest_checklist(state, po)
        failed = (
            latest is not None
            and latest.ir_ref is not None
            and not state.irs[latest.ir_ref].all_pass
        )
        if not failed:
            raise TxError(errors.INVALID_TRANSITION, "delivery already recorded")
    elif po.status != PO_OPEN:
        raise TxError(errors.INVALID_TRANSITION, f"delivery on {po.status} order")
    lines = payload["lines"]
    if len(lines) != len(po.lines):
        raise TxError(
            errors.PAYLOAD_INVARIANT,
            f"checklist has {len(lines)} lines, order has {len(po.lines)}",
        )
    for i, (line, po_line) in enumerate(zip(lines, po.lines)):
        if line["received"] > po_line.quantity:
            raise TxError(
                errors.PAYLOAD_INVARIANT,
                f"line {i} received {line['received']} exceeds expected {po_line.quantity}",
            )
    state.dcs[tx.tx_id] = DeliveryChecklist(
        dc_id=tx.tx_id,
        po_ref=po.po_id,
        lines=tuple(
            DcLine(po_line.quantity, line["received"], line["remarks"])
            for line, po_line in zip(lines, po.lines)
        ),
    )
    state.pos[po.po_id] = replace(
        po, status=PO_DELIVERED, dc_refs=po.dc_refs + (tx.tx_id,)
    )


def _handle_record_inspection(state: State, tx: "Transaction", payload: dict) -> None:
    state.require_author(tx.author_id, ROLE_INSPECTOR)
    dc = state.lookup(state.dcs, payload["dc_ref"], "delivery checklist")
    if dc.ir_ref is not None:
        raise TxError(errors.INVALID_TRANSITION, "checklist already inspected")
    verdicts = payload["verdicts"]
    if len(verdicts) != len(dc.lines):
        raise TxError(
            errors.PAYLOAD_INVARIANT,
            f"{len(verdicts)} verdicts for {len(dc.lines)} checklist lines",
        )
    parsed = []
    for i, verdict in enumerate(verdicts):
        if verdict["passed"] not in (0, 1):
            raise TxError(errors.PAYLOAD_INVARIANT, f"verdict {i} must be 0 or 1")
        if verdict["passed"] == 0 and not verdict["reason"]:
            raise TxError(errors.PAYLOAD_INVARIANT, f"verdict {i} failed without a reason")
        parsed.append(Verdict(bool(verdict["passed"]), verdict["reason"]))
    all_pass = all(v.passed for v in parsed)
    state.irs[tx.tx_id] = InspectionReport(
        ir_id=tx.tx_id,
        dc_ref=dc.dc_id,
        inspector=tx.author_id,
        verdicts=tuple(parsed),
        all_pass=all_pass,
    )
    state.dcs[dc.dc_id] = replace(dc, ir_ref=tx.tx_id)
    if all_pass:
        po = state.pos[dc.po_ref]
        state.pos[po.po_id] = replace(po, inspection_passed=True)


def _handle_close_po(state: State, tx: "Transaction", payload: dict) -> None:
    state.require_author(tx.author_id, ROLE_CUSTODIAN)
    po = state.lookup(state.pos, payload["po_ref"], "purchase order")
    if po.status != PO_DELIVERED or not po.inspection_passed:
        raise TxError(errors.INVALID_TRANSITION, "close requires a fully passed inspection")
    state.pos[po.po_id] = replace(po, status=PO_CLOSED)
    pr = state.prs[po.pr_ref]
    state.prs[pr.pr_id] = replace(pr, status=PR_CLOSED)


def _handle_reject_pr(state: State, tx: "Transaction", payload: dict) -> None:
    state.require_author(tx.author_id, ROLE_ADMIN)
    pr = state.lookup(state.prs, payload["pr_ref"], "purchase request")
    if pr.status not in (PR_SUBMITTED, PR_UNDER_CANVASS):
        raise TxError(errors.INVALID_TRANSITION, f"reject on {pr.status} request")
    state.prs[pr.pr_id] = replace(pr, status=PR_REJECTED)


# -- admin handlers -----------------------------------------------------------


def _require_admin(state: State, tx: "Transaction") -> None:
    # Height 0 carries the bootstrap transactions that create the first
    # administrator, so author checks cannot apply yet.
    if state.height == 0:
        return
    state.require_author(tx.author_id, ROLE_ADMIN)


def _handle_add_user(state: State, tx: "Transaction", payload: dict) -> None:
    _require_admin(state, tx)
    user_id = payload["user_id"]
    roles = payload["roles"]
    if not user_id:
        raise TxError(errors.PAYLOAD_INVARIANT, "empty user_id")
    if not roles or not set(roles) <= ALL_ROLES:
        raise TxError(errors.PAYLOAD_INVARIANT, f"roles must be a non-empty subset of {sorted(ALL_ROLES)}")
    if user_id in state.users:
        raise TxError(errors.DUPLICATE_USER, user_id)
    state.users[user_id] = UserRecord(
        user_id=user_id,
        display_name=payload["display_name"],
        roles=tuple(sorted(set(roles))),
        active=True,
    )


def _handle_deactivate_user(state: State, tx: "Transaction", payload: dict) -> None:
    _require_admin(state, tx)
    user = state.users.get(payload["user_id"])
    if user is None:
        raise TxError(errors.UNKNOWN_USER, payload["user_id"])
    if not user.active:
        raise TxError(errors.INVALID_TRANSITION, f"{user.user_id} already inactive")
    state.users[user.user_id] = replace(user, active=False)


def _handle_add_validator(state: State, tx: "Transaction", payload: dict) -> None:
    _require_admin(state, tx)
    validator_id = payload["validator_id"]
    if not validator_id:
        raise TxError(errors.PAYLOAD_INVARIANT, "empty validator_id")
    if validator_id in state.validators:
        raise TxError(errors.DUPLICATE_VALIDATOR, validator_id)
    state.validators.append(validator_id)


def _handle_remove_validator(state: State, tx: "Transaction", payload: dict) -> None:
    _require_admin(state, tx)
    validator_id = payload["validator_id"]
    if validator_id not in state.validators:
        raise TxError(errors.UNKNOWN_VALIDATOR, validator_id)
    if len(state.validators) == 1:
        raise TxError(errors.CANNOT_REMOVE_LAST_VALIDATOR, validator_id)
    state.validators.remove(validator_id)


_HANDLERS = {
    payloads.PR_SUBMIT: _handle_submit_pr,
    payloads.PR_OPEN_CANVASS: _handle_open_canvass,
    payloads.AOC_SUBMIT: _handle_submit_aoc,
    payloads.PO_ISSUE: _handle_issue_po,
    payloads.DELIVERY_RECORD: _handle_record_delivery,
    payloads.INSPECTION_RECORD: _handle_record_inspection,
    payloads.PO_CLOSE: _handle_close_po,
    payloads.PR_REJECT: _handle_reject_pr,
    payloads.ASSET_REGISTER: assets.handle_register,
    payloads.MR_ISSUE: assets.handle_issue_mr,
    payloads.MR_TRANSFER: assets.handle_transfer,
    payloads.ASSET_DISPOSE: assets.handle_dispose,
    payloads.ADMIN_ADD_USER: _handle_add_user,
    payloads.ADMIN_DEACTIVATE_USER: _handle_deactivate_user,
    payloads.ADMIN_ADD_VALIDATOR: _handle_add_validator,
    payloads.ADMIN_REMOVE_VALIDATOR: _handle_remove_validator,
}


def apply_tx(state: State, tx: "Transaction") -> State:
    """Validate and apply one transaction, returning a new state snapshot.

    Raises TxError and leaves ``state`` untouched on any failure. Check
    order: structure, chain-wide tx_id uniqueness, author existence and
    activity, role, references, status transition, payload invariants.
    """
    from .ledger import compute_tx_id  # local import: ledger depends on us

    handler = _HANDLERS.get(tx.tx_type)
    if handler is None:
        raise TxError(errors.PAYLOAD_INVARIANT, f"unknown tx_type {tx.tx_type!r}")
    if bytes(compute_tx_id(tx.tx_type, tx.author_id, tx.timestamp, tx.payload)) != bytes(tx.tx_id):
        raise TxError(errors.PAYLOAD_INVARIANT, "tx_id does not recompute from fields")
    if tx.tx_id in state.applied_tx_ids:
        raise TxError(errors.DUPLICATE_TRANSACTION, tx.tx_id.hex())
    try:
        payload = payloads.decode_payload(tx.tx_type, tx.payload)
    except DecodeError as exc:
        raise TxError(errors.PAYLOAD_INVARIANT, f"payload does not decode: {exc}") from exc

    new_state = state.copy()
    handler(new_state, tx, payload)
    new_state.applied_tx_ids.add(tx.tx_id)
    return new_state
