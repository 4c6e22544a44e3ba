"""Proof-of-Authority engine: rotating primary, approvals, commits, timeouts.

The engine is transport-agnostic and single-threaded: callers feed it
``on_message`` and ``on_tick`` events (virtual time in the simulator, wall
time in a live node) and it returns the messages to send as a list of
(destination node id, Message) pairs. All persistent data lives in the
Chain; everything else here is volatile and resets on restart.

Safety rule: a validator approves at most one block hash per height. The
lock survives timeouts (otherwise two quorum certificates at one height are
reachable with zero dishonest validators: approve A, time out, approve B)
and is released when the height commits. A primary that holds a lock
re-proposes the locked block verbatim instead of drafting a new one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from . import errors
from .codec import DecodeError
from .errors import BlockError, TxError
from .hashing import mac_tag, mac_verify
from .ledger import (
    Approval,
    Block,
    Chain,
    Transaction,
    make_block,
    quorum_size,
    with_certificate,
)
from .p2p import (
    KIND_APPROVE,
    KIND_COMMIT,
    KIND_PROPOSE,
    KIND_SUBMIT_TX,
    KIND_SYNC_REQUEST,
    KIND_SYNC_RESPONSE,
    Message,
    approve_msg,
    commit_msg,
    parse_approve_body,
    parse_block_body,
    parse_sync_request_body,
    parse_sync_response_body,
    parse_tx_body,
    propose_msg,
    submit_tx_msg,
    sync_request_msg,
    sync_response_msg,
)

ROLE_VALIDATOR = "validator"
ROLE_FULL = "full"

AUDIT_SAFETY_VIOLATION = "SafetyViolation"
AUDIT_SYNC_FAILURE = "SyncFailure"
AUDIT_AUTH_FAILURE = "AuthFailure"

PHASE_IDLE = "Idle"
PHASE_PROPOSED = "Proposed"

Outputs = list[tuple[str, Message]]


@dataclass(frozen=True)
class AuditRecord:
    time_ms: int
    kind: str
    detail: str


@dataclass
class EngineConfig:
    node_id: str
    role: str = ROLE_VALIDATOR
    block_interval_ms: int = 5000
    allow_empty_blocks: bool = True
    max_txs_per_block: int = 100
    timeout_ms: Optional[int] = None
    sync_interval_ms: Optional[int] = None

    @property
    def effective_timeout_ms(self) -> int:
        return self.timeout_ms if self.timeout_ms is not None else 2 * self.block_interval_ms

    @property
    def effective_sync_interval_ms(self) -> int:
        return self.sync_interval_ms if self.sync_interval_ms is not None else 2 * self.block_interval_ms


def primary_for_height(vset: list[str], height: int, skip_count: int) -> str:
    """Round-robin assignment; each timeout at a height advances the slot."""
    if not vset:
        raise ValueError("empty validator set")
    return vset[(height + skip_count) % len(vset)]


class NodeEngine:
    def __init__(self, config: EngineConfig, chain: Chain, peers: list[str]):
        self.config = config
        self.chain = chain
        self.peers = [p for p in peers if p != config.node_id]
        self.mempool: dict[bytes, Transaction] = {}
        self.audit: list[AuditRecord] = []
        self.events: list[tuple[int, str, str]] = []

        # Volatile consensus state, reset by restart.
        self.proposal: Optional[Block] = None
        self.approvals: dict[str, Approval] = {}
        self.locked: Optional[Block] = None
        self.skip_count = 0
        self.timeout_deadline_ms: Optional[int] = None
        self.last_block_ms = 0
        self.last_propose_ms = 0
        self.last_sync_ms = 0

        # Set by the persistence layer: called with a height whose stored
        # block was replaced during certificate reconciliation.
        self.on_block_replaced: Optional[Callable[[int], None]] = None

    # -- helpers ------------------------------------------------------------

    @property
    def node_id(self) -> str:
        return self.config.node_id

    @property
    def phase(self) -> str:
        return PHASE_PROPOSED if self.proposal is not None else PHASE_IDLE

    def vset(self) -> list[str]:
        return self.chain.state.validators

    def is_active_validator(self) -> bool:
        return (
            self.config.role == ROLE_VALIDATOR
            and self.node_id in self.vset()
            and self.node_id in self.chain.secrets
        )

    def _validator_peers(self) -> list[str]:
        reachable = set(self.peers)
        return [v for v in self.vset() if v != self.node_id and v in reachable]

    def _event(self, now_ms: int, kind: str, detail: str) -> None:
        self.events.append((now_ms, kind, detail))

    def _audit(self, now_ms: int, kind: str, detail: str) -> None:
        self.audit.append(AuditRecord(now_ms, kind, detail))
        self._event(now_ms, "audit." + kind, detail)

    # -- transaction intake ---------------------------------------------------

    def admit_tx(self, tx: Transaction) -> bool:
        key = bytes(tx.tx_id)
        if key in self.mempool or tx.tx_id in self.chain.state.applied_tx_ids:
            return False
        self.mempool[key] = tx
        return True

    def submit_tx(self, tx: Transaction, now_ms: int) -> Outputs:
        """Local submission (API or workload): pool it and relay to validators."""
        if not self.admit_tx(tx):
            return []
        self._event(now_ms, "tx_submitted", tx.tx_id.hex()[:16])
        msg = submit_tx_msg(self.node_id, tx)
        outputs: Outputs = [(v, msg) for v in self._validator_peers()]
        outputs += self._maybe_propose(now_ms)
        return outputs

    # -- message handling -------------------------------------------------------

    def on_message(self, sender: str, msg: Message, now_ms: int) -> Outputs:
        try:
            if msg.kind == KIND_SUBMIT_TX:
                return self._on_submit_tx(msg, now_ms)
            if msg.kind == KIND_PROPOSE:
                return self._on_propose(sender, msg, now_ms)
            if msg.kind == KIND_APPROVE:
                return self._on_approve(msg, now_ms)
            if msg.kind == KIND_COMMIT:
                return self._on_commit(sender, msg, now_ms)
            if msg.kind == KIND_SYNC_REQUEST:
                return self._on_sync_request(sender, msg)
            if msg.kind == KIND_SYNC_RESPONSE:
                return self._on_sync_response(sender, msg, now_ms)
        except (DecodeError, ValueError) as exc:
            self._event(now_ms, "bad_message", f"{msg.kind} from {sender}: {exc}")
        return []

    def _on_submit_tx(self, msg: Message, now_ms: int) -> Outputs:
        tx = parse_tx_body(msg.body)
        if self.admit_tx(tx):
            self._event(now_ms, "tx_pooled", tx.tx_id.hex()[:16])
            return self._maybe_propose(now_ms)
        return []

    def _reject(self, now_ms: int, reason: str, detail: str) -> Outputs:
        self._event(now_ms, "proposal_rejected", f"{reason}: {detail}")
        return []

    def _on_propose(self, sender: str, msg: Message, now_ms: int) -> Outputs:
        if not self.is_active_validator():
            return []
        block = parse_block_body(msg.body)
        h = block.header.height
        if h < self.chain.height:
            return self._reject(now_ms, "StaleHeight", f"height {h} already committed")
        if h > self.chain.height:
            # We are behind; cannot judge the proposal, so catch up instead.
            return [(sender, sync_request_msg(self.node_id, 0))]
        if bytes(block.header.prev_hash) != bytes(self.chain.head_hash()):
            return self._reject(now_ms, "PrevHashMismatch", f"at height {h}") + [
                (sender, sync_request_msg(self.node_id, 0))
            ]

        if self.locked is not None:
            if bytes(self.locked.block_hash) == bytes(block.block_hash):
                # Re-proposal of the block we already approved (possibly by a
                # successor primary after a timeout): repeat our approval to
                # whoever is collecting now.
                return [self._approval_for(sender, block)]
            return self._reject(now_ms, "AlreadyApproved", self.locked.block_hash.hex()[:16])

        vset = self.vset()
        allowed = {primary_for_height(vset, h, s) for s in range(self.skip_count + 1)}
        if block.header.primary_id not in allowed:
            return self._reject(now_ms, "WrongPrimary", block.header.primary_id)
        try:
            self.chain.validate_structure(block, require_certificate=False)
            self.chain.apply_transactions(block)
        except BlockError as exc:
            return self._reject(now_ms, exc.code, exc.detail)

        self.locked = block
        self._event(now_ms, "approved", f"h={h} {block.block_hash.hex()[:16]}")
        return [self._approval_for(sender, block)]

    def _approval_for(self, collector: str, block: Block) -> tuple[str, Message]:
        tag = mac_tag(self.chain.secrets[self.node_id], bytes(block.block_hash))
        return (collector, approve_msg(self.node_id, self.node_id, block.block_hash, tag))

    def _on_approve(self, msg: Message, now_ms: int) -> Outputs:
        if self.proposal is None:
            return []
        validator_id, block_hash, tag = parse_approve_body(msg.body)
        if bytes(block_hash) != bytes(self.proposal.block_hash):
            return []
        vset = self.vset()
        if validator_id not in vset:
            return []
        secret = self.chain.secrets.get(validator_id)
        if secret is None or bytes(mac_tag(secret, bytes(block_hash))) != bytes(tag):
            self._event(now_ms, "bad_approval", validator_id)
            return []
        self.approvals[validator_id] = Approval(validator_id, tag)
        if len(self.approvals) >= quorum_size(len(vset)):
            return self._commit_as_collector(now_ms)
        return []

    def _commit_as_collector(self, now_ms: int) -> Outputs:
        assert self.proposal is not None
        cert = tuple(sorted(self.approvals.values(), key=lambda a: a.validator_id))
        block = with_certificate(self.proposal, cert)
        try:
            self.chain.append_block(block)
        except BlockError as exc:
            # Own proposal was validated before broadcast, so this indicates
            # the chain moved underneath us (e.g. a commit arrived first).
            self._event(now_ms, "own_commit_failed", str(exc))
            self.proposal = None
            self.approvals = {}
            return []
        self._after_local_commit(block, now_ms)
        msg = commit_msg(self.node_id, block)
        outputs: Outputs = [(peer, msg) for peer in self.peers]
        outputs += self._maybe_propose(now_ms)
        return outputs

    def _after_local_commit(self, block: Block, now_ms: int) -> None:
        for tx in block.txs:
            self.mempool.pop(bytes(tx.tx_id), None)
        if self.proposal is not None and self.proposal.header.height <= block.header.height:
            self.proposal = None
            self.approvals = {}
        if self.locked is not None and self.locked.header.height <= block.header.height:
            self.locked = None
        self.skip_count = 0
        self.timeout_deadline_ms = None
        self.last_block_ms = now_ms
        self._event(
            now_ms,
            "committed",
            f"h={block.header.height} txs={len(block.txs)} {block.block_hash.hex()[:16]}",
        )

    def _on_commit(self, sender: str, msg: Message, now_ms: int) -> Outputs:
        block = parse_block_body(msg.body)
        h = block.header.height
        if h > self.chain.height:
            return [(sender, sync_request_msg(self.node_id, 0))]
        if h == self.chain.height:
            try:
                self.chain.append_block(block)
            except BlockError as exc:
                if exc.code in (errors.PREV_HASH_MISMATCH, errors.HEIGHT_MISMATCH):
                    return [(sender, sync_request_msg(self.node_id, 0))]
                self._event(now_ms, "commit_rejected", str(exc))
                return []
            self._after_local_commit(block, now_ms)
            return self._maybe_propose(now_ms)
        return self._handle_candidate_below_tip(block, now_ms)

    def _handle_candidate_below_tip(self, block: Block, now_ms: int) -> Outputs:
        """Already-committed height: reconcile same block, alarm on a fork."""
        h = block.header.height
        local = self.chain.blocks[h]
        if bytes(local.block_hash) == bytes(block.block_hash):
            try:
                if self.chain.reconcile_block(block):
                    self._event(now_ms, "certificate_reconciled", f"h={h}")
                    if self.on_block_replaced is not None:
                        self.on_block_replaced(h)
            except BlockError:
                pass  # variant with an invalid certificate; keep ours
            return []
        from .ledger import verify_certificate

        try:
            verify_certificate(block, self.chain.vsets[h], self.chain.secrets)
        except BlockError:
            # No valid quorum behind the conflicting block: plain garbage,
            # reject without alarm.
            self._event(now_ms, "conflicting_block_rejected", f"h={h}")
            return []
        self._audit(
            now_ms,
            AUDIT_SAFETY_VIOLATION,
            f"two certified blocks at height {h}: kept {local.block_hash.hex()[:16]}, "
            f"saw {block.block_hash.hex()[:16]}",
        )
        return []

    def _on_sync_request(self, sender: str, msg: Message) -> Outputs:
        from_height = parse_sync_request_body(msg.body)
        blocks = self.chain.blocks[from_height:]
        return [(sender, sync_response_msg(self.node_id, blocks))]

    def _on_sync_response(self, sender: str, msg: Message, now_ms: int) -> Outputs:
        blocks = parse_sync_response_body(msg.body)
        appended = False
        for block in blocks:
            h = block.header.height
            if h < self.chain.height:
                self._handle_candidate_below_tip(block, now_ms)
                continue
            if h > self.chain.height:
                break
            try:
                self.chain.append_block(block)
            except BlockError as exc:
                self._audit(now_ms, AUDIT_SYNC_FAILURE, f"height {h}: {exc}")
                break
            self._after_local_commit(block, now_ms)
            appended = True
        if appended:
            return self._maybe_propose(now_ms)
        return []

    # -- time ----------------------------------------------------------------------

    def on_tick(self, now_ms: int) -> Outputs:
        outputs: Outputs = []
        if now_ms - self.last_sync_ms >= self.config.effective_sync_interval_ms:
            self.last_sync_ms = now_ms
            outputs += self._anti_entropy()
        if self.is_active_validator():
            outputs += self._check_timeout(now_ms)
            outputs += self._maybe_propose(now_ms)
            if (
                self.proposal is not None
                and now_ms - self.last_propose_ms >= self.config.block_interval_ms
            ):
                # Validators whose skip count lagged rejected the first send;
                # repeat until committed so they can approve once they catch up.
                self.last_propose_ms = now_ms
                msg = propose_msg(self.node_id, self.proposal)
                outputs += [(v, msg) for v in self._validator_peers()]
        return outputs

    def _anti_entropy(self) -> Outputs:
        """Periodic full-log exchange plus mempool re-broadcast.

        Syncing from height 0 keeps replicas byte-identical below the tip
        (certificate variants reconcile) at desk scale; re-sending pooled
        transactions rescues submissions whose original relay was dropped by
        a partition.
        """
        outputs: Outputs = [(peer, sync_request_msg(self.node_id, 0)) for peer in self.peers]
        validators = self._validator_peers()
        for tx in self.mempool.values():
            msg = submit_tx_msg(self.node_id, tx)
            outputs += [(v, msg) for v in validators]
        return outputs

    def _pending_work(self, now_ms: int) -> bool:
        if self.mempool or self.locked is not None or self.proposal is not None:
            return True
        return (
            self.config.allow_empty_blocks
            and now_ms - self.last_block_ms >= self.config.block_interval_ms
        )

    def _check_timeout(self, now_ms: int) -> Outputs:
        if not self._pending_work(now_ms):
            self.timeout_deadline_ms = None
            return []
        if self.timeout_deadline_ms is None:
            self.timeout_deadline_ms = now_ms + self.config.effective_timeout_ms
            return []
        if now_ms < self.timeout_deadline_ms:
            return []
        self.skip_count += 1
        self.timeout_deadline_ms = now_ms + self.config.effective_timeout_ms
        self.proposal = None
        self.approvals = {}
        self._event(now_ms, "timeout_skip", f"h={self.chain.height} skip={self.skip_count}")
        return []

    def _draft_txs(self, now_ms: int) -> list[Transaction]:
        """Arrival-order drain up to the block cap, dropping invalid txs."""
        from .procurement import apply_tx

        taken: list[Transaction] = []
        state = self.chain.state
        for key, tx in list(self.mempool.items()):
            if len(taken) >= self.config.max_txs_per_block:
                break
            try:
                state = apply_tx(state, tx)
            except TxError as exc:
                del self.mempool[key]
                self._event(now_ms, "tx_dropped", f"{tx.tx_id.hex()[:16]} {exc.code}: {exc.detail}")
                continue
            taken.append(tx)
        return taken

    def _maybe_propose(self, now_ms: int) -> Outputs:
        if not self.is_active_validator() or self.proposal is not None:
            return []
        vset = self.vset()
        if primary_for_height(vset, self.chain.height, self.skip_count) != self.node_id:
            return []

        if self.locked is not None and self.locked.header.height == self.chain.height:
            # Take over collection for the block this node already approved.
            base = self.locked
        else:
            txs = self._draft_txs(now_ms)
            if not txs and not (
                self.config.allow_empty_blocks
                and now_ms - self.last_block_ms >= self.config.block_interval_ms
            ):
                return []
            base = make_block(
                height=self.chain.height,
                prev_hash=self.chain.head_hash(),
                timestamp=now_ms // 1000,
                primary_id=self.node_id,
                txs=tuple(txs),
            )

        own_tag = mac_tag(self.chain.secrets[self.node_id], bytes(base.block_hash))
        self.approvals = {self.node_id: Approval(self.node_id, own_tag)}
        for approval in base.certificate:
            # A re-proposed locked block carries the original primary's tag;
            # it still counts toward quorum.
            secret = self.chain.secrets.get(approval.validator_id)
            if (
                approval.validator_id in vset
                and secret is not None
                and mac_verify(secret, bytes(base.block_hash), approval.tag)
            ):
                self.approvals.setdefault(approval.validator_id, approval)
        self.proposal = with_certificate(base, (self.approvals[self.node_id],))
        self.locked = base
        self.last_propose_ms = now_ms
        self._event(now_ms, "proposed", f"h={base.header.height} txs={len(base.txs)}")
        if len(self.approvals) >= quorum_size(len(vset)):
            return self._commit_as_collector(now_ms)
        msg = propose_msg(self.node_id, self.proposal)
        return [(v, msg) for v in self._validator_peers()]
