"""Transactions, blocks, and the hash-linked chain.

Every structure has exactly one canonical byte encoding (see codec) and all
identifiers are SHA3-512 digests of those bytes. A block is final once it
carries approval tags from a strict majority of the validator set that was
in force at its height; the chain re-checks everything on append so a node
never persists a block it could not independently verify.

Timestamps are integer milliseconds since the Unix epoch (virtual time in
simulation).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from . import errors
from .codec import ByteReader, Record, encode_canonical
from .errors import BlockError, TxError
from .hashing import Digest, MacSecret, ZERO_DIGEST, mac_verify, sha3_512
from .procurement import apply_tx
from .state import DEFAULT_MIN_QUOTES, State

BLOCK_VERSION = 1


def quorum_size(n_validators: int) -> int:
    """Strict majority of the validator set."""
    return n_validators // 2 + 1


# -- transactions --------------------------------------------------------------


@dataclass(frozen=True)
class Transaction:
    tx_id: Digest
    tx_type: str
    author_id: str
    timestamp: int
    payload: bytes

    def to_canonical(self) -> Record:
        return Record((bytes(self.tx_id), self.tx_type, self.author_id, self.timestamp, self.payload))


def compute_tx_id(tx_type: str, author_id: str, timestamp: int, payload: bytes) -> Digest:
    return sha3_512(encode_canonical(Record((tx_type, author_id, timestamp, payload))))


def make_tx(tx_type: str, author_id: str, timestamp: int, payload: bytes) -> Transaction:
    return Transaction(
        tx_id=compute_tx_id(tx_type, author_id, timestamp, payload),
        tx_type=tx_type,
        author_id=author_id,
        timestamp=timestamp,
        payload=payload,
    )


def encode_tx(tx: Transaction) -> bytes:
    return encode_canonical(tx.to_canonical())


def decode_tx(reader: ByteReader) -> Transaction:
    tx_id = Digest(reader.read_bytes())
    tx_type = reader.read_text()
    author_id = reader.read_text()
    timestamp = reader.read_uint()
    payload = reader.read_bytes()
    return Transaction(tx_id, tx_type, author_id, timestamp, payload)


def transactions_digest(txs: Iterable[Transaction]) -> Digest:
    return sha3_512(encode_canonical([tx.to_canonical() for tx in txs]))


# -- blocks ---------------------------------------------------------------------


@dataclass(frozen=True)
class BlockHeader:
    version: int
    height: int
    prev_hash: Digest
    timestamp: int
    primary_id: str
    tx_digest: Digest

    def to_canonical(self) -> Record:
        return Record((
            self.version,
            self.height,
            bytes(self.prev_hash),
            self.timestamp,
            self.primary_id,
            bytes(self.tx_digest),
        ))


def compute_block_hash(header: BlockHeader) -> Digest:
    return sha3_512(encode_canonical(header.to_canonical()))


@dataclass(frozen=True)
class Approval:
    validator_id: str
    tag: Digest

    def to_canonical(self) -> Record:
        return Record((self.validator_id, bytes(self.tag)))


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    txs: tuple[Transaction, ...]
    block_hash: Digest
    certificate: tuple[Approval, ...]

    @property
    def height(self) -> int:
        return self.header.height

    def to_canonical(self) -> Record:
        return Record((
            self.header.to_canonical(),
            [tx.to_canonical() for tx in self.txs],
            bytes(self.block_hash),
            [a.to_canonical() for a in self.certificate],
        ))


def make_block(
    height: int,
    prev_hash: Digest,
    timestamp: int,
    primary_id: str,
    txs: tuple[Transaction, ...],
    certificate: tuple[Approval, ...] = (),
) -> Block:
    header = BlockHeader(
        version=BLOCK_VERSION,
        height=height,
        prev_hash=prev_hash,
        timestamp=timestamp,
        primary_id=primary_id,
        tx_digest=transactions_digest(txs),
    )
    return Block(header, txs, compute_block_hash(header), certificate)


def with_certificate(block: Block, certificate: tuple[Approval, ...]) -> Block:
    return Block(block.header, block.txs, block.block_hash, certificate)


def encode_block(block: Block) -> bytes:
    return encode_canonical(block.to_canonical())


def decode_block(data: bytes) -> Block:
    reader = ByteReader(data)
    header = BlockHeader(
        version=reader.read_uint(),
        height=reader.read_uint(),
        prev_hash=Digest(reader.read_bytes()),
        timestamp=reader.read_uint(),
        primary_id=reader.read_text(),
        tx_digest=Digest(reader.read_bytes()),
    )
    txs = tuple(decode_tx(reader) for _ in range(reader.read_count()))
    block_hash = Digest(reader.read_bytes())
    certificate = tuple(
        Approval(reader.read_text(), Digest(reader.read_bytes()))
        for _ in range(reader.read_count())
    )
    reader.expect_end()
    return Block(header, txs, block_hash, certificate)


# -- genesis --------------------------------------------------------------------


def make_genesis(
    admin_id: str,
    admin_name: str,
    validators: Iterable[str],
    genesis_time: int = 0,
) -> Block:
    """Bootstrap block: creates the first administrator and the validator set.

    Height 0 waives author checks (there are no users yet) and carries no
    certificate; its bytes are distributed with the node configuration and
    serve as the trust anchor.
    """
    from . import payloads
    from .errors import ConfigError

    validators = list(validators)
    if not admin_id:
        raise ConfigError("genesis needs an administrator id")
    if not validators:
        raise ConfigError("genesis needs at least one validator")

    txs = [
        make_tx(
            payloads.ADMIN_ADD_USER,
            admin_id,
            genesis_time,
            payloads.encode_payload(
                payloads.ADMIN_ADD_USER,
                {"user_id": admin_id, "display_name": admin_name, "roles": ["administrator"]},
            ),
        )
    ]
    for validator_id in validators:
        txs.append(
            make_tx(
                payloads.ADMIN_ADD_VALIDATOR,
                admin_id,
                genesis_time,
                payloads.encode_payload(payloads.ADMIN_ADD_VALIDATOR, {"validator_id": validator_id}),
            )
        )
    return make_block(
        height=0,
        prev_hash=ZERO_DIGEST,
        timestamp=genesis_time,
        primary_id="",
        txs=tuple(txs),
    )


# -- certificate checking --------------------------------------------------------


def verify_certificate(
    block: Block,
    validators: list[str],
    secrets: Mapping[str, MacSecret],
) -> None:
    """Strict check: every tag must verify, ids distinct and members, quorum met.

    Raises BlockError. The validator list is the set in force at the block's
    height, before the block's own transactions apply.
    """
    if block.height == 0:
        return  # trust anchor, distributed out of band with the config
    seen: set[str] = set()
    for approval in block.certificate:
        if approval.validator_id in seen:
            raise BlockError(errors.BAD_CERTIFICATE, f"duplicate approval from {approval.validator_id}")
        seen.add(approval.validator_id)
        if approval.validator_id not in validators:
            raise BlockError(errors.BAD_CERTIFICATE, f"{approval.validator_id} is not a validator")
        secret = secrets.get(approval.validator_id)
        if secret is None:
            raise BlockError(errors.BAD_CERTIFICATE, f"no shared secret for {approval.validator_id}")
        if not mac_verify(secret, bytes(block.block_hash), approval.tag):
            raise BlockError(errors.BAD_CERTIFICATE, f"tag from {approval.validator_id} does not verify")
    needed = quorum_size(len(validators))
    if len(seen) < needed:
        raise BlockError(errors.QUORUM_NOT_MET, f"{len(seen)} approvals, need {needed}")


# -- the chain --------------------------------------------------------------------


class Chain:
    """Verified block sequence plus the workflow state it produces.

    ``append_block`` is all-or-nothing: on any verification failure the chain
    and state are unchanged and a BlockError (or TxError wrapped as
    InvalidTransaction) is raised.
    """

    def __init__(self, secrets: Mapping[str, MacSecret], min_quotes: int = DEFAULT_MIN_QUOTES):
        self.secrets = dict(secrets)
        self.blocks: list[Block] = []
        # Validator set in force when blocks[i] was certified, kept so a
        # conflicting block arriving later can have its certificate checked
        # against the right set.
        self.vsets: list[list[str]] = []
        # min_quotes is consensus-relevant: every node on a network must run
        # with the same value or their states diverge at the first abstract
        # of canvass. It travels with the shared network config.
        self.state = State(min_quotes=min_quotes)

    @property
    def height(self) -> int:
        """Height the next block must have."""
        return len(self.blocks)

    @property
    def head(self) -> Optional[Block]:
        return self.blocks[-1] if self.blocks else None

    def head_hash(self) -> Digest:
        return self.blocks[-1].block_hash if self.blocks else ZERO_DIGEST

    def validate_structure(self, block: Block, require_certificate: bool = True) -> None:
        """Everything that can be checked without touching workflow state.

        Proposals are validated with require_certificate=False: their
        certificate holds only the primary's approval and quorum is exactly
        what the approval round is about to establish.
        """
        if block.header.version != BLOCK_VERSION:
            raise BlockError(errors.BAD_BLOCK_HASH, f"unsupported version {block.header.version}")
        if block.header.height != self.height:
            raise BlockError(
                errors.HEIGHT_MISMATCH, f"block height {block.header.height}, chain expects {self.height}"
            )
        if bytes(block.header.prev_hash) != bytes(self.head_hash()):
            raise BlockError(errors.PREV_HASH_MISMATCH, f"at height {block.header.height}")
        if bytes(compute_block_hash(block.header)) != bytes(block.block_hash):
            raise BlockError(errors.BAD_BLOCK_HASH, f"at height {block.header.height}")
        if bytes(transactions_digest(block.txs)) != bytes(block.header.tx_digest):
            raise BlockError(errors.BAD_TX_DIGEST, f"at height {block.header.height}")
        if require_certificate:
            verify_certificate(block, self.state.validators, self.secrets)

    def apply_transactions(self, block: Block) -> State:
        """Run the block's transactions against a copy of the current state."""
        state = self.state
        for i, tx in enumerate(block.txs):
            try:
                state = apply_tx(state, tx)
            except TxError as exc:
                raise BlockError(
                    errors.INVALID_TRANSACTION,
                    f"tx {i} ({tx.tx_type}) at height {block.header.height}: {exc}",
                ) from exc
        return state

    def append_block(self, block: Block) -> None:
        self.validate_structure(block)
        new_state = self.apply_transactions(block)
        new_state.height = block.header.height + 1
        self.blocks.append(block)
        self.vsets.append(list(self.state.validators))
        self.state = new_state

    def reconcile_block(self, block: Block) -> bool:
        """Adopt an alternate encoding of an already-committed block.

        Two collectors can legitimately certify the same block hash with
        different approval subsets. To keep replicas byte-identical, every
        node converges on the lexicographically smallest valid encoding.
        Returns True when the local copy was replaced.
        """
        h = block.header.height
        if not 0 <= h < len(self.blocks):
            return False
        local = self.blocks[h]
        if bytes(local.block_hash) != bytes(block.block_hash):
            return False
        incoming = encode_block(block)
        if incoming >= encode_block(local):
            return False
        verify_certificate(block, self.vsets[h], self.secrets)
        self.blocks[h] = block
        return True


# -- verification -----------------------------------------------------------------


@dataclass
class VerificationReport:
    ok: bool
    blocks_checked: int
    error_height: Optional[int] = None
    error_code: Optional[str] = None
    error_detail: Optional[str] = None

    def describe(self) -> str:
        if self.ok:
            return f"OK: {self.blocks_checked} blocks verified"
        return (
            f"FAIL at height {self.error_height}: "
            f"{self.error_code}: {self.error_detail}"
        )


def verify_chain(
    blocks: Iterable[Block],
    secrets: Mapping[str, MacSecret],
    min_quotes: int = DEFAULT_MIN_QUOTES,
) -> VerificationReport:
    """Recompute every hash, link, certificate, and transaction from scratch."""
    chain = Chain(secrets, min_quotes=min_quotes)
    count = 0
    for block in blocks:
        try:
            chain.append_block(block)
        except BlockError as exc:
            return VerificationReport(
                ok=False,
                blocks_checked=count,
                error_height=block.header.height,
                error_code=exc.code,
                error_detail=exc.detail,
            )
        count += 1
    return VerificationReport(ok=True, blocks_checked=count)
