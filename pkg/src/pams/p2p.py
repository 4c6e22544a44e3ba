"""Peer messages and the socket transport.

A message is Record(kind, sender_id, body) in canonical encoding, where the
body is itself a canonical encoding that depends on the kind. The simulator
delivers encoded messages through its virtual network; live nodes exchange
the same bytes over one-shot TCP connections framed with an 8-byte length.
"""

from __future__ import annotations

import socket
import socketserver
import threading
from dataclasses import dataclass
from typing import Callable, Optional

from .codec import ByteReader, DecodeError, Record, encode_canonical
from .hashing import Digest
from .ledger import Block, Transaction, decode_block, decode_tx, encode_block, encode_tx

KIND_SUBMIT_TX = "SubmitTx"
KIND_PROPOSE = "Propose"
KIND_APPROVE = "Approve"
KIND_COMMIT = "Commit"
KIND_SYNC_REQUEST = "SyncRequest"
KIND_SYNC_RESPONSE = "SyncResponse"

ALL_KINDS = (
    KIND_SUBMIT_TX,
    KIND_PROPOSE,
    KIND_APPROVE,
    KIND_COMMIT,
    KIND_SYNC_REQUEST,
    KIND_SYNC_RESPONSE,
)


@dataclass(frozen=True)
class Message:
    kind: str
    sender_id: str
    body: bytes

    def to_canonical(self) -> Record:
        return Record((self.kind, self.sender_id, self.body))


def encode_message(msg: Message) -> bytes:
    return encode_canonical(msg.to_canonical())


def decode_message(data: bytes) -> Message:
    reader = ByteReader(data)
    kind = reader.read_text()
    sender_id = reader.read_text()
    body = reader.read_bytes()
    reader.expect_end()
    if kind not in ALL_KINDS:
        raise DecodeError(f"unknown message kind {kind!r}")
    return Message(kind, sender_id, body)


# -- bodies per kind ------------------------------------------------------------


def submit_tx_msg(sender_id: str, tx: Transaction) -> Message:
    return Message(KIND_SUBMIT_TX, sender_id, encode_tx(tx))


def parse_tx_body(body: bytes) -> Transaction:
    reader = ByteReader(body)
    tx = decode_tx(reader)
    reader.expect_end()
    return tx


def propose_msg(sender_id: str, block: Block) -> Message:
    return Message(KIND_PROPOSE, sender_id, encode_block(block))


def commit_msg(sender_id: str, block: Block) -> Message:
    return Message(KIND_COMMIT, sender_id, encode_block(block))


def parse_block_body(body: bytes) -> Block:
    return decode_block(body)


def approve_msg(sender_id: str, validator_id: str, block_hash: Digest, tag: Digest) -> Message:
    body = encode_canonical(Record((validator_id, bytes(block_hash), bytes(tag))))
    return Message(KIND_APPROVE, sender_id, body)


def parse_approve_body(body: bytes) -> tuple[str, Digest, Digest]:
    reader = ByteReader(body)
    validator_id = reader.read_text()
    block_hash = Digest(reader.read_bytes())
    tag = Digest(reader.read_bytes())
    reader.expect_end()
    return validator_id, block_hash, tag


def sync_request_msg(sender_id: str, from_height: int) -> Message:
    return Message(KIND_SYNC_REQUEST, sender_id, encode_canonical(from_height))


def parse_sync_request_body(body: bytes) -> int:
    reader = ByteReader(body)
    from_height = reader.read_uint()
    reader.expect_end()
    return from_height


def sync_response_msg(sender_id: str, blocks: list[Block]) -> Message:
    body = encode_canonical([encode_block(b) for b in blocks])
    return Message(KIND_SYNC_RESPONSE, sender_id, body)


def parse_sync_response_body(body: bytes) -> list[Block]:
    reader = ByteReader(body)
    blocks = [decode_block(reader.read_bytes()) for _ in range(reader.read_count())]
    reader.expect_end()
    return blocks


# -- socket transport -------------------------------------------------------------

_FRAME_LEN = 8
_MAX_FRAME = 64 * 1024 * 1024


def parse_hostport(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    return host or "127.0.0.1", int(port)


def send_frame(addr: str, data: bytes, timeout: float = 2.0) -> bool:
    """Fire-and-forget delivery of one encoded message; False if unreachable."""
    host, port = parse_hostport(addr)
    try:
        with socket.create_connection((host, port), timeout=timeout) as sock:
            sock.sendall(len(data).to_bytes(_FRAME_LEN, "big") + data)
        return True
    except OSError:
        return False


def _read_exact(sock: socket.socket, n: int) -> Optional[bytes]:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return buf


class MessageServer:
    """Accepts framed messages and hands the raw bytes to a callback.

    The callback runs on a transport thread; whoever owns it is responsible
    for serializing into the consensus event loop.
    """

    def __init__(self, listen: str, on_frame: Callable[[bytes], None]):
        host, port = parse_hostport(listen)

        class Handler(socketserver.BaseRequestHandler):
            def handle(self) -> None:
                self.request.settimeout(5.0)
                try:
                    header = _read_exact(self.request, _FRAME_LEN)
                    if header is None:
                        return
                    length = int.from_bytes(header, "big")
                    if length > _MAX_FRAME:
                        return
                    data = _read_exact(self.request, length)
                except OSError:
                    return
                if data is not None:
                    on_frame(data)

        class Server(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        self._server = Server((host, port), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    def start(self) -> None:
        self._thread.start()

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
