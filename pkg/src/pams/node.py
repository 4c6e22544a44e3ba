"""The runnable node: persistence, transports, HTTP API, lifecycle.

One mutex serializes every touch of the engine and chain (socket receiver,
API submissions, the tick timer), which gives the single-writer discipline
the consensus engine expects. Outbound messages go through a queue and a
sender thread so slow peers never stall consensus. API reads take object
references under the lock; committed structures are never mutated in place,
so rendering after release is safe.

Startup replays the block log (truncating a torn tail, refusing to serve on
deeper corruption), then the regular anti-entropy sync catches the node up
with its peers.
"""

from __future__ import annotations

import json
import queue
import re
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any, Optional, Union
from urllib.parse import parse_qs, urlparse

from . import assets, payloads
from .consensus import (
    AUDIT_AUTH_FAILURE,
    AuditRecord,
    EngineConfig,
    NodeEngine,
    ROLE_FULL,
    ROLE_VALIDATOR,
)
from .errors import PAYLOAD_INVARIANT, BlockError, ConfigError, CorruptLog, TxError
from .hashing import Digest, MacSecret
from .ledger import Block, Chain, Transaction, encode_block, make_tx, quorum_size, verify_chain
from .p2p import (
    KIND_COMMIT,
    KIND_PROPOSE,
    KIND_SYNC_REQUEST,
    KIND_SYNC_RESPONSE,
    MessageServer,
    decode_message,
    encode_message,
    parse_block_body,
    parse_sync_request_body,
    parse_sync_response_body,
    send_frame,
)
from .state import ROLE_ADMIN, State
from .storage import BlockLog


@dataclass
class NodeConfig:
    node_id: str
    role: str
    listen: str
    api_listen: str
    data_dir: str
    genesis_file: str
    peers: dict[str, str] = field(default_factory=dict)
    block_interval_s: float = 5.0
    allow_empty_blocks: bool = True
    max_txs_per_block: int = 100
    min_quotes: int = 3
    validator_secrets: dict[str, str] = field(default_factory=dict)
    api_tokens: dict[str, str] = field(default_factory=dict)

    @property
    def block_interval_ms(self) -> int:
        return int(self.block_interval_s * 1000)

    def secrets(self) -> dict[str, MacSecret]:
        try:
            return {vid: MacSecret.from_hex(hexed) for vid, hexed in self.validator_secrets.items()}
        except ValueError as exc:
            raise ConfigError(f"bad validator secret: {exc}") from exc


def load_config(path: Union[str, Path]) -> NodeConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    try:
        config = NodeConfig(
            node_id=doc["node_id"],
            role=doc.get("role", ROLE_FULL),
            listen=doc["listen"],
            api_listen=doc["api_listen"],
            data_dir=doc["data_dir"],
            genesis_file=doc["genesis_file"],
            peers=dict(doc.get("peers", {})),
            block_interval_s=doc.get("block_interval_s", 5.0),
            allow_empty_blocks=doc.get("allow_empty_blocks", True),
            max_txs_per_block=doc.get("max_txs_per_block", 100),
            min_quotes=doc.get("min_quotes", 3),
            validator_secrets=dict(doc.get("validator_secrets", {})),
            api_tokens=dict(doc.get("api_tokens", {})),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"config missing field: {exc}") from exc
    if config.role not in (ROLE_VALIDATOR, ROLE_FULL):
        raise ConfigError(f"role must be validator or full, not {config.role!r}")
    if config.role == ROLE_VALIDATOR and config.node_id not in config.validator_secrets:
        raise ConfigError(f"validator {config.node_id} has no MAC secret in validator_secrets")
    return config


def now_ms() -> int:
    return int(time.time() * 1000)


class Node:
    def __init__(self, config: NodeConfig):
        self.config = config
        self.lock = threading.RLock()
        self.chain = Chain(config.secrets(), min_quotes=config.min_quotes)
        self.log = BlockLog(Path(config.data_dir) / "blocks.log")
        self.persisted_height = 0
        self._load_or_bootstrap()

        self.engine = NodeEngine(
            EngineConfig(
                node_id=config.node_id,
                role=config.role,
                block_interval_ms=config.block_interval_ms,
                allow_empty_blocks=config.allow_empty_blocks,
                max_txs_per_block=config.max_txs_per_block,
            ),
            self.chain,
            list(config.peers),
        )
        self.engine.on_block_replaced = lambda height: self._rewrite_log()

        # Highest block count each peer has proven it holds, from protocol
        # traffic alone (no extra probing).
        self.peer_heights: dict[str, int] = {}

        self.outbox: "queue.Queue[Optional[tuple[str, bytes]]]" = queue.Queue()
        self._stop = threading.Event()
        self._server = MessageServer(config.listen, self._on_frame)
        self._api = _make_api_server(self)
        self._threads: list[threading.Thread] = []

    # -- persistence ------------------------------------------------------------

    def _load_or_bootstrap(self) -> None:
        if not self.log.exists():
            genesis_blocks = BlockLog(self.config.genesis_file).load()
            self.log.write_all(genesis_blocks[:1])
        # A torn tail (crash mid-append) is dropped; sync refetches those
        # blocks. Content tampering surfaces as a replay failure below.
        blocks, _dropped = self.log.recover()
        for block in blocks:
            try:
                self.chain.append_block(block)
            except BlockError as exc:
                raise CorruptLog(block.header.height, str(exc)) from exc
        self.persisted_height = self.chain.height

    def _persist_new_blocks(self) -> None:
        while self.persisted_height < self.chain.height:
            self.log.append(self.chain.blocks[self.persisted_height])
            self.persisted_height += 1

    def _rewrite_log(self) -> None:
        self.log.write_all(self.chain.blocks)
        self.persisted_height = self.chain.height

    # -- event plumbing -----------------------------------------------------------

    def _dispatch(self, outputs) -> None:
        for dest, msg in outputs:
            addr = self.config.peers.get(dest)
            if addr is not None:
                self.outbox.put((addr, encode_message(msg)))

    @staticmethod
    def _height_claim(msg) -> Optional[int]:
        """Block count the sender provably holds, if the message implies one."""
        try:
            if msg.kind == KIND_PROPOSE:
                return parse_block_body(msg.body).header.height
            if msg.kind == KIND_COMMIT:
                return parse_block_body(msg.body).header.height + 1
            if msg.kind == KIND_SYNC_REQUEST:
                return parse_sync_request_body(msg.body)
            if msg.kind == KIND_SYNC_RESPONSE:
                blocks = parse_sync_response_body(msg.body)
                return blocks[-1].header.height + 1 if blocks else None
        except Exception:
            return None
        return None

    def _on_frame(self, raw: bytes) -> None:
        try:
            msg = decode_message(raw)
        except Exception:
            return
        claim = self._height_claim(msg)
        with self.lock:
            if claim is not None and claim > self.peer_heights.get(msg.sender_id, -1):
                self.peer_heights[msg.sender_id] = claim
            outputs = self.engine.on_message(msg.sender_id, msg, now_ms())
            self._persist_new_blocks()
        self._dispatch(outputs)

    def _tick_loop(self) -> None:
        while not self._stop.wait(0.2):
            with self.lock:
                outputs = self.engine.on_tick(now_ms())
                self._persist_new_blocks()
            self._dispatch(outputs)

    def _send_loop(self) -> None:
        while True:
            item = self.outbox.get()
            if item is None:
                return
            addr, data = item
            send_frame(addr, data)

    # -- lifecycle -------------------------------------------------------------------

    def start(self) -> None:
        self._server.start()
        self._threads = [
            threading.Thread(target=self._tick_loop, daemon=True),
            threading.Thread(target=self._send_loop, daemon=True),
            threading.Thread(target=self._api.serve_forever, daemon=True),
        ]
        for t in self._threads:
            t.start()

    def stop(self) -> None:
        self._stop.set()
        self.outbox.put(None)
        self._api.shutdown()
        self._api.server_close()
        self._server.stop()

    @property
    def api_port(self) -> int:
        return self._api.server_address[1]

    @property
    def p2p_port(self) -> int:
        return self._server.port

    # -- API operations ------------------------------------------------------------------

    def submit_api_tx(self, author_id: str, tx_type: str, payload_doc: dict) -> Transaction:
        """Build, pre-check, pool, and relay one transaction. Raises TxError."""
        if tx_type not in payloads.ALL_TYPES:
            raise TxError(PAYLOAD_INVARIANT, f"unknown tx_type {tx_type!r}")
        try:
            payload = payloads.encode_payload(tx_type, payloads.payload_from_json(tx_type, payload_doc))
        except (KeyError, TypeError, ValueError) as exc:
            raise TxError(PAYLOAD_INVARIANT, f"malformed payload: {exc}") from exc
        with self.lock:
            tx = make_tx(tx_type, author_id, int(time.time()), payload)
            from .procurement import apply_tx

            apply_tx(self.chain.state, tx)  # fast-fail before pooling
            outputs = self.engine.submit_tx(tx, now_ms())
            self._persist_new_blocks()
        self._dispatch(outputs)
        return tx

    def record_auth_failure(self, detail: str) -> None:
        with self.lock:
            self.engine.audit.append(AuditRecord(now_ms(), AUDIT_AUTH_FAILURE, detail))

    def snapshot(self) -> tuple[list[Block], State]:
        with self.lock:
            return list(self.chain.blocks), self.chain.state


# -- JSON rendering ---------------------------------------------------------------------


def tx_to_json(tx: Transaction) -> dict:
    return {
        "tx_id": tx.tx_id.hex(),
        "tx_type": tx.tx_type,
        "author_id": tx.author_id,
        "timestamp": tx.timestamp,
        "payload": payloads.payload_to_json(tx.tx_type, payloads.decode_payload(tx.tx_type, tx.payload)),
    }


def block_to_json(block: Block) -> dict:
    return {
        "height": block.header.height,
        "block_hash": block.block_hash.hex(),
        "header": {
            "version": block.header.version,
            "height": block.header.height,
            "prev_hash": block.header.prev_hash.hex(),
            "timestamp": block.header.timestamp,
            "primary_id": block.header.primary_id,
            "tx_digest": block.header.tx_digest.hex(),
        },
        "transactions": [tx_to_json(tx) for tx in block.txs],
        "certificate": [
            {"validator_id": a.validator_id, "tag": a.tag.hex()} for a in block.certificate
        ],
    }


def document_to_json(state: State, ref: Digest) -> Optional[dict]:
    from . import procurement as pc

    if ref in state.prs:
        pr = state.prs[ref]
        return {
            "kind": "purchase_request",
            "pr_id": pr.pr_id.hex(),
            "requester": pr.requester,
            "status": pr.status,
            "lines": [
                {"description": l.description, "quantity": l.quantity, "unit": l.unit, "specs": l.specs}
                for l in pr.lines
            ],
            "aoc_ref": pr.aoc_ref.hex() if pr.aoc_ref else None,
        }
    if ref in state.aocs:
        aoc = state.aocs[ref]
        return {
            "kind": "abstract_of_canvass",
            "aoc_id": aoc.aoc_id.hex(),
            "pr_ref": aoc.pr_ref.hex(),
            "quotes": [
                {"supplier": q.supplier, "unit_prices": list(q.unit_prices)} for q in aoc.quotes
            ],
            "winner_index": aoc.winner_index,
        }
    if ref in state.pos:
        po = state.pos[ref]
        return {
            "kind": "purchase_order",
            "po_id": po.po_id.hex(),
            "aoc_ref": po.aoc_ref.hex(),
            "pr_ref": po.pr_ref.hex(),
            "supplier": po.supplier,
            "status": po.status,
            "inspection_passed": po.inspection_passed,
            "dc_refs": [d.hex() for d in po.dc_refs],
            "lines": [
                {
                    "description": l.description,
                    "quantity": l.quantity,
                    "unit": l.unit,
                    "unit_price": l.unit_price,
                }
                for l in po.lines
            ],
        }
    if ref in state.dcs:
        dc = state.dcs[ref]
        return {
            "kind": "delivery_checklist",
            "dc_id": dc.dc_id.hex(),
            "po_ref": dc.po_ref.hex(),
            "ir_ref": dc.ir_ref.hex() if dc.ir_ref else None,
            "lines": [
                {"expected": l.expected, "received": l.received, "remarks": l.remarks}
                for l in dc.lines
            ],
        }
    if ref in state.irs:
        ir = state.irs[ref]
        return {
            "kind": "inspection_report",
            "ir_id": ir.ir_id.hex(),
            "dc_ref": ir.dc_ref.hex(),
            "inspector": ir.inspector,
            "all_pass": ir.all_pass,
            "verdicts": [{"passed": v.passed, "reason": v.reason} for v in ir.verdicts],
        }
    return None


def asset_to_json(record: assets.AssetRecord) -> dict:
    return {
        "asset_uid": record.asset_uid,
        "description": record.description,
        "status": record.status,
        "custodian": record.custodian,
        "source_po": record.source_po.hex(),
        "reg_tx": record.reg_tx.hex(),
    }


def mr_to_json(rec: assets.MrRecord) -> dict:
    return {
        "mr_tx": rec.mr_tx.hex(),
        "asset_uid": rec.asset_uid,
        "custodian": rec.custodian,
        "issued_by": rec.issued_by,
        "timestamp": rec.timestamp,
    }


def audit_to_json(rec: AuditRecord) -> dict:
    return {"time_ms": rec.time_ms, "kind": rec.kind, "detail": rec.detail}


# -- HTTP API ------------------------------------------------------------------------------

_ASSET_ROUTE = re.compile(r"^/api/assets/([^/]+)$")
_ASSET_HISTORY_ROUTE = re.compile(r"^/api/assets/([^/]+)/history$")
_ASSET_QR_ROUTE = re.compile(r"^/api/assets/([^/]+)/qr\.png$")
_BLOCK_ROUTE = re.compile(r"^/api/blocks/(\d+)$")
_DOCUMENT_ROUTE = re.compile(r"^/api/documents/([0-9a-f]{128})$")


def _make_api_server(node: Node) -> ThreadingHTTPServer:
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # silence default stderr chatter
            pass

        def _cors(self) -> None:
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Headers", "Authorization, Content-Type")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")

        def _json(self, status: int, doc: Any) -> None:
            body = json.dumps(doc).encode()
            self.send_response(status)
            self._cors()
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _bytes(self, status: int, content_type: str, body: bytes) -> None:
            self.send_response(status)
            self._cors()
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _error(self, status: int, code: str, detail: str) -> None:
            self._json(status, {"error": code, "detail": detail})

        def _user(self) -> Optional[str]:
            header = self.headers.get("Authorization", "")
            if header.startswith("Bearer "):
                token = header[len("Bearer ") :].strip()
                user = node.config.api_tokens.get(token)
                if user is not None:
                    return user
            node.record_auth_failure(f"{self.command} {self.path}")
            self._error(401, "Unauthenticated", "missing or unknown bearer token")
            return None

        def _is_admin(self, user: str, state: State) -> bool:
            record = state.users.get(user)
            return record is not None and record.active and ROLE_ADMIN in record.roles

        def _read_json_body(self) -> Optional[dict]:
            try:
                length = int(self.headers.get("Content-Length", "0"))
                doc = json.loads(self.rfile.read(length) or b"{}")
            except (ValueError, json.JSONDecodeError):
                self._error(400, "BadRequest", "body is not valid JSON")
                return None
            if not isinstance(doc, dict):
                self._error(400, "BadRequest", "body must be a JSON object")
                return None
            return doc

        def do_OPTIONS(self) -> None:
            self.send_response(204)
            self._cors()
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_GET(self) -> None:
            url = urlparse(self.path)
            path = url.path

            if path == "/api/sync/blocks":  # peer route, unauthenticated
                params = parse_qs(url.query)
                try:
                    from_height = int(params.get("from", ["0"])[0])
                except ValueError:
                    return self._error(400, "BadRequest", "from must be an integer")
                blocks, _ = node.snapshot()
                return self._json(
                    200, {"blocks": [encode_block(b).hex() for b in blocks[from_height:]]}
                )

            user = self._user()
            if user is None:
                return
            blocks, state = node.snapshot()

            if path == "/api/blocks/head":
                if not blocks:
                    return self._error(404, "NotFound", "empty chain")
                return self._json(200, block_to_json(blocks[-1]))

            m = _BLOCK_ROUTE.match(path)
            if m:
                height = int(m.group(1))
                if height >= len(blocks):
                    return self._error(404, "NotFound", f"no block at height {height}")
                return self._json(200, block_to_json(blocks[height]))

            if path == "/api/chain/verify":
                report = verify_chain(blocks, node.chain.secrets, node.config.min_quotes)
                return self._json(
                    200,
                    {
                        "ok": report.ok,
                        "blocks_checked": report.blocks_checked,
                        "error_height": report.error_height,
                        "error_code": report.error_code,
                        "error_detail": report.error_detail,
                    },
                )

            m = _DOCUMENT_ROUTE.match(path)
            if m:
                doc = document_to_json(state, Digest.from_hex(m.group(1)))
                if doc is None:
                    return self._error(404, "NotFound", "no document with that id")
                return self._json(200, doc)

            m = _ASSET_HISTORY_ROUTE.match(path)
            if m:
                uid = m.group(1)
                if uid not in state.assets:
                    return self._error(404, "NotFound", f"no asset {uid}")
                history = [mr_to_json(r) for r in state.mr_history if r.asset_uid == uid]
                return self._json(200, {"asset_uid": uid, "history": history})

            m = _ASSET_QR_ROUTE.match(path)
            if m:
                record = state.assets.get(m.group(1))
                if record is None:
                    return self._error(404, "NotFound", f"no asset {m.group(1)}")
                png = assets.qr_png(assets.qr_encode(record))
                return self._bytes(200, "image/png", png)

            m = _ASSET_ROUTE.match(path)
            if m:
                record = state.assets.get(m.group(1))
                if record is None:
                    return self._error(404, "NotFound", f"no asset {m.group(1)}")
                doc = asset_to_json(record)
                doc["qr_payload"] = assets.qr_encode(record)
                return self._json(200, doc)

            if path == "/api/validators":
                return self._json(
                    200,
                    {
                        "validators": list(state.validators),
                        "quorum": quorum_size(len(state.validators)),
                        "height": len(blocks),
                    },
                )

            if path == "/api/peers":
                with node.lock:
                    heights = dict(node.peer_heights)
                return self._json(
                    200,
                    {
                        "peers": [
                            {
                                "peer_id": peer,
                                "address": addr,
                                "last_height": heights.get(peer),
                            }
                            for peer, addr in sorted(node.config.peers.items())
                        ]
                    },
                )

            if path == "/api/users":
                if not self._is_admin(user, state):
                    return self._error(403, "RoleForbidden", "administrator role required")
                return self._json(
                    200,
                    {
                        "users": [
                            {
                                "user_id": u.user_id,
                                "display_name": u.display_name,
                                "roles": list(u.roles),
                                "active": u.active,
                            }
                            for u in sorted(state.users.values(), key=lambda u: u.user_id)
                        ]
                    },
                )

            if path == "/api/audit":
                if not self._is_admin(user, state):
                    return self._error(403, "RoleForbidden", "administrator role required")
                with node.lock:
                    records = [audit_to_json(r) for r in node.engine.audit]
                return self._json(200, {"audit": records})

            if path == "/api/mempool":
                with node.lock:
                    pending = [tx_to_json(tx) for tx in node.engine.mempool.values()]
                return self._json(200, {"pending": pending})

            return self._error(404, "NotFound", path)

        def do_POST(self) -> None:
            url = urlparse(self.path)
            path = url.path
            user = self._user()
            if user is None:
                return
            doc = self._read_json_body()
            if doc is None:
                return

            if path == "/api/tx":
                tx_type = doc.get("tx_type")
                payload_doc = doc.get("payload")
                if not isinstance(tx_type, str) or not isinstance(payload_doc, dict):
                    return self._error(400, "BadRequest", "need tx_type (string) and payload (object)")
                try:
                    tx = node.submit_api_tx(user, tx_type, payload_doc)
                except TxError as exc:
                    return self._error(422, exc.code, exc.detail)
                return self._json(200, {"tx_id": tx.tx_id.hex(), "status": "pooled"})

            if path == "/api/verify-qr":
                payload_text = doc.get("payload")
                if not isinstance(payload_text, str):
                    return self._error(400, "BadRequest", "need payload (string)")
                try:
                    qr = assets.qr_decode(payload_text)
                except assets.QrDecodeError as exc:
                    return self._json(
                        200, {"checksum_ok": False, "error": exc.code, "detail": exc.detail}
                    )
                _, state = node.snapshot()
                result = assets.verify_asset(state, qr)
                return self._json(
                    200,
                    {
                        "checksum_ok": True,
                        "found": result.found,
                        "asset_uid": qr.asset_uid,
                        "status": result.status,
                        "custodian": result.custodian,
                        "reg_tx_confirmed": result.reg_tx_confirmed,
                        "history": [mr_to_json(r) for r in result.history],
                    },
                )

            return self._error(404, "NotFound", path)

    host, port = node.config.api_listen.rsplit(":", 1)
    server = ThreadingHTTPServer((host or "127.0.0.1", int(port)), Handler)
    server.daemon_threads = True
    return server
