"""Shared fixtures: deterministic chain building and live node networks."""

from __future__ import annotations

import json
import socket
import time
from pathlib import Path

import httpx
import pytest

from pams import payloads
from pams.consensus import primary_for_height
from pams.hashing import MacSecret, mac_tag, sha3_512
from pams.ledger import (
    Approval,
    Chain,
    Transaction,
    make_block,
    make_genesis,
    make_tx,
    with_certificate,
)
from pams.node import Node, NodeConfig
from pams.storage import BlockLog

ADMIN = "admin"


def det_secret(validator_id: str) -> MacSecret:
    """Stable per-validator secret so fixtures are reproducible."""
    return MacSecret(sha3_512(b"test-secret|" + validator_id.encode())[:32])


class ChainBuilder:
    """Commits blocks directly with full certificates, bypassing the engine.

    Lets state-machine and storage tests build committed chains without
    network plumbing. The clock is a simple counter so runs are deterministic.
    """

    def __init__(self, validators: list[str] = None, min_quotes: int = 3):
        self.validators = validators or ["v1", "v2", "v3"]
        self.secrets = {v: det_secret(v) for v in self.validators}
        self.chain = Chain(self.secrets, min_quotes=min_quotes)
        self.chain.append_block(make_genesis(ADMIN, "Administrator", self.validators))
        self.clock = 1

    def tx(self, tx_type: str, author: str, payload: dict) -> Transaction:
        self.clock += 1
        return make_tx(tx_type, author, self.clock, payloads.encode_payload(tx_type, payload))

    def commit(self, txs: list[Transaction]):
        """Build, certify, and append one block carrying the given txs."""
        vset = self.chain.state.validators
        for v in vset:  # validators admitted on-chain get their secret here
            self.secrets.setdefault(v, det_secret(v))
            self.chain.secrets.setdefault(v, self.secrets[v])
        height = self.chain.height
        self.clock += 1
        block = make_block(
            height=height,
            prev_hash=self.chain.head_hash(),
            timestamp=self.clock,
            primary_id=primary_for_height(vset, height, 0),
            txs=tuple(txs),
        )
        cert = tuple(
            Approval(v, mac_tag(self.secrets[v], bytes(block.block_hash)))
            for v in sorted(vset)
        )
        block = with_certificate(block, cert)
        self.chain.append_block(block)
        return block

    def submit(self, tx_type: str, author: str, payload: dict) -> Transaction:
        """One tx, one block."""
        tx = self.tx(tx_type, author, payload)
        self.commit([tx])
        return tx

    def add_user(self, user_id: str, roles: list[str], display_name: str = None):
        return self.submit(
            payloads.ADMIN_ADD_USER,
            ADMIN,
            {"user_id": user_id, "display_name": display_name or user_id.title(), "roles": roles},
        )


@pytest.fixture
def builder() -> ChainBuilder:
    return ChainBuilder()


def free_ports(n: int) -> list[int]:
    """Ports the OS just handed out; free to bind immediately after."""
    sockets, ports = [], []
    for _ in range(n):
        s = socket.socket()
        s.bind(("127.0.0.1", 0))
        sockets.append(s)
        ports.append(s.getsockname()[1])
    for s in sockets:
        s.close()
    return ports


class ApiClient:
    def __init__(self, port: int, token: str = None):
        self.base = f"http://127.0.0.1:{port}"
        self.token = token

    def _headers(self, token):
        tok = token or self.token
        return {"Authorization": f"Bearer {tok}"} if tok else {}

    def get(self, path: str, token: str = None) -> httpx.Response:
        return httpx.get(self.base + path, headers=self._headers(token), timeout=10.0)

    def post(self, path: str, body: dict, token: str = None) -> httpx.Response:
        return httpx.post(self.base + path, json=body, headers=self._headers(token), timeout=10.0)

    def submit(self, tx_type: str, payload: dict, token: str = None) -> str:
        resp = self.post("/api/tx", {"tx_type": tx_type, "payload": payload}, token)
        assert resp.status_code == 200, resp.text
        return resp.json()["tx_id"]

    def wait_tx(self, tx_id: str, timeout_s: float = 10.0) -> int:
        """Poll until the tx appears in a committed block; return its height."""
        deadline = time.monotonic() + timeout_s
        seen = 0
        while time.monotonic() < deadline:
            head = self.get("/api/blocks/head").json()
            tip = head["height"]
            for h in range(seen, tip + 1):
                block = self.get(f"/api/blocks/{h}").json()
                if any(t["tx_id"] == tx_id for t in block["transactions"]):
                    return h
            seen = tip + 1
            time.sleep(0.05)
        raise AssertionError(f"tx {tx_id[:16]} not committed within {timeout_s}s")


def make_network(
    tmp_path: Path,
    n_validators: int = 3,
    tokens: dict[str, str] = None,
    block_interval_s: float = 0.5,
    full_nodes: int = 0,
    allow_empty_blocks: bool = True,
) -> list[Node]:
    """Spin up a live local network: validators plus optional full nodes."""
    validators = [f"v{i}" for i in range(1, n_validators + 1)]
    fulls = [f"n{i}" for i in range(1, full_nodes + 1)]
    names = validators + fulls
    secrets = {v: det_secret(v).hex() for v in validators}
    tokens = tokens or {"tok-admin": ADMIN}

    genesis_path = tmp_path / "genesis.log"
    BlockLog(genesis_path).write_all([make_genesis(ADMIN, "Administrator", validators)])

    p2p_ports = free_ports(len(names))
    api_ports = free_ports(len(names))
    addrs = {name: f"127.0.0.1:{p2p_ports[i]}" for i, name in enumerate(names)}

    nodes = []
    for i, name in enumerate(names):
        config = NodeConfig(
            node_id=name,
            role="validator" if name in validators else "full",
            listen=addrs[name],
            api_listen=f"127.0.0.1:{api_ports[i]}",
            data_dir=str(tmp_path / name),
            genesis_file=str(genesis_path),
            peers={other: addr for other, addr in addrs.items() if other != name},
            block_interval_s=block_interval_s,
            allow_empty_blocks=allow_empty_blocks,
            validator_secrets=secrets,
            api_tokens=dict(tokens),
        )
        nodes.append(Node(config))
    for node in nodes:
        node.start()
    return nodes


def stop_all(nodes: list[Node]) -> None:
    for node in nodes:
        try:
            node.stop()
        except Exception:
            pass
