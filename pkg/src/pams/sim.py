"""Deterministic discrete-event network simulator.

A scenario describes nodes, link latency bounds, partitions, crashes,
restarts, and a transaction workload. Execution runs under a virtual clock;
the only randomness is latency draws from the scenario seed, so an identical
scenario always produces a byte-identical result. Crashes model process
death with durable storage: the chain survives, all volatile consensus state
(mempool, locks, proposals) is lost, and a restarted node catches up through
the regular sync path.

Scenario files are JSON. Workload payloads may reference the tx_id of an
earlier workload item as {"$tx": index}; ids are precomputable because the
submission times (and therefore timestamps) are fixed by the scenario.
"""

from __future__ import annotations

import heapq
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

from . import payloads
from .consensus import AuditRecord, EngineConfig, NodeEngine, ROLE_FULL, ROLE_VALIDATOR
from .errors import ConfigError
from .hashing import MacSecret, sha3_512
from .ledger import Chain, Transaction, make_genesis, make_tx
from .p2p import Message, decode_message, encode_message
from .storage import log_bytes


@dataclass(frozen=True)
class SimNodeSpec:
    node_id: str
    role: str  # validator | full


@dataclass(frozen=True)
class Partition:
    start_ms: int
    end_ms: int
    side_a: tuple[str, ...]
    side_b: tuple[str, ...]

    def separates(self, a: str, b: str, now_ms: int) -> bool:
        if not self.start_ms <= now_ms < self.end_ms:
            return False
        return (a in self.side_a and b in self.side_b) or (a in self.side_b and b in self.side_a)


@dataclass(frozen=True)
class WorkItem:
    time_ms: int
    node: str
    tx_type: str
    author: str
    payload: dict


@dataclass
class SimScenario:
    seed: int
    duration_ms: int
    nodes: list[SimNodeSpec]
    block_interval_ms: int = 5000
    allow_empty_blocks: bool = False
    min_quotes: int = 3
    latency_min_ms: int = 5
    latency_max_ms: int = 50
    admin_id: str = "admin"
    admin_name: str = "Administrator"
    genesis_time_ms: int = 0
    partitions: list[Partition] = field(default_factory=list)
    crashes: list[tuple[int, str]] = field(default_factory=list)
    restarts: list[tuple[int, str]] = field(default_factory=list)
    workload: list[WorkItem] = field(default_factory=list)

    def validators(self) -> list[str]:
        return [n.node_id for n in self.nodes if n.role == ROLE_VALIDATOR]

    def validate(self) -> None:
        ids = [n.node_id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate node ids")
        if not self.validators():
            raise ConfigError("scenario needs at least one validator")
        if self.duration_ms <= 0 or self.latency_min_ms < 0 or self.latency_max_ms < self.latency_min_ms:
            raise ConfigError("bad duration or latency bounds")
        known = set(ids)
        for p in self.partitions:
            if p.start_ms < 0 or p.end_ms < p.start_ms:
                raise ConfigError("partition times out of order")
            if not set(p.side_a) <= known or not set(p.side_b) <= known:
                raise ConfigError("partition names unknown node")
            if set(p.side_a) & set(p.side_b):
                raise ConfigError("partition sides overlap")
        for t, node in self.crashes + self.restarts:
            if t < 0 or node not in known:
                raise ConfigError(f"bad crash/restart entry ({t}, {node})")
        for i, item in enumerate(self.workload):
            if item.time_ms < 0 or item.node not in known:
                raise ConfigError(f"workload item {i} malformed")
            if item.tx_type not in payloads.ALL_TYPES:
                raise ConfigError(f"workload item {i} has unknown tx_type {item.tx_type}")


def derive_secret(seed: int, validator_id: str) -> MacSecret:
    """Per-validator MAC secret for simulation networks, fixed by the seed."""
    digest = sha3_512(b"sim-validator-secret|" + str(seed).encode() + b"|" + validator_id.encode())
    return MacSecret(bytes(digest)[:32])


# -- scenario JSON ----------------------------------------------------------------


def scenario_to_json(s: SimScenario) -> dict:
    return {
        "seed": s.seed,
        "duration_ms": s.duration_ms,
        "block_interval_ms": s.block_interval_ms,
        "allow_empty_blocks": s.allow_empty_blocks,
        "min_quotes": s.min_quotes,
        "latency_ms": {"min": s.latency_min_ms, "max": s.latency_max_ms},
        "admin": {"id": s.admin_id, "name": s.admin_name},
        "genesis_time_ms": s.genesis_time_ms,
        "nodes": [{"id": n.node_id, "role": n.role} for n in s.nodes],
        "partitions": [
            {"start_ms": p.start_ms, "end_ms": p.end_ms, "side_a": list(p.side_a), "side_b": list(p.side_b)}
            for p in s.partitions
        ],
        "crashes": [{"time_ms": t, "node": n} for t, n in s.crashes],
        "restarts": [{"time_ms": t, "node": n} for t, n in s.restarts],
        "workload": [
            {
                "time_ms": w.time_ms,
                "node": w.node,
                "tx_type": w.tx_type,
                "author": w.author,
                "payload": w.payload,
            }
            for w in s.workload
        ],
    }


def scenario_from_json(doc: dict) -> SimScenario:
    try:
        latency = doc.get("latency_ms", {})
        admin = doc.get("admin", {})
        scenario = SimScenario(
            seed=doc["seed"],
            duration_ms=doc["duration_ms"],
            block_interval_ms=doc.get("block_interval_ms", 5000),
            allow_empty_blocks=doc.get("allow_empty_blocks", False),
            min_quotes=doc.get("min_quotes", 3),
            latency_min_ms=latency.get("min", 5),
            latency_max_ms=latency.get("max", 50),
            admin_id=admin.get("id", "admin"),
            admin_name=admin.get("name", "Administrator"),
            genesis_time_ms=doc.get("genesis_time_ms", 0),
            nodes=[SimNodeSpec(n["id"], n["role"]) for n in doc["nodes"]],
            partitions=[
                Partition(p["start_ms"], p["end_ms"], tuple(p["side_a"]), tuple(p["side_b"]))
                for p in doc.get("partitions", [])
            ],
            crashes=[(c["time_ms"], c["node"]) for c in doc.get("crashes", [])],
            restarts=[(r["time_ms"], r["node"]) for r in doc.get("restarts", [])],
            workload=[
                WorkItem(w["time_ms"], w["node"], w["tx_type"], w["author"], w["payload"])
                for w in doc.get("workload", [])
            ],
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed scenario: {exc}") from exc
    scenario.validate()
    return scenario


def load_scenario(path: Union[str, Path]) -> SimScenario:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario is not valid JSON: {exc}") from exc
    return scenario_from_json(doc)


def _resolve_refs(value: Any, tx_ids: list) -> Any:
    """Replace {"$tx": i} markers with the hex id of workload item i."""
    if isinstance(value, dict):
        if set(value.keys()) == {"$tx"}:
            index = value["$tx"]
            if not 0 <= index < len(tx_ids):
                raise ConfigError(f"$tx reference {index} does not point to an earlier item")
            return tx_ids[index].hex()
        return {k: _resolve_refs(v, tx_ids) for k, v in value.items()}
    if isinstance(value, list):
        return [_resolve_refs(v, tx_ids) for v in value]
    return value


def build_workload_txs(scenario: SimScenario) -> list[Transaction]:
    txs: list[Transaction] = []
    ids: list = []
    for i, item in enumerate(scenario.workload):
        try:
            payload_doc = _resolve_refs(item.payload, ids)
            payload = payloads.encode_payload(item.tx_type, payloads.payload_from_json(item.tx_type, payload_doc))
        except (ConfigError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"workload item {i}: {exc}") from exc
        tx = make_tx(item.tx_type, item.author, item.time_ms // 1000, payload)
        txs.append(tx)
        ids.append(tx.tx_id)
    return txs


# -- results -------------------------------------------------------------------------


@dataclass
class SimNodeResult:
    node_id: str
    role: str
    alive: bool
    height: int
    head_hash_hex: str
    log: bytes
    state_fingerprint_hex: str
    audits: list[AuditRecord]
    commit_times_ms: dict[int, int]
    committed_tx_ids: list[str]
    commit_hashes: dict[int, str] = field(default_factory=dict)
    tx_heights: dict[str, int] = field(default_factory=dict)


@dataclass
class SimResult:
    scenario_seed: int
    nodes: dict[str, SimNodeResult]

    # (time_ms, node, kind, detail) in deterministic processing order.
    trace: list[tuple[int, str, str, str]]

    def alive_nodes(self) -> list[SimNodeResult]:
        return [n for n in self.nodes.values() if n.alive]

    def safety_violations(self) -> list[tuple[str, AuditRecord]]:
        return [
            (n.node_id, rec)
            for n in self.nodes.values()
            for rec in n.audits
            if rec.kind == "SafetyViolation"
        ]

    def certified_hashes_by_height(self) -> dict[int, set[str]]:
        """Across all nodes: which certified block hashes exist per height."""
        out: dict[int, set[str]] = {}
        for node in self.nodes.values():
            for h, digest in node.commit_hashes.items():
                out.setdefault(h, set()).add(digest)
        return out

    def tx_commit_time_ms(self, tx_id_hex: str) -> Optional[int]:
        """Earliest virtual time any node committed the block holding this tx."""
        best: Optional[int] = None
        for node in self.nodes.values():
            h = node.tx_heights.get(tx_id_hex)
            if h is None:
                continue
            t = node.commit_times_ms.get(h)
            if t is not None and (best is None or t < best):
                best = t
        return best


class _SimNode:
    def __init__(self, spec: SimNodeSpec, chain: Chain, engine: NodeEngine):
        self.spec = spec
        self.chain = chain
        self.engine = engine
        self.alive = True
        self.audits: list[AuditRecord] = []
        self.events_taken = 0
        self.audits_taken = 0


def run_simulation(scenario: SimScenario) -> SimResult:
    scenario.validate()
    rng = random.Random(scenario.seed)
    validators = scenario.validators()
    secrets = {v: derive_secret(scenario.seed, v) for v in validators}
    genesis = make_genesis(
        scenario.admin_id, scenario.admin_name, validators, scenario.genesis_time_ms // 1000
    )
    all_ids = [n.node_id for n in scenario.nodes]
    tick_ms = max(100, scenario.block_interval_ms // 5)

    nodes: dict[str, _SimNode] = {}
    for spec in scenario.nodes:
        chain = Chain(secrets, min_quotes=scenario.min_quotes)
        chain.append_block(genesis)
        engine = NodeEngine(_engine_config(scenario, spec), chain, all_ids)
        nodes[spec.node_id] = _SimNode(spec, chain, engine)

    workload_txs = build_workload_txs(scenario)

    trace: list[tuple[int, str, str, str]] = []
    heap: list[tuple[int, int, str, tuple]] = []
    seq = 0

    def push(time_ms: int, kind: str, data: tuple) -> None:
        nonlocal seq
        heapq.heappush(heap, (time_ms, seq, kind, data))
        seq += 1

    def drain(node: _SimNode) -> None:
        events = node.engine.events
        for t, kind, detail in events[node.events_taken :]:
            trace.append((t, node.spec.node_id, kind, detail))
        node.events_taken = len(events)
        audits = node.engine.audit
        node.audits.extend(audits[node.audits_taken :])
        node.audits_taken = len(audits)

    last_delivery: dict[tuple[str, str], int] = {}

    def send(src: str, dst: str, msg: Message, now_ms: int) -> None:
        if dst not in nodes or dst == src:
            return
        for p in scenario.partitions:
            if p.separates(src, dst, now_ms):
                trace.append((now_ms, src, "msg_dropped_partition", f"{msg.kind} to {dst}"))
                return
        latency = rng.randint(scenario.latency_min_ms, scenario.latency_max_ms)
        at = max(now_ms + latency, last_delivery.get((src, dst), -1) + 1)
        last_delivery[(src, dst)] = at
        push(at, "deliver", (src, dst, encode_message(msg)))

    def route(src: str, outputs, now_ms: int) -> None:
        for dst, msg in outputs:
            send(src, dst, msg, now_ms)

    for spec in scenario.nodes:
        push(0, "tick", (spec.node_id,))
    for i, item in enumerate(scenario.workload):
        push(item.time_ms, "submit", (i,))
    for t, node_id in scenario.crashes:
        push(t, "crash", (node_id,))
    for t, node_id in scenario.restarts:
        push(t, "restart", (node_id,))

    while heap:
        now_ms, _, kind, data = heapq.heappop(heap)
        if now_ms > scenario.duration_ms:
            break

        if kind == "tick":
            (node_id,) = data
            node = nodes[node_id]
            if node.alive:
                route(node_id, node.engine.on_tick(now_ms), now_ms)
                drain(node)
            push(now_ms + tick_ms, "tick", (node_id,))

        elif kind == "deliver":
            src, dst, raw = data
            node = nodes[dst]
            if node.alive:
                route(dst, node.engine.on_message(src, decode_message(raw), now_ms), now_ms)
                drain(node)

        elif kind == "submit":
            (index,) = data
            item = scenario.workload[index]
            node = nodes[item.node]
            if node.alive:
                route(item.node, node.engine.submit_tx(workload_txs[index], now_ms), now_ms)
                drain(node)
            else:
                trace.append((now_ms, item.node, "submit_dropped_dead_node", item.tx_type))

        elif kind == "crash":
            (node_id,) = data
            node = nodes[node_id]
            if node.alive:
                drain(node)
                node.alive = False
                trace.append((now_ms, node_id, "crashed", f"h={node.chain.height}"))

        elif kind == "restart":
            (node_id,) = data
            node = nodes[node_id]
            if not node.alive:
                # Chain (durable log) survives; volatile consensus state resets.
                node.engine = NodeEngine(_engine_config(scenario, node.spec), node.chain, all_ids)
                node.events_taken = 0
                node.audits_taken = 0
                node.alive = True
                trace.append((now_ms, node_id, "restarted", f"h={node.chain.height}"))

    results: dict[str, SimNodeResult] = {}
    for node_id, node in nodes.items():
        drain(node)
        results[node_id] = SimNodeResult(
            node_id=node_id,
            role=node.spec.role,
            alive=node.alive,
            height=node.chain.height,
            head_hash_hex=node.chain.head_hash().hex(),
            log=log_bytes(node.chain.blocks),
            state_fingerprint_hex=node.chain.state.fingerprint().hex(),
            audits=node.audits,
            commit_times_ms=_commit_times(trace, node_id),
            committed_tx_ids=sorted(
                tx.tx_id.hex() for block in node.chain.blocks for tx in block.txs
            ),
            commit_hashes={b.header.height: b.block_hash.hex() for b in node.chain.blocks},
            tx_heights={
                tx.tx_id.hex(): b.header.height for b in node.chain.blocks for tx in b.txs
            },
        )
    return SimResult(scenario_seed=scenario.seed, nodes=results, trace=trace)


def _engine_config(scenario: SimScenario, spec: SimNodeSpec) -> EngineConfig:
    return EngineConfig(
        node_id=spec.node_id,
        role=spec.role,
        block_interval_ms=scenario.block_interval_ms,
        allow_empty_blocks=scenario.allow_empty_blocks,
    )


def _commit_times(trace, node_id: str) -> dict[int, int]:
    times: dict[int, int] = {}
    for t, nid, kind, detail in trace:
        if nid == node_id and kind == "committed":
            height = int(detail.split(" ")[0].split("=")[1])
            times.setdefault(height, t)
    return times


# -- scenario generators ---------------------------------------------------------------


def liveness_scenario(seed: int = 7, n_validators: int = 4, n_txs: int = 20) -> SimScenario:
    """All nodes online, no partitions: every tx should commit promptly."""
    nodes = [SimNodeSpec(f"v{i+1}", ROLE_VALIDATOR) for i in range(n_validators)]
    nodes.append(SimNodeSpec("n1", ROLE_FULL))
    interval = 2000
    workload = [
        WorkItem(
            time_ms=1000 + i * 500,
            node="n1",
            tx_type=payloads.ADMIN_ADD_USER,
            author="admin",
            payload={"user_id": f"user{i:02d}", "display_name": f"User {i:02d}", "roles": ["employee"]},
        )
        for i in range(n_txs)
    ]
    return SimScenario(
        seed=seed,
        duration_ms=1000 + n_txs * 500 + 6 * interval,
        block_interval_ms=interval,
        nodes=nodes,
        workload=workload,
    )


def spof_scenario(kill_node: str, seed: int = 11) -> SimScenario:
    """5 nodes (4 validators + 1 full); one node dies mid-run and returns."""
    nodes = [SimNodeSpec(f"v{i+1}", ROLE_VALIDATOR) for i in range(4)]
    nodes.append(SimNodeSpec("n1", ROLE_FULL))
    ids = [n.node_id for n in nodes]
    if kill_node not in ids:
        raise ConfigError(f"unknown node {kill_node}")
    interval = 2000
    # Submissions rotate across all nodes so killing any single one still
    # leaves a steady source of transactions.
    workload = [
        WorkItem(
            time_ms=1000 + i * 1200,
            node=ids[i % len(ids)],
            tx_type=payloads.ADMIN_ADD_USER,
            author="admin",
            payload={"user_id": f"user{i:02d}", "display_name": f"User {i:02d}", "roles": ["employee"]},
        )
        for i in range(16)
    ]
    end_of_workload = 1000 + 16 * 1200
    return SimScenario(
        seed=seed,
        duration_ms=end_of_workload + 8 * interval,
        block_interval_ms=interval,
        nodes=nodes,
        crashes=[(6000, kill_node)],
        restarts=[(end_of_workload, kill_node)],
        workload=workload,
    )


def sweep_scenarios(n_validators: int, count: int, base_seed: int = 1000) -> list[SimScenario]:
    """Randomized safety sweep: partitions and minority crashes, then a healed
    quiescent tail of at least three block intervals."""
    scenarios = []
    for i in range(count):
        seed = base_seed + i
        rng = random.Random(f"sweep:{n_validators}:{seed}")
        interval = 2000
        duration = 30000
        tail_start = duration - 4 * interval  # partitions/workload end before this

        nodes = [SimNodeSpec(f"v{j+1}", ROLE_VALIDATOR) for j in range(n_validators)]
        if rng.random() < 0.5:
            nodes.append(SimNodeSpec("n1", ROLE_FULL))
        ids = [n.node_id for n in nodes]

        partitions = []
        for _ in range(rng.randint(0, 2)):
            if len(ids) < 2:
                break
            start = rng.randint(2000, tail_start - 4000)
            end = rng.randint(start + 2000, tail_start)
            shuffled = ids[:]
            rng.shuffle(shuffled)
            cut = rng.randint(1, len(shuffled) - 1)
            partitions.append(
                Partition(start, end, tuple(sorted(shuffled[:cut])), tuple(sorted(shuffled[cut:])))
            )

        crashes = []
        restarts = []
        n_crashes = rng.randint(0, n_validators // 2)
        victims = rng.sample([n.node_id for n in nodes if n.role == ROLE_VALIDATOR], n_crashes)
        for victim in victims:
            t = rng.randint(2000, tail_start - 2000)
            crashes.append((t, victim))
            if rng.random() < 0.5:
                restarts.append((rng.randint(t + 1000, tail_start), victim))

        workload = []
        for j in range(rng.randint(3, 7)):
            workload.append(
                WorkItem(
                    time_ms=rng.randint(500, tail_start - 1000),
                    node=rng.choice(ids),
                    tx_type=payloads.ADMIN_ADD_USER,
                    author="admin",
                    payload={
                        "user_id": f"user{j:02d}",
                        "display_name": f"User {j:02d}",
                        "roles": ["employee"],
                    },
                )
            )
        workload.sort(key=lambda w: w.time_ms)

        scenarios.append(
            SimScenario(
                seed=seed,
                duration_ms=duration,
                block_interval_ms=interval,
                nodes=nodes,
                partitions=partitions,
                crashes=crashes,
                restarts=restarts,
                workload=workload,
            )
        )
    return scenarios
