"""Operator command line: node lifecycle, genesis, keys, verification, QR, sim.

Output is line-oriented and stable so scripts can parse it; `--pretty` adds
human-facing formatting where it helps. Exit codes: 0 success, 1 a
verification or validation failure, 2 usage or config errors.
"""

from __future__ import annotations

import json
import signal
import sys
import threading
from pathlib import Path

import click
import httpx

from . import payloads, sim as simulator
from .assets import qr_encode, qr_png
from .errors import ConfigError, CorruptLog, PamsError
from .hashing import MacSecret
from .ledger import Chain, make_genesis, verify_chain
from .node import Node, load_config
from .storage import BlockLog


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_secrets(secrets_path: str | None, config_path: str | None) -> dict[str, MacSecret]:
    if secrets_path:
        try:
            doc = json.loads(Path(secrets_path).read_text())
            return {vid: MacSecret.from_hex(hexed) for vid, hexed in doc.items()}
        except (OSError, json.JSONDecodeError, ValueError, AttributeError) as exc:
            raise ConfigError(f"bad secrets file: {exc}") from exc
    if config_path:
        return load_config(config_path).secrets()
    raise ConfigError("need --secrets or --config to check block certificates")


def _replay(log_path: str, secrets: dict[str, MacSecret], min_quotes: int) -> Chain:
    blocks = BlockLog(log_path).load()
    chain = Chain(secrets, min_quotes=min_quotes)
    for block in blocks:
        chain.append_block(block)
    return chain


@click.group()
def main() -> None:
    """Permissioned procurement ledger tools."""


@main.command()
@click.option("--genesis", "genesis_path", required=True, help="Output block log path.")
@click.option("--admin-id", required=True, help="Administrator user id.")
@click.option("--admin-name", default="Administrator", show_default=True)
@click.option("--validator", "validators", multiple=True, required=True, help="Validator id (repeatable).")
@click.option("--genesis-time", type=int, default=0, show_default=True, help="Genesis timestamp (seconds).")
def init(genesis_path: str, admin_id: str, admin_name: str, validators: tuple[str, ...], genesis_time: int) -> None:
    """Author a genesis block and write a one-block log."""
    try:
        block = make_genesis(admin_id, admin_name, list(validators), genesis_time)
        BlockLog(genesis_path).write_all([block])
    except PamsError as exc:
        _fail(str(exc), 2)
    click.echo(f"genesis_hash {block.block_hash.hex()}")
    click.echo(f"validators {len(validators)}")


@main.command()
@click.option("--config", "config_path", envvar="PAMS_CONFIG", help="Node config JSON (or PAMS_CONFIG env).")
def run(config_path: str | None) -> None:
    """Run a node until interrupted."""
    if not config_path:
        _fail("no config: pass --config or set PAMS_CONFIG", 2)
    try:
        node = Node(load_config(config_path))
    except (ConfigError, CorruptLog) as exc:
        _fail(str(exc), 2 if isinstance(exc, ConfigError) else 1)
    node.start()
    click.echo(f"node {node.config.node_id} api={node.api_port} p2p={node.p2p_port}")
    done = threading.Event()
    signal.signal(signal.SIGINT, lambda *_: done.set())
    signal.signal(signal.SIGTERM, lambda *_: done.set())
    done.wait()
    node.stop()
    click.echo("stopped")


@main.command()
def keygen() -> None:
    """Generate a validator MAC secret (hex)."""
    click.echo(MacSecret.generate().hex())


@main.command()
@click.option("--log", "log_path", required=True, help="Block log to verify.")
@click.option("--secrets", "secrets_path", help="JSON file of validator_id -> hex MAC secret.")
@click.option("--config", "config_path", help="Node config to take secrets from instead.")
@click.option("--min-quotes", type=int, default=3, show_default=True)
@click.option("--pretty", is_flag=True, help="Human-facing summary.")
def verify(log_path: str, secrets_path: str | None, config_path: str | None, min_quotes: int, pretty: bool) -> None:
    """Re-verify every block in a log offline. Exit 0 iff the chain is intact."""
    try:
        secrets = _load_secrets(secrets_path, config_path)
        blocks = BlockLog(log_path).load()
    except ConfigError as exc:
        _fail(str(exc), 2)
    except CorruptLog as exc:
        click.echo(f"FAIL at height {exc.height}: CorruptLog: {exc.detail}")
        sys.exit(1)
    report = verify_chain(blocks, secrets, min_quotes)
    click.echo(report.describe())
    if pretty and report.ok:
        click.echo(f"chain intact through height {report.blocks_checked - 1}")
    sys.exit(0 if report.ok else 1)


@main.command()
@click.option("--asset", "asset_uid", required=True, help="Asset uid to label.")
@click.option("--out", "out_path", required=True, help="PNG path, or - for payload text on stdout.")
@click.option("--log", "log_path", help="Block log to read (default: data_dir/blocks.log from --config).")
@click.option("--secrets", "secrets_path", help="JSON file of validator_id -> hex MAC secret.")
@click.option("--config", "config_path", help="Node config for secrets (and default log path).")
@click.option("--min-quotes", type=int, default=3, show_default=True)
def qr(asset_uid: str, out_path: str, log_path: str | None, secrets_path: str | None,
       config_path: str | None, min_quotes: int) -> None:
    """Print a verifiable QR label for a registered asset."""
    try:
        secrets = _load_secrets(secrets_path, config_path)
        if not log_path:
            if not config_path:
                raise ConfigError("need --log (or --config with a data_dir)")
            log_path = str(Path(load_config(config_path).data_dir) / "blocks.log")
        chain = _replay(log_path, secrets, min_quotes)
    except ConfigError as exc:
        _fail(str(exc), 2)
    except PamsError as exc:
        _fail(str(exc), 1)
    record = chain.state.assets.get(asset_uid)
    if record is None:
        _fail(f"no asset {asset_uid!r} in the replayed chain", 1)
    payload = qr_encode(record)
    if out_path == "-":
        click.echo(payload)
        return
    Path(out_path).write_bytes(qr_png(payload))
    click.echo(f"wrote {out_path}")


@main.command()
@click.option("--scenario", "scenario_path", required=True, help="Scenario JSON.")
@click.option("--out", "out_dir", required=True, help="Output directory (created).")
@click.option("--pretty", is_flag=True, help="Aligned per-node summary.")
def sim(scenario_path: str, out_dir: str, pretty: bool) -> None:
    """Run a deterministic network simulation; write per-node logs and a trace."""
    try:
        scenario = simulator.load_scenario(scenario_path)
        result = simulator.run_simulation(scenario)
    except ConfigError as exc:
        _fail(str(exc), 2)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary: dict = {"seed": result.scenario_seed, "nodes": {}}
    for node_id in sorted(result.nodes):
        res = result.nodes[node_id]
        (out / f"{node_id}.log").write_bytes(res.log)
        summary["nodes"][node_id] = {
            "role": res.role,
            "alive": res.alive,
            "height": res.height,
            "head_hash": res.head_hash_hex,
            "state_fingerprint": res.state_fingerprint_hex,
            "audits": [{"time_ms": a.time_ms, "kind": a.kind, "detail": a.detail} for a in res.audits],
        }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    with open(out / "trace.txt", "w") as fh:
        for time_ms, node_id, kind, detail in result.trace:
            fh.write(f"{time_ms} {node_id} {kind} {detail}\n")
    violations = result.safety_violations()
    for node_id in sorted(result.nodes):
        res = result.nodes[node_id]
        if pretty:
            click.echo(
                f"node {node_id:<8} {res.role:<9} alive={int(res.alive)} "
                f"height={res.height:<4} head={res.head_hash_hex[:16]}"
            )
        else:
            click.echo(
                f"node {node_id} role={res.role} alive={int(res.alive)} "
                f"height={res.height} head={res.head_hash_hex[:16]}"
            )
    click.echo(f"safety_violations {len(violations)}")


@main.group()
def admin() -> None:
    """Submit administrator transactions to a running node."""


def _submit_via_api(api: str, token: str, tx_type: str, payload: dict) -> None:
    try:
        resp = httpx.post(
            f"{api.rstrip('/')}/api/tx",
            json={"tx_type": tx_type, "payload": payload},
            headers={"Authorization": f"Bearer {token}"},
            timeout=10.0,
        )
    except httpx.HTTPError as exc:
        _fail(f"cannot reach node: {exc}", 1)
    doc = resp.json()
    if resp.status_code != 200:
        _fail(f"{doc.get('error')}: {doc.get('detail')}", 1)
    click.echo(f"tx_id {doc['tx_id']}")


@admin.command("add-user")
@click.option("--api", required=True, help="Node API base URL.")
@click.option("--token", required=True, help="Administrator bearer token.")
@click.option("--user-id", required=True)
@click.option("--display-name", required=True)
@click.option("--role", "roles", multiple=True, required=True, help="Role name (repeatable).")
def admin_add_user(api: str, token: str, user_id: str, display_name: str, roles: tuple[str, ...]) -> None:
    """Register a user with one or more roles."""
    _submit_via_api(api, token, payloads.ADMIN_ADD_USER,
                    {"user_id": user_id, "display_name": display_name, "roles": list(roles)})


@admin.command("add-validator")
@click.option("--api", required=True, help="Node API base URL.")
@click.option("--token", required=True, help="Administrator bearer token.")
@click.option("--validator-id", required=True)
def admin_add_validator(api: str, token: str, validator_id: str) -> None:
    """Admit a validator (distribute its MAC secret to peers out of band)."""
    _submit_via_api(api, token, payloads.ADMIN_ADD_VALIDATOR, {"validator_id": validator_id})


if __name__ == "__main__":
    main()
