import { esc, shortId, statusBadge } from "../format.js";
import type {
  AuditJson,
  ChainVerifyJson,
  PeersJson,
  PurchaseRequestDoc,
  UsersJson,
  ValidatorsJson,
} from "../types.js";

export interface AdminData {
  users: UsersJson;
  validators: ValidatorsJson;
  peers: PeersJson;
  audit: AuditJson;
  health: ChainVerifyJson;
  tipHeight: number;
  rejectablePrs: { txId: string; pr: PurchaseRequestDoc }[];
}

export function renderAdmin(data: AdminData, flash: string): string {
  const userRows = data.users.users
    .map(
      (u) => `<tr>
    <td>${esc(u.user_id)}</td><td>${esc(u.display_name)}</td>
    <td>${u.roles.map(esc).join(", ")}</td>
    <td>${u.active ? "active" : "inactive"}</td>
    <td>${
      u.active
        ? `<form data-action="admin.deactivate_user.v1" data-user="${esc(u.user_id)}"><button>Deactivate</button></form>`
        : ""
    }</td>
  </tr>`,
    )
    .join("\n");

  const validatorRows = data.validators.validators
    .map(
      (v) => `<tr><td>${esc(v)}</td>
    <td><form data-action="admin.remove_validator.v1" data-validator="${esc(v)}"><button>Remove</button></form></td></tr>`,
    )
    .join("\n");

  const auditRows = data.audit.audit
    .map((r) => `<tr><td>${r.time_ms}</td><td>${esc(r.kind)}</td><td>${esc(r.detail)}</td></tr>`)
    .join("\n");

  const rejectRows = data.rejectablePrs
    .map(
      ({ txId, pr }) => `<tr>
    <td><code>${esc(shortId(txId))}</code></td><td>${esc(pr.requester)}</td><td>${statusBadge(pr.status)}</td>
    <td><form data-action="pr.reject.v1" data-pr="${esc(txId)}"><button>Reject</button></form></td>
  </tr>`,
    )
    .join("\n");

  const health = data.health;
  return `<section id="admin">
<h1>Administration</h1>
${flash}
<div class="panel">
  <h2>Chain health</h2>
  <p>tip height ${data.tipHeight}, verification ${
    health.ok
      ? `<strong class="ok">ok</strong> (${health.blocks_checked} blocks)`
      : `<strong class="bad">FAILED at ${health.error_height}: ${esc(health.error_code ?? "")}</strong>`
  }</p>
  <p>validators: ${data.validators.validators.map(esc).join(", ")} (quorum ${data.validators.quorum})</p>
  <p>peers: ${
    data.peers.peers.length
      ? data.peers.peers
          .map((p) => `${esc(p.peer_id)} at ${p.last_height === null ? "unknown height" : `height ${p.last_height}`}`)
          .join(", ")
      : "none configured"
  }</p>
</div>
<div class="panel">
  <h2>Users</h2>
  <form data-action="admin.add_user.v1">
    <input name="user_id" placeholder="user id" required>
    <input name="display_name" placeholder="display name" required>
    <select name="role" multiple required>
      <option>employee</option><option>canvasser</option><option>inspector</option>
      <option>property_custodian</option><option>administrator</option>
    </select>
    <button type="submit">Add user</button>
  </form>
  <table><thead><tr><th>Id</th><th>Name</th><th>Roles</th><th>State</th><th></th></tr></thead>
  <tbody>${userRows}</tbody></table>
</div>
<div class="panel">
  <h2>Validators</h2>
  <form data-action="admin.add_validator.v1">
    <input name="validator_id" placeholder="validator id" required>
    <button type="submit">Admit validator</button>
  </form>
  <table><tbody>${validatorRows}</tbody></table>
</div>
<div class="panel">
  <h2>Open requests</h2>
  <table><thead><tr><th>Request</th><th>Requester</th><th>Status</th><th></th></tr></thead>
  <tbody>${rejectRows || `<tr><td colspan="4">none open</td></tr>`}</tbody></table>
</div>
<div class="panel">
  <h2>Audit log</h2>
  <table><thead><tr><th>t (ms)</th><th>Kind</th><th>Detail</th></tr></thead>
  <tbody>${auditRows || `<tr><td colspan="3">no incidents recorded</td></tr>`}</tbody></table>
</div>
</section>`;
}
