import { esc, shortId, statusBadge } from "../format.js";
import type { AssetJson, PurchaseRequestDoc } from "../types.js";

export interface PrListing {
  txId: string;
  doc: PurchaseRequestDoc;
}

export function renderRequests(own: PrListing[], flash: string): string {
  const rows = own
    .map(
      (pr) => `<tr>
    <td><code>${esc(shortId(pr.txId))}</code></td>
    <td>${statusBadge(pr.doc.status)}</td>
    <td><ul>${pr.doc.lines
      .map((l) => `<li>${l.quantity} ${esc(l.unit)} ${esc(l.description)}${l.specs ? ` (${esc(l.specs)})` : ""}</li>`)
      .join("")}</ul></td>
  </tr>`,
    )
    .join("\n");
  return `<section id="requests">
<h1>My purchase requests</h1>
${flash}
<form data-action="pr.submit.v1">
  <h2>New request</h2>
  <div data-pr-lines>
    <div class="pr-line">
      <input name="description" placeholder="description" required>
      <input name="quantity" type="number" min="1" value="1" required>
      <input name="unit" placeholder="unit" value="pc" required>
      <input name="specs" placeholder="specs (optional)">
    </div>
  </div>
  <button type="button" data-add-line>Add line</button>
  <button type="submit">Submit request</button>
</form>
<table>
  <thead><tr><th>Request</th><th>Status</th><th>Lines</th></tr></thead>
  <tbody>${rows || `<tr><td colspan="3">no requests yet</td></tr>`}</tbody>
</table>
</section>`;
}

export function renderMyAssets(held: AssetJson[]): string {
  const rows = held
    .map(
      (a) => `<tr>
    <td><code>${esc(a.asset_uid)}</code></td>
    <td>${esc(a.description)}</td>
    <td>${statusBadge(a.status)}</td>
    <td><code>${esc(shortId(a.reg_tx))}</code></td>
  </tr>`,
    )
    .join("\n");
  return `<section id="my-assets">
<h1>Assets in my custody</h1>
<table>
  <thead><tr><th>Asset</th><th>Description</th><th>Status</th><th>Registered by tx</th></tr></thead>
  <tbody>${rows || `<tr><td colspan="4">nothing in custody</td></tr>`}</tbody>
</table>
</section>`;
}
