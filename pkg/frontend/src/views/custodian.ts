import { esc, shortId, statusBadge } from "../format.js";
import type { AssetJson, DeliveryChecklistDoc, MrJson, PurchaseOrderDoc } from "../types.js";

export interface DeliveryItem {
  po: PurchaseOrderDoc;
  latestDc: DeliveryChecklistDoc | null;
}

function deliveryForm(po: PurchaseOrderDoc, heading: string): string {
  const lines = po.lines
    .map(
      (l, i) => `<tr>
    <td>${esc(l.description)} (${l.quantity} ${esc(l.unit)})</td>
    <td><input name="received-${i}" type="number" min="0" max="${l.quantity}" value="${l.quantity}" required></td>
    <td><input name="remarks-${i}" placeholder="remarks"></td>
  </tr>`,
    )
    .join("\n");
  return `<form data-action="delivery.record.v1" data-po="${esc(po.po_id)}">
  <h3>${esc(heading)}</h3>
  <table>
    <thead><tr><th>Ordered</th><th>Received</th><th>Remarks</th></tr></thead>
    <tbody>${lines}</tbody>
  </table>
  <button type="submit">Record delivery</button>
</form>`;
}

export function renderDeliveries(items: DeliveryItem[], flash: string): string {
  const cards = items
    .map((item) => {
      const po = item.po;
      let action: string;
      if (po.status === "Open") {
        action = deliveryForm(po, "Record delivery");
      } else if (po.status === "Delivered" && item.latestDc?.ir_ref == null) {
        action = `<p>awaiting inspection</p>`;
      } else if (po.status === "Delivered" && !po.inspection_passed) {
        action = `<p class="warn">last inspection failed, follow-up delivery needed</p>
${deliveryForm(po, "Record follow-up delivery")}`;
      } else if (po.status === "Delivered" && po.inspection_passed) {
        action = `<form data-action="po.close.v1" data-po="${esc(po.po_id)}">
  <button type="submit">Close order</button>
</form>`;
      } else {
        action = "";
      }
      return `<article class="po-card">
  <header>Order <code>${esc(shortId(po.po_id))}</code> from ${esc(po.supplier)} ${statusBadge(po.status)}</header>
  ${action}
</article>`;
    })
    .join("\n");
  return `<section id="deliveries">
<h1>Purchase orders</h1>
${flash}
${cards || "<p>no orders</p>"}
</section>`;
}

export interface AssetItem {
  asset: AssetJson;
  history: MrJson[];
  qrPngUrl: string;
}

export function renderAssetRegistry(items: AssetItem[], closablePoIds: string[], flash: string): string {
  const registerTargets = closablePoIds
    .map((id) => `<option value="${esc(id)}">${esc(shortId(id))}</option>`)
    .join("");
  const cards = items
    .map(({ asset, history, qrPngUrl }) => {
      const timeline = history
        .map((m) => `<li>→ ${esc(m.custodian)} <small>by ${esc(m.issued_by)}, t=${m.timestamp}</small></li>`)
        .join("");
      let actions = "";
      if (asset.status === "InStock") {
        actions = `<form data-action="mr.issue.v1" data-asset="${esc(asset.asset_uid)}">
  <input name="custodian" placeholder="issue to user id" required>
  <button type="submit">Issue</button>
</form>`;
      } else if (asset.status === "Issued") {
        actions = `<form data-action="mr.transfer.v1" data-asset="${esc(asset.asset_uid)}">
  <input name="custodian" placeholder="transfer to user id" required>
  <button type="submit">Transfer</button>
</form>`;
      }
      if (asset.status !== "Disposed") {
        actions += `\n<form data-action="asset.dispose.v1" data-asset="${esc(asset.asset_uid)}">
  <input name="reason" placeholder="disposal reason" required>
  <button type="submit">Dispose</button>
</form>`;
      }
      return `<article class="asset-card">
  <header><code>${esc(asset.asset_uid)}</code> ${esc(asset.description)} ${statusBadge(asset.status)}
    ${asset.custodian ? `held by <strong>${esc(asset.custodian)}</strong>` : ""}</header>
  <a href="${esc(qrPngUrl)}" target="_blank" data-qr-print>Print QR label</a>
  <ol class="timeline">${timeline || "<li>never issued</li>"}</ol>
  ${actions}
</article>`;
    })
    .join("\n");
  return `<section id="assets">
<h1>Asset registry</h1>
${flash}
<form data-action="asset.register.v1">
  <h2>Register asset</h2>
  <select name="po_ref" required>${registerTargets || `<option value="">no eligible orders</option>`}</select>
  <input name="asset_uid" placeholder="asset uid" required>
  <input name="description" placeholder="description" required>
  <button type="submit">Register</button>
</form>
${cards || "<p>no assets registered</p>"}
</section>`;
}
