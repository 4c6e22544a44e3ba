import { esc, shortId } from "../format.js";
import type { DeliveryChecklistDoc, PurchaseOrderDoc } from "../types.js";

export interface InspectionItem {
  dc: DeliveryChecklistDoc;
  po: PurchaseOrderDoc;
}

/** Checklists whose ir_ref is null are awaiting a verdict. */
export function renderInspections(pending: InspectionItem[], flash: string): string {
  const cards = pending
    .map((item) => {
      const lines = item.dc.lines
        .map(
          (l, i) => `<tr>
    <td>${esc(item.po.lines[i]?.description ?? "")}</td>
    <td>${l.received} of ${l.expected}</td>
    <td>${esc(l.remarks)}</td>
    <td>
      <label><input type="radio" name="verdict-${i}" value="1" checked> Pass</label>
      <label><input type="radio" name="verdict-${i}" value="0"> Fail</label>
      <input name="reason-${i}" placeholder="reason if failed">
    </td>
  </tr>`,
        )
        .join("\n");
      return `<article class="dc-card">
  <header>Delivery <code>${esc(shortId(item.dc.dc_id))}</code> for order <code>${esc(
    shortId(item.dc.po_ref),
  )}</code> (${esc(item.po.supplier)})</header>
  <form data-action="inspection.record.v1" data-dc="${esc(item.dc.dc_id)}">
    <table>
      <thead><tr><th>Item</th><th>Received</th><th>Remarks</th><th>Verdict</th></tr></thead>
      <tbody>${lines}</tbody>
    </table>
    <button type="submit">Record inspection</button>
  </form>
</article>`;
    })
    .join("\n");
  return `<section id="inspections">
<h1>Pending inspections</h1>
${flash}
${cards || "<p>nothing awaiting inspection</p>"}
</section>`;
}
