import { esc, money, shortId, statusBadge } from "../format.js";
import type { AbstractOfCanvassDoc, PurchaseRequestDoc } from "../types.js";

export interface CanvassItem {
  txId: string;
  pr: PurchaseRequestDoc;
  aoc: AbstractOfCanvassDoc | null;
}

function quoteForm(item: CanvassItem, preview: number | null): string {
  const lineInputs = item.pr.lines
    .map(
      (l, i) =>
        `<span class="price-cell">${esc(l.description)} × ${l.quantity}
      <input name="price-${i}" type="number" min="0" step="1" placeholder="unit price ¢" required></span>`,
    )
    .join("\n");
  const quantities = item.pr.lines.map((l) => l.quantity).join(",");
  return `<form data-action="aoc.submit.v1" data-pr="${esc(item.txId)}" data-quantities="${quantities}">
  <h3>Abstract of canvass (3+ quotes)</h3>
  <div data-quotes>
    <div class="quote"><input name="supplier" placeholder="supplier" required>${lineInputs}</div>
    <div class="quote"><input name="supplier" placeholder="supplier" required>${lineInputs}</div>
    <div class="quote"><input name="supplier" placeholder="supplier" required>${lineInputs}</div>
  </div>
  <button type="button" data-add-quote>Add quote</button>
  <p data-winner-preview>${
    preview === null ? "winner: fill in all prices" : `winner if submitted now: quote #${preview + 1}`
  }</p>
  <button type="submit">Submit abstract</button>
</form>`;
}

export function renderCanvass(items: CanvassItem[], previews: Map<string, number | null>, flash: string): string {
  const cards = items
    .map((item) => {
      let action: string;
      if (item.pr.status === "Submitted") {
        action = `<form data-action="pr.open_canvass.v1" data-pr="${esc(item.txId)}">
  <button type="submit">Open canvass</button>
</form>`;
      } else if (item.pr.status === "UnderCanvass" && item.aoc === null) {
        action = quoteForm(item, previews.get(item.txId) ?? null);
      } else if (item.pr.status === "UnderCanvass" && item.aoc !== null) {
        const winner = item.aoc.quotes[item.aoc.winner_index];
        const totals = item.aoc.quotes
          .map(
            (q, i) =>
              `<li${i === item.aoc!.winner_index ? ' class="winner"' : ""}>${esc(q.supplier)}: ${q.unit_prices
                .map((p) => money(p))
                .join(" / ")}</li>`,
          )
          .join("");
        action = `<ul class="quotes">${totals}</ul>
<form data-action="po.issue.v1" data-aoc="${esc(item.aoc.aoc_id)}">
  <button type="submit">Issue purchase order to ${esc(winner.supplier)}</button>
</form>`;
      } else {
        action = `<p>no canvassing action open</p>`;
      }
      return `<article class="pr-card">
  <header><code>${esc(shortId(item.txId))}</code> by ${esc(item.pr.requester)} ${statusBadge(item.pr.status)}</header>
  <ul>${item.pr.lines.map((l) => `<li>${l.quantity} ${esc(l.unit)} ${esc(l.description)}</li>`).join("")}</ul>
  ${action}
</article>`;
    })
    .join("\n");
  return `<section id="canvass">
<h1>Canvassing</h1>
${flash}
${cards || "<p>no open requests</p>"}
</section>`;
}
