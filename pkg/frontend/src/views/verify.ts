import { esc, shortId, statusBadge } from "../format.js";
import type { VerifyQrJson } from "../types.js";

/** Renders the node's verdict as-is: the custody timeline rows come straight
 * from the response, in response order. */
export function renderVerifyResult(result: VerifyQrJson): string {
  if (!result.checksum_ok) {
    return `<div class="verify-result bad">
  <h2>Label rejected: ${esc(result.error ?? "")}</h2>
  ${result.detail ? `<p>${esc(result.detail)}</p>` : ""}
  <p>The label failed its own checksum, so the ledger was not consulted.</p>
</div>`;
  }
  if (!result.found) {
    return `<div class="verify-result bad">
  <h2>Unknown asset</h2>
  <p>Label is well formed but <code>${esc(result.asset_uid ?? "")}</code> is not on the ledger.</p>
</div>`;
  }
  const timeline = (result.history ?? [])
    .map(
      (m) => `<tr>
    <td><code>${esc(shortId(m.mr_tx))}</code></td>
    <td>${esc(m.custodian)}</td>
    <td>${esc(m.issued_by)}</td>
    <td>${m.timestamp}</td>
  </tr>`,
    )
    .join("\n");
  return `<div class="verify-result ok">
  <h2><code>${esc(result.asset_uid ?? "")}</code> ${statusBadge(result.status ?? "")}</h2>
  ${result.status === "Disposed" ? `<p class="warn">This asset is disposed; its record is terminal.</p>` : ""}
  <p>registration ${result.reg_tx_confirmed ? "confirmed on chain" : `<strong class="bad">NOT on chain</strong>`},
    current custodian: ${result.custodian ? esc(result.custodian) : "none"}</p>
  <h3>Custody timeline</h3>
  <table>
    <thead><tr><th>Receipt tx</th><th>To custodian</th><th>Issued by</th><th>Timestamp</th></tr></thead>
    <tbody>${timeline || `<tr><td colspan="4">never issued</td></tr>`}</tbody>
  </table>
</div>`;
}

export function renderVerify(result: VerifyQrJson | null, pasted: string): string {
  return `<section id="verify">
<h1>Verify an asset label</h1>
<form data-verify>
  <textarea name="payload" placeholder="paste the scanned label text (PAMS1|...)" required>${esc(pasted)}</textarea>
  <button type="submit">Check against ledger</button>
</form>
${result ? renderVerifyResult(result) : ""}
</section>`;
}
