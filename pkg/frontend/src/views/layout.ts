import { esc } from "../format.js";
import type { Session } from "../roles.js";
import { screensFor } from "../roles.js";

const SCREEN_LABELS: Record<string, string> = {
  requests: "My requests",
  "my-assets": "My assets",
  canvass: "Canvassing",
  inspections: "Inspections",
  deliveries: "Deliveries",
  assets: "Asset registry",
  admin: "Administration",
  verify: "Verify label",
};

export function renderNav(session: Session, active: string): string {
  const items = screensFor(session.roles)
    .map(
      (s) =>
        `<a href="#${esc(s)}" data-screen="${esc(s)}" class="${s === active ? "active" : ""}">${esc(
          SCREEN_LABELS[s] ?? s,
        )}</a>`,
    )
    .join("");
  return `<nav>
  <span class="brand">procurement ledger</span>
  ${items}
  <span class="session">${esc(session.user)} (${session.roles.map(esc).join(", ")})
    <button data-logout>Sign out</button></span>
</nav>`;
}

export function renderPage(session: Session, active: string, content: string): string {
  return `${renderNav(session, active)}\n<main>\n${content}\n</main>`;
}

/** API failures are shown with the node's error code, word for word. */
export function renderError(code: string, detail: string): string {
  return `<div class="error" role="alert"><strong>${esc(code)}</strong>${
    detail ? `: ${esc(detail)}` : ""
  }</div>`;
}

export function renderCommitNotice(txId: string, height: number | null): string {
  if (height === null) {
    return `<div class="notice pending">submitted ${esc(txId.slice(0, 16))}…, waiting for commit</div>`;
  }
  return `<div class="notice committed">committed in block ${height}</div>`;
}

export function renderLogin(error: string | null): string {
  return `<main class="login">
  <h1>Sign in</h1>
  ${error ? renderError("LoginFailed", error) : ""}
  <form data-login>
    <label>Node endpoint <input name="endpoint" value="http://127.0.0.1:8101" required></label>
    <label>Bearer token <input name="token" type="password" required></label>
    <label>User id <input name="user" required></label>
    <fieldset>
      <legend>Roles</legend>
      <label><input type="checkbox" name="role" value="employee"> employee</label>
      <label><input type="checkbox" name="role" value="canvasser"> canvasser</label>
      <label><input type="checkbox" name="role" value="inspector"> inspector</label>
      <label><input type="checkbox" name="role" value="property_custodian"> property custodian</label>
      <label><input type="checkbox" name="role" value="administrator"> administrator</label>
    </fieldset>
    <label>Poll interval (s) <input name="poll" type="number" value="5" min="1"></label>
    <button type="submit">Connect</button>
  </form>
  <p class="hint">The token is checked against the node before the console opens.
  Role choices only shape the menus; the chain enforces the real permissions.</p>
</main>`;
}
