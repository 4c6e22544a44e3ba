// DOM bootstrap: session, screen routing, polling, form wiring. All markup
// comes from the pure view functions; all facts come from the API.

import { ApiClient, NodeApiError, waitForCommit } from "./api.js";
import { winnerPreview, screensFor, type Session } from "./roles.js";
import { loadScreen } from "./screens.js";
import type { Quote, VerifyQrJson } from "./types.js";
import { renderCommitNotice, renderError, renderLogin, renderPage } from "./views/layout.js";

let session: Session | null = null;
let client: ApiClient | null = null;
let activeScreen = "";
let flash = "";
let lastVerify: { result: VerifyQrJson; pasted: string } | null = null;
let pollTimer: ReturnType<typeof setInterval> | null = null;

const root = () => document.getElementById("app")!;

async function show(screen: string): Promise<void> {
  activeScreen = screen;
  try {
    const body = await loadScreen(client!, session!, screen, { flash, verify: lastVerify });
    root().innerHTML = renderPage(session!, screen, body);
  } catch (err) {
    const e = err as NodeApiError;
    root().innerHTML = renderPage(session!, screen, renderError(e.code ?? "Error", e.detail ?? String(err)));
  }
}

function restartPolling(): void {
  if (pollTimer) clearInterval(pollTimer);
  pollTimer = setInterval(() => {
    if (session && activeScreen && activeScreen !== "verify") void show(activeScreen);
  }, session!.pollIntervalMs);
}

async function submitAndTrack(txType: string, payload: unknown): Promise<void> {
  try {
    const { tx_id } = await client!.submitTx(txType, payload);
    flash = renderCommitNotice(tx_id, null);
    await show(activeScreen);
    const height = await waitForCommit(client!, tx_id, { intervalMs: session!.pollIntervalMs });
    flash = renderCommitNotice(tx_id, height);
  } catch (err) {
    const e = err as NodeApiError;
    flash = renderError(e.code ?? "Error", e.detail ?? String(err));
  }
  await show(activeScreen);
  flash = "";
}

function collectQuotes(form: HTMLFormElement, lineCount: number): Quote[] {
  const quotes: Quote[] = [];
  for (const el of form.querySelectorAll<HTMLElement>(".quote")) {
    const supplier = el.querySelector<HTMLInputElement>('input[name="supplier"]')!.value;
    const prices: number[] = [];
    for (let i = 0; i < lineCount; i++) {
      const input = el.querySelector<HTMLInputElement>(`input[name="price-${i}"]`);
      if (input && input.value !== "") prices.push(Number(input.value));
    }
    quotes.push({ supplier, unit_prices: prices });
  }
  return quotes;
}

function payloadFrom(form: HTMLFormElement, txType: string): unknown {
  const data = new FormData(form);
  const text = (name: string) => String(data.get(name) ?? "");
  switch (txType) {
    case "pr.submit.v1": {
      const lines = [];
      for (const el of form.querySelectorAll<HTMLElement>(".pr-line")) {
        lines.push({
          description: el.querySelector<HTMLInputElement>('input[name="description"]')!.value,
          quantity: Number(el.querySelector<HTMLInputElement>('input[name="quantity"]')!.value),
          unit: el.querySelector<HTMLInputElement>('input[name="unit"]')!.value,
          specs: el.querySelector<HTMLInputElement>('input[name="specs"]')!.value,
        });
      }
      return { lines };
    }
    case "pr.open_canvass.v1":
      return { pr_ref: form.dataset.pr };
    case "aoc.submit.v1": {
      const quantities = (form.dataset.quantities ?? "").split(",").map(Number);
      const quotes = collectQuotes(form, quantities.length);
      return { pr_ref: form.dataset.pr, quotes, winner_index: winnerPreview(quotes, quantities) ?? 0 };
    }
    case "po.issue.v1":
      return { aoc_ref: form.dataset.aoc };
    case "delivery.record.v1": {
      const lines = [];
      for (let i = 0; data.has(`received-${i}`); i++) {
        lines.push({ received: Number(text(`received-${i}`)), remarks: text(`remarks-${i}`) });
      }
      return { po_ref: form.dataset.po, lines };
    }
    case "inspection.record.v1": {
      const verdicts = [];
      for (let i = 0; data.has(`verdict-${i}`); i++) {
        verdicts.push({ passed: Number(text(`verdict-${i}`)), reason: text(`reason-${i}`) });
      }
      return { dc_ref: form.dataset.dc, verdicts };
    }
    case "po.close.v1":
      return { po_ref: form.dataset.po };
    case "pr.reject.v1":
      return { pr_ref: form.dataset.pr };
    case "asset.register.v1":
      return { po_ref: text("po_ref"), asset_uid: text("asset_uid"), description: text("description") };
    case "mr.issue.v1":
    case "mr.transfer.v1":
      return { asset_uid: form.dataset.asset, custodian: text("custodian") };
    case "asset.dispose.v1":
      return { asset_uid: form.dataset.asset, reason: text("reason") };
    case "admin.add_user.v1": {
      const roles = Array.from(form.querySelectorAll<HTMLOptionElement>("option:checked")).map((o) => o.value);
      return { user_id: text("user_id"), display_name: text("display_name"), roles };
    }
    case "admin.deactivate_user.v1":
      return { user_id: form.dataset.user };
    case "admin.add_validator.v1":
      return { validator_id: text("validator_id") };
    case "admin.remove_validator.v1":
      return { validator_id: form.dataset.validator };
    default:
      throw new Error(`no payload builder for ${txType}`);
  }
}

async function handleSubmit(event: SubmitEvent): Promise<void> {
  const form = event.target as HTMLFormElement;
  if (form.matches("[data-login]")) {
    event.preventDefault();
    const data = new FormData(form);
    const candidate: Session = {
      endpoint: String(data.get("endpoint")).replace(/\/$/, ""),
      token: String(data.get("token")),
      user: String(data.get("user")),
      roles: data.getAll("role").map(String),
      pollIntervalMs: Number(data.get("poll") ?? 5) * 1000,
    };
    const probe = new ApiClient(candidate.endpoint, candidate.token);
    try {
      await probe.head(); // token check before anything renders
    } catch (err) {
      const e = err as NodeApiError;
      root().innerHTML = renderLogin(`${e.code ?? "Error"}: ${e.detail ?? String(err)}`);
      return;
    }
    session = candidate;
    client = probe;
    sessionStorage.setItem("pams-session", JSON.stringify(candidate));
    restartPolling();
    await show(screensFor(session.roles)[0]);
    return;
  }
  if (form.matches("[data-verify]")) {
    event.preventDefault();
    const pasted = String(new FormData(form).get("payload") ?? "");
    try {
      lastVerify = { result: await client!.verifyQr(pasted), pasted };
    } catch (err) {
      const e = err as NodeApiError;
      flash = renderError(e.code ?? "Error", e.detail ?? String(err));
      lastVerify = null;
    }
    await show("verify");
    return;
  }
  const txType = form.dataset.action;
  if (txType) {
    event.preventDefault();
    await submitAndTrack(txType, payloadFrom(form, txType));
  }
}

function handleClick(event: MouseEvent): void {
  const target = event.target as HTMLElement;
  if (target.matches("[data-logout]")) {
    sessionStorage.removeItem("pams-session");
    session = null;
    client = null;
    if (pollTimer) clearInterval(pollTimer);
    root().innerHTML = renderLogin(null);
    return;
  }
  if (target.matches("[data-add-line]")) {
    const first = document.querySelector(".pr-line")!;
    first.parentElement!.appendChild(first.cloneNode(true));
    return;
  }
  if (target.matches("[data-add-quote]")) {
    const form = target.closest("form")!;
    const first = form.querySelector(".quote")!;
    first.parentElement!.appendChild(first.cloneNode(true));
    return;
  }
  const link = target.closest<HTMLAnchorElement>("a[data-screen]");
  if (link) {
    event.preventDefault();
    void show(link.dataset.screen!);
  }
}

function handleInput(event: Event): void {
  const form = (event.target as HTMLElement).closest<HTMLFormElement>('form[data-action="aoc.submit.v1"]');
  if (!form) return;
  const quantities = (form.dataset.quantities ?? "").split(",").map(Number);
  const quotes = collectQuotes(form, quantities.length);
  const preview = winnerPreview(quotes, quantities);
  const label = form.querySelector("[data-winner-preview]");
  if (label) {
    label.textContent =
      preview === null ? "winner: fill in all prices" : `winner if submitted now: quote #${preview + 1}`;
  }
}

export function boot(): void {
  document.addEventListener("submit", (e) => void handleSubmit(e));
  document.addEventListener("click", handleClick);
  document.addEventListener("input", handleInput);
  const saved = sessionStorage.getItem("pams-session");
  if (saved) {
    session = JSON.parse(saved) as Session;
    client = new ApiClient(session.endpoint, session.token);
    restartPolling();
    void show(screensFor(session.roles)[0]);
  } else {
    root().innerHTML = renderLogin(null);
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}
