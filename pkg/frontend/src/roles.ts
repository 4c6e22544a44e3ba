import type { Quote } from "./types.js";

// Mirror of the chain's role gate: which transaction types each role may
// author. The node rejects anything else with RoleForbidden; the console
// simply never offers those actions.
export const ROLE_ACTIONS: Record<string, readonly string[]> = {
  employee: ["pr.submit.v1"],
  canvasser: ["pr.open_canvass.v1", "aoc.submit.v1", "po.issue.v1"],
  inspector: ["inspection.record.v1"],
  property_custodian: [
    "delivery.record.v1",
    "po.close.v1",
    "asset.register.v1",
    "mr.issue.v1",
    "mr.transfer.v1",
    "asset.dispose.v1",
  ],
  administrator: [
    "pr.reject.v1",
    "admin.add_user.v1",
    "admin.deactivate_user.v1",
    "admin.add_validator.v1",
    "admin.remove_validator.v1",
  ],
};

export const ROLE_SCREENS: Record<string, readonly string[]> = {
  employee: ["requests", "my-assets"],
  canvasser: ["canvass"],
  inspector: ["inspections"],
  property_custodian: ["deliveries", "assets"],
  administrator: ["admin"],
};

export interface Session {
  endpoint: string;
  token: string;
  user: string;
  roles: string[];
  pollIntervalMs: number;
}

export function actionsFor(roles: string[]): Set<string> {
  const out = new Set<string>();
  for (const role of roles) for (const a of ROLE_ACTIONS[role] ?? []) out.add(a);
  return out;
}

export function screensFor(roles: string[]): string[] {
  const out: string[] = [];
  for (const role of roles)
    for (const s of ROLE_SCREENS[role] ?? []) if (!out.includes(s)) out.push(s);
  out.push("verify"); // scanning a label is open to every authenticated user
  return out;
}

/** Cheapest complete quote by total over the request quantities; ties go to
 * the earliest quote. Mirrors the award rule the chain applies, shown to the
 * canvasser before submission. */
export function winnerPreview(quotes: Quote[], quantities: number[]): number | null {
  let best: number | null = null;
  let bestTotal = 0;
  for (let i = 0; i < quotes.length; i++) {
    const prices = quotes[i].unit_prices;
    if (prices.length !== quantities.length) continue;
    const total = prices.reduce((sum, p, j) => sum + p * quantities[j], 0);
    if (best === null || total < bestTotal) {
      best = i;
      bestTotal = total;
    }
  }
  return best;
}
