// Serves the recorded node responses to the console under test. Regenerate
// the JSON with: python3 frontend/tests/fixture/record.py (from the repo root).

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { ApiClient, type FetchFn } from "../src/api.js";

const here = dirname(fileURLToPath(import.meta.url));
const load = (name: string) => JSON.parse(readFileSync(join(here, "fixture", name), "utf8"));

export const routes: Record<string, unknown> = load("routes.json");
export const verify: Record<string, { label: string; response: unknown }> = load("verify.json");
export const meta: {
  users: Record<string, string[]>;
  prs: Record<string, string>;
  aocs: Record<string, string>;
  pos: Record<string, string>;
  dcs: Record<string, string>;
  irs: Record<string, string>;
  assets: string[];
  tip: number;
} = load("meta.json");

export const ENDPOINT = "http://node.test";

function reply(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

/** Replays the recorded responses; unknown routes 404 so drift is loud. */
export function fixtureFetch(): FetchFn {
  return async (url, init) => {
    const path = url.startsWith(ENDPOINT) ? url.slice(ENDPOINT.length) : url;
    const method = init?.method ?? "GET";
    if (method === "POST" && path === "/api/verify-qr") {
      const { payload } = JSON.parse(String(init?.body ?? "{}"));
      for (const entry of Object.values(verify)) {
        if (entry.label === payload) return reply(entry.response);
      }
      return reply({ error: "NoFixture", detail: `unrecorded verify payload ${payload}` }, 500);
    }
    const hit = routes[`${method} ${path}`];
    if (hit === undefined) {
      return reply({ error: "NotFound", detail: `no fixture for ${method} ${path}` }, 404);
    }
    return reply(hit);
  };
}

export function fixtureClient(token = "tok-admin"): ApiClient {
  return new ApiClient(ENDPOINT, token, fixtureFetch());
}
