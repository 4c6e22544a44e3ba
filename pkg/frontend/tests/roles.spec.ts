// Every role sees exactly the actions the chain's role table grants it, no
// more and no less, across all of its screens rendered from recorded data.

import { describe, expect, it } from "vitest";
import { actionsFor, ROLE_ACTIONS, ROLE_SCREENS, screensFor, type Session } from "../src/roles.js";
import { loadScreen } from "../src/screens.js";
import { renderNav } from "../src/views/layout.js";
import { ENDPOINT, fixtureClient } from "./fixture.js";

const ROLE_USERS: Record<string, string> = {
  employee: "erin",
  canvasser: "cass",
  inspector: "ines",
  property_custodian: "carl",
  administrator: "admin",
};

function sessionFor(user: string, roles: string[]): Session {
  return { endpoint: ENDPOINT, token: `tok-${user}`, user, roles, pollIntervalMs: 1000 };
}

function actionsIn(html: string): Set<string> {
  return new Set(Array.from(html.matchAll(/data-action="([^"]+)"/g), (m) => m[1]));
}

describe("role action gating", () => {
  for (const role of Object.keys(ROLE_ACTIONS)) {
    it(`${role} screens offer exactly the ${role} transactions`, async () => {
      const client = fixtureClient();
      const session = sessionFor(ROLE_USERS[role], [role]);
      let html = "";
      for (const screen of screensFor([role])) {
        html += await loadScreen(client, session, screen);
      }
      expect(actionsIn(html)).toEqual(new Set(ROLE_ACTIONS[role]));
    });
  }

  it("the verify screen carries no transaction forms", async () => {
    const html = await loadScreen(fixtureClient(), sessionFor("erin", ["employee"]), "verify");
    expect(actionsIn(html).size).toBe(0);
  });
});

describe("menu gating", () => {
  it("each role gets its own screens plus the open verify screen", () => {
    for (const [role, screens] of Object.entries(ROLE_SCREENS)) {
      expect(screensFor([role])).toEqual([...screens, "verify"]);
    }
  });

  it("multi-role sessions union their screens and actions", () => {
    const roles = ["employee", "property_custodian"];
    expect(screensFor(roles)).toEqual(["requests", "my-assets", "deliveries", "assets", "verify"]);
    expect(actionsFor(roles)).toEqual(
      new Set([...ROLE_ACTIONS.employee, ...ROLE_ACTIONS.property_custodian]),
    );
  });

  it("the nav only links to the session's screens", () => {
    const html = renderNav(sessionFor("ines", ["inspector"]), "inspections");
    const links = Array.from(html.matchAll(/data-screen="([^"]+)"/g), (m) => m[1]);
    expect(links).toEqual(["inspections", "verify"]);
  });

  it("unknown roles grant nothing but label verification", () => {
    expect(screensFor(["auditor"])).toEqual(["verify"]);
    expect(actionsFor(["auditor"]).size).toBe(0);
  });
});
