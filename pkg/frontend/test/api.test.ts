import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiError, PolicyApi } from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function mockFetch(response: Response) {
  const spy = vi.fn().mockResolvedValue(response);
  vi.stubGlobal("fetch", spy);
  return spy;
}

afterEach(() => vi.unstubAllGlobals());

describe("PolicyApi", () => {
  it("lists apps from GET /apps", async () => {
    const spy = mockFetch(jsonResponse([{ app: "a" }]));
    const api = new PolicyApi("http://dev");
    expect(await api.listApps()).toEqual([{ app: "a" }]);
    expect(spy.mock.calls[0][0]).toBe("http://dev/apps");
  });

  it("posts install bodies as JSON", async () => {
    const spy = mockFetch(jsonResponse({ app: "a", cards: [] }, 201));
    await new PolicyApi().installApp({ app: "a", declared: [] });
    const [url, init] = spy.mock.calls[0];
    expect(url).toBe("/apps");
    expect(init.method).toBe("POST");
    expect(init.headers["Content-Type"]).toBe("application/json");
    expect(JSON.parse(init.body)).toEqual({ app: "a", declared: [] });
  });

  it("escapes app ids in paths", async () => {
    const spy = mockFetch(jsonResponse({ app: "a/b", cards: [] }));
    await new PolicyApi().appSettings("a/b");
    expect(spy.mock.calls[0][0]).toBe("/apps/a%2Fb/settings");
  });

  it("unwraps the decisions list when answering a prompt", async () => {
    mockFetch(jsonResponse({ decisions: [{ action: "Deny" }] }));
    const decisions = await new PolicyApi().answerPrompt("pr1", "Deny", "this-app");
    expect(decisions).toEqual([{ action: "Deny" }]);
  });

  it("sends the admin token header when removing an org profile", async () => {
    const spy = mockFetch(jsonResponse({ removed: "corp" }));
    await new PolicyApi().removeOrgProfile("corp", "secret");
    expect(spy.mock.calls[0][1].headers["X-Admin-Token"]).toBe("secret");
  });

  it("raises ApiError with the service's detail message", async () => {
    mockFetch(jsonResponse({ error: "SensorLockedError", detail: "camera is locked" }, 409));
    const err = await new PolicyApi().setQuickSetting("camera", "On").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
    expect(err.detail).toBe("camera is locked");
  });

  it("falls back to the status text for non-JSON error bodies", async () => {
    mockFetch(new Response("boom", { status: 500, statusText: "Internal Server Error" }));
    const err = await new PolicyApi().listApps().catch((e) => e);
    expect(err.status).toBe(500);
    expect(err.detail).toBe("Internal Server Error");
  });
});
