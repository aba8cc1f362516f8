import { describe, expect, it } from "vitest";

import { ApiClient, FetchLike } from "../src/api.js";
import { SessionController } from "../src/state.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

const messageBody = {
  reply: "你好",
  deviation: { total_han: 2, out_count: 0, out_ratio: 0, counting_mode: "occurrence", out_unique: [] },
  spans: [],
};

function controllerWithGate() {
  let calls = 0;
  let release!: () => void;
  const gate = new Promise<void>((resolve) => { release = resolve; });
  const doFetch: FetchLike = async () => {
    calls += 1;
    await gate;
    return jsonResponse(messageBody);
  };
  const controller = new SessionController(new ApiClient(doFetch), "sid");
  return { controller, release, callCount: () => calls };
}

describe("SessionController", () => {
  it("ignores a second submit while one is pending", async () => {
    const { controller, release, callCount } = controllerWithGate();
    const first = controller.send("RW1");
    expect(controller.pending).toBe(true);
    const second = await controller.send("RW1 again");
    expect(second).toBeNull();
    expect(callCount()).toBe(1);
    release();
    expect(await first).not.toBeNull();
    expect(controller.pending).toBe(false);
    expect(controller.exchanges.length).toBe(1);
  });

  it("allows a new send after the previous one settles", async () => {
    const { controller, release, callCount } = controllerWithGate();
    release();
    await controller.send("one");
    await controller.send("two");
    expect(callCount()).toBe(2);
    expect(controller.exchanges.map((e) => e.userText)).toEqual(["one", "two"]);
  });

  it("does not issue a request for blank input", async () => {
    const { controller, callCount } = controllerWithGate();
    expect(await controller.send("   ")).toBeNull();
    expect(callCount()).toBe(0);
  });

  it("clears pending after an upstream failure so retry works", async () => {
    let calls = 0;
    const doFetch: FetchLike = async () => {
      calls += 1;
      return calls === 1
        ? jsonResponse({ error: "bad gateway", retryable: true }, 502)
        : jsonResponse(messageBody);
    };
    const controller = new SessionController(new ApiClient(doFetch), "sid");
    await expect(controller.send("hi")).rejects.toThrow("bad gateway");
    expect(controller.pending).toBe(false);
    expect(await controller.send("hi")).not.toBeNull();
    expect(calls).toBe(2);
  });
});
