import { beforeEach, describe, expect, it, vi } from "vitest";

import type { Ack, CachedPage, ServiceApi } from "./api";
import { FlowState, RequestFlow } from "./flow";

class FakeApi implements ServiceApi {
  cached: CachedPage[] = [];
  acks: Record<string, Ack> = {};
  requests: string[] = [];

  async catalog() { return []; }
  async cache() { return this.cached; }
  async request(url: string): Promise<Ack> {
    this.requests.push(url);
    return this.acks[url] ?? { url, eta_seconds: 0, status: "rejected",
                               reason: "not_available" };
  }
  async clickMap() { return []; }
  async pageMeta(_: string, url: string) {
    return { url, width_px: 1080, height_px: 100, version_ts: 0 };
  }
  pageImageUrl(_: string, url: string) { return `img:${url}`; }

  deliver(url: string) {
    this.cached.push({ url, received_ts: 0, expires_ts: 1e9, fresh: true });
  }
}

function makeFlow(api: FakeApi, downlinkOnly = false) {
  const states: FlowState[] = [];
  const rendered: string[] = [];
  const flow = new RequestFlow(api, {
    onState: (s) => states.push(s),
    onRender: (url) => rendered.push(url),
  }, {
    clientId: "c-test",
    downlinkOnly,
    pollIntervalMs: 1000,
    setInterval: (fn, ms) => setInterval(fn, ms) as unknown as number,
    clearInterval: (id) => clearInterval(id),
  });
  return { flow, states, rendered };
}

describe("request flow", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });

  it("renders cached pages instantly without a request", async () => {
    const api = new FakeApi();
    api.deliver("news.example/front");
    const { flow, rendered } = makeFlow(api);
    await flow.open("news.example/front");
    expect(rendered).toEqual(["news.example/front"]);
    expect(api.requests).toEqual([]);
  });

  it("shows a countdown for uncached pages and auto-renders on delivery", async () => {
    const api = new FakeApi();
    api.acks["wiki.example/x"] = { url: "wiki.example/x", eta_seconds: 5,
                                   status: "accepted", reason: "" };
    const { flow, states, rendered } = makeFlow(api);
    await flow.open("wiki.example/x");

    expect(api.requests).toEqual(["wiki.example/x"]);
    const counting = states.filter((s) => s.kind === "counting");
    expect(counting.length).toBe(1);
    expect(counting[0]).toMatchObject({ etaSeconds: 5, remaining: 5 });

    // three seconds pass: countdown ticks down, nothing rendered yet
    for (let i = 0; i < 3; i++) await vi.advanceTimersByTimeAsync(1000);
    const ticks = states.filter((s) => s.kind === "counting");
    expect(ticks[ticks.length - 1]).toMatchObject({ remaining: 2 });
    expect(rendered).toEqual([]);

    // broadcast lands; next poll renders the page automatically
    api.deliver("wiki.example/x");
    await vi.advanceTimersByTimeAsync(1000);
    expect(rendered).toEqual(["wiki.example/x"]);
    expect(states[states.length - 1].kind).toBe("rendered");
  });

  it("keeps counting down to zero while delivery is late", async () => {
    const api = new FakeApi();
    api.acks["a"] = { url: "a", eta_seconds: 2, status: "accepted", reason: "" };
    const { flow, states } = makeFlow(api);
    await flow.open("a");
    for (let i = 0; i < 4; i++) await vi.advanceTimersByTimeAsync(1000);
    const last = states.filter((s) => s.kind === "counting").pop();
    expect(last).toMatchObject({ remaining: 0 });
  });

  it("downlink-only clients never issue requests", async () => {
    const api = new FakeApi();
    const { flow, states, rendered } = makeFlow(api, true);
    await flow.open("news.example/front");
    expect(api.requests).toEqual([]);
    expect(rendered).toEqual([]);
    expect(states[states.length - 1]).toMatchObject(
      { kind: "refused", reason: "no uplink on this client" });
  });

  it("downlink-only clients still open cached pages", async () => {
    const api = new FakeApi();
    api.deliver("cached.example");
    const { flow, rendered } = makeFlow(api, true);
    await flow.open("cached.example");
    expect(rendered).toEqual(["cached.example"]);
  });

  it("surfaces rejections", async () => {
    const api = new FakeApi();
    api.acks["bank.example/login"] = { url: "bank.example/login",
                                       eta_seconds: -1, status: "rejected",
                                       reason: "auth_required" };
    const { flow, states } = makeFlow(api);
    await flow.open("bank.example/login");
    expect(states[states.length - 1]).toMatchObject(
      { kind: "refused", reason: "auth_required" });
  });

  it("re-opening a page cancels the previous poll", async () => {
    const api = new FakeApi();
    api.acks["a"] = { url: "a", eta_seconds: 9, status: "accepted", reason: "" };
    api.deliver("b");
    const { flow, rendered } = makeFlow(api);
    await flow.open("a");
    await flow.open("b");
    await vi.advanceTimersByTimeAsync(5000); // old poller must be dead
    expect(rendered).toEqual(["b"]);
  });
});
