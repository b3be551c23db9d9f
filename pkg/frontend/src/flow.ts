// Click-to-page state machine: cached pages render instantly, everything
// else goes through request -> ETA countdown -> poll -> auto-render when the
// broadcast lands. Time is injected so tests can drive it deterministically.

import type { ServiceApi } from "./api.js";

export type FlowState =
  | { kind: "idle" }
  | { kind: "requesting"; url: string }
  | { kind: "counting"; url: string; etaSeconds: number; remaining: number }
  | { kind: "rendered"; url: string }
  | { kind: "refused"; url: string; reason: string };

export interface FlowEvents {
  onState(state: FlowState): void;
  onRender(url: string): void; // navigate/redraw the page view
}

export interface FlowOptions {
  clientId: string;
  downlinkOnly: boolean;
  pollIntervalMs: number;
  setInterval(fn: () => void, ms: number): number;
  clearInterval(id: number): void;
}

export class RequestFlow {
  private state: FlowState = { kind: "idle" };
  private timer: number | null = null;

  constructor(private api: ServiceApi, private events: FlowEvents,
              private opts: FlowOptions) {}

  current(): FlowState {
    return this.state;
  }

  setDownlinkOnly(value: boolean): void {
    this.opts.downlinkOnly = value;
  }

  private setState(state: FlowState): void {
    this.state = state;
    this.events.onState(state);
  }

  /** Entry point for catalog clicks and click-map hits. */
  async open(url: string): Promise<void> {
    this.stop();
    const cached = await this.api.cache(this.opts.clientId);
    if (cached.some((p) => p.url === url && p.fresh)) {
      this.setState({ kind: "rendered", url });
      this.events.onRender(url); // local hit: instant load
      return;
    }
    if (this.opts.downlinkOnly) {
      this.setState({ kind: "refused", url, reason: "no uplink on this client" });
      return;
    }
    this.setState({ kind: "requesting", url });
    const ack = await this.api.request(url, this.opts.clientId);
    if (ack.status === "rejected") {
      this.setState({ kind: "refused", url, reason: ack.reason });
      return;
    }
    this.startCountdown(url, ack.eta_seconds);
  }

  private startCountdown(url: string, eta: number): void {
    this.setState({ kind: "counting", url, etaSeconds: eta, remaining: eta });
    let remaining = eta;
    this.timer = this.opts.setInterval(async () => {
      remaining -= this.opts.pollIntervalMs / 1000;
      const cached = await this.api.cache(this.opts.clientId);
      if (cached.some((p) => p.url === url && p.fresh)) {
        this.stop();
        this.setState({ kind: "rendered", url });
        this.events.onRender(url); // delivery landed: auto-open
        return;
      }
      this.setState({ kind: "counting", url, etaSeconds: eta,
                      remaining: Math.max(0, remaining) });
    }, this.opts.pollIntervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      this.opts.clearInterval(this.timer);
      this.timer = null;
    }
  }
}
