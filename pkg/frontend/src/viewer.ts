// DOM composition: catalog sidebar, page canvas with click-map overlay,
// request status banner. All protocol logic lives in flow.ts/scale.ts.

import type { ServiceApi } from "./api.js";
import { FlowState, RequestFlow } from "./flow.js";
import { hitTest, scaleMap, Region } from "./scale.js";

export interface ViewerElements {
  catalog: HTMLElement;
  pageBox: HTMLElement;
  pageImage: HTMLImageElement;
  status: HTMLElement;
  downlinkToggle: HTMLInputElement;
  requestButton: HTMLButtonElement;
  urlInput: HTMLInputElement;
}

export class Viewer {
  private flow: RequestFlow;
  private regions: Region[] = [];
  private scaledRegions: Region[] = [];
  private currentUrl: string | null = null;

  constructor(private api: ServiceApi, private els: ViewerElements,
              private clientId: string) {
    this.flow = new RequestFlow(api, {
      onState: (s) => this.renderStatus(s),
      onRender: (url) => void this.showPage(url),
    }, {
      clientId,
      downlinkOnly: false,
      pollIntervalMs: 1000,
      setInterval: (fn, ms) => window.setInterval(fn, ms),
      clearInterval: (id) => window.clearInterval(id),
    });

    els.downlinkToggle.addEventListener("change", () => {
      this.flow.setDownlinkOnly(els.downlinkToggle.checked);
      els.requestButton.disabled = els.downlinkToggle.checked;
    });
    els.requestButton.addEventListener("click", () => {
      const url = els.urlInput.value.trim();
      if (url) void this.flow.open(url);
    });
    els.pageImage.addEventListener("click", (ev) => this.onPageClick(ev));
  }

  async refreshCatalog(): Promise<void> {
    const [pages, cached] = await Promise.all([
      this.api.catalog(), this.api.cache(this.clientId)]);
    const fresh = new Set(cached.filter((p) => p.fresh).map((p) => p.url));
    this.els.catalog.replaceChildren(
      ...pages.map((p) => {
        const li = document.createElement("li");
        const link = document.createElement("a");
        link.textContent = p.url;
        link.href = "#";
        link.addEventListener("click", (ev) => {
          ev.preventDefault();
          void this.flow.open(p.url);
        });
        li.append(link);
        const tag = document.createElement("span");
        tag.className = fresh.has(p.url) ? "cached" : "requestable";
        tag.textContent = fresh.has(p.url) ? "available offline" : "on request";
        li.append(" ", tag);
        return li;
      }));
  }

  private async showPage(url: string): Promise<void> {
    this.currentUrl = url;
    const [meta, regions] = await Promise.all([
      this.api.pageMeta(this.clientId, url),
      this.api.clickMap(this.clientId, url)]);
    this.regions = regions;
    this.els.pageImage.src = this.api.pageImageUrl(this.clientId, url);
    const screenWidth = Math.min(this.els.pageBox.clientWidth || meta.width_px,
                                 meta.width_px);
    const scaled = scaleMap(meta.height_px, regions, screenWidth);
    this.scaledRegions = scaled.regions;
    this.els.pageImage.width = scaled.gridWidth;
    this.els.pageImage.height = scaled.gridHeight;
    void this.refreshCatalog();
  }

  private onPageClick(ev: MouseEvent): void {
    const rect = this.els.pageImage.getBoundingClientRect();
    const x = Math.floor(ev.clientX - rect.left);
    const y = Math.floor(ev.clientY - rect.top);
    const target = hitTest(this.scaledRegions, x, y);
    if (target) {
      void this.flow.open(target);
    }
  }

  private renderStatus(state: FlowState): void {
    const el = this.els.status;
    switch (state.kind) {
      case "idle":
        el.textContent = "";
        break;
      case "requesting":
        el.textContent = `requesting ${state.url} ...`;
        break;
      case "counting":
        el.textContent =
          `${state.url}: arriving over broadcast, ~${Math.ceil(state.remaining)}s`;
        break;
      case "rendered":
        el.textContent = state.url;
        break;
      case "refused":
        el.textContent = `${state.url}: ${state.reason}`;
        break;
    }
  }
}
