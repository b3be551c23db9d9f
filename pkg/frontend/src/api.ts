// Thin typed client for the broadcast service HTTP interface.

import type { Region } from "./scale.js";

export interface CatalogPage {
  url: string;
  size_bytes: number;
  last_update_ts: number;
}

export interface CachedPage {
  url: string;
  received_ts: number;
  expires_ts: number;
  fresh: boolean;
}

export interface Ack {
  url: string;
  eta_seconds: number;
  status: "accepted" | "cached_broadcast_soon" | "rejected";
  reason: string;
}

export interface PageMeta {
  url: string;
  width_px: number;
  height_px: number;
  version_ts: number;
}

export interface ServiceApi {
  catalog(): Promise<CatalogPage[]>;
  cache(clientId: string): Promise<CachedPage[]>;
  request(url: string, clientId: string): Promise<Ack>;
  clickMap(clientId: string, url: string): Promise<Region[]>;
  pageMeta(clientId: string, url: string): Promise<PageMeta>;
  pageImageUrl(clientId: string, url: string): string;
}

export class HttpApi implements ServiceApi {
  constructor(private base: string = "") {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(this.base + path, init);
    if (!resp.ok && resp.headers.get("content-type")?.includes("json")) {
      return (await resp.json()) as T; // rejection acks carry a JSON body
    }
    if (!resp.ok) {
      throw new Error(`${path}: HTTP ${resp.status}`);
    }
    return (await resp.json()) as T;
  }

  async catalog(): Promise<CatalogPage[]> {
    const data = await this.json<{ pages: CatalogPage[] }>("/catalog");
    return data.pages;
  }

  async cache(clientId: string): Promise<CachedPage[]> {
    const data = await this.json<{ pages: CachedPage[] }>(
      `/client/${encodeURIComponent(clientId)}/cache`);
    return data.pages;
  }

  async request(url: string, clientId: string): Promise<Ack> {
    return this.json<Ack>("/request", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ url, lat: 0, lon: 0, client_id: clientId }),
    });
  }

  async clickMap(clientId: string, url: string): Promise<Region[]> {
    const data = await this.json<{ regions: { x: number; y: number; w: number;
                                              h: number; url: string }[] }>(
      `/client/${encodeURIComponent(clientId)}/page?url=${encodeURIComponent(url)}&part=clickmap`);
    return data.regions;
  }

  async pageMeta(clientId: string, url: string): Promise<PageMeta> {
    return this.json<PageMeta>(
      `/client/${encodeURIComponent(clientId)}/page?url=${encodeURIComponent(url)}&part=meta`);
  }

  pageImageUrl(clientId: string, url: string): string {
    return `${this.base}/client/${encodeURIComponent(clientId)}/page` +
      `?url=${encodeURIComponent(url)}&v=${Date.now()}`;
  }
}
