import { HttpApi } from "./api.js";
import { Viewer } from "./viewer.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

document.addEventListener("DOMContentLoaded", () => {
  const params = new URLSearchParams(window.location.search);
  const clientId = params.get("client") ?? "browser";
  const api = new HttpApi(params.get("service") ?? "");
  const viewer = new Viewer(api, {
    catalog: el("catalog"),
    pageBox: el("page-box"),
    pageImage: el<HTMLImageElement>("page-image"),
    status: el("status"),
    downlinkToggle: el<HTMLInputElement>("downlink-only"),
    requestButton: el<HTMLButtonElement>("request-button"),
    urlInput: el<HTMLInputElement>("url-input"),
  }, clientId);

  void viewer.refreshCatalog();
  window.setInterval(() => void viewer.refreshCatalog(), 5000);
});
