/**
 * Application shell: wires the five panels (toolbar, image palette, graph
 * editor, properties editor, terminal view) to the session store and shows
 * the connection-lost banner with retry.
 */

import { HttpApiClient } from "../api.js";
import { SessionStore } from "../store.js";
import { CanvasPanel } from "./canvas.js";
import { clear, el } from "./dom.js";
import { PalettePanel } from "./palette.js";
import { PropertiesPanel } from "./properties.js";
import { TerminalPanel } from "./terminal.js";
import { ToolbarPanel } from "./toolbar.js";

export async function boot(host: HTMLElement, baseUrl = ""): Promise<SessionStore> {
  const api = new HttpApiClient(baseUrl);
  const store = new SessionStore(api);
  await store.boot();

  const canvasHost = el("main", { class: "panel canvas-host" });
  const toolbar = new ToolbarPanel(store, api);
  const palette = new PalettePanel(store, api, canvasHost);
  const canvas = new CanvasPanel(store);
  const properties = new PropertiesPanel(store);
  const terminal = new TerminalPanel(store);
  canvasHost.append(canvas.root);

  const banner = el("div", { class: "connection-banner hidden" }, [
    "Connection to the composecraft service lost. ",
  ]);
  const retry = el("button", {}, ["Retry"]);
  retry.addEventListener("click", () => void store.retryConnection());
  banner.append(retry);

  const toasts = el("div", { class: "toasts" });

  clear(host);
  host.append(
    banner,
    toolbar.root,
    el("div", { class: "workspace" }, [palette.root, canvasHost, properties.root]),
    terminal.root,
    toasts,
  );

  const renderAll = () => {
    toolbar.render();
    canvas.render();
    properties.render();
    terminal.render();
  };

  store.onChange((event) => {
    if (event.kind === "state") {
      renderAll();
    } else if (event.kind === "connection") {
      banner.classList.toggle("hidden", !event.lost);
    } else if (event.kind === "toast") {
      const toast = el("div", { class: `toast ${event.level}` }, [event.message]);
      toasts.append(toast);
      setTimeout(() => toast.remove(), 4000);
    }
  });
  renderAll();
  return store;
}
