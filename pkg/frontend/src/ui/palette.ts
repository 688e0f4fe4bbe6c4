/**
 * Image palette: registry search results, draggable onto the canvas to add a
 * service using the dropped image.
 */

import type { ApiClient } from "../api.js";
import type { SessionStore } from "../store.js";
import { clear, el } from "./dom.js";

export class PalettePanel {
  readonly root: HTMLElement;
  private results: HTMLElement;
  private staleBanner: HTMLElement;

  constructor(private store: SessionStore, private api: ApiClient,
              canvasHost: HTMLElement) {
    this.results = el("div", { class: "palette-results" });
    this.staleBanner = el("div", { class: "stale-banner hidden" },
                          ["showing cached results (registry unreachable)"]);
    const input = el("input", {
      class: "palette-search", placeholder: "Search Docker Hub…", type: "search",
    });
    input.addEventListener("keydown", (event) => {
      if ((event as KeyboardEvent).key === "Enter") {
        void this.search(input.value);
      }
    });
    const button = el("button", { class: "palette-go" }, ["Search"]);
    button.addEventListener("click", () => void this.search(input.value));
    this.root = el("aside", { class: "panel palette" }, [
      el("h2", {}, ["Images"]),
      el("div", { class: "palette-bar" }, [input, button]),
      this.staleBanner,
      this.results,
    ]);

    canvasHost.addEventListener("dragover", (event) => event.preventDefault());
    canvasHost.addEventListener("drop", (event) => {
      event.preventDefault();
      const repository = event.dataTransfer?.getData("text/x-image");
      if (!repository) return;
      const rect = canvasHost.getBoundingClientRect();
      const key = repository.split("/").pop()?.split(":")[0] || "service";
      void this.store.apply({
        type: "add_artifact", class: "service", key,
        props: { image: repository },
        x: event.clientX - rect.left, y: event.clientY - rect.top,
      });
    });
  }

  private async search(query: string): Promise<void> {
    if (!query.trim()) return;
    clear(this.results);
    try {
      const response = await this.api.search(query);
      this.staleBanner.classList.toggle("hidden", !response.stale);
      for (const image of response.results) {
        const item = el("div", { class: "palette-item", draggable: true }, [
          el("strong", {}, [image.repository]),
          image.is_official ? el("span", { class: "official" }, ["official"]) : "",
          el("small", {}, [image.description ?? ""]),
        ]);
        item.addEventListener("dragstart", (event) => {
          event.dataTransfer?.setData("text/x-image", image.repository);
        });
        this.results.append(item);
      }
    } catch (error) {
      this.results.append(el("div", { class: "palette-error" },
                             [`search failed: ${String(error)}`]));
    }
  }
}
