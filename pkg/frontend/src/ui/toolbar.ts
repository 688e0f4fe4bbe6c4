/**
 * Toolbar: status indicator + start/stop/down on the left, file actions and
 * settings (working directory) on the right.
 */

import type { ApiClient } from "../api.js";
import type { SessionStore } from "../store.js";
import { el } from "./dom.js";

export class ToolbarPanel {
  readonly root: HTMLElement;
  private dot: HTMLElement;
  private statusText: HTMLElement;
  private startButton: HTMLButtonElement;
  private stopButton: HTMLButtonElement;
  private workdirInput: HTMLInputElement;

  constructor(private store: SessionStore, private api: ApiClient) {
    this.dot = el("span", { class: "status-dot", title: "stopped" });
    this.statusText = el("span", { class: "status-text" }, ["stopped"]);
    this.startButton = el("button", { class: "start" }, ["▶ Start"]);
    this.stopButton = el("button", { class: "stop" }, ["■ Stop"]);
    const downButton = el("button", { class: "down" }, ["Down"]);
    this.workdirInput = el("input", {
      type: "text", class: "workdir", placeholder: "working directory", value: ".",
    });
    const exportButton = el("button", {}, ["Export YAML"]);

    this.startButton.addEventListener("click", () =>
      void this.store.start(this.workdirInput.value || undefined));
    this.stopButton.addEventListener("click", () => void this.store.stop());
    downButton.addEventListener("click", () => void this.store.down());
    exportButton.addEventListener("click", () => void this.exportYaml());

    this.root = el("header", { class: "panel toolbar" }, [
      el("div", { class: "toolbar-left" },
         [this.dot, this.statusText, this.startButton, this.stopButton, downButton]),
      el("div", { class: "toolbar-right" },
         [el("label", {}, ["workdir ", this.workdirInput]), exportButton]),
    ]);
  }

  private async exportYaml(): Promise<void> {
    const text = await this.api.exportYaml(this.store.projectId);
    const blob = new Blob([text], { type: "application/yaml" });
    const link = el("a", {
      href: URL.createObjectURL(blob), download: "docker-compose.yml",
    });
    link.click();
    URL.revokeObjectURL(link.href);
  }

  render(): void {
    const indicator = this.store.indicator;
    this.dot.style.backgroundColor = indicator.color;
    this.dot.title = indicator.aggregate;
    this.statusText.textContent = indicator.aggregate;
    this.startButton.disabled = !indicator.canStart;
    this.stopButton.disabled = !indicator.canStop;
  }
}
