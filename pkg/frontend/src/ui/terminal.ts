/**
 * Terminal view: a General tab plus one tab per service; lines append in
 * arrival order and tabs keep their backlog after the run stops.
 */

import { GENERAL_TAB } from "../terminal.js";
import type { SessionStore } from "../store.js";
import { clear, el } from "./dom.js";

export class TerminalPanel {
  readonly root: HTMLElement;
  private tabsBar: HTMLElement;
  private output: HTMLElement;
  private active = GENERAL_TAB;

  constructor(private store: SessionStore) {
    this.tabsBar = el("div", { class: "terminal-tabs" });
    this.output = el("pre", { class: "terminal-output" });
    this.root = el("section", { class: "panel terminal" }, [
      this.tabsBar, this.output,
    ]);
  }

  render(): void {
    const terminal = this.store.terminal;
    clear(this.tabsBar);
    for (const name of terminal.tabs) {
      const tab = el("button", {
        class: name === this.active ? "tab active" : "tab",
      }, [name === GENERAL_TAB ? "General" : name]);
      tab.addEventListener("click", () => {
        this.active = name;
        this.render();
      });
      this.tabsBar.append(tab);
    }
    if (!terminal.tabs.includes(this.active)) this.active = GENERAL_TAB;
    const lines = terminal.tab(this.active);
    this.output.textContent = lines.join("\n");
    this.output.scrollTop = this.output.scrollHeight;
  }
}
