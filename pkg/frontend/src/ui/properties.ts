/**
 * Properties editor for the selected artifact. Edits post set_property ops;
 * the port-mapping host input stays disabled until the container port holds
 * a valid port, and clearing the container port clears the host port.
 */

import {
  envToRows,
  hostInputEnabled,
  normalizePortRow,
  parsePort,
  portsToRows,
  rowsToEnv,
  rowsToPorts,
  type PortRow,
} from "../forms.js";
import type { SessionStore } from "../store.js";
import type { ArtifactDto } from "../types.js";
import { clear, el } from "./dom.js";

export class PropertiesPanel {
  readonly root: HTMLElement;
  private body: HTMLElement;

  constructor(private store: SessionStore) {
    this.body = el("div", { class: "props-body" });
    this.root = el("aside", { class: "panel properties" }, [
      el("h2", {}, ["Properties"]), this.body,
    ]);
  }

  render(): void {
    clear(this.body);
    const artifact = this.store.stack.artifacts.find(
      (a) => a.id === this.store.selected);
    if (!artifact) {
      this.body.append(el("p", { class: "hint" }, ["Select an artifact."]));
      return;
    }
    this.body.append(el("h3", {}, [`${artifact.class}: ${artifact.key}`]));
    this.textField(artifact, "key", artifact.key);
    if (artifact.class === "service") {
      this.serviceForm(artifact);
    } else if (artifact.class === "volume") {
      this.textField(artifact, "driver", artifact.driver ?? "");
    } else if (artifact.class === "network") {
      this.textField(artifact, "driver", artifact.driver ?? "");
      this.checkbox(artifact, "internal", artifact.internal ?? false);
    } else {
      this.sourceForm(artifact);
    }
    const remove = el("button", { class: "danger" }, ["Remove artifact"]);
    remove.addEventListener("click", () => {
      void this.store.apply({ type: "remove_artifact", id: artifact.id });
      this.store.selected = null;
    });
    this.body.append(remove);
  }

  private post(artifact: ArtifactDto, path: string, value: unknown): void {
    void this.store.apply({ type: "set_property", id: artifact.id, path, value });
  }

  private labelled(label: string, control: HTMLElement): void {
    this.body.append(el("label", { class: "field" }, [label, control]));
  }

  private textField(artifact: ArtifactDto, path: string, value: string): void {
    const input = el("input", { type: "text", value });
    input.addEventListener("change", () => this.post(artifact, path, input.value));
    this.labelled(path, input);
  }

  private checkbox(artifact: ArtifactDto, path: string, value: boolean): void {
    const input = el("input", { type: "checkbox", checked: value });
    input.addEventListener("change", () => this.post(artifact, path, input.checked));
    this.labelled(path, input);
  }

  private serviceForm(artifact: ArtifactDto): void {
    this.textField(artifact, "image", artifact.image ?? "");
    this.textField(artifact, "container_name", artifact.container_name ?? "");
    this.textField(artifact, "hostname", artifact.hostname ?? "");
    const restart = el("select", {});
    for (const option of ["no", "always", "on-failure", "unless-stopped"]) {
      const choice = el("option", { value: option }, [option]);
      if ((artifact.restart ?? "no") === option) choice.selected = true;
      restart.append(choice);
    }
    restart.addEventListener("change", () => this.post(artifact, "restart", restart.value));
    this.labelled("restart", restart);
    this.checkbox(artifact, "stdin_open", artifact.stdin_open ?? false);
    this.checkbox(artifact, "tty", artifact.tty ?? false);
    this.textField(artifact, "mem_limit", artifact.mem_limit ?? "");
    this.envEditor(artifact);
    this.portsEditor(artifact);
    this.healthcheckEditor(artifact);
  }

  private envEditor(artifact: ArtifactDto): void {
    const rows = envToRows(artifact.environment ?? []);
    const host = el("div", { class: "env-editor" }, [el("h4", {}, ["environment"])]);
    const commit = () => this.post(artifact, "environment", rowsToEnv(rows));
    rows.forEach((row, index) => {
      const name = el("input", { type: "text", value: row.name, placeholder: "NAME" });
      const value = el("input", { type: "text", value: row.value, placeholder: "value" });
      name.addEventListener("change", () => { rows[index]!.name = name.value; commit(); });
      value.addEventListener("change", () => { rows[index]!.value = value.value; commit(); });
      host.append(el("div", { class: "env-row" }, [name, value]));
    });
    const add = el("button", {}, ["+ variable"]);
    add.addEventListener("click", () => {
      rows.push({ name: "NEW_VAR", value: "" });
      commit();
    });
    host.append(add);
    this.body.append(host);
  }

  private portsEditor(artifact: ArtifactDto): void {
    const rows: PortRow[] = portsToRows(artifact.ports ?? []);
    const host = el("div", { class: "ports-editor" }, [el("h4", {}, ["ports"])]);
    const commit = () => this.post(artifact, "ports", rowsToPorts(rows));
    const renderRow = (row: PortRow, index: number) => {
      const container = el("input", {
        type: "text", value: row.container, placeholder: "container",
      });
      const hostInput = el("input", {
        type: "text", value: row.host, placeholder: "host",
      });
      hostInput.disabled = !hostInputEnabled(row);
      const protocol = el("select", {});
      for (const option of ["tcp", "udp"]) {
        const choice = el("option", { value: option }, [option]);
        if (row.protocol === option) choice.selected = true;
        protocol.append(choice);
      }
      container.addEventListener("input", () => {
        rows[index] = normalizePortRow({ ...rows[index]!, container: container.value });
        hostInput.value = rows[index]!.host;
        hostInput.disabled = !hostInputEnabled(rows[index]!);
      });
      container.addEventListener("change", () => {
        if (parsePort(container.value) !== null || container.value === "") commit();
      });
      hostInput.addEventListener("change", () => {
        rows[index] = { ...rows[index]!, host: hostInput.value };
        commit();
      });
      protocol.addEventListener("change", () => {
        rows[index] = { ...rows[index]!, protocol: protocol.value as "tcp" | "udp" };
        commit();
      });
      host.append(el("div", { class: "port-row" }, [container, hostInput, protocol]));
    };
    rows.forEach(renderRow);
    const add = el("button", {}, ["+ port"]);
    add.addEventListener("click", () => {
      rows.push({ container: "", host: "", protocol: "tcp" });
      renderRow(rows[rows.length - 1]!, rows.length - 1);
    });
    host.append(add);
    this.body.append(host);
  }

  private healthcheckEditor(artifact: ArtifactDto): void {
    const hc = artifact.healthcheck;
    const host = el("div", { class: "hc-editor" }, [el("h4", {}, ["healthcheck"])]);
    const interval = el("input", {
      type: "text", value: hc?.interval ?? "", placeholder: "e.g. 30s",
    });
    interval.addEventListener("change", () =>
      this.post(artifact, "healthcheck.interval", interval.value || null));
    const timeout = el("input", {
      type: "text", value: hc?.timeout ?? "", placeholder: "e.g. 5s",
    });
    timeout.addEventListener("change", () =>
      this.post(artifact, "healthcheck.timeout", timeout.value || null));
    host.append(el("label", { class: "field" }, ["interval", interval]),
                el("label", { class: "field" }, ["timeout", timeout]));
    this.body.append(host);
  }

  private sourceForm(artifact: ArtifactDto): void {
    const kind = el("select", {});
    for (const option of ["file", "external"]) {
      const choice = el("option", { value: option }, [option]);
      if ((artifact.source?.kind ?? "file") === option) choice.selected = true;
      kind.append(choice);
    }
    const path = el("input", {
      type: "text", value: artifact.source?.path ?? "", placeholder: "./secret.txt",
    });
    const commit = () => {
      const value = kind.value === "external" ? "external" : { file: path.value };
      this.post(artifact, "source", value);
    };
    kind.addEventListener("change", () => {
      path.disabled = kind.value === "external";
      commit();
    });
    path.addEventListener("change", commit);
    path.disabled = (artifact.source?.kind ?? "file") === "external";
    this.labelled("source", kind);
    this.labelled("file path", path);
  }
}
