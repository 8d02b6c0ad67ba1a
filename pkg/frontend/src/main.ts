/** Browser entry point: wires the editor state to a palette, an SVG canvas,
 * the two code panes, and the save/rate controls.  All validation and code
 * generation authority lives on the server; this file only renders state. */

import { ApiClient } from "./api";
import { PALETTE, widgetsFor } from "./domains";
import { layout } from "./layout";
import { EditorState } from "./state";
import type { LayerKind, ValidationReport } from "./types";

const SVG_NS = "http://www.w3.org/2000/svg";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function mountEditor(root: HTMLElement, baseUrl: string): EditorState {
  const banner = el("div", "banner");
  const paletteBox = el("div", "palette");
  const canvasBox = el("div", "canvas");
  const inspector = el("div", "inspector");
  const kerasPane = el("pre", "pane pane-keras");
  const caffePane = el("pre", "pane pane-caffe");
  const controls = el("div", "controls");
  root.append(banner, paletteBox, canvasBox, inspector, kerasPane, caffePane, controls);

  const state = new EditorState(new ApiClient(baseUrl), {
    onReport: (report) => renderCanvas(report),
    onPanes: (panes) => {
      kerasPane.textContent = panes.keras;
      caffePane.textContent = panes.caffe;
    },
    onBanner: (message) => {
      banner.textContent = message ?? "";
      banner.style.display = message ? "block" : "none";
    },
    onConflict: (conflict) => {
      const keep = window.confirm(
        `${conflict.message}\nOK = overwrite server copy, Cancel = reload it`,
      );
      void (keep ? state.overwrite() : state.reloadFromServer());
    },
  });

  // palette: click-to-add stands in for drag in keyboard-only contexts;
  // dragstart carries the kind for canvas drops
  for (const kind of PALETTE) {
    const chip = el("button", "palette-chip", kind);
    chip.draggable = true;
    chip.addEventListener("dragstart", (ev) =>
      ev.dataTransfer?.setData("text/layer-kind", kind),
    );
    chip.addEventListener("click", () => {
      state.addNode(kind);
      renderCanvas(state.report);
    });
    paletteBox.append(chip);
  }
  canvasBox.addEventListener("dragover", (ev) => ev.preventDefault());
  canvasBox.addEventListener("drop", (ev) => {
    const kind = ev.dataTransfer?.getData("text/layer-kind") as LayerKind | "";
    if (kind) {
      state.addNode(kind);
      renderCanvas(state.report);
    }
  });

  let pendingSource: string | null = null;

  function renderCanvas(report: ValidationReport | null): void {
    canvasBox.replaceChildren();
    const lay = layout(state.graph);
    const svg = document.createElementNS(SVG_NS, "svg");
    svg.setAttribute("width", String(lay.width));
    svg.setAttribute("height", String(lay.height));

    const badEdges = new Set(
      (report?.violations ?? [])
        .filter((v) => v.category === "GrammarAdjacency")
        .map((v) => v.locus),
    );
    for (const edge of lay.edges) {
      const line = document.createElementNS(SVG_NS, "polyline");
      line.setAttribute("points", edge.points.map((p) => p.join(",")).join(" "));
      line.setAttribute("fill", "none");
      const bad = [...badEdges].some(
        (locus) => locus.includes(edge.src) && locus.includes(edge.dst),
      );
      line.setAttribute("stroke", bad ? "#c0392b" : "#000");
      line.setAttribute("stroke-width", "2");
      svg.append(line);
    }
    for (const box of lay.boxes) {
      const group = document.createElementNS(SVG_NS, "g");
      const rect = document.createElementNS(SVG_NS, "rect");
      rect.setAttribute("x", String(box.x));
      rect.setAttribute("y", String(box.y));
      rect.setAttribute("width", String(box.w));
      rect.setAttribute("height", String(box.h));
      rect.setAttribute("fill", "#fff");
      const flagged = state.violationsFor(box.id).length > 0;
      rect.setAttribute("stroke", flagged ? "#c0392b" : "#000");
      rect.setAttribute("stroke-width", "2");
      const text = document.createElementNS(SVG_NS, "text");
      text.setAttribute("x", String(box.x + box.w / 2));
      text.setAttribute("y", String(box.y + box.h / 2 + 4));
      text.setAttribute("text-anchor", "middle");
      text.textContent = box.label;
      group.append(rect, text);
      group.addEventListener("click", () => {
        // first click arms a connection, second click completes it
        if (pendingSource && pendingSource !== box.id) {
          state.connect(pendingSource, box.id);
          pendingSource = null;
        } else {
          pendingSource = box.id;
          state.select(box.id);
          renderInspector();
        }
        renderCanvas(state.report);
      });
      svg.append(group);
    }
    canvasBox.append(svg);
  }

  function renderInspector(): void {
    inspector.replaceChildren();
    const id = state.selection;
    if (!id) return;
    const node = state.graph.nodes.find((n) => n.id === id);
    if (!node) return;
    inspector.append(el("h3", undefined, `${node.kind} (${node.id})`));
    for (const widget of widgetsFor(node.kind)) {
      const label = el("label", undefined, widget.param);
      const input = el("input");
      if (widget.kind === "range") {
        input.type = "number";
        input.min = String(widget.min);
        input.max = String(widget.max);
        input.step = String(widget.step);
      } else {
        input.type = "number";
      }
      input.value = String(node.params[widget.param] ?? widget.default);
      input.addEventListener("change", () =>
        state.editParam(id, widget.param, Number(input.value)),
      );
      label.append(input);
      inspector.append(label);
    }
    for (const violation of state.violationsFor(id)) {
      inspector.append(el("p", "violation", `${violation.category}: ${violation.message}`));
    }
    const del = el("button", undefined, "delete node");
    del.addEventListener("click", () => {
      state.deleteNode(id);
      renderInspector();
      renderCanvas(state.report);
    });
    inspector.append(del);
  }

  const saveButton = el("button", undefined, "save");
  saveButton.addEventListener("click", () => void state.save());
  const rating = el("select");
  for (const stars of [1, 2, 3, 4, 5]) {
    rating.append(new Option(`${stars} star${stars > 1 ? "s" : ""}`, String(stars)));
  }
  const rateButton = el("button", undefined, "rate");
  rateButton.addEventListener("click", () => void state.rate(Number(rating.value)));
  controls.append(saveButton, rating, rateButton);

  renderCanvas(null);
  return state;
}
