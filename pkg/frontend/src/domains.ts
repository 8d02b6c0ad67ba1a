/** Client-side parameter widgets: cheap mirrors of the server's domains so
 * sliders/selects stay in range without a round trip.  The server remains
 * the validation authority. */

import type { LayerKind } from "./types";

export type Widget =
  | { kind: "range"; param: string; min: number; max: number; step: number; default: number }
  | { kind: "choice"; param: string; options: number[]; default: number };

const range = (
  param: string,
  min: number,
  max: number,
  step: number,
  dflt: number,
): Widget => ({ kind: "range", param, min, max, step, default: dflt });

const choice = (param: string, options: number[], dflt: number): Widget => ({
  kind: "choice",
  param,
  options,
  default: dflt,
});

export const PARAM_WIDGETS: Partial<Record<LayerKind, Widget[]>> = {
  Dense: [range("nodes", 5, 500, 5, 100)],
  Dropout: [range("probability", 0, 1, 0.1, 0.5)],
  Conv2D: [
    range("filters", 16, 256, 16, 64),
    choice("filter_size", [1, 3, 5, 7, 9, 11], 3),
  ],
  MaxPool2D: [
    choice("filter_size", [1, 3, 5, 7, 9, 11], 3),
    range("stride", 2, 5, 1, 2),
  ],
  AvgPool2D: [
    choice("filter_size", [1, 3, 5, 7, 9, 11], 3),
    range("stride", 2, 5, 1, 2),
  ],
  Embed: [
    choice("embed_size", [64, 100, 128, 200], 128),
    choice("vocab", [10000, 20000, 50000, 75000], 20000),
  ],
  SimpleRNN: [range("units", 3, 25, 1, 12)],
  LSTM: [range("nodes", 3, 25, 1, 12)],
};

/** Palette order: inputs first, then the layer kinds. */
export const PALETTE: LayerKind[] = [
  "InputMNIST",
  "InputCIFAR10",
  "InputImageNet",
  "InputIMDBText",
  "Conv2D",
  "MaxPool2D",
  "AvgPool2D",
  "Flatten",
  "Dense",
  "Dropout",
  "Concat",
  "Embed",
  "SimpleRNN",
  "LSTM",
];

export function defaultParams(kind: LayerKind): Record<string, number> {
  const params: Record<string, number> = {};
  for (const w of PARAM_WIDGETS[kind] ?? []) params[w.param] = w.default;
  return params;
}

/** Snap a proposed value into the widget's domain. */
export function clampParam(widget: Widget, value: number): number {
  if (widget.kind === "choice") {
    let best = widget.options[0];
    for (const o of widget.options) {
      if (Math.abs(o - value) < Math.abs(best - value)) best = o;
    }
    return best;
  }
  const clamped = Math.min(widget.max, Math.max(widget.min, value));
  const steps = Math.round((clamped - widget.min) / widget.step);
  // snap to the step lattice, guarding float drift (e.g. 0.1 steps)
  return Number((widget.min + steps * widget.step).toFixed(10));
}

export function widgetsFor(kind: LayerKind): Widget[] {
  return PARAM_WIDGETS[kind] ?? [];
}
