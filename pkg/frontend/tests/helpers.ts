import { SCHEMA, type GraphDoc } from "../src/types";

export function baseUrl(): string {
  const url = process.env.EDITOR_TEST_BASE_URL;
  if (!url) throw new Error("backend base URL missing; global setup did not run");
  return url;
}

/** Small convolutional chain used as the editing fixture. */
export function lenetLike(): GraphDoc {
  return {
    schema: SCHEMA,
    name: "lenet_like",
    provenance: "edited",
    nodes: [
      { id: "n0", kind: "InputMNIST", params: {}, return_seq: false },
      { id: "n1", kind: "Conv2D", params: { filters: 32, filter_size: 5 }, return_seq: false },
      { id: "n2", kind: "MaxPool2D", params: { filter_size: 3, stride: 2 }, return_seq: false },
      { id: "n3", kind: "Flatten", params: {}, return_seq: false },
      { id: "n4", kind: "Dense", params: { nodes: 100 }, return_seq: false },
      { id: "n5", kind: "Dense", params: { nodes: 10 }, return_seq: false },
    ],
    edges: [
      ["n0", "n1"],
      ["n1", "n2"],
      ["n2", "n3"],
      ["n3", "n4"],
      ["n4", "n5"],
    ],
  };
}
