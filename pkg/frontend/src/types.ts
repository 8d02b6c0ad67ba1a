/** Graph document schema shared with the HTTP service. */

export const SCHEMA = "dlp2c/1";

export type LayerKind =
  | "InputMNIST"
  | "InputCIFAR10"
  | "InputImageNet"
  | "InputIMDBText"
  | "Dense"
  | "Conv2D"
  | "Flatten"
  | "Dropout"
  | "MaxPool2D"
  | "AvgPool2D"
  | "Concat"
  | "Embed"
  | "SimpleRNN"
  | "LSTM";

export interface NodeDoc {
  id: string;
  kind: LayerKind;
  params: Record<string, number>;
  return_seq: boolean;
}

export interface GraphDoc {
  schema: typeof SCHEMA;
  name: string;
  provenance: string;
  nodes: NodeDoc[];
  edges: [string, string][];
}

export interface Violation {
  category: "Structure" | "GrammarAdjacency" | "ShapeError" | "ParamDomain";
  locus: string;
  message: string;
}

export interface ValidationReport {
  ok: boolean;
  violations: Violation[];
}

export interface DesignRecord {
  id: string;
  version: number;
  graph: GraphDoc;
  provenance: string;
  draft: boolean;
  ratings: number[];
}

export function emptyGraph(name = ""): GraphDoc {
  return { schema: SCHEMA, name, provenance: "edited", nodes: [], edges: [] };
}

export function cloneGraph(graph: GraphDoc): GraphDoc {
  return JSON.parse(JSON.stringify(graph)) as GraphDoc;
}
