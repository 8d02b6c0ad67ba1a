/** Editor page state: a client mirror of the graph document plus the live
 * validation report and code panes.  All mutations go through this class so
 * every edit triggers a debounced server validation, and only a clean report
 * refreshes the code panes (the client never shows code the server called
 * invalid). */

import { ApiClient, ApiError, VersionConflictError } from "./api";
import { clampParam, defaultParams, widgetsFor } from "./domains";
import {
  cloneGraph,
  emptyGraph,
  type GraphDoc,
  type LayerKind,
  type NodeDoc,
  type ValidationReport,
} from "./types";

export interface CodePanes {
  keras: string;
  caffe: string;
}

export interface SaveConflict {
  serverVersion: number;
  message: string;
}

export interface EditorEvents {
  onReport?: (report: ValidationReport) => void;
  onPanes?: (panes: CodePanes) => void;
  onBanner?: (message: string | null) => void;
  onConflict?: (conflict: SaveConflict) => void;
}

export class EditorState {
  graph: GraphDoc = emptyGraph();
  selection: string | null = null;
  dirty = false;
  designId: string | null = null;
  serverVersion: number | null = null;
  report: ValidationReport | null = null;
  panes: CodePanes = { keras: "", caffe: "" };
  offline = false;

  private debounceTimer: ReturnType<typeof setTimeout> | null = null;
  private inflight: Promise<void> = Promise.resolve();
  private nextId = 0;

  constructor(
    private readonly api: ApiClient,
    private readonly events: EditorEvents = {},
    private readonly debounceMs = 300,
  ) {}

  // -- edit actions --------------------------------------------------------

  addNode(kind: LayerKind): NodeDoc {
    let id = `e${this.nextId++}`;
    while (this.graph.nodes.some((n) => n.id === id)) id = `e${this.nextId++}`;
    const node: NodeDoc = { id, kind, params: defaultParams(kind), return_seq: false };
    this.graph.nodes.push(node);
    this.touch();
    return node;
  }

  connect(src: string, dst: string): void {
    if (!this.hasNode(src) || !this.hasNode(dst)) {
      throw new Error(`cannot connect unknown node ${src} -> ${dst}`);
    }
    if (this.graph.edges.some(([s, d]) => s === src && d === dst)) return;
    this.graph.edges.push([src, dst]);
    this.touch();
  }

  disconnect(src: string, dst: string): void {
    this.graph.edges = this.graph.edges.filter(([s, d]) => !(s === src && d === dst));
    this.touch();
  }

  editParam(nodeId: string, param: string, value: number): void {
    const node = this.node(nodeId);
    const widget = widgetsFor(node.kind).find((w) => w.param === param);
    node.params[param] = widget ? clampParam(widget, value) : value;
    this.touch();
  }

  setReturnSeq(nodeId: string, value: boolean): void {
    this.node(nodeId).return_seq = value;
    this.touch();
  }

  deleteNode(nodeId: string): void {
    this.graph.nodes = this.graph.nodes.filter((n) => n.id !== nodeId);
    this.graph.edges = this.graph.edges.filter(([s, d]) => s !== nodeId && d !== nodeId);
    if (this.selection === nodeId) this.selection = null;
    this.touch();
  }

  select(nodeId: string | null): void {
    this.selection = nodeId;
  }

  /** Violations attached to one node (or an edge touching it). */
  violationsFor(nodeId: string): ValidationReport["violations"] {
    if (!this.report) return [];
    return this.report.violations.filter((v) => v.locus.includes(nodeId));
  }

  // -- server sync ---------------------------------------------------------

  private touch(): void {
    this.dirty = true;
    this.scheduleValidation();
  }

  private scheduleValidation(): void {
    if (this.debounceTimer !== null) clearTimeout(this.debounceTimer);
    this.debounceTimer = setTimeout(() => {
      this.debounceTimer = null;
      this.inflight = this.inflight.then(() => this.refresh());
    }, this.debounceMs);
  }

  /** Run any pending validation now; tests and save paths await this. */
  async settle(): Promise<void> {
    if (this.debounceTimer !== null) {
      clearTimeout(this.debounceTimer);
      this.debounceTimer = null;
      this.inflight = this.inflight.then(() => this.refresh());
    }
    await this.inflight;
  }

  private async refresh(): Promise<void> {
    let report: ValidationReport;
    try {
      report = await this.api.validate(this.graph);
      this.offline = false;
      this.events.onBanner?.(null);
    } catch (error) {
      if (error instanceof ApiError) {
        // the server rejected the document outright (e.g. no Input node);
        // surface it as a structural violation rather than going offline
        this.offline = false;
        this.events.onBanner?.(null);
        report = {
          ok: false,
          violations: [{ category: "Structure", locus: "", message: error.message }],
        };
      } else {
        // server unreachable: keep editing offline with stale panes
        this.offline = true;
        this.events.onBanner?.("server unreachable — panes may be stale");
        return;
      }
    }
    this.report = report;
    this.events.onReport?.(report);
    if (!report.ok) {
      this.panes = { keras: "", caffe: "" };
      this.events.onPanes?.(this.panes);
      return;
    }
    try {
      const [keras, caffe] = await Promise.all([
        this.api.codegen("keras", this.graph),
        this.api.codegen("caffe", this.graph),
      ]);
      this.panes = { keras, caffe };
      this.events.onPanes?.(this.panes);
    } catch {
      this.panes = { keras: "", caffe: "" };
      this.events.onPanes?.(this.panes);
    }
  }

  async load(designId: string): Promise<void> {
    const record = await this.api.getDesign(designId);
    this.graph = cloneGraph(record.graph);
    this.designId = record.id;
    this.serverVersion = record.version;
    this.dirty = false;
    this.nextId = this.graph.nodes.length;
    await this.refreshNow();
  }

  async refreshNow(): Promise<void> {
    this.inflight = this.inflight.then(() => this.refresh());
    await this.inflight;
  }

  /** Save; on a version conflict surfaces a dialog instead of overwriting. */
  async save(): Promise<boolean> {
    await this.settle();
    if (this.designId === null || this.serverVersion === null) {
      const record = await this.api.createDesign(this.graph);
      this.designId = record.id;
      this.serverVersion = record.version;
      this.dirty = false;
      return true;
    }
    try {
      const record = await this.api.updateDesign(
        this.designId,
        this.graph,
        this.serverVersion,
      );
      this.serverVersion = record.version;
      this.dirty = false;
      return true;
    } catch (error) {
      if (error instanceof VersionConflictError) {
        const latest = await this.api.getDesign(this.designId);
        this.events.onConflict?.({
          serverVersion: latest.version,
          message: error.message,
        });
        return false;
      }
      throw error;
    }
  }

  /** Conflict resolution: retry the save against the server's version. */
  async overwrite(): Promise<boolean> {
    if (this.designId === null) return this.save();
    const latest = await this.api.getDesign(this.designId);
    this.serverVersion = latest.version;
    return this.save();
  }

  /** Conflict resolution: drop local edits and reload the server copy. */
  async reloadFromServer(): Promise<void> {
    if (this.designId === null) return;
    await this.load(this.designId);
  }

  async rate(stars: number): Promise<{ average: number; count: number }> {
    if (this.designId === null) throw new Error("save the design before rating");
    return this.api.rate(this.designId, stars);
  }

  exportJson(): string {
    return JSON.stringify(this.graph, null, 2);
  }

  private hasNode(id: string): boolean {
    return this.graph.nodes.some((n) => n.id === id);
  }

  private node(id: string): NodeDoc {
    const node = this.graph.nodes.find((n) => n.id === id);
    if (!node) throw new Error(`unknown node ${id}`);
    return node;
  }
}
