/** Thin typed client for the design service HTTP API. */

import type { DesignRecord, GraphDoc, ValidationReport } from "./types";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
    public readonly body?: unknown,
  ) {
    super(message);
  }
}

export class VersionConflictError extends ApiError {}

export type FetchLike = typeof fetch;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, "")}/api/v1${path}`;
  }

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const response = await this.fetchImpl(this.url(path), init);
    if (response.status === 204) return null;
    const body: unknown = await response.json().catch(() => null);
    if (!response.ok) {
      const message =
        body && typeof body === "object" && "error" in body
          ? String((body as { error: unknown }).error)
          : `HTTP ${response.status}`;
      if (response.status === 409) throw new VersionConflictError(409, message, body);
      throw new ApiError(response.status, message, body);
    }
    return body;
  }

  private post(path: string, payload: unknown): Promise<unknown> {
    return this.request(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  async validate(graph: GraphDoc): Promise<ValidationReport> {
    return (await this.post("/validate", graph)) as ValidationReport;
  }

  async codegen(dialect: "keras" | "caffe", graph: GraphDoc): Promise<string> {
    const body = (await this.post(`/codegen/${dialect}`, graph)) as { code: string };
    return body.code;
  }

  async listDesigns(): Promise<DesignRecord[]> {
    const body = (await this.request("/designs")) as { designs: DesignRecord[] };
    return body.designs;
  }

  async createDesign(graph: GraphDoc, provenance = "edited"): Promise<DesignRecord> {
    return (await this.post("/designs", { graph, provenance })) as DesignRecord;
  }

  async getDesign(id: string): Promise<DesignRecord> {
    return (await this.request(`/designs/${id}`)) as DesignRecord;
  }

  async updateDesign(id: string, graph: GraphDoc, version: number): Promise<DesignRecord> {
    return (await this.request(`/designs/${id}`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ graph, version }),
    })) as DesignRecord;
  }

  async deleteDesign(id: string): Promise<void> {
    await this.request(`/designs/${id}`, { method: "DELETE" });
  }

  async rate(id: string, stars: number): Promise<{ average: number; count: number }> {
    return (await this.post(`/designs/${id}/ratings`, { stars })) as {
      average: number;
      count: number;
    };
  }
}
