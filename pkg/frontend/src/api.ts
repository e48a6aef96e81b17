/** Thin typed client for the /api endpoints; fetch is injectable for tests. */

import type {
  BarrierResponse,
  MergeResponse,
  MeshPayload,
  ResegmentResponse,
  SegmentationPayload,
  SegmentationUnchanged,
  StatusPayload,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private base: string = "",
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(this.base + path);
    return this.unwrap<T>(resp);
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const resp = await this.fetchFn(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return this.unwrap<T>(resp);
  }

  private async unwrap<T>(resp: { ok: boolean; status: number; json(): Promise<unknown> }): Promise<T> {
    const data = (await resp.json()) as Record<string, unknown>;
    if (!resp.ok) {
      throw new ApiError(resp.status, String(data?.error ?? `HTTP ${resp.status}`));
    }
    return data as T;
  }

  status(): Promise<StatusPayload> {
    return this.getJson("/api/status");
  }

  mesh(): Promise<MeshPayload> {
    return this.getJson("/api/mesh");
  }

  segmentation(knownRev?: number): Promise<SegmentationPayload | SegmentationUnchanged> {
    const q = knownRev === undefined ? "" : `?rev=${knownRev}`;
    return this.getJson(`/api/segmentation${q}`);
  }

  resegment(kappa: number, aMin?: number): Promise<ResegmentResponse> {
    const body: Record<string, number> = { kappa };
    if (aMin !== undefined) body.a_min = aMin;
    return this.postJson("/api/resegment", body);
  }

  merge(a: number, b: number): Promise<MergeResponse> {
    return this.postJson("/api/merge", { a, b });
  }

  barrier(edgeId: number): Promise<BarrierResponse> {
    return this.postJson("/api/barrier", { edge_id: edgeId });
  }

  loadProject(dir: string): Promise<StatusPayload> {
    return this.postJson("/api/session", { dir });
  }

  exportUrl(): string {
    return this.base + "/api/export";
  }
}
