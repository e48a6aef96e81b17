/** Payload shapes of the shadowseg service API. */

export interface DualEdgePayload {
  id: number;
  t1: number;
  t2: number;
  length: number;
  v1: number;
  v2: number;
}

export interface MeshPayload {
  vertices: [number, number][];
  triangles: [number, number, number][];
  dual_edges: DualEdgePayload[];
  width: number;
  height: number;
}

export interface SegmentationPayload {
  revision: number;
  segment_count: number;
  labels: number[];
  areas: number[];
  member_counts: number[];
  kappa: number;
  a_min: number;
  barriers: number[];
}

export interface SegmentationUnchanged {
  revision: number;
  unchanged: true;
}

export interface ResegmentResponse {
  revision: number;
  segment_count: number;
  areas: number[];
  kappa: number;
  a_min: number;
}

export interface StatusPayload {
  loaded: boolean;
  revision: number;
  kappa?: number;
  a_min?: number;
  triangles?: number;
  dual_edges?: number;
  segments?: number;
  barriers?: number[];
  manual_merges?: number;
}

export interface MergeResponse {
  revision: number;
  merged: boolean;
}

export interface BarrierResponse {
  revision: number;
  edge_id: number;
  barred: boolean;
}
