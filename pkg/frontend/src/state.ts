/** Client view state: revision guarding, selection, debounced resegmentation.
 *
 * Invariants enforced here:
 *  - a segmentation payload older than the latest acknowledged revision
 *    is discarded, never stored;
 *  - at most one resegment request is in flight, the newest pending
 *    parameters win;
 *  - re-requesting the untouched parameters is a no-op.
 */

import type { ApiClient } from "./api.js";
import type { SegmentationPayload } from "./types.js";

export type Layer = "mask" | "strength" | "outline" | "mesh" | "segments";

/** Layers the service API cannot feed (no mask/strength endpoints). */
export const UNAVAILABLE_LAYERS: ReadonlySet<Layer> = new Set(["mask", "strength"]);

export const KAPPA_LOG_MIN = -3; // slider is logarithmic over [1e-3, 1e3]
export const KAPPA_LOG_MAX = 3;

export function sliderToKappa(t: number): number {
  const clamped = Math.min(1, Math.max(0, t));
  return Math.pow(10, KAPPA_LOG_MIN + clamped * (KAPPA_LOG_MAX - KAPPA_LOG_MIN));
}

export function kappaToSlider(kappa: number): number {
  const log = Math.log10(kappa);
  return Math.min(1, Math.max(0, (log - KAPPA_LOG_MIN) / (KAPPA_LOG_MAX - KAPPA_LOG_MIN)));
}

export class ViewState {
  revision = -1; // latest acknowledged server revision
  segmentation: SegmentationPayload | null = null;
  layers = new Set<Layer>(["outline", "segments"]);
  selection: number[] = []; // up to two segment ids
  hoverEdge: number | null = null;
  barriers = new Set<number>();
  kappa = 1.0;
  aMin = 64.0;

  /** Record a server revision as the newest known one. */
  acknowledge(revision: number): void {
    if (revision > this.revision) {
      this.revision = revision;
    }
  }

  /** Accept a segmentation unless it is stale; returns whether stored. */
  applySegmentation(payload: SegmentationPayload): boolean {
    if (payload.revision < this.revision) {
      return false; // stale response: a newer revision was acknowledged
    }
    this.revision = payload.revision;
    this.segmentation = payload;
    this.barriers = new Set(payload.barriers);
    this.kappa = payload.kappa;
    this.aMin = payload.a_min;
    this.pruneSelection();
    return true;
  }

  toggleLayer(layer: Layer): boolean {
    if (UNAVAILABLE_LAYERS.has(layer)) {
      return false;
    }
    if (this.layers.has(layer)) {
      this.layers.delete(layer);
    } else {
      this.layers.add(layer);
    }
    return true;
  }

  selectSegment(id: number): void {
    if (this.selection.includes(id)) {
      return;
    }
    this.selection = [...this.selection, id].slice(-2);
  }

  clearSelection(): void {
    this.selection = [];
  }

  /** Merging needs two distinct, existing segments. */
  canMerge(): boolean {
    if (this.selection.length !== 2 || this.segmentation === null) {
      return false;
    }
    const [a, b] = this.selection;
    const k = this.segmentation.segment_count;
    return a !== b && a >= 0 && b >= 0 && a < k && b < k;
  }

  private pruneSelection(): void {
    const k = this.segmentation?.segment_count ?? 0;
    this.selection = this.selection.filter((s) => s < k);
  }
}

export interface TimerLike {
  set(fn: () => void, ms: number): unknown;
  clear(id: unknown): void;
}

const realTimer: TimerLike = {
  set: (fn, ms) => setTimeout(fn, ms),
  clear: (id) => clearTimeout(id as ReturnType<typeof setTimeout>),
};

interface Params {
  kappa: number;
  aMin: number;
}

/** Debounced, latest-wins driver for POST /api/resegment. */
export class ResegmentScheduler {
  private pendingTimer: unknown = null;
  private pendingParams: Params | null = null;
  private queuedParams: Params | null = null;
  private lastSent: Params | null = null;
  private inFlight = false;
  requestsSent = 0;

  constructor(
    private api: ApiClient,
    private state: ViewState,
    private onUpdate: () => void = () => {},
    private onError: (err: unknown) => void = () => {},
    private debounceMs = 100,
    private timer: TimerLike = realTimer,
  ) {}

  /** Debounced entry point for slider movement. */
  request(kappa: number, aMin: number): void {
    this.pendingParams = { kappa, aMin };
    if (this.pendingTimer !== null) {
      this.timer.clear(this.pendingTimer);
    }
    this.pendingTimer = this.timer.set(() => {
      this.pendingTimer = null;
      const params = this.pendingParams;
      this.pendingParams = null;
      if (params !== null) {
        this.submit(params);
      }
    }, this.debounceMs);
  }

  /** Immediate entry point (slider release); skips unchanged params. */
  submit(params: Params): void {
    if (
      this.lastSent !== null &&
      !this.inFlight &&
      this.pendingTimer === null &&
      params.kappa === this.lastSent.kappa &&
      params.aMin === this.lastSent.aMin
    ) {
      return; // releasing the slider at the same value: no duplicate request
    }
    if (this.inFlight) {
      this.queuedParams = params; // latest wins once the current one lands
      return;
    }
    void this.send(params);
  }

  get busy(): boolean {
    return this.inFlight;
  }

  private async send(params: Params): Promise<void> {
    this.inFlight = true;
    this.lastSent = params;
    this.requestsSent += 1;
    try {
      const summary = await this.api.resegment(params.kappa, params.aMin);
      this.state.acknowledge(summary.revision);
      const seg = await this.api.segmentation();
      if (!("unchanged" in seg)) {
        if (this.state.applySegmentation(seg)) {
          this.onUpdate();
        }
      }
    } catch (err) {
      this.onError(err);
    } finally {
      this.inFlight = false;
      const queued = this.queuedParams;
      this.queuedParams = null;
      if (queued !== null && (queued.kappa !== params.kappa || queued.aMin !== params.aMin)) {
        void this.send(queued);
      }
    }
  }
}
