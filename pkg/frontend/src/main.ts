/** Browser wiring: canvas, sliders, selection, merges, barriers, export. */

import { ApiClient, ApiError } from "./api.js";
import { hitSegment, nearestDualEdge, renderScene, type Ctx2D } from "./render.js";
import {
  ResegmentScheduler,
  UNAVAILABLE_LAYERS,
  ViewState,
  kappaToSlider,
  sliderToKappa,
  type Layer,
} from "./state.js";
import type { MeshPayload } from "./types.js";

const EDGE_PICK_DISTANCE = 3.0;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function toast(message: string): void {
  const box = el<HTMLDivElement>("toast");
  box.textContent = message;
  box.classList.add("visible");
  setTimeout(() => box.classList.remove("visible"), 2500);
}

async function boot(): Promise<void> {
  const api = new ApiClient("");
  const state = new ViewState();
  const canvas = el<HTMLCanvasElement>("scene");
  const ctx = canvas.getContext("2d") as unknown as Ctx2D;
  let mesh: MeshPayload | null = null;

  const redraw = () => {
    if (mesh !== null) {
      renderScene(ctx, mesh, state);
      el<HTMLSpanElement>("seg-count").textContent = String(
        state.segmentation?.segment_count ?? 0,
      );
      el<HTMLSpanElement>("revision").textContent = String(state.revision);
      el<HTMLButtonElement>("merge").disabled = !state.canMerge();
    }
  };

  const scheduler = new ResegmentScheduler(
    api,
    state,
    redraw,
    (err) => toast(err instanceof Error ? err.message : String(err)),
  );

  const status = await api.status();
  if (!status.loaded) {
    toast("no project loaded: POST /api/session or restart with --project");
    return;
  }
  mesh = await api.mesh();
  canvas.width = mesh.width || 512;
  canvas.height = mesh.height || 512;
  const seg = await api.segmentation();
  if (!("unchanged" in seg)) {
    state.applySegmentation(seg);
  }

  const kappaSlider = el<HTMLInputElement>("kappa");
  const kappaLabel = el<HTMLSpanElement>("kappa-value");
  kappaSlider.value = String(Math.round(kappaToSlider(state.kappa) * 1000));
  kappaLabel.textContent = state.kappa.toPrecision(3);
  const requestFromControls = () => {
    const kappa = sliderToKappa(Number(kappaSlider.value) / 1000);
    const aMin = Number(el<HTMLInputElement>("a-min").value);
    kappaLabel.textContent = kappa.toPrecision(3);
    scheduler.request(kappa, aMin);
  };
  kappaSlider.addEventListener("input", requestFromControls);
  kappaSlider.addEventListener("change", requestFromControls);
  el<HTMLInputElement>("a-min").value = String(state.aMin);
  el<HTMLInputElement>("a-min").addEventListener("change", requestFromControls);

  for (const layer of ["mask", "strength", "outline", "mesh", "segments"] as Layer[]) {
    const box = el<HTMLInputElement>(`layer-${layer}`);
    box.checked = state.layers.has(layer);
    if (UNAVAILABLE_LAYERS.has(layer)) {
      box.disabled = true;
      box.title = "not provided by the service API";
      continue;
    }
    box.addEventListener("change", () => {
      state.toggleLayer(layer);
      redraw();
    });
  }

  const barrierMode = el<HTMLInputElement>("barrier-mode");
  canvas.addEventListener("click", async (ev) => {
    if (mesh === null || state.segmentation === null) {
      return;
    }
    const rect = canvas.getBoundingClientRect();
    const x = ((ev.clientX - rect.left) / rect.width) * canvas.width;
    const y = ((ev.clientY - rect.top) / rect.height) * canvas.height;
    if (barrierMode.checked) {
      const edge = nearestDualEdge(mesh, x, y, EDGE_PICK_DISTANCE);
      if (edge === null) {
        toast("no dual edge here (hull edges cannot be barred)");
        return;
      }
      // optimistic toggle, reverted if the server rejects it
      const wasBarred = state.barriers.has(edge);
      if (wasBarred) {
        state.barriers.delete(edge);
      } else {
        state.barriers.add(edge);
      }
      redraw();
      try {
        const resp = await api.barrier(edge);
        state.acknowledge(resp.revision);
        const segNow = await api.segmentation();
        if (!("unchanged" in segNow)) {
          state.applySegmentation(segNow);
        }
      } catch (err) {
        if (wasBarred) {
          state.barriers.add(edge);
        } else {
          state.barriers.delete(edge);
        }
        toast(err instanceof ApiError ? err.message : "barrier failed");
      }
      redraw();
      return;
    }
    const segId = hitSegment(mesh, state.segmentation.labels, x, y);
    if (segId !== null) {
      state.selectSegment(segId);
      redraw();
    }
  });

  el<HTMLButtonElement>("merge").addEventListener("click", async () => {
    if (!state.canMerge()) {
      return;
    }
    const [a, b] = state.selection;
    const keep = [...state.selection];
    state.clearSelection(); // optimistic
    redraw();
    try {
      const resp = await api.merge(a, b);
      state.acknowledge(resp.revision);
      const segNow = await api.segmentation();
      if (!("unchanged" in segNow)) {
        state.applySegmentation(segNow);
      }
    } catch (err) {
      state.selection = keep; // revert the optimistic clear
      toast(err instanceof ApiError ? err.message : "merge failed");
    }
    redraw();
  });

  el<HTMLButtonElement>("clear-selection").addEventListener("click", () => {
    state.clearSelection();
    redraw();
  });
  el<HTMLAnchorElement>("export").href = api.exportUrl();

  redraw();
}

if (typeof document !== "undefined") {
  void boot();
}
