"""End-to-end pipeline driver: masks in, label map and report files out."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from shadowseg import mask_io, outline as outline_mod, report, segmentation, triangulation
from shadowseg.edge_detect import DIRECTIONS, EdgeField, edge_field, strength_to_u8
from shadowseg.mask_io import LightSet, PipelineConfig, ShadowStack
from shadowseg.outline import OutlinePoints
from shadowseg.segmentation import SegmentationResult
from shadowseg.triangulation import Triangulation

STAGES = ("mask_io", "edge_detect", "outline", "triangulation", "segmentation", "rasterize")


class PipelineStageError(RuntimeError):
    """Failure attributed to one pipeline stage."""

    def __init__(self, stage: str, cause: BaseException | str):
        self.stage = stage
        msg = str(cause)
        super().__init__(f"[{stage}] {msg}")


@dataclass
class PipelineData:
    """In-memory results of one pipeline run."""

    stack: ShadowStack
    lights: LightSet
    config: PipelineConfig
    field: EdgeField
    outline: OutlinePoints
    tri: Triangulation
    result: SegmentationResult
    label_map: np.ndarray
    timings_ms: dict[str, float]


@dataclass
class RunManifest:
    """What a run consumed, produced, and how long each stage took."""

    mask_dir: str
    lights_file: str
    config: dict[str, object]
    timings_ms: dict[str, float]
    counts: dict[str, int]
    outputs: dict[str, str]

    def to_text(self) -> str:
        lines = [
            f"input.mask_dir={self.mask_dir}",
            f"input.lights_file={self.lights_file}",
        ]
        for k, v in self.config.items():
            lines.append(f"config.{k}={v}")
        for k, v in sorted(self.timings_ms.items()):
            lines.append(f"timing_ms.{k}={v:.3f}")
        for k, v in sorted(self.counts.items()):
            lines.append(f"counts.{k}={v}")
        for k, v in sorted(self.outputs.items()):
            lines.append(f"output.{k}={v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunManifest":
        mask_dir = lights_file = ""
        config: dict[str, object] = {}
        timings: dict[str, float] = {}
        counts: dict[str, int] = {}
        outputs: dict[str, str] = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            key, _, val = line.partition("=")
            if key == "input.mask_dir":
                mask_dir = val
            elif key == "input.lights_file":
                lights_file = val
            elif key.startswith("config."):
                config[key[len("config.") :]] = val
            elif key.startswith("timing_ms."):
                timings[key[len("timing_ms.") :]] = float(val)
            elif key.startswith("counts."):
                counts[key[len("counts.") :]] = int(val)
            elif key.startswith("output."):
                outputs[key[len("output.") :]] = val
        return cls(mask_dir, lights_file, config, timings, counts, outputs)


def config_as_dict(cfg: PipelineConfig) -> dict[str, object]:
    d: dict[str, object] = {
        "beta": cfg.beta,
        "t_low": cfg.t_low,
        "t_high": cfg.t_high,
        "kappa": cfg.kappa,
        "a_min": cfg.a_min,
        "omega_cos_min": cfg.omega_cos_min,
        "shadow_reject_frac": cfg.shadow_reject_frac,
    }
    if cfg.prune_alpha is not None:
        d["prune_alpha"] = cfg.prune_alpha
    if cfg.foreground_mask is not None:
        d["foreground_mask"] = "<supplied>"
    return d


def run_arrays(stack: ShadowStack, lights: LightSet, cfg: PipelineConfig) -> PipelineData:
    """Run every stage on in-memory inputs."""
    timings: dict[str, float] = {}

    def staged(stage: str, fn):
        t0 = time.perf_counter()
        try:
            out = fn()
        except PipelineStageError:
            raise
        except Exception as exc:
            raise PipelineStageError(stage, exc) from exc
        timings[stage] = (time.perf_counter() - t0) * 1000.0
        return out

    fld = staged("edge_detect", lambda: edge_field(stack, lights, cfg))
    pts = staged("outline", lambda: outline_mod.extract_outline(fld, cfg.t_low, cfg.t_high))
    tri = staged(
        "triangulation",
        lambda: triangulation.prune_background(triangulation.delaunay(pts.points), cfg),
    )
    result = staged("segmentation", lambda: segmentation.segment(tri, cfg.kappa, cfg.a_min))
    label_map = staged(
        "rasterize",
        lambda: segmentation.rasterize_labels(tri, result, stack.width, stack.height),
    )
    return PipelineData(
        stack=stack,
        lights=lights,
        config=cfg,
        field=fld,
        outline=pts,
        tri=tri,
        result=result,
        label_map=label_map,
        timings_ms=timings,
    )


def run_pipeline(
    mask_dir: Path | str,
    lights_file: Path | str,
    out_dir: Path | str,
    cfg: PipelineConfig | None = None,
    *,
    dump_edges: bool = False,
) -> RunManifest:
    """Load inputs, run the pipeline, and write all output files.

    Outputs: ``labels.png`` (16-bit label map), ``segments.txt``
    (per-segment sidecar), ``outline.txt`` (``x y strength`` lines),
    ``mesh.off``, ``overlay.png`` (report figure), ``manifest.txt``;
    with ``dump_edges`` also ``strength.png`` and ``direction.png``.
    """
    cfg = cfg or PipelineConfig()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    try:
        stack, lights = mask_io.load_stack(mask_dir, lights_file)
    except Exception as exc:
        raise PipelineStageError("mask_io", exc) from exc
    load_ms = (time.perf_counter() - t0) * 1000.0

    data = run_arrays(stack, lights, cfg)
    data.timings_ms["mask_io"] = load_ms

    outputs: dict[str, Path] = {
        "labels": out_dir / "labels.png",
        "segments": out_dir / "segments.txt",
        "outline": out_dir / "outline.txt",
        "mesh": out_dir / "mesh.off",
        "overlay": out_dir / "overlay.png",
        "manifest": out_dir / "manifest.txt",
    }
    t0 = time.perf_counter()
    segmentation.save_labels(outputs["labels"], outputs["segments"], data.label_map, data.result)
    outline_mod.save_outline(outputs["outline"], data.outline)
    triangulation.save_off(outputs["mesh"], data.tri)
    report.write_overlay_figure(
        outputs["overlay"], stack, data.outline, data.tri, data.result, data.label_map
    )
    if dump_edges:
        outputs["strength"] = out_dir / "strength.png"
        Image.fromarray(strength_to_u8(data.field), mode="L").save(outputs["strength"])
        outputs["direction"] = out_dir / "direction.png"
        _save_direction_indexed(outputs["direction"], data.field)
    data.timings_ms["write"] = (time.perf_counter() - t0) * 1000.0

    manifest = RunManifest(
        mask_dir=str(mask_dir),
        lights_file=str(lights_file),
        config=config_as_dict(cfg),
        timings_ms=data.timings_ms,
        counts={
            "lights": len(stack),
            "outline_points": len(data.outline),
            "triangles": data.tri.n_triangles,
            "segments": data.result.segment_count,
            "width": stack.width,
            "height": stack.height,
        },
        outputs={k: str(v) for k, v in outputs.items()},
    )
    outputs["manifest"].write_text(manifest.to_text())
    return manifest


_DIRECTION_PALETTE = [
    (230, 25, 75), (245, 130, 48), (255, 225, 25), (60, 180, 75),
    (70, 240, 240), (0, 130, 200), (145, 30, 180), (240, 50, 230),
    (0, 0, 0),  # invalid
]


def _save_direction_indexed(path: Path, field: EdgeField) -> None:
    idx = np.where(field.valid, field.direction, len(DIRECTIONS)).astype(np.uint8)
    img = Image.fromarray(idx, mode="P")
    palette: list[int] = []
    for rgb in _DIRECTION_PALETTE:
        palette.extend(rgb)
    img.putpalette(palette)
    img.save(path)
