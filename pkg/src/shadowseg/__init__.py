"""Shadow-hint image segmentation: masks in, labelled segments out."""

from shadowseg.mask_io import (
    Light,
    LightSet,
    MaskIOError,
    PipelineConfig,
    ShadowStack,
    load_config,
    load_stack,
    save_stack,
)
from shadowseg.edge_detect import (
    DIRECTIONS,
    EdgeField,
    TemplateBank,
    build_templates,
    edge_field,
)
from shadowseg.outline import OutlinePoints, extract_outline
from shadowseg.triangulation import (
    DualEdge,
    Triangulation,
    TriangulationError,
    delaunay,
    dual_edges,
    prune_background,
)
from shadowseg.segmentation import (
    SegmentForest,
    SegmentationResult,
    rasterize_labels,
    segment,
)
from shadowseg.pipeline import PipelineStageError, RunManifest, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "DIRECTIONS",
    "DualEdge",
    "EdgeField",
    "Light",
    "LightSet",
    "MaskIOError",
    "OutlinePoints",
    "PipelineConfig",
    "PipelineStageError",
    "RunManifest",
    "SegmentForest",
    "SegmentationResult",
    "ShadowStack",
    "TemplateBank",
    "Triangulation",
    "TriangulationError",
    "build_templates",
    "delaunay",
    "dual_edges",
    "edge_field",
    "extract_outline",
    "load_config",
    "load_stack",
    "prune_background",
    "rasterize_labels",
    "run_pipeline",
    "save_stack",
    "segment",
]
