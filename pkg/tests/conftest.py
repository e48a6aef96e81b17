"""Shared fixtures: synthetic scene, hand-built triangulations, field builders."""

from __future__ import annotations

import numpy as np
import pytest

from shadowseg.edge_detect import DIRECTION_BY_NAME, EdgeField
from shadowseg.mask_io import PipelineConfig
from shadowseg.pipeline import run_arrays
from shadowseg.synthetic import generate_scene
from shadowseg.triangulation import Triangulation, _build_neighbors


def make_field(strength, direction="E", valid=None) -> EdgeField:
    """EdgeField from a 1D row or 2D grid of strengths, one direction name."""
    g = np.atleast_2d(np.asarray(strength, dtype=np.float64))
    d = np.full(g.shape, DIRECTION_BY_NAME[direction].index, dtype=np.int8)
    v = np.ones(g.shape, dtype=bool) if valid is None else np.atleast_2d(valid)
    return EdgeField(strength=g, direction=d, valid=v)


def bridge_fixture() -> Triangulation:
    """Six hand-placed triangles: two clusters joined by a wide bridge.

    Left 4x4 square (T0, T1), right 2x6 rectangle (T2, T3), bridge quad
    (T4, T5). Dual edges in canonical order:

      ==  ======  ============  ==============
      id  pair    primal edge   length
      ==  ======  ============  ==============
      0   (0,1)   v0-v2         sqrt(32) ~ 5.657
      1   (0,5)   v1-v2         4.0
      2   (2,3)   v4-v6         sqrt(40) ~ 6.325
      3   (3,4)   v4-v7         6.0
      4   (4,5)   v1-v7         sqrt(180) ~ 13.416
      ==  ======  ============  ==============
    """
    verts = np.array(
        [
            (0.0, 0.0),  # v0
            (4.0, 0.0),  # v1
            (4.0, 4.0),  # v2
            (0.0, 4.0),  # v3
            (16.0, 0.0),  # v4
            (18.0, 0.0),  # v5
            (18.0, 6.0),  # v6
            (16.0, 6.0),  # v7
        ]
    )
    tris = np.array(
        [
            (0, 1, 2),  # T0 area 8, min side 4
            (0, 2, 3),  # T1 area 8, min side 4
            (4, 5, 6),  # T2 area 6, min side 2
            (4, 6, 7),  # T3 area 6, min side 2
            (1, 4, 7),  # T4 area 36, min side 6
            (1, 7, 2),  # T5 area 24, min side 4
        ],
        dtype=np.int64,
    )
    return Triangulation(vertices=verts, triangles=tris, neighbors=_build_neighbors(tris))


@pytest.fixture(scope="session")
def synthetic_scene():
    """The acceptance scene: stack, lights, spec."""
    return generate_scene()


@pytest.fixture(scope="session")
def synthetic_run(synthetic_scene):
    """Full default-config pipeline run on the acceptance scene."""
    stack, lights, _ = synthetic_scene
    return run_arrays(stack, lights, PipelineConfig())


@pytest.fixture(scope="session")
def scene_dir(tmp_path_factory, synthetic_scene):
    """The acceptance scene written to disk: (mask_dir, lights_file)."""
    from shadowseg.mask_io import save_stack, write_lights

    stack, lights, _ = synthetic_scene
    root = tmp_path_factory.mktemp("scene")
    mask_dir = root / "masks"
    save_stack(stack, mask_dir, fmt="pgm")
    lights_file = root / "lights.txt"
    write_lights(lights_file, lights)
    return mask_dir, lights_file


@pytest.fixture(scope="session")
def project_dir(tmp_path_factory, scene_dir):
    """Output directory of a default CLI-equivalent run on the scene."""
    from shadowseg.pipeline import run_pipeline

    mask_dir, lights_file = scene_dir
    out = tmp_path_factory.mktemp("project")
    run_pipeline(mask_dir, lights_file, out)
    return out
