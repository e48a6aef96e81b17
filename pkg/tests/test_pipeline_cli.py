from pathlib import Path

import pytest

from shadowseg import cli
from shadowseg.pipeline import PipelineStageError, RunManifest, run_pipeline
from shadowseg.triangulation import dual_edges, load_off


def manifest_of(out_dir):
    return RunManifest.from_text((out_dir / "manifest.txt").read_text())


class TestRunPipeline:
    def test_outputs_exist_and_manifest_consistent(self, project_dir):
        manifest = manifest_of(project_dir)
        for key, path in manifest.outputs.items():
            assert Path(path).is_file(), f"missing output {key}: {path}"
        assert manifest.counts["segments"] == 2
        assert manifest.counts["outline_points"] > 100
        assert manifest.counts["triangles"] > 100
        assert set(manifest.timings_ms) >= {
            "mask_io",
            "edge_detect",
            "outline",
            "triangulation",
            "segmentation",
            "rasterize",
        }

    def test_manifest_round_trip(self, project_dir):
        m = manifest_of(project_dir)
        again = RunManifest.from_text(m.to_text())
        assert again.counts == m.counts
        assert again.config == m.config
        assert again.outputs == m.outputs

    def test_missing_lights_file_attributed_to_mask_io(self, tmp_path, scene_dir):
        mask_dir, _ = scene_dir
        with pytest.raises(PipelineStageError) as exc:
            run_pipeline(mask_dir, tmp_path / "nope.txt", tmp_path / "out")
        assert exc.value.stage == "mask_io"

    def test_degenerate_scene_attributed_to_triangulation(self, tmp_path):
        import numpy as np

        from shadowseg.mask_io import Light, LightSet, PipelineConfig, ShadowStack
        from shadowseg.pipeline import run_arrays

        # all-lit masks give no outline points, so triangulation cannot run
        mask = np.ones((16, 16), dtype=np.uint8)
        stack = ShadowStack(width=16, height=16, masks=(mask,), light_ids=("L0",))
        lights = LightSet((Light("L0", "directional", direction=(0.6, 0.0, 0.8)),))
        with pytest.raises(PipelineStageError) as exc:
            run_arrays(stack, lights, PipelineConfig())
        assert exc.value.stage == "triangulation"


class TestCli:
    def test_run_exit_zero(self, tmp_path, scene_dir, capsys):
        mask_dir, lights_file = scene_dir
        out = tmp_path / "out"
        rc = cli.main(["run", str(mask_dir), "--lights", str(lights_file), "-o", str(out)])
        assert rc == 0
        assert "segments" in capsys.readouterr().out
        assert (out / "labels.png").is_file()
        assert (out / "overlay.png").is_file()
        assert (out / "outline.txt").is_file()
        assert (out / "segments.txt").is_file()
        assert (out / "mesh.off").is_file()

    def test_missing_lights_exit_2(self, tmp_path, scene_dir, capsys):
        mask_dir, _ = scene_dir
        rc = cli.main(
            ["run", str(mask_dir), "--lights", str(tmp_path / "nope.txt"), "-o", str(tmp_path / "o")]
        )
        assert rc == 2
        assert "mask_io" in capsys.readouterr().err

    def test_kappa_to_zero_gives_component_count(self, tmp_path, scene_dir):
        mask_dir, lights_file = scene_dir
        out = tmp_path / "tiny_kappa"
        rc = cli.main(
            [
                "run",
                str(mask_dir),
                "--lights",
                str(lights_file),
                "-o",
                str(out),
                "--kappa",
                "0.000001",
            ]
        )
        assert rc == 0
        manifest = manifest_of(out)
        tri = load_off(out / "mesh.off")
        parent = list(range(tri.n_triangles))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for e in dual_edges(tri):
            parent[find(e.t1)] = find(e.t2)
        components = len({find(t) for t in range(tri.n_triangles)})
        assert manifest.counts["segments"] == components

    def test_flag_beats_config_file(self, tmp_path, scene_dir):
        mask_dir, lights_file = scene_dir
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("kappa=9.0\nbeta=4.0\n")
        out = tmp_path / "prec"
        rc = cli.main(
            [
                "run",
                str(mask_dir),
                "--lights",
                str(lights_file),
                "-o",
                str(out),
                "--config",
                str(cfg),
                "--kappa",
                "2.5",
            ]
        )
        assert rc == 0
        assert manifest_of(out).config["kappa"] == "2.5"

    def test_dump_edges_flag(self, tmp_path, scene_dir):
        mask_dir, lights_file = scene_dir
        out = tmp_path / "dumps"
        rc = cli.main(
            [
                "run",
                str(mask_dir),
                "--lights",
                str(lights_file),
                "-o",
                str(out),
                "--dump-edges",
            ]
        )
        assert rc == 0
        assert (out / "strength.png").is_file()
        assert (out / "direction.png").is_file()

    def test_serve_port_in_use_exit_3(self):
        import socket

        sock = socket.socket()
        sock.bind(("127.0.0.1", 0))
        port = sock.getsockname()[1]
        try:
            rc = cli.main(["serve", "--port", str(port)])
            assert rc == 3
        finally:
            sock.close()

    def test_serve_bad_assets_exit_2(self, tmp_path):
        empty = tmp_path / "noassets"
        empty.mkdir()
        rc = cli.main(["serve", "--port", "0", "--assets", str(empty)])
        assert rc == 2


class TestDeterminism:
    def test_byte_identical_outputs(self, tmp_path, scene_dir):
        mask_dir, lights_file = scene_dir
        out1 = tmp_path / "r1"
        out2 = tmp_path / "r2"
        run_pipeline(mask_dir, lights_file, out1)
        run_pipeline(mask_dir, lights_file, out2)
        assert (out1 / "labels.png").read_bytes() == (out2 / "labels.png").read_bytes()
        assert (out1 / "outline.txt").read_bytes() == (out2 / "outline.txt").read_bytes()
        assert (out1 / "mesh.off").read_bytes() == (out2 / "mesh.off").read_bytes()
        assert (out1 / "segments.txt").read_bytes() == (out2 / "segments.txt").read_bytes()
