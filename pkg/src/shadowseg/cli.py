"""Command-line driver: one-shot pipeline runs and the local service.

Exit codes: 0 success, 2 pipeline/stage failure (argparse also uses 2
for usage errors), 3 service port unavailable.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from shadowseg import mask_io
from shadowseg.mask_io import MaskIOError, PipelineConfig, config_overrides
from shadowseg.pipeline import PipelineStageError, run_pipeline
from shadowseg.service import ServiceError, SessionState, make_server


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="shadowseg", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the full pipeline on a mask directory")
    run.add_argument("mask_dir", type=Path, help="directory of per-light mask images")
    run.add_argument("--lights", type=Path, required=True, help="lights metadata file")
    run.add_argument("-o", "--out", type=Path, required=True, help="output directory")
    run.add_argument("--config", type=Path, help="key=value config file")
    run.add_argument("--beta", type=float)
    run.add_argument("--t-low", type=float, dest="t_low")
    run.add_argument("--t-high", type=float, dest="t_high")
    run.add_argument("--kappa", type=float)
    run.add_argument("--a-min", type=float, dest="a_min")
    run.add_argument("--omega-cos-min", type=float, dest="omega_cos_min")
    run.add_argument("--shadow-reject-frac", type=float, dest="shadow_reject_frac")
    run.add_argument("--prune-alpha", type=float, dest="prune_alpha")
    run.add_argument("--foreground-mask", type=Path, dest="foreground_mask")
    run.add_argument("--dump-edges", action="store_true", help="write strength/direction dumps")

    serve = sub.add_parser("serve", help="serve the interactive refinement API and UI")
    serve.add_argument("--project", type=Path, help="preload a run output directory")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8775)
    serve.add_argument("--assets", type=Path, help="static UI asset directory")
    return ap


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    """Flag > config file > default."""
    cfg = mask_io.load_config(args.config)
    fg = None
    if args.foreground_mask is not None:
        fg = mask_io.read_mask_image(args.foreground_mask)
    return config_overrides(
        cfg,
        beta=args.beta,
        t_low=args.t_low,
        t_high=args.t_high,
        kappa=args.kappa,
        a_min=args.a_min,
        omega_cos_min=args.omega_cos_min,
        shadow_reject_frac=args.shadow_reject_frac,
        prune_alpha=args.prune_alpha,
        foreground_mask=fg,
    )


def cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = resolve_config(args)
        manifest = run_pipeline(
            args.mask_dir, args.lights, args.out, cfg, dump_edges=args.dump_edges
        )
    except PipelineStageError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 2
    except MaskIOError as exc:
        print(f"error [mask_io] {exc}", file=sys.stderr)
        return 2
    c = manifest.counts
    print(
        f"{c['outline_points']} outline points, {c['triangles']} triangles, "
        f"{c['segments']} segments -> {manifest.outputs['labels']}"
    )
    return 0


def _default_assets() -> Path | None:
    for candidate in (Path("frontend/dist"), Path("frontend")):
        if (candidate / "index.html").is_file():
            return candidate
    return None


def cmd_serve(args: argparse.Namespace) -> int:
    state = SessionState()
    assets = args.assets if args.assets is not None else _default_assets()
    try:
        if args.project is not None:
            state.load_project(args.project)
        server = make_server(args.host, args.port, state, assets)
    except ServiceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3 if "port" in str(exc).lower() else 2
    except OSError as exc:
        print(f"error: cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return 3
    host, port = server.server_address[:2]
    print(f"serving on http://{host}:{port}/ (Ctrl-C to stop)", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "serve":
        return cmd_serve(args)
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    raise SystemExit(main())
