"""Shadow-mask stacks, light metadata, and pipeline configuration.

On-disk formats
---------------
Masks: one 8-bit grayscale image per light (PGM ``P5`` or PNG), filename
stem equal to the light id. Pixels with value > 127 are lit (1),
everything else is shadowed (0).

Lights file: one record per line::

    <id> directional <x> <y> <z>
    <id> point <u_px> <v_px>

Coordinates use image axes: x grows right, y grows down; a directional
vector points from the scene toward the light and must have unit norm.
A point light is given by its image-plane epipole in pixel coordinates.

Config: flat ``key=value`` lines; ``#`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from PIL import Image


class MaskIOError(ValueError):
    """Malformed or inconsistent input data."""


_UNIT_TOL = 1e-6


@dataclass(frozen=True)
class Light:
    """One light source: either directional or a point with an image epipole."""

    light_id: str
    kind: str  # "directional" | "point"
    direction: tuple[float, float, float] | None = None
    epipole: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.kind == "directional":
            if self.direction is None:
                raise MaskIOError(f"light {self.light_id!r}: directional light needs a vector")
            norm = float(np.linalg.norm(self.direction))
            if abs(norm - 1.0) > _UNIT_TOL:
                raise MaskIOError(
                    f"light {self.light_id!r}: direction norm {norm:.8f} not unit within {_UNIT_TOL}"
                )
        elif self.kind == "point":
            if self.epipole is None:
                raise MaskIOError(f"light {self.light_id!r}: point light needs an epipole")
        else:
            raise MaskIOError(f"light {self.light_id!r}: unknown kind {self.kind!r}")


@dataclass(frozen=True)
class LightSet:
    """Ordered collection of lights, one per mask in the stack."""

    lights: tuple[Light, ...]

    def __post_init__(self) -> None:
        ids = [l.light_id for l in self.lights]
        if len(set(ids)) != len(ids):
            raise MaskIOError("duplicate light ids")

    def __len__(self) -> int:
        return len(self.lights)

    def __iter__(self):
        return iter(self.lights)

    def __getitem__(self, i: int) -> Light:
        return self.lights[i]

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(l.light_id for l in self.lights)


@dataclass(frozen=True)
class ShadowStack:
    """W x H binary masks (1 = lit, 0 = shadowed), one per light."""

    width: int
    height: int
    masks: tuple[np.ndarray, ...]  # each (height, width) uint8 in {0, 1}
    light_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.masks) < 1:
            raise MaskIOError("stack needs at least one mask")
        if len(self.masks) != len(self.light_ids):
            raise MaskIOError("one light id per mask required")
        for lid, m in zip(self.light_ids, self.masks):
            if m.shape != (self.height, self.width):
                raise MaskIOError(
                    f"mask {lid!r}: shape {m.shape[::-1]} != stack size "
                    f"({self.width}, {self.height})"
                )
            if m.dtype != np.uint8:
                raise MaskIOError(f"mask {lid!r}: dtype {m.dtype} != uint8")
            if not np.isin(m, (0, 1)).all():
                raise MaskIOError(f"mask {lid!r}: values outside {{0, 1}}")

    def __len__(self) -> int:
        return len(self.masks)


@dataclass(frozen=True)
class PipelineConfig:
    """Tunable pipeline parameters with their defaults."""

    beta: float = 4.0
    t_low: float = 0.3
    t_high: float = 0.6
    kappa: float = 1.0
    a_min: float = 64.0
    omega_cos_min: float = 0.0
    shadow_reject_frac: float = 0.9
    prune_alpha: float | None = None
    foreground_mask: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.beta <= 0:
            raise MaskIOError(f"beta must be positive, got {self.beta}")
        if self.kappa <= 0:
            raise MaskIOError(f"kappa must be positive, got {self.kappa}")
        if self.a_min < 0:
            raise MaskIOError(f"a_min must be >= 0, got {self.a_min}")
        if self.t_low > self.t_high:
            raise MaskIOError(f"t_low {self.t_low} > t_high {self.t_high}")
        for name in ("t_low", "t_high"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise MaskIOError(f"{name} must lie in [0, 1], got {v}")
        if not -1.0 <= self.omega_cos_min <= 1.0:
            raise MaskIOError(f"omega_cos_min must lie in [-1, 1], got {self.omega_cos_min}")
        if not 0.0 <= self.shadow_reject_frac <= 1.0:
            raise MaskIOError(
                f"shadow_reject_frac must lie in [0, 1], got {self.shadow_reject_frac}"
            )
        if self.prune_alpha is not None and self.prune_alpha <= 0:
            raise MaskIOError(f"prune_alpha must be positive, got {self.prune_alpha}")


MASK_SUFFIXES = (".pgm", ".png")


def read_mask_image(path: Path | str) -> np.ndarray:
    """Read a grayscale image and binarize it: value > 127 -> 1, else 0."""
    path = Path(path)
    try:
        if path.suffix.lower() == ".pgm":
            gray = _read_pgm(path)
        else:
            with Image.open(path) as img:
                gray = np.asarray(img.convert("L"))
    except MaskIOError:
        raise
    except Exception as exc:
        raise MaskIOError(f"unreadable mask {path}: {exc}") from exc
    return (gray > 127).astype(np.uint8)


def write_mask_image(path: Path | str, mask: np.ndarray) -> None:
    """Write a binary mask as 8-bit grayscale (0 / 255)."""
    path = Path(path)
    gray = np.where(mask > 0, 255, 0).astype(np.uint8)
    if path.suffix.lower() == ".pgm":
        _write_pgm(path, gray)
    else:
        Image.fromarray(gray, mode="L").save(path)


def _read_pgm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    # header: magic, width, height, maxval; '#' comments allowed between tokens
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        m = re.compile(rb"\s*(#[^\n]*\n|\S+)").match(data, pos)
        if m is None:
            raise MaskIOError(f"{path}: truncated PGM header")
        pos = m.end()
        if not m.group(1).startswith(b"#"):
            tokens.append(m.group(1))
    if tokens[0] != b"P5":
        raise MaskIOError(f"{path}: not a binary PGM (P5)")
    width, height, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise MaskIOError(f"{path}: unsupported PGM maxval {maxval}")
    pixels = data[pos + 1 : pos + 1 + width * height]
    if len(pixels) != width * height:
        raise MaskIOError(f"{path}: PGM payload truncated")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(height, width)


def _write_pgm(path: Path, gray: np.ndarray) -> None:
    h, w = gray.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    path.write_bytes(header + gray.tobytes())


def parse_lights(path: Path | str) -> LightSet:
    """Parse a lights file; one record per non-empty, non-comment line."""
    path = Path(path)
    if not path.is_file():
        raise MaskIOError(f"lights file not found: {path}")
    lights: list[Light] = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2:
            raise MaskIOError(f"{path}:{lineno}: expected '<id> <kind> ...'")
        lid, kind = parts[0], parts[1]
        try:
            if kind == "directional":
                if len(parts) != 5:
                    raise MaskIOError(f"{path}:{lineno}: directional light needs 3 numbers")
                x, y, z = (float(p) for p in parts[2:])
                lights.append(Light(lid, "directional", direction=(x, y, z)))
            elif kind == "point":
                if len(parts) != 4:
                    raise MaskIOError(f"{path}:{lineno}: point light needs 2 numbers")
                u, v = (float(p) for p in parts[2:])
                lights.append(Light(lid, "point", epipole=(u, v)))
            else:
                raise MaskIOError(f"{path}:{lineno}: unknown light kind {kind!r}")
        except ValueError as exc:
            raise MaskIOError(f"{path}:{lineno}: {exc}") from exc
    if not lights:
        raise MaskIOError(f"{path}: no light records")
    return LightSet(tuple(lights))


def write_lights(path: Path | str, lights: LightSet) -> None:
    lines = []
    for l in lights:
        if l.kind == "directional":
            x, y, z = l.direction  # type: ignore[misc]
            lines.append(f"{l.light_id} directional {x!r} {y!r} {z!r}")
        else:
            u, v = l.epipole  # type: ignore[misc]
            lines.append(f"{l.light_id} point {u!r} {v!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_stack(mask_dir: Path | str, lights_file: Path | str) -> tuple[ShadowStack, LightSet]:
    """Load and cross-validate a mask directory against its lights file.

    Mask order follows the lights file; filename stems must match light ids
    exactly (no extras, none missing).
    """
    mask_dir = Path(mask_dir)
    if not mask_dir.is_dir():
        raise MaskIOError(f"mask directory not found: {mask_dir}")
    lights = parse_lights(lights_file)

    files = {p.stem: p for p in sorted(mask_dir.iterdir()) if p.suffix.lower() in MASK_SUFFIXES}
    wanted = set(lights.ids)
    missing = sorted(wanted - files.keys())
    if missing:
        raise MaskIOError(f"no mask file for light ids: {', '.join(missing)}")
    extra = sorted(files.keys() - wanted)
    if extra:
        raise MaskIOError(f"mask files without light metadata: {', '.join(extra)}")

    masks = []
    shape: tuple[int, int] | None = None
    for lid in lights.ids:
        m = read_mask_image(files[lid])
        if shape is None:
            shape = m.shape
        elif m.shape != shape:
            raise MaskIOError(
                f"mask {lid!r}: size {m.shape[::-1]} differs from first mask {shape[::-1]}"
            )
        masks.append(m)
    assert shape is not None
    stack = ShadowStack(width=shape[1], height=shape[0], masks=tuple(masks), light_ids=lights.ids)
    return stack, lights


def save_stack(stack: ShadowStack, mask_dir: Path | str, fmt: str = "pgm") -> list[Path]:
    """Write one mask image per light; returns the written paths."""
    if fmt not in ("pgm", "png"):
        raise MaskIOError(f"unsupported mask format {fmt!r}")
    mask_dir = Path(mask_dir)
    mask_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for lid, m in zip(stack.light_ids, stack.masks):
        p = mask_dir / f"{lid}.{fmt}"
        write_mask_image(p, m)
        paths.append(p)
    return paths


_CONFIG_FLOAT_KEYS = (
    "beta",
    "t_low",
    "t_high",
    "kappa",
    "a_min",
    "omega_cos_min",
    "shadow_reject_frac",
    "prune_alpha",
)


def load_config(path: Path | str | None) -> PipelineConfig:
    """Load a flat key=value config; missing keys take defaults.

    ``foreground_mask`` holds a path to a binary image, resolved relative
    to the config file. ``path=None`` returns all defaults.
    """
    if path is None:
        return PipelineConfig()
    path = Path(path)
    if not path.is_file():
        raise MaskIOError(f"config file not found: {path}")
    values: dict[str, object] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise MaskIOError(f"{path}:{lineno}: expected key=value")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key in _CONFIG_FLOAT_KEYS:
            try:
                values[key] = float(val)
            except ValueError as exc:
                raise MaskIOError(f"{path}:{lineno}: {key} needs a number, got {val!r}") from exc
        elif key == "foreground_mask":
            mask_path = (path.parent / val).resolve()
            values[key] = read_mask_image(mask_path)
        else:
            raise MaskIOError(f"{path}:{lineno}: unknown config key {key!r}")
    return PipelineConfig(**values)  # type: ignore[arg-type]


def config_overrides(cfg: PipelineConfig, **overrides) -> PipelineConfig:
    """Return cfg with non-None overrides applied (re-validated)."""
    kept = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **kept) if kept else cfg
