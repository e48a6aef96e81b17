"""Shadow-edge detection by binary template matching.

Conventions
-----------
Pixel axes: x grows right (columns), y grows down (rows); the origin sits
at the center of pixel (0, 0). A transition direction d points from the
lit side into the shadow. For a directional light with unit vector
L = (lx, ly, lz) pointing from the scene toward the light, cast shadows
displace along s = -normalize((lx, ly)) in the image plane; for a point
light they displace away from its image-plane epipole, so s depends on
the pixel.

Per light and pixel, a 7x7 window of the binary mask is compared against
ten templates (fully shadowed, fully lit, eight oriented transitions).
For binary data the L2 error equals the mismatch count, in [0, 49].
The per-direction scores of all lights are combined into a single edge
strength and direction per pixel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from shadowseg.mask_io import Light, LightSet, PipelineConfig, ShadowStack

TEMPLATE_SIZE = 7
TEMPLATE_HALF = TEMPLATE_SIZE // 2
TEMPLATE_PIXELS = TEMPLATE_SIZE * TEMPLATE_SIZE
# Bias of the half-plane split: offsets with <x, d> in (-0.25, 0) land on the
# shadow side, so the center pixel belongs to the transition's dark side.
CENTER_BIAS = -0.25

_DEGENERATE_NORM = 1e-12


@dataclass(frozen=True)
class Direction:
    """One of the eight unit steps of the pixel neighborhood."""

    index: int
    name: str
    dx: int
    dy: int

    @property
    def unit(self) -> tuple[float, float]:
        n = math.hypot(self.dx, self.dy)
        return (self.dx / n, self.dy / n)

    @property
    def offset(self) -> tuple[int, int]:
        return (self.dx, self.dy)


# Fixed order; argmax ties resolve to the earliest entry.
DIRECTIONS: tuple[Direction, ...] = (
    Direction(0, "E", 1, 0),
    Direction(1, "NE", 1, -1),
    Direction(2, "N", 0, -1),
    Direction(3, "NW", -1, -1),
    Direction(4, "W", -1, 0),
    Direction(5, "SW", -1, 1),
    Direction(6, "S", 0, 1),
    Direction(7, "SE", 1, 1),
)

DIRECTION_BY_NAME = {d.name: d for d in DIRECTIONS}
OPPOSITE_INDEX = {d.index: DIRECTION_BY_NAME[opp].index for d, opp in zip(
    DIRECTIONS, ("W", "SW", "S", "SE", "E", "NE", "N", "NW"))}


@dataclass(frozen=True)
class TemplateBank:
    """The ten 7x7 binary templates."""

    fully_shadowed: np.ndarray
    fully_lit: np.ndarray
    transitions: tuple[np.ndarray, ...]  # indexed by Direction.index

    def all_templates(self) -> list[np.ndarray]:
        return [self.fully_shadowed, self.fully_lit, *self.transitions]


def build_templates() -> TemplateBank:
    """Build the template bank.

    A transition template for direction d is lit at window offset
    (dx, dy) iff <(dx, dy), d_unit> < -0.25 and shadowed otherwise; d
    points from light toward shadow. Rotating a transition template 180
    degrees about its center yields the template of the opposite
    direction.
    """
    rng = np.arange(-TEMPLATE_HALF, TEMPLATE_HALF + 1)
    wx, wy = np.meshgrid(rng, rng)  # wy indexes rows (dy), wx columns (dx)
    transitions = []
    for d in DIRECTIONS:
        ux, uy = d.unit
        lit = (wx * ux + wy * uy) < CENTER_BIAS
        transitions.append(lit.astype(np.uint8))
    return TemplateBank(
        fully_shadowed=np.zeros((TEMPLATE_SIZE, TEMPLATE_SIZE), dtype=np.uint8),
        fully_lit=np.ones((TEMPLATE_SIZE, TEMPLATE_SIZE), dtype=np.uint8),
        transitions=tuple(transitions),
    )


@dataclass(frozen=True)
class TemplateErrors:
    """Mismatch counts of one window against the ten templates."""

    e_shadow: int
    e_lit: int
    e_dir: tuple[int, ...]  # indexed by Direction.index


def _window(mask: np.ndarray, x: int, y: int) -> np.ndarray:
    """7x7 window centered at (x, y), border-clamped (edge replication)."""
    h, w = mask.shape
    xs = np.clip(np.arange(x - TEMPLATE_HALF, x + TEMPLATE_HALF + 1), 0, w - 1)
    ys = np.clip(np.arange(y - TEMPLATE_HALF, y + TEMPLATE_HALF + 1), 0, h - 1)
    return mask[np.ix_(ys, xs)]


def template_errors(mask: np.ndarray, p: tuple[int, int], bank: TemplateBank) -> TemplateErrors:
    """Per-template mismatch counts at pixel p = (x, y)."""
    win = _window(mask, p[0], p[1])
    e_shadow = int((win != bank.fully_shadowed).sum())
    e_lit = int((win != bank.fully_lit).sum())
    e_dir = tuple(int((win != t).sum()) for t in bank.transitions)
    return TemplateErrors(e_shadow=e_shadow, e_lit=e_lit, e_dir=e_dir)


def template_error_maps(mask: np.ndarray, bank: TemplateBank) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full-image mismatch-count maps (e_shadow, e_lit, e_dir[8, H, W]).

    Windows are border-clamped, matching :func:`template_errors`. For a
    binary mask m and template T with n1 lit cells, the mismatch count is
    n1 + sum(m over window) - 2 * correlate(m, T).
    """
    m = mask.astype(np.float64)
    ones = np.ones((TEMPLATE_SIZE, TEMPLATE_SIZE))
    lit_in_window = ndimage.correlate(m, ones, mode="nearest")
    e_shadow = lit_in_window
    e_lit = TEMPLATE_PIXELS - lit_in_window
    e_dir = np.empty((len(DIRECTIONS),) + mask.shape)
    for d in DIRECTIONS:
        t = bank.transitions[d.index]
        corr = ndimage.correlate(m, t.astype(np.float64), mode="nearest")
        e_dir[d.index] = t.sum() + lit_in_window - 2.0 * corr
    return e_shadow, e_lit, e_dir


def sigmoid(x):
    """Logistic function 1 / (1 + exp(-x)); satisfies s(x) + s(-x) = 1."""
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=np.float64)))


def expected_shadow_direction(light: Light, p: tuple[float, float]) -> tuple[float, float] | None:
    """Unit light-to-shadow displacement s at pixel p, or None if degenerate.

    Directional light: s = -normalize((lx, ly)); a light on the optical
    axis has no image-plane component and constrains nothing. Point
    light: s = normalize(p - epipole); undefined at the epipole itself.
    """
    if light.kind == "directional":
        lx, ly, _ = light.direction  # type: ignore[misc]
        n = math.hypot(lx, ly)
        if n < _DEGENERATE_NORM:
            return None
        return (-lx / n, -ly / n)
    ex, ey = light.epipole  # type: ignore[misc]
    vx, vy = p[0] - ex, p[1] - ey
    n = math.hypot(vx, vy)
    if n < _DEGENERATE_NORM:
        return None
    return (vx / n, vy / n)


def _shadow_excluded(e_shadow, cfg: PipelineConfig):
    """True where the window is effectively fully shadowed.

    A window whose shadowed fraction reaches ``shadow_reject_frac`` is
    excluded: (49 - e_shadow) >= frac * 49.
    """
    return (TEMPLATE_PIXELS - np.asarray(e_shadow)) >= cfg.shadow_reject_frac * TEMPLATE_PIXELS


def direction_weight(
    light: Light,
    p: tuple[int, int],
    d: Direction,
    errors: TemplateErrors,
    cfg: PipelineConfig,
) -> int:
    """Binary weight of (light, pixel, direction).

    Zero when the window is effectively fully shadowed or when d is
    inconsistent with the light (<d, s> < omega_cos_min). When s is
    degenerate there is no directional constraint and every d passes.
    """
    if bool(_shadow_excluded(errors.e_shadow, cfg)):
        return 0
    s = expected_shadow_direction(light, (float(p[0]), float(p[1])))
    if s is None:
        return 1
    ux, uy = d.unit
    return 1 if (ux * s[0] + uy * s[1]) >= cfg.omega_cos_min else 0


def edge_score(
    errors: list[TemplateErrors] | tuple[TemplateErrors, ...],
    weights: np.ndarray,
    beta: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Combine per-light template errors into per-direction scores.

    ``weights`` has shape (n_lights, 8) with values in {0, 1}. Returns
    (scores[8], valid[8]): score_d is the weighted mean over lights of
    sigmoid((e_lit - e_dir[d]) / beta); directions whose weights all
    vanish score 0 and are flagged invalid.
    """
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    w = np.asarray(weights, dtype=np.float64)
    e_lit = np.array([e.e_lit for e in errors], dtype=np.float64)[:, None]
    e_dir = np.array([e.e_dir for e in errors], dtype=np.float64)
    terms = sigmoid((e_lit - e_dir) / beta)
    den = w.sum(axis=0)
    num = (w * terms).sum(axis=0)
    valid = den > 0
    scores = np.where(valid, num / np.where(valid, den, 1.0), 0.0)
    return scores, valid


@dataclass(frozen=True)
class EdgeField:
    """Per-pixel edge strength, direction index, and validity."""

    strength: np.ndarray  # (H, W) float64 in [0, 1]
    direction: np.ndarray  # (H, W) int8, Direction.index; meaningful where valid
    valid: np.ndarray  # (H, W) bool

    @property
    def shape(self) -> tuple[int, int]:
        return self.strength.shape  # type: ignore[return-value]


def _direction_consistency(light: Light, d: Direction, shape: tuple[int, int], cfg: PipelineConfig):
    """Consistency of d with the light: scalar bool or per-pixel bool grid."""
    ux, uy = d.unit
    if light.kind == "directional":
        s = expected_shadow_direction(light, (0.0, 0.0))
        if s is None:
            return True
        return (ux * s[0] + uy * s[1]) >= cfg.omega_cos_min
    # Point light: s varies with the pixel. Degenerate pixels (at the
    # epipole) carry no constraint and pass for every direction.
    h, w = shape
    ex, ey = light.epipole  # type: ignore[misc]
    xs = np.arange(w, dtype=np.float64)[None, :] - ex
    ys = np.arange(h, dtype=np.float64)[:, None] - ey
    vx = np.broadcast_to(xs, shape)
    vy = np.broadcast_to(ys, shape)
    norm = np.hypot(vx, vy)
    degenerate = norm < _DEGENERATE_NORM
    dot = ux * vx + uy * vy
    return degenerate | (dot >= cfg.omega_cos_min * np.where(degenerate, 1.0, norm))


def edge_field(stack: ShadowStack, lights: LightSet, cfg: PipelineConfig) -> EdgeField:
    """Compute edge strength g and direction theta for every pixel.

    theta is the argmax over the eight directions of the combined score
    (ties break by the fixed direction order); pixels where every
    direction lost all weights are invalid. Lights are accumulated in
    sorted-id order, so a consistent permutation of masks and lights
    yields an identical field.
    """
    if len(stack) != len(lights):
        raise ValueError(f"{len(stack)} masks vs {len(lights)} lights")
    if stack.light_ids != lights.ids:
        raise ValueError("stack and light set disagree on ids")
    bank = build_templates()
    shape = (stack.height, stack.width)
    num = np.zeros((len(DIRECTIONS),) + shape)
    den = np.zeros((len(DIRECTIONS),) + shape)

    order = sorted(range(len(lights)), key=lambda i: lights[i].light_id)
    for li in order:
        e_shadow, e_lit, e_dir = template_error_maps(stack.masks[li], bank)
        included = ~_shadow_excluded(e_shadow, cfg)
        for d in DIRECTIONS:
            w = np.logical_and(included, _direction_consistency(lights[li], d, shape, cfg))
            w = w.astype(np.float64)
            num[d.index] += w * sigmoid((e_lit - e_dir[d.index]) / cfg.beta)
            den[d.index] += w

    has_weight = den > 0
    scores = np.where(has_weight, num / np.where(has_weight, den, 1.0), 0.0)
    strength = scores.max(axis=0)
    direction = scores.argmax(axis=0).astype(np.int8)
    valid = has_weight.any(axis=0)
    return EdgeField(strength=strength, direction=direction, valid=valid)


def strength_to_u8(field: EdgeField) -> np.ndarray:
    """Debug view: g * 255 rounded to 8 bits."""
    return np.rint(field.strength * 255.0).astype(np.uint8)
