"""Synthetic sheath phantoms with exact per-frame ground truth.

Each frame mimics the transverse sonographic appearance downstream code
expects: a bright fat band across the top third, a dark vertical sheath
band, and bright fat flanks on either side of it. The flank brightness is
tent-shaped with its apex half a sheath-width outside the edge, and the
top band carries a shallow brightness dip centred on the sheath, so the
column-sum signal has a strict interior trough at the sheath centre
flanked by two clean peaks.

Columns go dark only when fully inside the band, so the painted edges sit
on half-integer column interfaces; the truth record stores those painted
interfaces (floats) alongside the continuous centre.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .frames import GrayFrame, VideoSequence

# Lateral profile constants (fractions of the fat/sheath contrast).
FLANK_EDGE_LEVEL = 0.55   # fat fraction right at the sheath edge
BAND_DIP_AMPLITUDE = 0.2  # brightness dip of the top band over the sheath


@dataclass(frozen=True)
class PhantomSpec:
    """Geometry and intensity parameters of a synthetic sheath video."""

    width: int
    height: int
    true_sheath_width: int
    sheath_center_column: float
    fat_mean: float = 180.0
    fat_sigma: float = 4.0
    sheath_mean: float = 40.0
    sheath_sigma: float = 4.0
    speckle_sigma: float = 10.0
    drift_per_frame: float = 0.0
    clean_frame_index: int = 0
    mm_per_pixel: float | None = None
    frame_rate: float | None = None

    def __post_init__(self):
        if self.width < 6 or self.height < 3:
            raise ValueError("frame size too small")
        if not 0 < self.true_sheath_width < self.width:
            raise ValueError("true_sheath_width must be in (0, width)")
        for name in ("fat_mean", "sheath_mean"):
            v = getattr(self, name)
            if not 0 <= v <= 255:
                raise ValueError(f"{name} must lie in [0, 255]")
        if not self.fat_mean > self.sheath_mean:
            raise ValueError("fat_mean must exceed sheath_mean (hyperechoic fat)")
        for name in ("fat_sigma", "sheath_sigma", "speckle_sigma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.clean_frame_index < 0:
            raise ValueError("clean_frame_index must be non-negative")
        if self.mm_per_pixel is not None and not self.mm_per_pixel > 0:
            raise ValueError("mm_per_pixel must be strictly positive")


@dataclass(frozen=True)
class FrameTruth:
    """Sub-pixel sheath geometry of one frame."""

    center: float
    left_edge: float
    right_edge: float


@dataclass(frozen=True)
class PhantomTruth:
    """Ground truth for a generated phantom video."""

    true_sheath_width: int
    clean_frame_index: int
    mm_per_pixel: float | None
    seed_box: tuple[int, int, int, int]
    frames: tuple[FrameTruth, ...]

    def to_json(self) -> str:
        doc = {
            "true_sheath_width": self.true_sheath_width,
            "clean_frame_index": self.clean_frame_index,
            "mm_per_pixel": self.mm_per_pixel,
            "seed_box": list(self.seed_box),
            "frames": [
                {"center": f.center, "left_edge": f.left_edge, "right_edge": f.right_edge}
                for f in self.frames
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PhantomTruth":
        doc = json.loads(text)
        return cls(
            true_sheath_width=doc["true_sheath_width"],
            clean_frame_index=doc["clean_frame_index"],
            mm_per_pixel=doc["mm_per_pixel"],
            seed_box=tuple(doc["seed_box"]),
            frames=tuple(
                FrameTruth(f["center"], f["left_edge"], f["right_edge"])
                for f in doc["frames"]
            ),
        )


def save_truth(truth: PhantomTruth, path: Path | str) -> None:
    Path(path).write_text(truth.to_json() + "\n")


def load_truth(path: Path | str) -> PhantomTruth:
    return PhantomTruth.from_json(Path(path).read_text())


def band_height(spec: PhantomSpec) -> int:
    """Rows occupied by the superior fat band (top third of the frame)."""
    return spec.height // 3


def _fat_fraction(spec: PhantomSpec, center: float) -> np.ndarray:
    """Per-column fat fraction below the band, with sub-pixel edge coverage.

    Columns are treated as unit intervals centred on integer coordinates.
    Inside the sheath band the fraction is 0; in each flank it is a tent
    rising from ``FLANK_EDGE_LEVEL`` at the edge to 1 at half a
    sheath-width out, then falling back to ``FLANK_EDGE_LEVEL`` one
    sheath-width out, beyond which it drops to 0 (background).
    """
    w = spec.true_sheath_width
    ledge = center - w / 2.0
    redge = center + w / 2.0
    x = np.arange(spec.width, dtype=float)

    # Outward distance from the nearest sheath edge; negative inside.
    t = np.where(x < center, ledge - x, x - redge)

    half = w / 2.0
    slope = (1.0 - FLANK_EDGE_LEVEL) / half
    tc = np.maximum(t, 0.0)
    tent = np.where(
        tc <= half,
        FLANK_EDGE_LEVEL + slope * tc,
        1.0 - slope * (tc - half),
    )
    flank = np.where(t <= w, tent, 0.0)

    # A column goes dark only when its full unit extent lies inside the
    # band; the painted edges therefore sit on half-integer interfaces,
    # which the truth record reports.
    dark = (x - 0.5 >= ledge - 1e-9) & (x + 0.5 <= redge + 1e-9)
    return np.where(dark, 0.0, flank)


def flank_depth(spec: PhantomSpec) -> int:
    """Rows below the band occupied by the flank fat pads (middle third)."""
    return spec.height // 3


def _clean_frame_pixels(spec: PhantomSpec, center: float) -> np.ndarray:
    """Noise-free intensity field for a given sheath centre.

    Top third: fat band with a brightness dip over the sheath. Middle
    third: fat pads flanking the dark sheath band. Bottom third: dark
    background, so the bright area stays near the reference template's
    white fraction.
    """
    bh = band_height(spec)
    fd = flank_depth(spec)
    w = spec.true_sheath_width
    x = np.arange(spec.width, dtype=float)

    dip = np.maximum(0.0, 1.0 - np.abs(x - center) / w)
    band_row = spec.fat_mean * (1.0 - BAND_DIP_AMPLITUDE * dip)

    phi = _fat_fraction(spec, center)
    pad_row = spec.sheath_mean + phi * (spec.fat_mean - spec.sheath_mean)

    img = np.empty((spec.height, spec.width), dtype=float)
    img[:bh, :] = band_row[np.newaxis, :]
    img[bh : bh + fd, :] = pad_row[np.newaxis, :]
    img[bh + fd :, :] = spec.sheath_mean
    return img


def fat_region_mask(spec: PhantomSpec, center: float) -> np.ndarray:
    """Boolean mask of strongly fatty pixels (band plus flank cores)."""
    bh = band_height(spec)
    fd = flank_depth(spec)
    phi = _fat_fraction(spec, center)
    mask = np.zeros((spec.height, spec.width), dtype=bool)
    mask[:bh, :] = True
    mask[bh : bh + fd, :] = (phi >= 0.75)[np.newaxis, :]
    return mask


def painted_edges(spec: PhantomSpec, center: float) -> tuple[float, float]:
    """Interfaces actually drawn for a nominal centre (half-integer grid)."""
    w = spec.true_sheath_width
    ledge, redge = center - w / 2.0, center + w / 2.0
    first_dark = np.ceil(ledge + 0.5 - 1e-9)
    last_dark = np.floor(redge - 0.5 + 1e-9)
    if last_dark < first_dark:
        raise ValueError("sheath too narrow to paint")
    return float(first_dark - 0.5), float(last_dark + 0.5)


def _structure_extent(spec: PhantomSpec, center: float) -> tuple[float, float]:
    w = spec.true_sheath_width
    return center - 1.5 * w, center + 1.5 * w


def _apply_shadows(
    img: np.ndarray, spec: PhantomSpec, center: float, rng: np.random.Generator
) -> np.ndarray:
    """Acoustic shadow streaks degrading a non-clean frame.

    Vertical attenuation bands over the structure, count and strength
    growing with the configured speckle level; this is what makes the
    clean frame score best, since additive noise alone barely perturbs
    region-level intensity sums.
    """
    w = spec.true_sheath_width
    n_streaks = 1 + int(spec.speckle_sigma / 5.0)
    out = img.copy()
    for _ in range(n_streaks):
        # Over the regions the quality template watches (superior band and
        # left flank), so attenuation always costs template-matching area.
        streak_c = center + rng.uniform(-3.5 * w, 0.5 * w)
        streak_w = rng.uniform(0.15, 0.45) * w
        transmission = rng.uniform(0.2, 0.55)
        x0 = max(0, int(streak_c - streak_w / 2))
        x1 = min(spec.width, int(streak_c + streak_w / 2) + 1)
        out[:, x0:x1] = out[:, x0:x1] * transmission
    return out


def generate_phantom(
    spec: PhantomSpec, n_frames: int, seed: int
) -> tuple[VideoSequence, PhantomTruth]:
    """Generate a seeded phantom video and its exact ground truth.

    The sheath centre drifts by ``spec.drift_per_frame`` columns per
    frame. All randomness comes from a single generator seeded with
    ``seed``, so output is a pure function of ``(spec, n_frames, seed)``.
    The designated clean frame receives no speckle noise.
    """
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    if spec.clean_frame_index >= n_frames:
        raise ValueError("clean_frame_index is beyond the last frame")

    rng = np.random.default_rng(seed)
    bh = band_height(spec)
    frames = []
    truths = []
    for f in range(n_frames):
        center = spec.sheath_center_column + spec.drift_per_frame * f
        lo, hi = _structure_extent(spec, center)
        if lo < 0 or hi > spec.width - 1:
            raise ValueError(
                f"sheath structure leaves the frame at frame {f} "
                f"(extent [{lo:.1f}, {hi:.1f}] vs width {spec.width})"
            )
        img = _clean_frame_pixels(spec, center)

        if f != spec.clean_frame_index and spec.speckle_sigma > 0:
            img = _apply_shadows(img, spec, center, rng)

        tissue_sigma = np.full_like(img, spec.sheath_sigma)
        tissue_sigma[fat_region_mask(spec, center)] = spec.fat_sigma
        noise = rng.standard_normal(img.shape) * tissue_sigma
        if f != spec.clean_frame_index:
            noise += rng.standard_normal(img.shape) * spec.speckle_sigma
        img = np.clip(np.rint(img + noise), 0, 255).astype(np.uint8)

        frames.append(GrayFrame(img, mm_per_pixel=spec.mm_per_pixel))
        ledge, redge = painted_edges(spec, center)
        truths.append(FrameTruth(center, ledge, redge))

    # Template-aligned framing: with the box six sheath-widths wide and
    # the sheath centred on its fourth column of cells, the dark band and
    # the left flank land on the template's dark/white cells.
    c0 = truths[0].center
    w0 = spec.true_sheath_width
    x0 = max(0, int(np.floor(c0 - 3.5 * w0)))
    x1 = min(spec.width - 1, int(np.ceil(c0 + 2.5 * w0)))
    seed_box = (x0, 0, x1 - x0 + 1, spec.height)

    truth = PhantomTruth(
        true_sheath_width=spec.true_sheath_width,
        clean_frame_index=spec.clean_frame_index,
        mm_per_pixel=spec.mm_per_pixel,
        seed_box=seed_box,
        frames=tuple(truths),
    )
    return VideoSequence(tuple(frames), frame_rate=spec.frame_rate), truth


SPEC_FIELDS = (
    "width", "height", "true_sheath_width", "sheath_center_column",
    "fat_mean", "fat_sigma", "sheath_mean", "sheath_sigma",
    "speckle_sigma", "drift_per_frame", "clean_frame_index",
    "mm_per_pixel", "frame_rate",
)

_INT_FIELDS = {"width", "height", "true_sheath_width", "clean_frame_index"}
_OPTIONAL_FIELDS = {"mm_per_pixel", "frame_rate"}


def spec_to_text(spec: PhantomSpec) -> str:
    """Serialize a spec as key=value lines in canonical field order."""
    lines = []
    for name in SPEC_FIELDS:
        value = getattr(spec, name)
        if value is None:
            continue
        lines.append(f"{name}={value!r}")
    return "\n".join(lines) + "\n"


def spec_from_text(text: str) -> PhantomSpec:
    values: dict[str, float] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in SPEC_FIELDS:
            raise ValueError(f"line {lineno}: unknown phantom field {key!r}")
        try:
            values[key] = float(raw)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad number {raw!r}") from exc
    missing = [
        n for n in SPEC_FIELDS if n not in values and n not in _OPTIONAL_FIELDS
    ]
    if missing:
        raise ValueError(f"missing phantom fields: {', '.join(missing)}")
    kwargs = {
        k: (int(v) if k in _INT_FIELDS else v) for k, v in values.items()
    }
    return PhantomSpec(**kwargs)
