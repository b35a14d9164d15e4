"""Frame containers, binary-PGM ingestion and the echogenicity template.

Frames are single-channel 8-bit images with optional physical calibration
(mm per pixel). Sequences are stored on disk as zero-padded ``NNNN.pgm``
files next to a ``meta.txt`` sidecar holding ``mm_per_pixel`` and
``frame_rate``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IngestionError

MIN_WIDTH = 6
MIN_HEIGHT = 3

TEMPLATE_ROWS = 3
TEMPLATE_COLS = 6
# Bright cells of the 3x6 echogenicity template, row-major from the top-left.
# Cells 0-3 and 5 cover the superior fat band, 6 and 8 the left flank.
TEMPLATE_WHITE_CELLS = frozenset({0, 1, 2, 3, 5, 6, 8})

META_FILENAME = "meta.txt"


@dataclass(frozen=True)
class GrayFrame:
    """A single-channel 8-bit image plus optional mm-per-pixel calibration."""

    pixels: np.ndarray
    mm_per_pixel: float | None = None

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValueError(f"pixels must be a 2-D array, got ndim={px.ndim}")
        if px.dtype != np.uint8:
            if np.any((px < 0) | (px > 255)):
                raise ValueError("pixel intensities must lie in [0, 255]")
            px = px.astype(np.uint8)
        if px.shape[1] < MIN_WIDTH or px.shape[0] < MIN_HEIGHT:
            raise ValueError(
                f"frame must be at least {MIN_WIDTH}x{MIN_HEIGHT}, got "
                f"{px.shape[1]}x{px.shape[0]}"
            )
        if self.mm_per_pixel is not None and not self.mm_per_pixel > 0:
            raise ValueError("mm_per_pixel must be strictly positive")
        px = px.copy()
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class VideoSequence:
    """An ordered run of frames sharing dimensions and calibration."""

    frames: tuple[GrayFrame, ...]
    frame_rate: float | None = None

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise ValueError("a sequence needs at least one frame")
        first = frames[0]
        for i, f in enumerate(frames):
            if (f.width, f.height) != (first.width, first.height):
                raise ValueError(
                    f"frame {i} is {f.width}x{f.height}, expected "
                    f"{first.width}x{first.height}"
                )
            if f.mm_per_pixel != first.mm_per_pixel:
                raise ValueError(f"frame {i} has a different mm_per_pixel")
        if self.frame_rate is not None and not self.frame_rate > 0:
            raise ValueError("frame_rate must be strictly positive")
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height

    @property
    def mm_per_pixel(self) -> float | None:
        return self.frames[0].mm_per_pixel


@dataclass(frozen=True)
class BinaryMask:
    """A {0, 255} image, used for templates, predictions and foregrounds."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2:
            raise ValueError("mask must be 2-D")
        if not np.isin(bits, (0, 255)).all():
            raise ValueError("mask values must be 0 or 255")
        bits = bits.astype(np.uint8)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def white_count(self) -> int:
        return int(np.count_nonzero(self.bits))


def make_template(width: int, height: int) -> BinaryMask:
    """Build the 3x6 bright/dark reference layout at the given size.

    The frame area is cut into 18 grid cells by floor division, with the
    last row and column of cells absorbing any remainder. Cells listed in
    ``TEMPLATE_WHITE_CELLS`` are set to 255, the rest to 0.
    """
    if width < MIN_WIDTH or height < MIN_HEIGHT:
        raise ValueError(
            f"template needs width >= {MIN_WIDTH} and height >= {MIN_HEIGHT}, "
            f"got {width}x{height}"
        )
    cell_w = width // TEMPLATE_COLS
    cell_h = height // TEMPLATE_ROWS
    bits = np.zeros((height, width), dtype=np.uint8)
    for cell in TEMPLATE_WHITE_CELLS:
        row, col = divmod(cell, TEMPLATE_COLS)
        y0 = row * cell_h
        y1 = (row + 1) * cell_h if row < TEMPLATE_ROWS - 1 else height
        x0 = col * cell_w
        x1 = (col + 1) * cell_w if col < TEMPLATE_COLS - 1 else width
        bits[y0:y1, x0:x1] = 255
    return BinaryMask(bits)


def save_frame_pgm(frame: GrayFrame, path: Path | str) -> None:
    """Write a frame as a binary (P5) portable graymap, maxval 255."""
    path = Path(path)
    header = f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii")
    path.write_bytes(header + frame.pixels.tobytes())


def load_frame_pgm(path: Path | str, mm_per_pixel: float | None = None) -> GrayFrame:
    """Read a binary (P5) portable graymap with maxval 255."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IngestionError(f"cannot read frame file {path}: {exc}") from exc
    m = re.match(rb"P5\s+(?:#[^\n]*\n\s*)?(\d+)\s+(\d+)\s+(\d+)\s", raw)
    if not m:
        raise IngestionError(f"{path} is not a binary portable graymap")
    width, height, maxval = (int(g) for g in m.groups())
    if maxval != 255:
        raise IngestionError(f"{path}: expected maxval 255, got {maxval}")
    data = raw[m.end():]
    if len(data) < width * height:
        raise IngestionError(f"{path}: truncated pixel data")
    pixels = np.frombuffer(data[: width * height], dtype=np.uint8).reshape(height, width)
    try:
        return GrayFrame(pixels, mm_per_pixel=mm_per_pixel)
    except ValueError as exc:
        raise IngestionError(f"{path}: {exc}") from exc


def _parse_meta(path: Path) -> dict[str, float]:
    values: dict[str, float] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise IngestionError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        try:
            values[key.strip()] = float(value)
        except ValueError as exc:
            raise IngestionError(f"{path}:{lineno}: bad number {value!r}") from exc
    return values


def load_sequence(directory: Path | str) -> VideoSequence:
    """Load every ``*.pgm`` in ``directory``, ordered by numeric filename.

    A ``meta.txt`` sidecar supplies ``mm_per_pixel`` and ``frame_rate``;
    without it the sequence loads uncalibrated and measurements are
    reported in pixels only.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise IngestionError(f"{directory} is not a directory")
    paths = sorted(directory.glob("*.pgm"), key=lambda p: p.stem)
    if not paths:
        raise IngestionError(f"no .pgm frames found in {directory}")

    mm_per_pixel = None
    frame_rate = None
    meta_path = directory / META_FILENAME
    if meta_path.exists():
        meta = _parse_meta(meta_path)
        mm_per_pixel = meta.get("mm_per_pixel")
        frame_rate = meta.get("frame_rate")

    frames = []
    for i, p in enumerate(paths):
        frame = load_frame_pgm(p, mm_per_pixel=mm_per_pixel)
        if frames and (frame.width, frame.height) != (frames[0].width, frames[0].height):
            raise IngestionError(
                f"frame {i} ({p.name}) is {frame.width}x{frame.height}, expected "
                f"{frames[0].width}x{frames[0].height}"
            )
        frames.append(frame)
    return VideoSequence(tuple(frames), frame_rate=frame_rate)


def save_sequence(seq: VideoSequence, directory: Path | str) -> list[Path]:
    """Write frames as zero-padded PGMs plus the metadata sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    digits = max(4, len(str(len(seq) - 1)))
    paths = []
    for i, frame in enumerate(seq.frames):
        p = directory / f"{i:0{digits}d}.pgm"
        save_frame_pgm(frame, p)
        paths.append(p)
    lines = []
    if seq.mm_per_pixel is not None:
        lines.append(f"mm_per_pixel={seq.mm_per_pixel!r}")
    if seq.frame_rate is not None:
        lines.append(f"frame_rate={seq.frame_rate!r}")
    if lines:
        (directory / META_FILENAME).write_text("\n".join(lines) + "\n")
    return paths
