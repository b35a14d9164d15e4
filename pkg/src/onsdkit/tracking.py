"""Kernelized correlation filter tracking of the sheath ROI.

Raw grayscale features, fixed scale. The filter solves ridge regression
in the Fourier domain against a Gaussian target response; the kernel
correlation is rolled so that a self-match peaks at the patch centre.
Model updates are linear interpolation with rate ``eta``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .frames import GrayFrame


@dataclass(frozen=True)
class RoiBox:
    """Axis-aligned box (top-left x, y and extents w, h) in pixel units."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError("box extents must be positive")

    @property
    def center(self) -> tuple[float, float]:
        return (self.y + self.h / 2.0, self.x + self.w / 2.0)

    def inside(self, width: int, height: int) -> bool:
        return 0 <= self.x and 0 <= self.y and self.x + self.w <= width and self.y + self.h <= height

    def intersects(self, width: int, height: int) -> bool:
        return self.x < width and self.y < height and self.x + self.w > 0 and self.y + self.h > 0

    def clamped(self, width: int, height: int) -> "RoiBox":
        x = min(max(self.x, 0), max(0, width - self.w))
        y = min(max(self.y, 0), max(0, height - self.h))
        return RoiBox(x, y, min(self.w, width), min(self.h, height))

    def crop(self, pixels: np.ndarray) -> np.ndarray:
        return pixels[self.y : self.y + self.h, self.x : self.x + self.w]

    @classmethod
    def parse(cls, text: str) -> "RoiBox":
        parts = text.split(",")
        if len(parts) != 4:
            raise ValueError(f"expected x,y,w,h, got {text!r}")
        return cls(*(int(p) for p in parts))


@dataclass(frozen=True)
class KcfParams:
    regularization: float = 1e-4
    kernel_sigma: float = 0.5
    learning_rate: float = 0.02
    padding: float = 2.5
    target_sigma_divisor: float = 10.0

    def __post_init__(self):
        if self.regularization <= 0:
            raise ValueError("regularization must be positive")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning rate must lie in (0, 1]")
        if self.padding <= 0 or self.kernel_sigma <= 0:
            raise ValueError("padding and kernel sigma must be positive")


@dataclass
class TrackerState:
    """Mutable per-sequence tracker model (single-threaded use)."""

    params: KcfParams
    box_w: int
    box_h: int
    frame_w: int
    frame_h: int
    patch_h: int
    patch_w: int
    pos: tuple[float, float]           # (cy, cx) box centre
    window: np.ndarray = field(repr=False)
    target_fft: np.ndarray = field(repr=False)
    features: np.ndarray = field(repr=False)
    coefficients_fft: np.ndarray = field(repr=False)

    def box(self) -> RoiBox:
        cy, cx = self.pos
        x = int(round(cx - self.box_w / 2.0))
        y = int(round(cy - self.box_h / 2.0))
        return RoiBox(x, y, self.box_w, self.box_h).clamped(self.frame_w, self.frame_h)


def _crop_replicated(pixels: np.ndarray, cy: float, cx: float, ph: int, pw: int) -> np.ndarray:
    """Patch of size (ph, pw) centred at (cy, cx), border-replicated."""
    ys = np.clip(int(np.floor(cy)) - ph // 2 + np.arange(ph), 0, pixels.shape[0] - 1)
    xs = np.clip(int(np.floor(cx)) - pw // 2 + np.arange(pw), 0, pixels.shape[1] - 1)
    return pixels[np.ix_(ys, xs)]


def _features(state: TrackerState, pixels: np.ndarray) -> np.ndarray:
    patch = _crop_replicated(
        pixels, state.pos[0], state.pos[1], state.patch_h, state.patch_w
    ).astype(float) / 255.0
    patch -= patch.mean()
    return patch * state.window


def _gaussian_kernel_corr(
    xf: np.ndarray, x_energy: float, zf: np.ndarray, z_energy: float, sigma: float
) -> np.ndarray:
    """Dense Gaussian kernel between two windowed patches.

    The cross-correlation is centred with fftshift-style rolls so that a
    zero displacement lands at the patch centre index.
    """
    n = xf.size
    cross = np.real(np.fft.ifft2(zf * np.conj(xf)))
    cross = np.roll(np.roll(cross, cross.shape[0] // 2, axis=0), cross.shape[1] // 2, axis=1)
    d = np.maximum(0.0, x_energy + z_energy - 2.0 * cross)
    return np.exp(-d / (sigma**2 * n))


def _solve_coefficients(state: TrackerState, features: np.ndarray) -> np.ndarray:
    xf = np.fft.fft2(features)
    energy = float((features**2).sum())
    k = _gaussian_kernel_corr(xf, energy, xf, energy, state.params.kernel_sigma)
    return state.target_fft / (np.fft.fft2(k) + state.params.regularization)


def kcf_init(frame: GrayFrame, seed: RoiBox, params: KcfParams = KcfParams()) -> TrackerState:
    """Initialize the tracker model on a seed box of the first frame."""
    if not seed.inside(frame.width, frame.height):
        raise ValueError(
            f"seed box {seed} lies outside the {frame.width}x{frame.height} frame"
        )
    # Padding beyond the frame only replicates borders; capping keeps the
    # FFTs small when the box covers most of the frame.
    patch_h = min(max(4, int(np.floor(seed.h * params.padding))), frame.height)
    patch_w = min(max(4, int(np.floor(seed.w * params.padding))), frame.width)

    window = np.outer(np.hanning(patch_h), np.hanning(patch_w))
    output_sigma = np.sqrt(seed.w * seed.h) / params.target_sigma_divisor
    gy = np.arange(patch_h) - patch_h // 2
    gx = np.arange(patch_w) - patch_w // 2
    target = np.exp(
        -0.5 * (gy[:, np.newaxis] ** 2 + gx[np.newaxis, :] ** 2) / output_sigma**2
    )

    state = TrackerState(
        params=params,
        box_w=seed.w,
        box_h=seed.h,
        frame_w=frame.width,
        frame_h=frame.height,
        patch_h=patch_h,
        patch_w=patch_w,
        pos=seed.center,
        window=window,
        target_fft=np.fft.fft2(target),
        features=np.zeros((patch_h, patch_w)),
        coefficients_fft=np.zeros((patch_h, patch_w), dtype=complex),
    )
    features = _features(state, frame.pixels)
    state.features = features
    state.coefficients_fft = _solve_coefficients(state, features)
    return state


def response_map(state: TrackerState, frame: GrayFrame) -> np.ndarray:
    """Correlation response of the current model over the search window."""
    z = _features(state, frame.pixels)
    xf = np.fft.fft2(state.features)
    zf = np.fft.fft2(z)
    k = _gaussian_kernel_corr(
        xf,
        float((state.features**2).sum()),
        zf,
        float((z**2).sum()),
        state.params.kernel_sigma,
    )
    return np.real(np.fft.ifft2(state.coefficients_fft * np.fft.fft2(k)))


def kcf_update(state: TrackerState, frame: GrayFrame) -> tuple[TrackerState, RoiBox]:
    """Advance the tracker by one frame; returns the state and new box."""
    if (frame.width, frame.height) != (state.frame_w, state.frame_h):
        raise ValueError("frame dimensions changed mid-sequence")
    response = response_map(state, frame)
    peak = np.unravel_index(int(np.argmax(response)), response.shape)
    dy = peak[0] - state.patch_h // 2
    dx = peak[1] - state.patch_w // 2

    cy = min(max(state.pos[0] + dy, state.box_h / 2.0), state.frame_h - state.box_h / 2.0)
    cx = min(max(state.pos[1] + dx, state.box_w / 2.0), state.frame_w - state.box_w / 2.0)
    state.pos = (cy, cx)

    new_features = _features(state, frame.pixels)
    new_coefficients = _solve_coefficients(state, new_features)
    eta = state.params.learning_rate
    state.features = (1 - eta) * state.features + eta * new_features
    state.coefficients_fft = (1 - eta) * state.coefficients_fft + eta * new_coefficients
    return state, state.box()


def track_sequence(
    seq, seed: RoiBox, params: KcfParams = KcfParams()
) -> list[RoiBox]:
    """Track the seed box through a whole sequence, one box per frame."""
    state = kcf_init(seq.frames[0], seed, params)
    boxes = [state.box()]
    for frame in seq.frames[1:]:
        state, box = kcf_update(state, frame)
        boxes.append(box)
    return boxes
