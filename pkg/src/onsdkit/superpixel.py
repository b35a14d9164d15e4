"""SLIC superpixels, label realignment, top-K masks and frame scoring.

The segmentation is a grayscale SLIC: local k-means over (intensity, x, y)
with seeds on a regular grid and a 2S x 2S search window per center,
followed by a connectivity pass that merges stray components into their
largest labelled neighbour. Everything is deterministic for fixed inputs;
ties always resolve toward the lower id or index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import StageError
from .frames import BinaryMask, GrayFrame, VideoSequence, make_template
from .tracking import RoiBox

CONVERGENCE_SHIFT = 0.5  # stop when no center moves at least this many pixels


@dataclass(frozen=True)
class SuperpixelLabeling:
    """Per-pixel cluster ids plus (after realignment) per-cluster sums."""

    labels: np.ndarray
    cluster_count: int
    cluster_intensity: np.ndarray | None = None

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2:
            raise ValueError("labels must be 2-D")
        if labels.min() < 0 or labels.max() >= self.cluster_count:
            raise ValueError("labels must lie in [0, cluster_count)")
        object.__setattr__(self, "labels", labels.astype(np.int32))
        if self.cluster_intensity is not None:
            ci = np.asarray(self.cluster_intensity, dtype=np.int64)
            if ci.shape != (self.cluster_count,):
                raise ValueError("cluster_intensity must have one entry per cluster")
            object.__setattr__(self, "cluster_intensity", ci)


@dataclass(frozen=True)
class FrameScore:
    frame_index: int
    dice: float

    def __post_init__(self):
        if not 0.0 <= self.dice <= 1.0:
            raise ValueError("dice must lie in [0, 1]")


def _seed_grid(width: int, height: int, target_clusters: int) -> np.ndarray:
    """Regular seed grid of roughly ``target_clusters`` (cy, cx) centers."""
    step = np.sqrt(width * height / target_clusters)
    nx = max(1, round(width / step))
    ny = max(1, round(height / step))
    # Pixel-centre convention: a row of n pixels spans centres 0..n-1.
    xs = (np.arange(nx) + 0.5) * width / nx - 0.5
    ys = (np.arange(ny) + 0.5) * height / ny - 0.5
    cy, cx = np.meshgrid(ys, xs, indexing="ij")
    return np.column_stack([cy.ravel(), cx.ravel()])


def _enforce_connectivity(labels: np.ndarray, cluster_count: int) -> np.ndarray:
    """Make each label a single 4-connected component.

    The largest component of each label keeps it; every other component
    is merged into the adjacent already-resolved label with the largest
    area (ties to the lower label id). Merging proceeds in passes so
    that orphans surrounded only by other orphans resolve once their
    neighbours have.
    """
    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    resolved = np.full(labels.shape, -1, dtype=np.int32)
    areas = np.zeros(cluster_count, dtype=np.int64)
    orphan_comp = np.zeros(labels.shape, dtype=np.int32)  # 0 = not an orphan
    orphan_sizes = [0]  # 1-based global orphan component ids

    bboxes = ndimage.find_objects(labels + 1)
    for c in range(cluster_count):
        box = bboxes[c] if c < len(bboxes) else None
        if box is None:
            continue
        mask = labels[box] == c
        comp, n_comp = ndimage.label(mask, structure=structure)
        sizes = np.bincount(comp.ravel())
        keep = int(np.argmax(sizes[1:])) + 1  # first max wins: deterministic
        region = resolved[box]
        region[comp == keep] = c
        areas[c] = sizes[keep]
        if n_comp > 1:
            remap = np.zeros(n_comp + 1, dtype=np.int32)
            for k in range(1, n_comp + 1):
                if k != keep:
                    remap[k] = len(orphan_sizes)
                    orphan_sizes.append(int(sizes[k]))
            target = orphan_comp[box]
            sel = remap[comp] > 0
            target[sel] = remap[comp][sel]

    orphan_sizes_arr = np.asarray(orphan_sizes, dtype=np.int64)
    while orphan_comp.any():
        # Adjacent (orphan component, resolved label) pairs in 4 directions.
        cids, nbrs = [], []
        for src, dst in (
            (np.s_[1:, :], np.s_[:-1, :]),
            (np.s_[:-1, :], np.s_[1:, :]),
            (np.s_[:, 1:], np.s_[:, :-1]),
            (np.s_[:, :-1], np.s_[:, 1:]),
        ):
            sel = (orphan_comp[src] > 0) & (resolved[dst] >= 0)
            cids.append(orphan_comp[src][sel])
            nbrs.append(resolved[dst][sel])
        cids = np.concatenate(cids)
        nbrs = np.concatenate(nbrs)
        if cids.size == 0:
            raise RuntimeError("connectivity enforcement stalled")
        # Per component: the neighbour label with the largest area, ties
        # toward the lower id (stable lexsort, first row per component).
        order = np.lexsort((nbrs, -areas[nbrs], cids))
        uniq, first = np.unique(cids[order], return_index=True)
        chosen = nbrs[order][first]
        lut = np.full(orphan_sizes_arr.size, -1, dtype=np.int32)
        lut[uniq] = chosen
        sel = (orphan_comp > 0) & (lut[orphan_comp] >= 0)
        resolved[sel] = lut[orphan_comp[sel]]
        np.add.at(areas, chosen, orphan_sizes_arr[uniq])
        orphan_comp[sel] = 0
    return resolved


def _compact_labels(labels: np.ndarray) -> tuple[np.ndarray, int]:
    """Relabel to a dense 0..K-1 range preserving id order."""
    present = np.unique(labels)
    remap = np.full(int(present.max()) + 1, -1, dtype=np.int32)
    remap[present] = np.arange(present.size, dtype=np.int32)
    return remap[labels], int(present.size)


def slic_segment(
    frame: GrayFrame,
    target_clusters: int = 100,
    compactness: float = 10.0,
    max_iters: int = 10,
) -> SuperpixelLabeling:
    """Segment a frame into roughly ``target_clusters`` superpixels."""
    height, width = frame.height, frame.width
    n_pixels = width * height
    if not 1 <= target_clusters <= n_pixels:
        raise ValueError(
            f"target_clusters must lie in [1, {n_pixels}], got {target_clusters}"
        )
    if compactness <= 0:
        raise ValueError("compactness must be positive")
    if target_clusters == 1:
        return SuperpixelLabeling(np.zeros((height, width), dtype=np.int32), 1)

    intensity = frame.pixels.astype(float)
    centers = _seed_grid(width, height, target_clusters)
    k = centers.shape[0]
    step = np.sqrt(n_pixels / target_clusters)
    center_intensity = np.array(
        [
            intensity[min(height - 1, int(cy)), min(width - 1, int(cx))]
            for cy, cx in centers
        ]
    )
    spatial_weight = (compactness / step) ** 2

    ys = np.arange(height, dtype=float)
    xs = np.arange(width, dtype=float)
    labels = np.zeros((height, width), dtype=np.int32)

    for _ in range(max_iters):
        best = np.full((height, width), np.inf)
        labels.fill(-1)
        for c in range(k):
            cy, cx = centers[c]
            y0, y1 = max(0, int(cy - step)), min(height, int(np.ceil(cy + step)) + 1)
            x0, x1 = max(0, int(cx - step)), min(width, int(np.ceil(cx + step)) + 1)
            win = intensity[y0:y1, x0:x1]
            dy = ys[y0:y1][:, np.newaxis] - cy
            dx = xs[x0:x1][np.newaxis, :] - cx
            dist = (win - center_intensity[c]) ** 2 + spatial_weight * (dy**2 + dx**2)
            closer = dist < best[y0:y1, x0:x1]
            best[y0:y1, x0:x1][closer] = dist[closer]
            labels[y0:y1, x0:x1][closer] = c

        stray = labels < 0
        if stray.any():
            # Pixels outside every search window: assign by full distance.
            sy, sx = np.nonzero(stray)
            d_int = intensity[sy, sx][:, np.newaxis] - center_intensity[np.newaxis, :]
            d_sp = (sy[:, np.newaxis] - centers[:, 0]) ** 2 + (
                sx[:, np.newaxis] - centers[:, 1]
            ) ** 2
            labels[sy, sx] = np.argmin(d_int**2 + spatial_weight * d_sp, axis=1)

        flat = labels.ravel()
        counts = np.bincount(flat, minlength=k).astype(float)
        sum_y = np.bincount(flat, weights=np.repeat(ys, width), minlength=k)
        sum_x = np.bincount(flat, weights=np.tile(xs, height), minlength=k)
        sum_i = np.bincount(flat, weights=intensity.ravel(), minlength=k)
        occupied = counts > 0
        new_centers = centers.copy()
        new_centers[occupied, 0] = sum_y[occupied] / counts[occupied]
        new_centers[occupied, 1] = sum_x[occupied] / counts[occupied]
        center_intensity[occupied] = sum_i[occupied] / counts[occupied]
        shift = np.abs(new_centers - centers).max()
        centers = new_centers
        if shift < CONVERGENCE_SHIFT:
            break

    labels = _enforce_connectivity(labels, k)
    labels, count = _compact_labels(labels)
    return SuperpixelLabeling(labels, count)


def realign_labels(frame: GrayFrame, labeling: SuperpixelLabeling) -> SuperpixelLabeling:
    """Fill per-cluster intensity sums (exact integer arithmetic)."""
    if labeling.labels.shape != frame.pixels.shape:
        raise ValueError("labeling does not cover the frame")
    sums = np.bincount(
        labeling.labels.ravel(),
        weights=frame.pixels.ravel().astype(float),
        minlength=labeling.cluster_count,
    ).astype(np.int64)
    return SuperpixelLabeling(labeling.labels, labeling.cluster_count, sums)


def binarize_top_k(labeling: SuperpixelLabeling, k: int) -> BinaryMask:
    """Mask of the k clusters with the largest realigned intensity."""
    if labeling.cluster_intensity is None:
        raise ValueError("labeling has no cluster intensities; realign first")
    if not 1 <= k <= labeling.cluster_count:
        raise ValueError(f"k must lie in [1, {labeling.cluster_count}], got {k}")
    order = np.lexsort(
        (np.arange(labeling.cluster_count), -labeling.cluster_intensity)
    )
    chosen = np.zeros(labeling.cluster_count, dtype=bool)
    chosen[order[:k]] = True
    return BinaryMask(np.where(chosen[labeling.labels], 255, 0).astype(np.uint8))


def dice_score(y: BinaryMask, y_hat: BinaryMask) -> float:
    """Overlap score 2|Y n Y^| / (|Y| + |Y^|) over 255-valued pixels."""
    if (y.width, y.height) != (y_hat.width, y_hat.height):
        raise ValueError("mask dimensions differ")
    a = y.white_count()
    b = y_hat.white_count()
    if a + b == 0:
        raise ValueError("dice score undefined for two empty masks")
    overlap = int(np.count_nonzero((y.bits == 255) & (y_hat.bits == 255)))
    return 2.0 * overlap / (a + b)


@dataclass(frozen=True)
class ScoringParams:
    target_clusters: int = 100
    compactness: float = 10.0
    max_iters: int = 10
    top_k: int = 7


def score_frame(frame: GrayFrame, roi: RoiBox, params: ScoringParams) -> float:
    """Dice score of a frame's ROI against the reference template."""
    crop = GrayFrame(roi.crop(frame.pixels), mm_per_pixel=None)
    clusters = min(params.target_clusters, crop.width * crop.height)
    labeling = slic_segment(crop, clusters, params.compactness, params.max_iters)
    labeling = realign_labels(crop, labeling)
    k = min(params.top_k, labeling.cluster_count)
    prediction = binarize_top_k(labeling, k)
    template = make_template(crop.width, crop.height)
    return dice_score(template, prediction)


def select_optimal_frame(
    seq: VideoSequence, rois, params: ScoringParams
) -> tuple[int, list[FrameScore]]:
    """Score every frame's ROI against the template; argmax wins.

    Ties break toward the lowest frame index. One ROI per frame is
    required; a degenerate (empty-intersection) ROI raises with the
    offending frame named.
    """
    rois = list(rois)
    if len(rois) != len(seq):
        raise ValueError(f"expected {len(seq)} ROIs, got {len(rois)}")
    scores = []
    for i, (frame, roi) in enumerate(zip(seq.frames, rois)):
        try:
            scores.append(FrameScore(i, score_frame(frame, roi, params)))
        except ValueError as exc:
            raise StageError("frame_scoring", str(exc), frame_index=i) from exc
    best = max(scores, key=lambda s: (s.dice, -s.frame_index))
    return best.frame_index, scores
