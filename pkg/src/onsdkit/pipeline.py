"""End-to-end video measurement: tracking, scoring, measuring, keyframes."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .config import PipelineConfig
from .errors import StageError
from .frames import VideoSequence
from .keyframe import KeyframeResult, extract_keyframes, frame_entropy
from .refinement import FrameMeasurement, MeasureParams, measure_onsd
from .superpixel import FrameScore, ScoringParams, select_optimal_frame
from .tracking import KcfParams, RoiBox, track_sequence


def scoring_params(config: PipelineConfig) -> ScoringParams:
    return ScoringParams(
        target_clusters=config.slic_clusters,
        compactness=config.slic_compactness,
        max_iters=config.slic_iters,
        top_k=config.top_k,
    )


def kcf_params(config: PipelineConfig) -> KcfParams:
    return KcfParams(
        regularization=config.kcf_lambda,
        kernel_sigma=config.kcf_sigma,
        learning_rate=config.kcf_eta,
        padding=config.kcf_padding,
    )


def measure_params(config: PipelineConfig) -> MeasureParams:
    return MeasureParams(
        gmm_components=config.gmm_components,
        gmm_max_iters=config.gmm_iters,
        gmm_tol=config.gmm_tol,
        gmm_seed=config.gmm_seed,
        gmm_stride=config.gmm_stride,
        smooth_window=config.flank_smoothing,
        kl_bins=config.kl_bins,
        kl_epsilon=config.kl_epsilon,
        kl_mode=config.kl_mode,
    )


@dataclass(frozen=True)
class MeasurementReport:
    """Per-video result document; serializes to deterministic JSON."""

    video_id: str
    n_frames: int
    optimal_frame: int
    optimal_dice: float
    frame_scores: tuple[FrameScore, ...]
    roi_boxes: tuple[RoiBox, ...]
    entropy_bits: tuple[float, ...]
    keyframes: KeyframeResult
    measurement: FrameMeasurement
    config: PipelineConfig

    def to_dict(self) -> dict:
        m = self.measurement
        return {
            "video_id": self.video_id,
            "n_frames": self.n_frames,
            "optimal_frame": self.optimal_frame,
            "optimal_dice": self.optimal_dice,
            "frame_scores": [
                {"frame_index": s.frame_index, "dice": s.dice} for s in self.frame_scores
            ],
            "roi_boxes": [[b.x, b.y, b.w, b.h] for b in self.roi_boxes],
            "entropy_bits": list(self.entropy_bits),
            "keyframes": {
                "indices": list(self.keyframes.indices),
                "shortfall": self.keyframes.shortfall,
            },
            "measurement": {
                "boundaries": {
                    "d_left": m.bounds.d_left,
                    "d_center": m.bounds.d_center,
                    "d_right": m.bounds.d_right,
                    "refined_left": m.bounds.refined_left,
                    "refined_right": m.bounds.refined_right,
                },
                "start_column": m.start_column,
                "onsd_px": m.diameter_px,
                "onsd_mm": m.diameter_mm,
                "units": m.units,
                "low_confidence_left": m.low_confidence_left,
                "low_confidence_right": m.low_confidence_right,
                "gmm_iterations": m.gmm_iterations,
                "gmm_log_likelihood": m.gmm_log_likelihood,
            },
            "config": {k: v for k, v in sorted(vars(self.config).items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def measure_video(
    seq: VideoSequence,
    seed_box: RoiBox,
    config: PipelineConfig = PipelineConfig(),
    video_id: str = "video",
    keep_signals: bool = False,
) -> MeasurementReport:
    """Run the full pipeline on one sequence.

    Tracking carries the seed box across frames, every frame's ROI is
    scored against the reference template, the best frame is measured,
    and entropy keyframes are reported alongside.
    """
    if not seed_box.intersects(seq.width, seq.height):
        raise StageError("tracking", f"seed box {seed_box} misses the frame")
    try:
        boxes = track_sequence(seq, seed_box, kcf_params(config))
    except ValueError as exc:
        raise StageError("tracking", str(exc)) from exc

    best, scores = select_optimal_frame(seq, boxes, scoring_params(config))

    entropies = tuple(frame_entropy(f) for f in seq.frames)
    try:
        keyframes = extract_keyframes(
            np.asarray(entropies),
            count=config.keyframe_count,
            min_separation=config.keyframe_separation,
            smoothing_window=config.keyframe_smoothing,
        )
    except ValueError as exc:
        raise StageError("keyframes", str(exc)) from exc

    measurement = measure_onsd(
        seq.frames[best], measure_params(config), keep_signals=keep_signals
    )

    return MeasurementReport(
        video_id=video_id,
        n_frames=len(seq),
        optimal_frame=best,
        optimal_dice=scores[best].dice,
        frame_scores=tuple(scores),
        roi_boxes=tuple(boxes),
        entropy_bits=entropies,
        keyframes=keyframes,
        measurement=measurement,
        config=config,
    )
