"""Request and response schemas of the measurement service."""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..config import PipelineConfig


class HealthResponse(BaseModel):
    status: str
    version: str


class BoundaryModel(BaseModel):
    d_left: int
    d_center: int
    d_right: int
    refined_left: float
    refined_right: float


class FrameMeasurementModel(BaseModel):
    boundaries: BoundaryModel
    start_column: int
    onsd_px: float
    onsd_mm: float | None
    units: str
    low_confidence_left: bool
    low_confidence_right: bool
    gmm_iterations: int
    gmm_log_likelihood: float


class FrameScoreModel(BaseModel):
    frame_index: int
    dice: float


class KeyframesModel(BaseModel):
    indices: list[int]
    shortfall: bool


class MeasurementReportModel(BaseModel):
    video_id: str
    n_frames: int
    optimal_frame: int
    optimal_dice: float
    frame_scores: list[FrameScoreModel]
    roi_boxes: list[list[int]]
    entropy_bits: list[float]
    keyframes: KeyframesModel
    measurement: FrameMeasurementModel
    config: dict


class MeasureRequest(BaseModel):
    """Measure a frame directory on the service host's filesystem."""

    input_dir: str
    video_id: str | None = None
    config_path: str | None = None
    config_overrides: dict = Field(default_factory=dict)
    seed_box: list[int] | None = Field(default=None, min_length=4, max_length=4)
    dump_signals: bool = False
    output_dir: str | None = None


class PhantomSpecModel(BaseModel):
    width: int = 320
    height: int = 96
    true_sheath_width: int = 50
    sheath_center_column: float = 160.0
    fat_mean: float = 180.0
    fat_sigma: float = 4.0
    sheath_mean: float = 40.0
    sheath_sigma: float = 4.0
    speckle_sigma: float = 10.0
    drift_per_frame: float = 0.0
    clean_frame_index: int = 0
    mm_per_pixel: float | None = None
    frame_rate: float | None = None


class PhantomRequest(BaseModel):
    spec: PhantomSpecModel = Field(default_factory=PhantomSpecModel)
    n_frames: int = 20
    seed: int = 0
    output_dir: str


class PhantomResponse(BaseModel):
    output_dir: str
    n_frames: int
    truth_path: str
    config_path: str
    seed_box: list[int]


class EvaluateRequest(BaseModel):
    """Compare two aligned measurement series (candidate vs reference)."""

    ids: list[str]
    candidate: list[float]
    reference: list[float]


class AgreementReportModel(BaseModel):
    n_pairs: int
    mean_error: float
    mse: float
    mse_conventional: float
    icc: float
    icc_ci_low: float
    icc_ci_high: float
    icc_degenerate: bool
    bland_altman_bias: float
    bland_altman_loa_low: float
    bland_altman_loa_high: float
    cohens_d: float


def config_from_request(
    config_path: str | None, overrides: dict
) -> PipelineConfig:
    config = PipelineConfig.load(config_path) if config_path else PipelineConfig()
    if overrides:
        config = config.with_overrides(**overrides)
    return config
