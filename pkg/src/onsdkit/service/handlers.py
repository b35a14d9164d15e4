"""Service operations shared by the HTTP app and the command-line client.

Handlers do the actual work on the local filesystem and raise the
package's error types; the app translates those to HTTP responses and
the CLI to exit codes.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .. import __version__
from ..agreement import bland_altman, compare_series
from ..config import phantom_preset
from ..errors import ConfigError, IngestionError
from ..frames import load_sequence, save_sequence
from ..phantom import PhantomSpec, generate_phantom, load_truth, save_truth
from ..pipeline import MeasurementReport, measure_video
from ..plots import write_csv, write_line_svg, write_scatter_svg
from ..tracking import RoiBox
from .models import (
    AgreementReportModel,
    EvaluateRequest,
    MeasureRequest,
    MeasurementReportModel,
    PhantomRequest,
    PhantomResponse,
    config_from_request,
)

TRUTH_FILENAME = "truth.json"
CONFIG_FILENAME = "phantom.cfg"


def resolve_seed_box(request: MeasureRequest, input_dir: Path) -> RoiBox:
    if request.seed_box is not None:
        return RoiBox(*request.seed_box)
    truth_path = input_dir / TRUTH_FILENAME
    if truth_path.exists():
        return RoiBox(*load_truth(truth_path).seed_box)
    raise IngestionError(
        "no seed box: pass one explicitly or supply a phantom truth record "
        f"({TRUTH_FILENAME}) in the input directory"
    )


def _dump_signals(report: MeasurementReport, out_dir: Path) -> None:
    m = report.measurement
    if m.v_signal is not None:
        kappa = m.kappa if m.kappa is not None else np.full(m.v_signal.size, np.nan)
        write_csv(
            out_dir / "column_signal.csv",
            ["n", "v", "kappa"],
            [(i, float(v), float(k)) for i, (v, k) in enumerate(zip(m.v_signal, kappa))],
        )
        write_line_svg(
            out_dir / "column_signal.svg",
            np.arange(m.v_signal.size),
            m.v_signal,
            "column sums",
        )
    for side, sig in (("left", m.kl_left), ("right", m.kl_right)):
        if sig is None:
            continue
        write_csv(
            out_dir / f"kl_{side}.csv",
            ["d", "raw", "weighted"],
            [
                (int(d), float(r), float(w))
                for d, r, w in zip(sig.columns, sig.raw, sig.weighted)
            ],
        )
        write_line_svg(out_dir / f"kl_{side}.svg", sig.columns, sig.weighted, f"kl {side}")
    write_csv(
        out_dir / "entropy.csv",
        ["frame_index", "entropy_bits"],
        list(enumerate(report.entropy_bits)),
    )
    write_line_svg(
        out_dir / "entropy.svg",
        np.arange(len(report.entropy_bits)),
        np.asarray(report.entropy_bits),
        "frame entropy",
    )
    write_csv(
        out_dir / "frame_scores.csv",
        ["frame_index", "dice"],
        [(s.frame_index, s.dice) for s in report.frame_scores],
    )
    write_csv(
        out_dir / "roi_boxes.csv",
        ["frame_index", "x", "y", "w", "h"],
        [(i, b.x, b.y, b.w, b.h) for i, b in enumerate(report.roi_boxes)],
    )


def handle_measure(request: MeasureRequest) -> MeasurementReportModel:
    input_dir = Path(request.input_dir)
    config = config_from_request(request.config_path, request.config_overrides)
    seq = load_sequence(input_dir)
    seed = resolve_seed_box(request, input_dir)
    video_id = request.video_id or input_dir.name
    report = measure_video(
        seq, seed, config, video_id=video_id, keep_signals=request.dump_signals
    )
    if request.output_dir:
        out_dir = Path(request.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"{video_id}.json").write_text(report.to_json() + "\n")
        if request.dump_signals:
            _dump_signals(report, out_dir)
    return MeasurementReportModel(**report.to_dict())


def handle_phantom(request: PhantomRequest) -> PhantomResponse:
    try:
        spec = PhantomSpec(**request.spec.model_dump())
        seq, truth = generate_phantom(spec, request.n_frames, request.seed)
    except ValueError as exc:
        raise ConfigError(f"invalid phantom request: {exc}") from exc
    out_dir = Path(request.output_dir)
    save_sequence(seq, out_dir)
    truth_path = out_dir / TRUTH_FILENAME
    save_truth(truth, truth_path)
    config_path = out_dir / CONFIG_FILENAME
    phantom_preset().save(config_path)
    return PhantomResponse(
        output_dir=str(out_dir),
        n_frames=len(seq),
        truth_path=str(truth_path),
        config_path=str(config_path),
        seed_box=list(truth.seed_box),
    )


def read_series_csv(path: Path | str) -> dict[str, float]:
    """Read an ``id,value`` series file, keeping row order."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IngestionError(f"cannot read series {path}: {exc}") from exc
    series: dict[str, float] = {}
    reader = csv.reader(text.splitlines())
    for i, row in enumerate(reader):
        if not row or (i == 0 and row[0].strip().lower() == "id"):
            continue
        if len(row) != 2:
            raise IngestionError(f"{path}: row {i + 1} is not id,value")
        key = row[0].strip()
        if key in series:
            raise IngestionError(f"{path}: duplicate id {key!r}")
        try:
            series[key] = float(row[1])
        except ValueError as exc:
            raise IngestionError(f"{path}: bad value {row[1]!r} for id {key!r}") from exc
    if not series:
        raise IngestionError(f"{path}: no data rows")
    return series


def evaluate_request_from_csv(path_a: Path | str, path_b: Path | str) -> EvaluateRequest:
    a = read_series_csv(path_a)
    b = read_series_csv(path_b)
    missing_b = sorted(set(a) - set(b))
    missing_a = sorted(set(b) - set(a))
    if missing_a or missing_b:
        parts = []
        if missing_b:
            parts.append(f"ids missing from {path_b}: {', '.join(missing_b)}")
        if missing_a:
            parts.append(f"ids missing from {path_a}: {', '.join(missing_a)}")
        raise IngestionError("; ".join(parts))
    ids = list(a)
    return EvaluateRequest(
        ids=ids, candidate=[a[k] for k in ids], reference=[b[k] for k in ids]
    )


def handle_evaluate(
    request: EvaluateRequest, output_dir: Path | str | None = None
) -> AgreementReportModel:
    if not (len(request.ids) == len(request.candidate) == len(request.reference)):
        raise IngestionError("ids, candidate and reference must have equal lengths")
    report = compare_series(request.candidate, request.reference)
    model = AgreementReportModel(**report.to_dict())
    if output_dir is not None:
        out_dir = Path(output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "agreement.json").write_text(
            model.model_dump_json(indent=2) + "\n"
        )
        ba = bland_altman(request.candidate, request.reference)
        write_csv(
            out_dir / "bland_altman.csv",
            ["id", "mean", "difference"],
            [
                (i, float(m), float(d))
                for i, m, d in zip(request.ids, ba.means, ba.differences)
            ],
        )
        write_scatter_svg(
            out_dir / "bland_altman.svg",
            ba.means,
            ba.differences,
            hlines=[ba.bias, ba.loa_low, ba.loa_high],
            title="Bland-Altman",
        )
    return model


def service_version() -> str:
    return __version__
