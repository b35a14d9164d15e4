"""Command-line client for the measurement service.

Subcommands build the same request models the HTTP service consumes and
either call the handlers in-process (default) or POST them to a running
service given ``--server``. Exit codes: 0 success, 2 input error,
3 pipeline error, 4 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .errors import ConfigError, IngestionError, StageError
from .phantom import spec_from_text
from .service import handlers
from .service.models import MeasureRequest, PhantomRequest, PhantomSpecModel

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PIPELINE = 3
EXIT_CONFIG = 4


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, IngestionError):
        return EXIT_INPUT
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    return EXIT_PIPELINE


class _RemoteError(Exception):
    def __init__(self, kind: str, message: str):
        self.kind = kind
        super().__init__(message)


def _post(server: str, endpoint: str, payload: dict) -> dict:
    import httpx

    response = httpx.post(f"{server.rstrip('/')}{endpoint}", json=payload, timeout=600.0)
    if response.status_code >= 400:
        try:
            detail = response.json().get("detail", {})
        except ValueError:
            detail = {}
        raise _RemoteError(
            detail.get("kind", "pipeline"),
            detail.get("message", f"HTTP {response.status_code}"),
        )
    return response.json()


def _remote_exit_code(exc: _RemoteError) -> int:
    return {"input": EXIT_INPUT, "config": EXIT_CONFIG}.get(exc.kind, EXIT_PIPELINE)


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _measure_one(args, input_dir: Path, out_dir: Path) -> dict:
    request = MeasureRequest(
        input_dir=str(input_dir),
        video_id=input_dir.name,
        config_path=args.config,
        seed_box=[int(v) for v in args.seed_box.split(",")] if args.seed_box else None,
        dump_signals=args.dump_signals,
        output_dir=str(out_dir),
    )
    if args.server:
        return _post(args.server, "/measure", request.model_dump())
    return handlers.handle_measure(request).model_dump()


def cmd_measure(args) -> int:
    input_dir = Path(args.input)
    out_dir = Path(args.out)
    if args.batch:
        videos = sorted(p for p in input_dir.iterdir() if p.is_dir())
        if not videos:
            raise IngestionError(f"no video directories under {input_dir}")
        jobs = max(1, args.jobs)
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(lambda v: _measure_one(args, v, out_dir / v.name), videos))
        index = {
            r["video_id"]: {
                "optimal_frame": r["optimal_frame"],
                "onsd_px": r["measurement"]["onsd_px"],
                "onsd_mm": r["measurement"]["onsd_mm"],
                "units": r["measurement"]["units"],
            }
            for r in reports
        }
        _write_json(out_dir / "index.json", index)
        print(f"measured {len(reports)} videos -> {out_dir}")
        return EXIT_OK
    report = _measure_one(args, input_dir, out_dir)
    m = report["measurement"]
    value = m["onsd_mm"] if m["units"] == "mm" else m["onsd_px"]
    print(
        f"{report['video_id']}: optimal frame {report['optimal_frame']} "
        f"(dice {report['optimal_dice']:.4f}), ONSD {value:.3f} {m['units']}"
    )
    return EXIT_OK


def cmd_phantom(args) -> int:
    spec_model = PhantomSpecModel()
    if args.spec:
        try:
            text = Path(args.spec).read_text()
        except OSError as exc:
            raise IngestionError(f"cannot read phantom spec {args.spec}: {exc}") from exc
        try:
            spec = spec_from_text(text)
        except ValueError as exc:
            raise ConfigError(f"{args.spec}: {exc}") from exc
        spec_model = PhantomSpecModel(**vars(spec))
    request = PhantomRequest(
        spec=spec_model, n_frames=args.frames, seed=args.seed, output_dir=args.out
    )
    if args.server:
        response = _post(args.server, "/phantom", request.model_dump())
    else:
        try:
            response = handlers.handle_phantom(request).model_dump()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    print(
        f"wrote {response['n_frames']} frames to {response['output_dir']} "
        f"(seed box {','.join(str(v) for v in response['seed_box'])})"
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    request = handlers.evaluate_request_from_csv(args.series_a, args.series_b)
    if args.server:
        report = _post(args.server, "/evaluate", request.model_dump())
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_json(out_dir / "agreement.json", report)
    else:
        report = handlers.handle_evaluate(request, output_dir=args.out).model_dump()
    print(
        f"n={report['n_pairs']} mean_error={report['mean_error']:.4f} "
        f"mse={report['mse']:.6f} icc={report['icc']:.4f} "
        f"[{report['icc_ci_low']:.4f}, {report['icc_ci_high']:.4f}] "
        f"cohens_d={report['cohens_d']:.4f}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onsdkit",
        description="Automated optic nerve sheath diameter measurement",
    )
    parser.add_argument("--server", help="base URL of a running service; default is in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("measure", help="measure a directory of frames")
    p.add_argument("input", help="frame directory (or parent directory with --batch)")
    p.add_argument("--out", default="onsd-out", help="output directory for reports")
    p.add_argument("--config", help="pipeline config file (key=value)")
    p.add_argument("--seed-box", help="initial ROI as x,y,w,h")
    p.add_argument("--dump-signals", action="store_true", help="emit signal CSV/SVG dumps")
    p.add_argument("--batch", action="store_true", help="treat input as a directory of videos")
    p.add_argument("--jobs", type=int, default=1, help="parallel videos in batch mode")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("phantom", help="generate a synthetic phantom video")
    p.add_argument("--spec", help="phantom spec file (key=value); defaults used if omitted")
    p.add_argument("--frames", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("evaluate", help="agreement statistics between two series")
    p.add_argument("series_a", help="candidate series CSV (id,value)")
    p.add_argument("series_b", help="reference series CSV (id,value)")
    p.add_argument("--out", default="onsd-out", help="output directory")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _RemoteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _remote_exit_code(exc)
    except (IngestionError, ConfigError, StageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
