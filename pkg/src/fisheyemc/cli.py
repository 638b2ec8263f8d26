"""Batch driver: per-pair compensation runs, sweeps, rate curves, decision maps.

Subcommands:
    compensate    estimate + compensate consecutive frame pairs, write metrics
    sweep         compensate over methods x block sizes, one CSV row per run
    rate-curve    mean PSNR over mean side-information rate per (method, B)
    decision-map  color overlay of the per-block viewport decisions
    synth-gen     render a synthetic scene pair from a JSON description

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 internal
contract violation.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as fio
from .geometry import FisheyeCamera, GeometryError, Viewport
from .metrics import circular_mask, psnr_masked, ssim_masked
from .motion import Method, MotionField, SearchConfig, Strategy, compensate_frame, estimate_motion_field
from .sampling import Frame
from .sideinfo import side_info_stream
from .synth import generate_pair, load_scene

__all__ = [
    "CSV_FIELDS",
    "ConfigError",
    "RunConfig",
    "main",
    "render_decision_map",
    "run_compensate",
    "run_rate_curve",
]

CSV_FIELDS = ["sequence", "pair", "method", "block_size", "psnr_db", "ssim", "bpp", "runtime_ms"]

# Decision-map color coding: forward pair red, bottom/top blue, left/right green.
_VIEWPORT_COLORS = {
    Viewport.FRONT_BACK: (255, 0, 0),
    Viewport.BOTTOM_TOP: (0, 0, 255),
    Viewport.LEFT_RIGHT: (0, 255, 0),
}


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass
class RunConfig:
    """One batch run over consecutive frame pairs."""

    source: fio.FrameSource
    camera: FisheyeCamera
    methods: list[Method]
    block_sizes: list[int]
    search_range: int = 96
    strategy: Strategy = Strategy.DIAMOND
    frames: tuple[int, int] | None = None  # inclusive reference index range
    compressor: str = "bz2"
    output_dir: Path | None = None
    results: list[dict] = field(default_factory=list)

    def reference_indices(self) -> range:
        last_ref = len(self.source) - 2
        if last_ref < 0:
            raise ConfigError(f"{self.source.name}: need at least 2 frames")
        if self.frames is None:
            return range(0, last_ref + 1)
        first, last = self.frames
        if first < 0 or last > last_ref or first > last:
            raise ConfigError(
                f"frame range {first}..{last} invalid; valid references are 0..{last_ref}"
            )
        return range(first, last + 1)


def run_compensate(config: RunConfig) -> list[dict]:
    """Process every (reference, successor) pair; one record per method and B."""
    mask = circular_mask(config.camera)
    records = []
    for ref_index in config.reference_indices():
        ref = config.source.frame(ref_index)
        cur = config.source.frame(ref_index + 1)
        _check_frame(config, ref)
        _check_frame(config, cur)
        for method in config.methods:
            for block_size in config.block_sizes:
                search = SearchConfig(block_size, config.search_range, config.strategy, method)
                start = time.perf_counter()
                motion_field = estimate_motion_field(cur, ref, config.camera, search)
                compensated = compensate_frame(ref, motion_field, config.camera)
                runtime_ms = (time.perf_counter() - start) * 1000.0
                stream = side_info_stream(motion_field, config.compressor)
                record = {
                    "sequence": config.source.name,
                    "pair": ref_index,
                    "method": method.value,
                    "block_size": block_size,
                    "psnr_db": psnr_masked(compensated, cur, mask),
                    "ssim": ssim_masked(compensated, cur, mask),
                    "bpp": stream.bits_per_pixel,
                    "runtime_ms": runtime_ms,
                }
                records.append(record)
                if config.output_dir is not None:
                    name = f"{config.source.name}_pair{ref_index:04d}_{method.value}_B{block_size}.png"
                    fio.write_frame(compensated, config.output_dir / name)
    config.results.extend(records)
    return records


def run_rate_curve(config: RunConfig) -> list[dict]:
    """Aggregate compensate records into one (method, B) row with means."""
    records = run_compensate(config)
    rows = []
    for method in config.methods:
        for block_size in config.block_sizes:
            sub = [
                r for r in records if r["method"] == method.value and r["block_size"] == block_size
            ]
            rows.append(
                {
                    "method": method.value,
                    "block_size": block_size,
                    "mean_psnr_db": float(np.mean([r["psnr_db"] for r in sub])),
                    "mean_bpp": float(np.mean([r["bpp"] for r in sub])),
                }
            )
    return rows


def render_decision_map(
    motion_field: MotionField, base: Frame, alpha: float = 0.4
) -> np.ndarray:
    """Overlay the per-block viewport decisions on a frame, (H, W, 3) uint8.

    Block interiors are blended with the viewport color at `alpha`; block
    boundaries are drawn 1 px wide with a stronger blend. alpha = 0 returns
    the plain frame.
    """
    if motion_field.config.method is not Method.VA_PTMC:
        raise ValueError("decision maps require a viewport-adaptive motion field")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    out = np.repeat(base.pixels.astype(np.float64)[..., None], 3, axis=-1)
    edge_alpha = min(1.0, 1.5 * alpha)
    for _, _, block, est in motion_field.blocks():
        color = np.asarray(_VIEWPORT_COLORS[est.viewport], dtype=np.float64)
        gray = base.pixels[block.rows, block.cols].astype(np.float64)[..., None]
        blended = (1.0 - alpha) * gray + alpha * color
        edged = (1.0 - edge_alpha) * gray + edge_alpha * color
        blended[0, :] = edged[0, :]
        blended[-1, :] = edged[-1, :]
        blended[:, 0] = edged[:, 0]
        blended[:, -1] = edged[:, -1]
        out[block.rows, block.cols] = blended
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def _check_frame(config: RunConfig, frame: Frame):
    if (frame.width, frame.height) != config.camera.image_size:
        raise ConfigError(
            f"frame size {(frame.width, frame.height)} does not match camera "
            f"{config.camera.image_size}"
        )


def _write_csv(path, rows, fields):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


def _print_summary(records, methods):
    by_method = {
        m.value: [r["psnr_db"] for r in records if r["method"] == m.value] for m in methods
    }
    tmc_mean = np.mean(by_method["tmc"]) if by_method.get("tmc") else None
    for method, values in by_method.items():
        if not values:
            continue
        mean = float(np.mean(values))
        line = f"{method:>8}: mean PSNR {mean:7.3f} dB"
        if tmc_mean is not None and method != "tmc" and np.isfinite(tmc_mean):
            line += f" ({mean - tmc_mean:+.3f} vs tmc)"
        print(line)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _parse_frames(text: str) -> tuple[int, int]:
    try:
        first, last = text.split("..")
        return int(first), int(last)
    except ValueError:
        raise ConfigError(f"--frames expects A..B, got {text!r}") from None


def _parse_size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise ConfigError(f"--size expects WIDTHxHEIGHT, got {text!r}") from None


def _add_camera_args(sub):
    sub.add_argument("--fov", type=float, default=185.0, help="field of view in degrees")
    sub.add_argument("--focal-length", type=float, default=None, help="override f in pixels")


def _add_run_args(sub, multi_method: bool, multi_block: bool):
    sub.add_argument("--input", required=True, help="image directory or raw .yuv file")
    sub.add_argument("--size", type=_parse_size, default=None, help="WxH for raw video input")
    sub.add_argument("--frames", type=_parse_frames, default=None, help="reference index range A..B")
    if multi_method:
        sub.add_argument(
            "--method", default="tmc,ptmc,va_ptmc", help="comma list of methods to run"
        )
    else:
        sub.add_argument(
            "--method", default="va_ptmc", choices=[m.value for m in Method]
        )
    if multi_block:
        sub.add_argument("--block-size", default="16", help="comma list of block sizes")
    else:
        sub.add_argument("--block-size", type=int, default=16)
    sub.add_argument("--search-range", type=int, default=96)
    sub.add_argument(
        "--strategy", default="diamond", choices=[s.value for s in Strategy]
    )
    sub.add_argument("--compressor", default="bz2")
    sub.add_argument("--output", default=None, help="directory for output frames")
    sub.add_argument("--csv", default=None, help="write per-pair records to this CSV")
    _add_camera_args(sub)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fisheyemc", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)

    comp = subs.add_parser("compensate", help="run one method over frame pairs")
    _add_run_args(comp, multi_method=False, multi_block=False)

    sweep = subs.add_parser("sweep", help="methods x block sizes sweep")
    _add_run_args(sweep, multi_method=True, multi_block=True)

    rate = subs.add_parser("rate-curve", help="PSNR over side-information rate")
    _add_run_args(rate, multi_method=True, multi_block=True)

    dmap = subs.add_parser("decision-map", help="viewport decision overlay")
    _add_run_args(dmap, multi_method=False, multi_block=False)
    dmap.add_argument("--alpha", type=float, default=0.4, help="overlay opacity")

    synth = subs.add_parser("synth-gen", help="render a synthetic scene pair")
    synth.add_argument("--input", required=True, help="scene description JSON")
    synth.add_argument("--output", required=True, help="output directory")
    synth.add_argument("--size", type=_parse_size, default=(512, 512), help="frame WxH")
    synth.add_argument("--seed", type=int, default=None, help="override texture seeds")
    _add_camera_args(synth)
    return parser


def _camera_for(args, size: tuple[int, int]) -> FisheyeCamera:
    return FisheyeCamera.from_fov(
        size[0], size[1], np.deg2rad(args.fov), focal_length=args.focal_length
    )


def _run_config(args, methods, block_sizes) -> RunConfig:
    source = fio.open_source(args.input, args.size)
    first = source.frame(0)
    camera = _camera_for(args, (first.width, first.height))
    output_dir = Path(args.output) if args.output else None
    if output_dir is not None:
        output_dir.mkdir(parents=True, exist_ok=True)
    return RunConfig(
        source=source,
        camera=camera,
        methods=methods,
        block_sizes=block_sizes,
        search_range=args.search_range,
        strategy=Strategy(args.strategy),
        frames=args.frames,
        compressor=args.compressor,
        output_dir=output_dir,
    )


def _parse_methods(text: str) -> list[Method]:
    try:
        return [Method(part.strip()) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _parse_blocks(text) -> list[int]:
    if isinstance(text, int):
        return [text]
    try:
        blocks = [int(part) for part in str(text).split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"invalid block size list {text!r}") from None
    if not blocks:
        raise ConfigError("empty block size list")
    return blocks


def _cmd_compensate(args) -> int:
    config = _run_config(args, _parse_methods(args.method), _parse_blocks(args.block_size))
    records = run_compensate(config)
    if args.csv:
        _write_csv(args.csv, records, CSV_FIELDS)
    _print_summary(records, config.methods)
    return 0


def _cmd_rate_curve(args) -> int:
    config = _run_config(args, _parse_methods(args.method), _parse_blocks(args.block_size))
    rows = run_rate_curve(config)
    if args.csv:
        _write_csv(args.csv, rows, ["method", "block_size", "mean_psnr_db", "mean_bpp"])
    for row in rows:
        print(
            f"{row['method']:>8} B={row['block_size']:<4d} "
            f"PSNR {row['mean_psnr_db']:7.3f} dB  rate {row['mean_bpp']:.5f} bpp"
        )
    return 0


def _cmd_decision_map(args) -> int:
    if Method(args.method) is not Method.VA_PTMC:
        raise ConfigError("decision-map requires --method va_ptmc")
    config = _run_config(args, [Method.VA_PTMC], _parse_blocks(args.block_size))
    refs = config.reference_indices()
    ref_index = refs[0]
    ref = config.source.frame(ref_index)
    cur = config.source.frame(ref_index + 1)
    search = SearchConfig(
        config.block_sizes[0], config.search_range, config.strategy, Method.VA_PTMC
    )
    motion_field = estimate_motion_field(cur, ref, config.camera, search)
    compensated = compensate_frame(ref, motion_field, config.camera)
    overlay = render_decision_map(motion_field, compensated, args.alpha)
    out_dir = config.output_dir or Path(".")
    path = Path(out_dir) / f"{config.source.name}_pair{ref_index:04d}_decisions.png"
    fio.write_rgb(overlay, path)
    print(f"wrote {path}")
    return 0


def _cmd_synth_gen(args) -> int:
    planes, motion = load_scene(args.input)
    if args.seed is not None:
        from dataclasses import replace

        planes = [
            replace(p, texture=replace(p.texture, seed=args.seed))
            if hasattr(p.texture, "seed")
            else p
            for p in planes
        ]
    camera = _camera_for(args, args.size)
    reference, current, labels = generate_pair(planes, motion, camera)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    fio.write_frame(reference, out / "ref.png")
    fio.write_frame(current, out / "cur.png")
    np.save(out / "labels.npy", labels)
    print(f"wrote {out / 'ref.png'}, {out / 'cur.png'}, {out / 'labels.npy'}")
    return 0


_COMMANDS = {
    "compensate": _cmd_compensate,
    "sweep": _cmd_compensate,  # sweep is compensate with method/B lists
    "rate-curve": _cmd_rate_curve,
    "decision-map": _cmd_decision_map,
    "synth-gen": _cmd_synth_gen,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (OSError, FileNotFoundError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    except (GeometryError, ValueError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
