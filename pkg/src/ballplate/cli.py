"""Command-line front end.

Subcommands: ``run`` (one closed-loop experiment), ``compare`` (ranked
multi-controller table), ``fuzzy-eval`` (control-surface grid sweep),
``vision-run`` (detect the ball in a directory of frames) and
``torque-report`` (per-sample servo load torque).  Exit codes: 0 success,
2 configuration problem, 3 run ended with the ball off the plate.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .fuzzy import (
    CONTROLLER_NAMES,
    default_controller_spec,
    defuzzify_centroid,
    infer,
)
from .harness import (
    compare_controllers,
    run_experiment,
    write_csv,
    write_report,
    write_report_csv,
    write_torque_csv,
)
from .vision import (
    BallNotFound,
    SceneConfig,
    VisionParams,
    calibrate_platform,
    locate_ball,
    read_ppm,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BALL_FELL = 3


def _fmt(v: float) -> str:
    return format(float(v), ".12g")


def _add_override_flags(sub):
    sub.add_argument("--seed", type=int, default=None, help="override the config seed")
    sub.add_argument(
        "--out-dir", default=None, help="directory for emitted files (created if absent)"
    )
    sub.add_argument(
        "--sensor",
        choices=("direct", "vision"),
        default=None,
        help="override the sensor mode",
    )


def _load_with_overrides(path, args):
    cfg = load_config(path)
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.sensor is not None:
        updates["sensor"] = args.sensor
    if args.out_dir is not None:
        updates["out_dir"] = args.out_dir
    if updates:
        cfg = dataclasses.replace(cfg, **updates)
    return cfg


def _resolve_out_dir(args, cfg) -> Path:
    out = args.out_dir or cfg.out_dir or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _cmd_run(args) -> int:
    cfg = _load_with_overrides(args.config, args)
    out_dir = _resolve_out_dir(args, cfg)
    result = run_experiment(cfg)
    write_csv(result.trajectory, out_dir / "trajectory.csv")
    write_report(result.report, out_dir / "report.txt")
    write_report_csv(result.report, out_dir / "report.csv")
    sys.stdout.write(
        (out_dir / "report.txt").read_text()
        + f"\nwrote {out_dir / 'trajectory.csv'}\n"
    )
    return EXIT_BALL_FELL if result.report.ball_fell else EXIT_OK


def _cmd_compare(args) -> int:
    configs = [_load_with_overrides(p, args) for p in args.configs]
    out_dir = _resolve_out_dir(args, configs[0])
    cmp = compare_controllers(configs)
    (out_dir / "comparison.csv").write_text(cmp.to_csv())
    text = cmp.to_text()
    (out_dir / "comparison.txt").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def _cmd_torque_report(args) -> int:
    cfg = _load_with_overrides(args.config, args)
    out_dir = _resolve_out_dir(args, cfg)
    result = run_experiment(cfg)
    write_torque_csv(result, out_dir / "torque.csv")
    lines = ["leg  peak_torque_nmm"]
    for i, peak in enumerate(result.report.peak_torque_nmm):
        lines.append(f"{i:>3}  {peak:.4f}")
    sys.stdout.write("\n".join(lines) + f"\nwrote {out_dir / 'torque.csv'}\n")
    return EXIT_BALL_FELL if result.report.ball_fell else EXIT_OK


def _surface_csv(spec, grid: int) -> str:
    inputs = spec.inputs
    out_names = [o.name for o in spec.outputs]
    first, second = inputs[0], inputs[1]
    xs = np.linspace(first.lo, first.hi, grid)
    ys = np.linspace(second.lo, second.hi, grid)
    three_input = len(inputs) == 3
    header = [first.name, second.name]
    if three_input:
        header.append(inputs[2].name)
    lines = [",".join(header + out_names)]
    for x in xs:
        for y in ys:
            values = {first.name: float(x), second.name: float(y)}
            if three_input:
                aux = inputs[2]
                # radial distance implied by the swept axes, kept in range
                values[aux.name] = min(max(math.hypot(x, y), aux.lo), aux.hi)
            crisp = {
                name: defuzzify_centroid(agg)
                for name, agg in infer(spec, values).items()
            }
            cells = [_fmt(values[h]) for h in header]
            cells += [_fmt(crisp[n]) for n in out_names]
            lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _cmd_fuzzy_eval(args) -> int:
    if args.config is not None:
        spec = load_config(args.config).controller
    else:
        spec = default_controller_spec(args.controller)
    if args.grid < 2:
        raise ConfigError("--grid must be at least 2")
    text = _surface_csv(spec, args.grid)
    if args.out:
        Path(args.out).write_text(text)
        sys.stdout.write(f"wrote {args.out}\n")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_vision_run(args) -> int:
    frame_dir = Path(args.frames)
    if not frame_dir.is_dir():
        raise ConfigError(f"frame directory not found: {frame_dir}")
    frames = sorted(frame_dir.glob("*.ppm"))
    if not frames:
        raise ConfigError(f"no .ppm frames in {frame_dir}")
    if args.config is not None:
        cfg = load_config(args.config)
        scene, vision = cfg.scene, cfg.vision
    else:
        scene, vision = SceneConfig(), VisionParams()
    first = read_ppm(frames[0].read_bytes())
    cal = calibrate_platform(first, scene)
    lines = ["frame,x_mm,y_mm,confidence"]
    found = 0
    for path in frames:
        frame = read_ppm(path.read_bytes())
        try:
            x_mm, y_mm, conf = locate_ball(frame, vision, cal)
        except BallNotFound:
            lines.append(f"{path.name},,,")
            continue
        found += 1
        lines.append(f"{path.name},{_fmt(x_mm)},{_fmt(y_mm)},{_fmt(conf)}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        sys.stdout.write(f"{found}/{len(frames)} frames detected; wrote {args.out}\n")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ballplate",
        description="Closed-loop ball-on-plate simulation experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config", help="experiment config file")
    _add_override_flags(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_cmp = sub.add_parser("compare", help="run several configs and rank them")
    p_cmp.add_argument("configs", nargs="+", help="two or more config files")
    _add_override_flags(p_cmp)
    p_cmp.set_defaults(func=_cmd_compare)

    p_fz = sub.add_parser("fuzzy-eval", help="sweep a controller's crisp surface")
    group = p_fz.add_mutually_exclusive_group(required=True)
    group.add_argument(
        "--controller", choices=CONTROLLER_NAMES, help="shipped controller name"
    )
    group.add_argument("--config", help="take the controller from this config file")
    p_fz.add_argument("--grid", type=int, default=41, help="grid points per axis")
    p_fz.add_argument("--out", default=None, help="CSV output path (default stdout)")
    p_fz.set_defaults(func=_cmd_fuzzy_eval)

    p_vr = sub.add_parser("vision-run", help="detect the ball in stored frames")
    p_vr.add_argument("frames", help="directory of .ppm frames")
    p_vr.add_argument("--config", default=None, help="scene/vision settings source")
    p_vr.add_argument("--out", default=None, help="CSV output path (default stdout)")
    p_vr.set_defaults(func=_cmd_vision_run)

    p_tq = sub.add_parser("torque-report", help="per-sample servo torque of a run")
    p_tq.add_argument("config", help="experiment config file")
    _add_override_flags(p_tq)
    p_tq.set_defaults(func=_cmd_torque_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
