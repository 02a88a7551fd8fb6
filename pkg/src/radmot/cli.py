"""Command-line entry point: track, eval, synth, presets."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import io as rio
from .metrics import EvalInputError, evaluate
from .model import SequenceError
from .pipeline import ConfigError, load_config, preset, preset_table, run_sequence
from .synth import PROFILES, EgoSpec, ScenarioSpec, generate_scenario, write_scenario

EXIT_OK, EXIT_INPUT, EXIT_CONFIG = 0, 1, 2


def _cmd_track(args) -> int:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = preset(args.preset)
    if args.stationary_ego:
        cfg = replace(cfg, ego_mode="stationary")
    max_range = rio.RANGE_PROFILES[args.range_profile] if args.range_profile else args.max_range
    seq = rio.parse_sequence(args.dets, args.ego, max_range=max_range)
    results = run_sequence(seq.frames, cfg)
    rio.write_results(results, args.out, comments=[f"config={cfg.name} ego_mode={cfg.ego_mode}"])
    return EXIT_OK


def _cmd_eval(args) -> int:
    gt = rio.parse_ground_truth(args.gt)
    hyp = rio.parse_results(args.hyp)
    report = evaluate(gt, hyp, alpha=args.alpha, match=args.match, alpha_sweep=args.alpha_sweep)
    Path(args.report).write_text(report.to_json() + "\n", encoding="utf-8")
    text = report.to_text()
    Path(args.report).with_suffix(".txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def _cmd_synth(args) -> int:
    spec = ScenarioSpec(
        n_objects=args.objects,
        n_frames=args.frames,
        motion=args.motion,
        noise=PROFILES[args.profile],
        ego=EgoSpec(speed=args.ego_speed, yaw_rate=args.ego_yaw_rate,
                    pose_noise_pos=args.pose_noise, pose_noise_yaw=args.pose_noise_yaw),
        seed=args.seed,
    )
    scn = generate_scenario(spec)
    write_scenario(scn, args.out_dir, comments=[f"seed={args.seed} profile={args.profile}"])
    return EXIT_OK


def _cmd_presets(args) -> int:
    head = ("preset", "pre-processing", "track prediction", "similarity", "assignment", "life cycle")
    rows = [head] + preset_table()
    widths = [max(len(r[i]) for r in rows) for i in range(len(head))]
    for r in rows:
        print("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="radmot", description="Tracking-by-detection for 3D boxes.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("track", help="run a tracker over a detection file")
    t.add_argument("--dets", required=True)
    t.add_argument("--ego", required=True)
    src = t.add_mutually_exclusive_group(required=True)
    src.add_argument("--config")
    src.add_argument("--preset")
    t.add_argument("--out", required=True)
    t.add_argument("--stationary-ego", action="store_true")
    rng = t.add_mutually_exclusive_group()
    rng.add_argument("--max-range", type=float)
    rng.add_argument("--range-profile", choices=sorted(rio.RANGE_PROFILES))
    t.set_defaults(func=_cmd_track)

    e = sub.add_parser("eval", help="score a result file against ground truth")
    e.add_argument("--gt", required=True)
    e.add_argument("--hyp", required=True)
    e.add_argument("--alpha", type=float)
    e.add_argument("--alpha-sweep", action="store_true")
    e.add_argument("--match", choices=("iou", "iou3d", "center"), default="iou")
    e.add_argument("--report", required=True)
    e.set_defaults(func=_cmd_eval)

    s = sub.add_parser("synth", help="generate a seeded synthetic sequence")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--profile", choices=sorted(PROFILES), required=True)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--objects", type=int, default=8)
    s.add_argument("--frames", type=int, default=40)
    s.add_argument("--motion", choices=("CV", "CA"), default="CV")
    s.add_argument("--ego-speed", type=float, default=0.0)
    s.add_argument("--ego-yaw-rate", type=float, default=0.0)
    s.add_argument("--pose-noise", type=float, default=0.0)
    s.add_argument("--pose-noise-yaw", type=float, default=0.0)
    s.set_defaults(func=_cmd_synth)

    pr = sub.add_parser("presets", help="list the built-in pipeline presets")
    pr.set_defaults(func=_cmd_presets)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (rio.ParseError, SequenceError, EvalInputError, OSError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
