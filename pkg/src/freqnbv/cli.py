"""Command-line entry point: ``freqnbv {generate,plan,score,report}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .dataset import (
    SyntheticConfig,
    read_dataset_dir,
    read_scene,
    write_colmap_text,
    write_scene,
)
from .exceptions import NBVError
from .frequency import SCORE_MODES, WINDOWS, FrequencyScorer, write_histogram_csv
from .metrics import read_ppm, read_report, trajectory_length, write_ppm, write_report, write_steps_csv
from .planner import PlannerConfig, final_model, run
from .proxy import ProxyConfig
from .render import render

log = logging.getLogger("freqnbv")

USAGE_ERROR = 2
FAILURE = 1


class StageError(Exception):
    def __init__(self, stage, exc):
        self.stage = stage
        super().__init__(f"{stage} failed: {exc}")


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (NBVError, OSError, ValueError, KeyError) as exc:
        raise StageError(name, exc) from exc


def _fmt(x, digits=3):
    return "n/a" if x is None else f"{x:.{digits}f}"


def print_tables(report, out=None):
    out = out or sys.stdout
    print("Traveling distance", file=out)
    print(f"  {'Dataset':<10} {report.trajectory_length_full:10.2f}", file=out)
    print(f"  {'Ours':<10} {report.trajectory_length_selected:10.2f}", file=out)
    print(f"  ratio      {report.trajectory_ratio!r}", file=out)
    n = len(report.initial_ids) + len(report.selected_ids)
    print("Rendering metrics (test split)", file=out)
    print(f"  {'Method':<14} {'views':>5} {'PSNR':>8} {'SSIM':>7} {'LPIPS':>6}", file=out)
    print(
        f"  {'Ours (proxy)':<14} {n:5d} {_fmt(report.psnr_mean):>8} "
        f"{_fmt(report.ssim_mean, 4):>7} {_fmt(report.lpips_mean):>6}",
        file=out,
    )


# ------------------------------------------------------------------ commands

def cmd_generate(args) -> int:
    cfg = _stage("config", SyntheticConfig.read, args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    scene, dataset = _stage("generate", cfg.build)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _stage("write scene", write_scene, scene, out / "scene.json")
    _stage("write dataset", write_colmap_text, dataset, out / "dataset")
    length = trajectory_length(dataset.centers())
    print(f"views {len(dataset)}")
    print(f"gaussians {len(scene)}")
    print(f"trajectory_length {length:.6f}")
    return 0


def planner_config(args) -> PlannerConfig:
    proxy = ProxyConfig(
        blur_scale_base=args.blur_scale_base,
        maturity_count=args.maturity_count,
        opacity_floor=args.opacity_floor,
        noise_seed=args.seed,
    )
    return PlannerConfig(
        init_count=args.init_count,
        budget=args.budget,
        radius=args.radius,
        widen_factor=args.widen_factor,
        proxy=proxy,
        test_every=args.test_every,
        score_mode=args.score_mode,
        window=args.window,
        noise_seed=args.seed,
    )


def cmd_plan(args) -> int:
    truth = _stage("read scene", read_scene, args.scene)
    dataset = _stage("read dataset", read_dataset_dir, args.dataset)
    cfg = _stage("config", planner_config, args)
    report = _stage("plan", run, dataset, truth, cfg)

    out = Path(args.out_dir)
    renders = out / "renders"
    renders.mkdir(parents=True, exist_ok=True)
    _stage("write report", write_report, report, out / "report.json")
    _stage("write steps", write_steps_csv, report, out / "steps.csv")
    model = final_model(dataset, truth, report.visited_ids, cfg)
    for i in report.selected_ids:
        _stage("render", write_ppm, render(model, dataset[i]), renders / f"selected_{i:04d}.ppm")
    for i in report.test_ids:
        _stage("render", write_ppm, render(truth, dataset[i]), renders / f"test_{i:04d}_truth.ppm")
        _stage("render", write_ppm, render(model, dataset[i]), renders / f"test_{i:04d}_proxy.ppm")
    print_tables(report)
    return 0


def cmd_score(args) -> int:
    folder = Path(args.images)
    if not folder.is_dir():
        print(f"error: {folder} is not a directory", file=sys.stderr)
        return USAGE_ERROR
    paths = sorted(p for p in folder.iterdir() if p.suffix.lower() in (".ppm", ".pgm"))
    if not paths:
        print(f"error: no .ppm images in {folder}", file=sys.stderr)
        return USAGE_ERROR
    scorer = FrequencyScorer(mode=args.score_mode, window=args.window).fit()
    results = []
    for p in paths:
        img = _stage(f"read {p.name}", read_ppm, p)
        results.append((p, scorer.summarize(img)))
    out = Path(args.out_dir) if args.out_dir else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        for p, s in results:
            write_histogram_csv(out / f"{p.stem}_spectrum.csv", s)
    ranked = sorted(results, key=lambda r: (r[1].score, r[0].name))
    for p, s in ranked:
        print(f"{s.score:.6f}  {p.name}")
    print(f"argmin {ranked[0][0].name}")
    return 0


def cmd_report(args) -> int:
    report = _stage("read report", read_report, args.report)
    print_tables(report)
    print(f"selected {' '.join(map(str, report.selected_ids))}")
    return 0


# -------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freqnbv", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic scene and orbit dataset")
    g.add_argument("--config", required=True, help="synthetic config (JSON)")
    g.add_argument("--out-dir", required=True)
    g.add_argument("--seed", type=int, default=None, help="override the config seed")
    g.set_defaults(func=cmd_generate, paths=("config",))

    p = sub.add_parser("plan", help="run next-best-view selection")
    p.add_argument("--scene", required=True)
    p.add_argument("--dataset", required=True, help="directory with cameras.txt/images.txt")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--init-count", type=int, default=10)
    p.add_argument("--budget", type=int, default=30)
    p.add_argument("--radius", type=float, default=None,
                   help="candidate radius; default 1.5x median camera spacing")
    p.add_argument("--widen-factor", type=float, default=1.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--blur-scale-base", type=float, default=4.0)
    p.add_argument("--maturity-count", type=int, default=3)
    p.add_argument("--opacity-floor", type=float, default=0.3)
    p.add_argument("--test-every", type=int, default=8)
    p.add_argument("--score-mode", choices=SCORE_MODES, default=SCORE_MODES[0])
    p.add_argument("--window", choices=WINDOWS, default="none")
    p.set_defaults(func=cmd_plan, paths=("scene", "dataset"))

    s = sub.add_parser("score", help="rank images by median spectral frequency")
    s.add_argument("--images", required=True, help="directory of .ppm files")
    s.add_argument("--out-dir", default=None, help="where to write spectrum CSVs")
    s.add_argument("--score-mode", choices=SCORE_MODES, default=SCORE_MODES[0])
    s.add_argument("--window", choices=WINDOWS, default="none")
    s.set_defaults(func=cmd_score, paths=())

    r = sub.add_parser("report", help="print the tables of a saved run report")
    r.add_argument("--report", required=True)
    r.set_defaults(func=cmd_report, paths=("report",))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    for name in args.paths:
        path = Path(getattr(args, name))
        if not path.exists():
            parser.print_usage(sys.stderr)
            print(f"freqnbv {args.command}: error: --{name} path not found: {path}", file=sys.stderr)
            return USAGE_ERROR
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FAILURE


if __name__ == "__main__":
    sys.exit(main())
