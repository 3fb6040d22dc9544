"""Command-line experiment runner.

Each subcommand writes into one output directory: a snapshot of the
effective config (``config.ini``), a ``run.log`` and its data files. Outputs
depend only on the config and seed, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import config as config_mod
from .config import ConfigError, ExperimentConfig
from .env import TRAJECTORY_COLUMNS
from .evaluation import guidance_report, run_sweep, split_by_direction
from .fishsim import stable_key, trial_rng
from .geometry import AxisAlignedCalibration, ViewportPoint
from .rl import LearnParams, QTable
from .runner import simulate, train_agent
from .vision import (
    PixelClassifier,
    Tracker,
    read_ppm,
    render_frame,
    train_pixel_classifier,
    write_ppm,
)

log = logging.getLogger("fishguide")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

# keys for deriving independent generators per subcommand
_TRAIN, _EVALUATE, _FIXTURE, _CLASSIFIER = 11, 12, 13, 14

MOVING_AVERAGE_WINDOW = 100


def _write_trajectory(path: Path, traj: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for row in traj:
            w.writerow([
                int(row[0]), f"{row[1]:.1f}", "right" if row[2] > 0 else "left",
                *(f"{v:.9f}" for v in row[3:7]), int(row[7]), int(row[8]), int(row[9]), f"{row[10]:.9f}",
            ])


def cmd_sweep(cfg: ExperimentConfig, out: Path, jobs: int) -> int:
    res = run_sweep(cfg.sweep, cfg.env, cfg.behavior, cfg.learn, cfg.run.seed, jobs, cfg.run.baseline_offset)
    (out / "sweep.csv").write_text(res.trials_csv())
    (out / "sweep_summary.csv").write_text(res.summary_csv())
    for row in res.summary:
        log.info("p=%g N=%d R=%.4f R_hat=%.4f ratio=%s", row.p, row.N, row.R_mean, row.R_hat_mean,
                 f"{row.ratio:.4f}" if row.ratio_defined else "undefined")
    return EXIT_OK


def cmd_train(cfg: ExperimentConfig, out: Path, init_q: Path | None) -> int:
    init = QTable.load(init_q) if init_q is not None else None
    rng = trial_rng(cfg.run.seed, _TRAIN)
    Q, traj = train_agent(cfg.env, cfg.behavior, cfg.learn, rng, init=init, record=True)
    Q.save(out / "qtable.csv")
    N = cfg.learn.N
    rewards = traj[:, 10]
    csum = np.concatenate([[0.0], np.cumsum(rewards)])
    with open(out / "training_log.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "epsilon", "reward", "reward_moving_average"])
        for n in range(N):
            eps = 1.0 if N == 1 else 1.0 - n / (N - 1)
            lo = max(0, n + 1 - MOVING_AVERAGE_WINDOW)
            ma = (csum[n + 1] - csum[lo]) / (n + 1 - lo)
            w.writerow([n, f"{eps:.9f}", f"{rewards[n]:.9f}", f"{ma:.9f}"])
    _write_trajectory(out / "training_trajectory.csv", traj)
    log.info("trained %d steps, final mean reward (last %d) %.4f", N, MOVING_AVERAGE_WINDOW,
             rewards[-MOVING_AVERAGE_WINDOW:].mean())
    return EXIT_OK


def evaluate_conditions(cfg: ExperimentConfig, Q: QTable | None, traj_dir: Path | None = None) -> dict:
    """Run every configured condition for ``eval_seeds`` seeds and build the report."""
    run = cfg.run
    report: dict = {"eval_steps_per_direction": run.eval_steps, "seeds": run.eval_seeds,
                    "p_ignore": cfg.behavior.p_ignore, "conditions": {}}
    samples: dict[str, list] = {}
    for cond in run.conditions:
        per_seed = []
        pooled_left, pooled_right = [], []
        for s in range(run.eval_seeds):
            rng = trial_rng(run.seed, _EVALUATE, stable_key(cond), s)
            _, traj = simulate(cfg.env, cfg.behavior, cond, 2 * run.eval_steps, rng,
                               Q=Q if cond == "learned" else None, offset=run.baseline_offset, record=True)
            if traj_dir is not None:
                _write_trajectory(traj_dir / f"{cond}_seed{s}.csv", traj)
            left, right = split_by_direction(traj)
            pooled_left.append(left)
            pooled_right.append(right)
            per_seed.append(guidance_report(left, right, run.hist_bins))
        samples[cond] = per_seed
        pooled = guidance_report(np.concatenate(pooled_left), np.concatenate(pooled_right), run.hist_bins)
        report["conditions"][cond] = {
            "pooled": pooled.to_dict(),
            "per_seed": [r.to_dict() for r in per_seed],
            "significant_seeds": sum(r.p_value < 0.05 for r in per_seed),
        }
    expected = [c for c in ("learned", "stay_at_edge", "none") if c in samples]
    if len(expected) > 1:
        holds = [
            all(samples[a][s].bhattacharyya >= samples[b][s].bhattacharyya for a, b in zip(expected, expected[1:]))
            for s in range(run.eval_seeds)
        ]
        seed0_order = sorted(expected, key=lambda c: -samples[c][0].bhattacharyya)
        report["bhattacharyya_ordering"] = {
            "expected": expected,
            "holds_per_seed": holds,
            "seeds_holding": sum(holds),
            "seed0_order": seed0_order,
        }
    return report


def cmd_evaluate(cfg: ExperimentConfig, out: Path, q_path: Path | None) -> int:
    if cfg.run.eval_steps % cfg.env.direction_schedule:
        raise ConfigError(
            f"run.eval_steps ({cfg.run.eval_steps}) must be a multiple of "
            f"env.direction_schedule ({cfg.env.direction_schedule}) so both directions are sampled equally"
        )
    Q = None
    if "learned" in cfg.run.conditions:
        if q_path is None:
            raise ConfigError("condition 'learned' needs a Q-table (--q PATH)")
        Q = QTable.load(q_path)
    traj_dir = out / "trajectories"
    traj_dir.mkdir(exist_ok=True)
    report = evaluate_conditions(cfg, Q, traj_dir)
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    for cond, rec in report["conditions"].items():
        p = rec["pooled"]
        pv = "undefined" if p["p_value"] is None else f"{p['p_value']:.3g}"
        log.info("%s: mean left %.3f right %.3f diff %.3f p=%s bhattacharyya=%s", cond,
                 p["mean_left"], p["mean_right"], p["difference"], pv, p["bhattacharyya"])
    return EXIT_OK


def fixture_classifier(cfg: ExperimentConfig) -> PixelClassifier:
    X, y = cfg.scene.training_pixels(trial_rng(cfg.run.seed, _CLASSIFIER))
    return train_pixel_classifier(X, y)


def cmd_render_fixture(cfg: ExperimentConfig, out: Path) -> int:
    """Render a numbered frame sequence from a simulated run, plus its metadata."""
    style = cfg.scene
    rng = trial_rng(cfg.run.seed, _FIXTURE)
    policy = cfg.run.policy if cfg.run.policy != "learned" else "three_ahead"
    _, traj = simulate(cfg.env, cfg.behavior, policy, cfg.run.fixture_frames, rng,
                       offset=cfg.run.baseline_offset, record=True)
    write_ppm(out / "background.ppm", style.background_frame())
    style.calibration().save(out / "calibration.json")
    fixture_classifier(cfg).save(out / "classifier.json")
    with open(out / "ground_truth.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame", "x_real", "y_real", "x_virtual", "y_virtual"])
        for i, row in enumerate(traj):
            school = ViewportPoint(row[3], row[4])
            virtual = ViewportPoint(row[5], row[6]) if policy != "none" else None
            write_ppm(out / f"frame_{i:05d}.ppm", render_frame(style.scene(school, virtual), rng))
            w.writerow([i, *(f"{v:.9f}" for v in row[3:7])])
    log.info("rendered %d frames", len(traj))
    return EXIT_OK


def cmd_track(cfg: ExperimentConfig, out: Path, frames_dir: Path, calibration: Path | None) -> int:
    cal_path = calibration or frames_dir / "calibration.json"
    try:
        cal = AxisAlignedCalibration.load(cal_path)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot load calibration {cal_path}: {exc}") from None
    clf_path = frames_dir / "classifier.json"
    clf = PixelClassifier.load(clf_path) if clf_path.exists() else fixture_classifier(cfg)
    background = read_ppm(frames_dir / "background.ppm")
    tracker = Tracker(background, clf, cal, cfg.vision)
    frames = sorted(p for p in frames_dir.glob("*.ppm") if p.name != "background.ppm")
    n_detected = 0
    with open(out / "centroids.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame", "file", "x_viewport", "y_viewport", "detected", "error"])
        for i, path in enumerate(frames):
            try:
                frame = read_ppm(path)
                point, detected = tracker(frame)
                err = "" if detected else "no_detection"
            except (OSError, ValueError) as exc:
                point, detected, err = tracker.last, False, f"unreadable: {type(exc).__name__}"
            x = f"{point.x:.9f}" if point is not None else ""
            y = f"{point.y:.9f}" if point is not None else ""
            w.writerow([i, path.name, x, y, int(detected), err])
            n_detected += detected
    log.info("tracked %d frames, %d detected", len(frames), n_detected)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default="table1",
                        help="config file or bundled profile name (table1, table2, smoke)")
    common.add_argument("--seed", type=int, help="override run.seed (unsigned 64-bit)")
    common.add_argument("--out", type=Path, help="output directory (default: run.output_dir)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="fishguide", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("sweep", parents=[common], help="p x N training/evaluation sweep")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p = sub.add_parser("train", parents=[common], help="train one agent, write its Q-table")
    p.add_argument("--init-q", type=Path, help="warm-start Q-table CSV")
    p = sub.add_parser("evaluate", parents=[common], help="compare guidance conditions")
    p.add_argument("--q", type=Path, help="Q-table CSV for the learned condition")
    p = sub.add_parser("track", parents=[common], help="track a directory of PPM frames")
    p.add_argument("frames", type=Path)
    p.add_argument("--calibration", type=Path, help="camera->viewport calibration JSON")
    sub.add_parser("render-fixture", parents=[common], help="render synthetic PPM frames")
    return parser


def _setup_logging(out: Path, verbose: bool) -> logging.Handler:
    handler = logging.FileHandler(out / "run.log", mode="w")
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.DEBUG if verbose else logging.INFO)
    return handler


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_mod.load(args.config)
        if args.seed is not None:
            cfg = cfg.replace("run", seed=args.seed)
        if getattr(args, "jobs", 1) < 1:
            raise ConfigError("--jobs must be >= 1")
    except (ConfigError, ValueError) as exc:
        print(f"fishguide: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = args.out or Path(cfg.run.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(config_mod.dumps(cfg))
    handler = _setup_logging(out, args.verbose)
    try:
        if args.command == "sweep":
            return cmd_sweep(cfg, out, args.jobs)
        if args.command == "train":
            return cmd_train(cfg, out, args.init_q)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, out, args.q)
        if args.command == "track":
            return cmd_track(cfg, out, args.frames, args.calibration)
        return cmd_render_fixture(cfg, out)
    except ConfigError as exc:
        print(f"fishguide: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"fishguide: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    finally:
        log.removeHandler(handler)
        handler.close()


if __name__ == "__main__":
    sys.exit(main())
