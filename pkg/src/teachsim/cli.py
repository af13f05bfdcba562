"""Command-line front end: teach, identify, replay, learn.

Exit codes: 0 success, 2 configuration or input error, 3 numeric blow-up,
4 invariant violation (the run finished but a checked property failed).
Every command that takes ``--out`` writes a ``manifest.json`` there.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import motionlog
from .bilateral import BilateralPair, OperatorModel, Robot, simulate_teleop
from .experiment import (
    ExperimentConfig,
    file_digest,
    load_config,
    load_trajectory,
    loads_config,
    write_json,
    write_manifest,
)
from .imitation import (
    ContainerError,
    NetworkParams,
    NoTargetError,
    ObjectScene,
    TrainingError,
    build_dataset,
    load_dataset,
    load_weights,
    run_inference,
    save_dataset,
    save_weights,
    select_target,
    train,
)
from .imitation.tasks import SUBCHAIN, angles_to_xy, reach_demo
from .mocopy import prepare_replay, repeat_commands, run_motion_copy, tracking_rms
from .motionlog import LogFormatError, MotionLog
from .params import ConfigError, load_robot_params, save_robot_params
from .plant import NumericalError
from .sysid import GROUPS, GroupParams, identify

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_INVARIANT = 4

REPLAY_RMS_LIMIT = 0.02

DEFAULT_TEACH = """
[experiment]
leader = sciurus17
follower = foodly-typer
duration = 6.0
seed = 0

[operator]
kind = reach
goal = 1:0.5 2:-0.2 3:0.3 4:0.4 5:0.2 6:-0.2
t_start = 0.5
t_end = 3.0

[contact]
joints = 1
engagement = 0.3
stiffness = 50
damping = 0.5
"""


class InvariantViolation(RuntimeError):
    """A workflow completed but a checked property does not hold."""


def _config(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    return loads_config(DEFAULT_TEACH, "<built-in teach config>")


def _seed(args, cfg: ExperimentConfig | None = None) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    return cfg.seed if cfg is not None else 0


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_log(path) -> MotionLog:
    try:
        return motionlog.load(path)
    except FileNotFoundError:
        raise ConfigError(f"log not found: {path}") from None


def _input(path) -> dict | None:
    """Manifest entry for an input file: its name and content hash, never its location."""
    if path is None:
        return None
    return {"file": Path(path).name, "sha256": file_digest(path)}


def _gnuplot(path: Path, csv_name: str, columns: list[tuple[int, str]], ylabel: str) -> None:
    plots = ", \\\n     ".join(f"'{csv_name}' using 1:{c} with lines title '{t}'" for c, t in columns)
    path.write_text(
        "set datafile separator ','\n"
        "set datafile commentschars '#'\n"
        "set key autotitle columnhead\n"
        "set xlabel 'time [s]'\n"
        f"set ylabel '{ylabel}'\n"
        f"plot {plots}\n"
    )


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


# ---------------------------------------------------------------- teleop


def teleop_metrics(result, settle: float = 1.0) -> dict:
    """Steady-state sync error and action-reaction force-sum figures."""
    log = result.log
    n = max(1, min(len(log), int(round(settle * log.rate))))
    tail = slice(len(log) - n, len(log))
    sync = np.abs(log.theta_l[tail] - log.theta_f[tail]).max(axis=0)
    out = {"sync_error_max": float(sync.max()), "sync_error_per_joint": sync.tolist()}
    in_contact = np.abs(result.contact_torque) > 0
    forces = {}
    for j in np.flatnonzero(in_contact.any(axis=0)):
        m = in_contact[:, j]
        force_sum = float(np.mean(np.abs(log.tau_l[m, j] + log.tau_f[m, j])))
        contact = float(np.mean(np.abs(result.contact_torque[m, j])))
        forces[str(j + 1)] = {"mean_force_sum": force_sum, "mean_contact": contact, "ratio": force_sum / contact}
    out["force_sum"] = forces
    return out


def _teleop_session(cfg: ExperimentConfig, seed: int, trajectory=None):
    leader, follower = cfg.leader_params(), cfg.follower_params()
    pair = BilateralPair.create(leader, follower, mismatch=cfg.mismatch, seed=seed)
    if trajectory is None:
        operator = cfg.build_operator(leader, follower)
    else:
        K, B = OperatorModel.gains_for(leader, follower, cfg.operator.bandwidth, cfg.operator.damping_ratio)
        operator = OperatorModel(trajectory[0], trajectory[1], K, B)
    result = simulate_teleop(
        pair, operator, cfg.build_contact(), cfg.duration, cfg.sensor_noise, seed, metadata={"config": cfg.digest()}
    )
    return result.log, teleop_metrics(result)


def session_seeds(master: int, repeat: int) -> list[int]:
    """Per-run seeds spawned from the master seed (independent of scheduling)."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(master).spawn(repeat)]


def cmd_teleop(args) -> int:
    cfg = _config(args)
    seed = _seed(args, cfg)
    if args.repeat < 1:
        raise ConfigError("--repeat must be >= 1")
    trajectory = load_trajectory(args.trajectory) if args.trajectory else None
    if args.duration is not None:
        cfg = replace(cfg, duration=args.duration)
    elif trajectory is not None:
        cfg = replace(cfg, duration=float(trajectory[0][-1]))
    if not cfg.duration > 0:
        raise ConfigError("duration must be positive")
    if trajectory is not None and len(trajectory[0]) > 1 and trajectory[0][-1] < cfg.duration - 1e-12:
        raise ConfigError(f"trajectory ends at {trajectory[0][-1]} s, before the {cfg.duration} s session")
    out = _outdir(args)
    if args.repeat == 1:
        runs = [(seed, *_teleop_session(cfg, seed, trajectory))]
        names = ["teleop.csv"]
    else:
        seeds = session_seeds(seed, args.repeat)
        workers = args.workers or min(args.repeat, 4)
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_teleop_session, [cfg] * args.repeat, seeds, [trajectory] * args.repeat))
        runs = [(s, *r) for s, r in zip(seeds, results)]
        names = [f"session_{i:03d}.csv" for i in range(args.repeat)]
    summary = {}
    for name, (s, log, metrics) in zip(names, runs):
        motionlog.save(log, out / name)
        summary[name] = dict(metrics, seed=s)
    write_json(out / "summary.json", summary)
    if args.gnuplot:
        _gnuplot(out / "teleop.gp", names[0], [(2, "theta_l 1"), (59, "theta_f 1")], "angle [rad]")
    settings = {"repeat": args.repeat, "duration": cfg.duration, "trajectory": _input(args.trajectory)}
    write_manifest(out, "teleop", settings, seed, cfg)
    for name, metrics in summary.items():
        print(f"{name}: sync error {metrics['sync_error_max']:.3e} rad")
    return EXIT_OK


# ---------------------------------------------------------------- identify


def cmd_identify(args) -> int:
    log = _load_log(args.log)
    robot_name = args.params or log.metadata.get(args.robot, "foodly-typer")
    params = load_robot_params(robot_name)
    groups = args.group or ["1-4"]
    for g in groups:
        if g not in GROUPS:
            raise ConfigError(f"unknown group {g!r}; choose from {sorted(GROUPS)}")
    results, identified = {}, params
    for g in groups:
        res = identify(log, g, params.cutoff, args.test_seconds, args.threshold, robot=args.robot)
        results[g] = res.report()
        identified = res.params.apply_to(identified)
    out = _outdir(args)
    write_json(out / "identification.json", results)
    save_robot_params(identified, out / "identified.conf")
    write_manifest(out, "identify", {"log": _input(args.log), "groups": groups, "robot": args.robot}, 0)
    for g, rep in results.items():
        rms = ", ".join(f"J{k} {v:.3e}" for k, v in rep["test_rms"].items())
        print(f"group {g}: test RMS {rms}")
    return EXIT_OK


# ---------------------------------------------------------------- logtool


def cmd_logtool(args) -> int:
    log = _load_log(args.log)
    if args.action == "info":
        print(json.dumps(motionlog.summary(log), indent=2, sort_keys=True))
        return EXIT_OK
    if args.action == "filter" or args.filter:
        params = load_robot_params(args.params or log.metadata.get("follower", "foodly-typer"))
        log = motionlog.zero_phase_filter(log, params.cutoff)
    if args.action == "speedup":
        log = motionlog.double_speed(log)
    output = args.output or args.target
    if not output:
        raise ConfigError("logtool filter/speedup needs an output path")
    motionlog.save(log, output)
    print(f"wrote {output} ({len(log)} rows)")
    return EXIT_OK


# ---------------------------------------------------------------- mocopy


def cmd_mocopy(args) -> int:
    log = _load_log(args.log)
    cfg = load_config(args.config) if args.config else None
    follower = load_robot_params(args.follower or log.metadata.get("follower", "foodly-typer"))
    seed = _seed(args, cfg)
    contact = cfg.build_contact() if cfg else ExperimentConfig().build_contact()
    commands = prepare_replay(log, args.speedup, args.filter, follower.cutoff)
    commands = repeat_commands(commands, args.repeat, args.reset_seconds)
    out = _outdir(args)
    replay = run_motion_copy(
        commands,
        Robot.create(follower, log.theta_f[0]),
        contact,
        hold_ticks=int(round(args.hold_seconds * log.rate)),
        sensor_noise=args.sensor_noise,
        seed=seed,
        metadata={"source": Path(args.log).name, "speedup": args.speedup, "repeat": args.repeat},
    )
    motionlog.save(replay, out / "replay.csv")
    summary = {"rows": len(replay), "duration": replay.duration}
    if args.speedup == 1 and args.repeat == 1 and not args.filter:
        rms = tracking_rms(replay, log)
        summary["tracking_rms_max"] = float(rms.max())
        summary["tracking_rms"] = rms.tolist()
    write_json(out / "summary.json", summary)
    if args.gnuplot:
        _gnuplot(out / "replay.gp", "replay.csv", [(2, "command 1"), (59, "follower 1")], "angle [rad]")
    settings = {k: getattr(args, k) for k in ("speedup", "filter", "repeat", "reset_seconds", "hold_seconds")}
    settings["log"] = _input(args.log)
    write_manifest(out, "mocopy", settings, seed, cfg)
    print(json.dumps({k: v for k, v in summary.items() if k != "tracking_rms"}))
    return EXIT_OK


# ---------------------------------------------------------------- learning


def cmd_dataset(args) -> int:
    logs = [_load_log(p) for p in args.logs]
    joints = [int(j) - 1 for j in args.joints] if args.joints else args.arm
    seed = _seed(args)
    ds = build_dataset(logs, noise_variance=args.noise_variance, seed=seed, validation=args.validation, joints=joints)
    out = _outdir(args)
    save_dataset(ds, out / "dataset.npz")
    settings = {"logs": [_input(p) for p in args.logs], "joints": list(ds.norm.joints), "validation": args.validation}
    write_manifest(out, "dataset build", dict(settings, noise_variance=args.noise_variance), seed)
    print(f"{len(ds)} episodes ({int(ds.train.sum())} train, {int((~ds.train).sum())} validation)")
    return EXIT_OK


def _train(ds, preset: str, seed: int, epochs: int, lr: float, batch_size: int, window: int, workers: int):
    net = NetworkParams.preset(preset, ds.n_in, ds.n_out, seed=seed)
    return train(net, ds, lr=lr, epochs=epochs, seed=seed, batch_size=batch_size, window=window, workers=workers)


def _write_loss(out: Path, result) -> None:
    rows = [(i + 1, tr, va) for i, (tr, va) in enumerate(zip(result.train_loss, result.val_loss))]
    _write_csv(out / "loss.csv", ["epoch", "train_loss", "val_loss"], rows)


def cmd_train(args) -> int:
    try:
        ds = load_dataset(args.dataset)
    except FileNotFoundError:
        raise ConfigError(f"dataset not found: {args.dataset}") from None
    seed = _seed(args)
    result = _train(ds, args.preset, seed, args.epochs, args.lr, args.batch_size, args.window, args.workers)
    out = _outdir(args)
    save_weights(result.net, ds.norm, out / "weights.npz", result.optimizer, {"preset": args.preset})
    _write_loss(out, result)
    if args.gnuplot:
        (out / "loss.gp").write_text(
            "set datafile separator ','\nset logscale y\nset xlabel 'epoch'\n"
            "plot 'loss.csv' using 1:2 with lines title 'train', 'loss.csv' using 1:3 with lines title 'validation'\n"
        )
    settings = {k: getattr(args, k) for k in ("preset", "epochs", "lr", "batch_size", "window", "workers")}
    settings["dataset"] = _input(args.dataset)
    write_manifest(out, "train", settings, seed)
    print(f"final train loss {result.train_loss[-1]:.4e}, validation {result.val_loss[-1]:.4e}")
    return EXIT_OK


def _scene(path) -> ObjectScene:
    try:
        return ObjectScene.load(path)
    except FileNotFoundError:
        raise ConfigError(f"scene not found: {path}") from None
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad scene {path}: {exc}") from None


def cmd_infer(args) -> int:
    try:
        net, norm, _ = load_weights(args.weights)
    except FileNotFoundError:
        raise ConfigError(f"weights not found: {args.weights}") from None
    target = _scene(args.scene) if args.scene else np.array(args.xy, dtype=float)
    follower = load_robot_params(args.follower)
    seed = _seed(args)
    log = run_inference(net, norm, Robot.create(follower), target, args.duration, sensor_noise=args.sensor_noise, seed=seed)
    out = _outdir(args)
    motionlog.save(log, out / "inference.csv")
    write_json(out / "summary.json", {"target_xy": log.metadata["target_xy"], "rows": len(log)})
    settings = {"weights": _input(args.weights), "scene": _input(args.scene), "xy": args.xy, "duration": args.duration}
    write_manifest(out, "infer", settings, seed)
    print(f"target {log.metadata['target_xy']}, {len(log)} ticks")
    return EXIT_OK


def cmd_select(args) -> int:
    scene = _scene(args.scene)
    idx = select_target(scene)
    result = {"index": idx, "center": None if idx is None else scene.centers[idx].tolist()}
    print(json.dumps(result))
    if args.out:
        out = _outdir(args)
        write_json(out / "selection.json", result)
        write_manifest(out, "select-target", {"scene": _input(args.scene)}, 0)
    return EXIT_OK


# ---------------------------------------------------------------- demos


def cmd_demo_teach_replay(args) -> int:
    """Teach with contact, replay as recorded, then replay filtered at double speed."""
    cfg = _config(args)
    seed = _seed(args, cfg)
    leader, follower = cfg.leader_params(), cfg.follower_params()
    pair = BilateralPair.create(leader, follower, mismatch=cfg.mismatch, seed=seed)
    teach = simulate_teleop(pair, cfg.build_operator(leader, follower), cfg.build_contact(), cfg.duration, cfg.sensor_noise, seed)
    contact = cfg.build_contact()
    replay = run_motion_copy(prepare_replay(teach.log), Robot.create(follower), contact, sensor_noise=cfg.sensor_noise, seed=seed)
    fast = run_motion_copy(
        prepare_replay(teach.log, 2, True, follower.cutoff), Robot.create(follower), contact, sensor_noise=cfg.sensor_noise, seed=seed
    )
    rms = tracking_rms(replay, teach.log)
    out = _outdir(args)
    motionlog.save(teach.log, out / "teach.csv")
    motionlog.save(replay, out / "replay.csv")
    motionlog.save(fast, out / "replay_fast.csv")
    summary = {
        "teach": teleop_metrics(teach),
        "replay_rms_max": float(rms.max()),
        "replay_rms": rms.tolist(),
        "fast_duration": fast.duration,
        "teach_duration": teach.log.duration,
    }
    write_json(out / "summary.json", summary)
    write_manifest(out, "demo-teach-replay", {}, seed, cfg)
    print(f"replay RMS {rms.max():.3e} rad; fast replay {fast.duration:.3f} s of {teach.log.duration:.3f} s")
    if not rms.max() < REPLAY_RMS_LIMIT:
        raise InvariantViolation(f"replay RMS {rms.max():.4f} rad exceeds {REPLAY_RMS_LIMIT}")
    return EXIT_OK


def cmd_demo_identify(args) -> int:
    """Excite each arm group under teleoperation and identify it."""
    seed = _seed(args)
    leader, follower = load_robot_params(args.leader), load_robot_params(args.follower)
    report = {}
    for g in args.group or ["1-4", "5-8"]:
        if g not in GROUPS:
            raise ConfigError(f"unknown group {g!r}")
        text = (
            f"[experiment]\nleader = {args.leader}\nfollower = {args.follower}\nduration = {args.duration}\n"
            f"seed = {seed}\nmismatch = {args.mismatch}\n[operator]\nkind = excitation\n"
            f"joints = {' '.join(str(j + 1) for j in GROUPS[g])}\namplitude = 0.6\n"
        )
        cfg = loads_config(text, f"<demo-identify {g}>")
        pair = BilateralPair.create(leader, follower, mismatch=cfg.mismatch, seed=seed)
        log = simulate_teleop(pair, cfg.build_operator(leader, follower), cfg.build_contact(), cfg.duration, seed=seed).log
        res = identify(log, g, follower.cutoff)
        truth = GroupParams.from_robot(g, pair.follower.plant_params)
        est, true = res.params.identifiable(), truth.identifiable()
        rep = res.report()
        rep["true"] = true
        rep["relative_error"] = {k: abs(est[k] / true[k] - 1.0) for k in true}
        report[g] = rep
    out = _outdir(args)
    write_json(out / "identification.json", report)
    write_manifest(out, "demo-identify", {"duration": args.duration, "mismatch": args.mismatch}, seed)
    for g, rep in report.items():
        worst = max(rep["relative_error"].values())
        print(f"group {g}: worst identifiable-parameter error {worst:.2e}")
    return EXIT_OK


def cmd_demo_imitation(args) -> int:
    """Scripted reach demonstrations -> dataset -> desk-size policy -> held-out reaches."""
    seed = _seed(args)
    leader, follower = load_robot_params(args.leader), load_robot_params(args.follower)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 50]))
    train_xy = rng.uniform(0.1, 0.9, (args.demos, 2))
    test_xy = rng.uniform(0.2, 0.8, (args.trials, 2))
    logs = [reach_demo(leader, follower, xy, seed=seed + i) for i, xy in enumerate(train_xy)]
    ds = build_dataset(logs, noise_variance=0.01, seed=seed, validation=args.validation, joints=SUBCHAIN)
    result = _train(ds, args.preset, seed, args.epochs, args.lr, 16, 100, 1)
    rows, hits = [], 0
    out = _outdir(args)
    for i, xy in enumerate(test_xy):
        log = run_inference(result.net, ds.norm, Robot.create(follower), xy, logs[0].duration)
        reached = angles_to_xy(log.theta_f[-1])
        err = float(np.linalg.norm(reached - xy))
        hits += err < args.tolerance
        rows.append((i, xy[0], xy[1], reached[0], reached[1], err))
        motionlog.save(log, out / f"trial_{i:02d}.csv")
    save_dataset(ds, out / "dataset.npz")
    save_weights(result.net, ds.norm, out / "weights.npz", result.optimizer, {"preset": args.preset})
    _write_loss(out, result)
    _write_csv(out / "trials.csv", ["trial", "x", "y", "reached_x", "reached_y", "error"], rows)
    write_json(out / "summary.json", {"hits": int(hits), "trials": args.trials, "tolerance": args.tolerance})
    settings = {k: getattr(args, k) for k in ("demos", "trials", "epochs", "lr", "preset", "tolerance", "validation")}
    write_manifest(out, "demo-imitation", settings, seed)
    print(f"{hits}/{args.trials} held-out reaches within {args.tolerance}")
    if hits < args.trials - 1:
        raise InvariantViolation(f"only {hits}/{args.trials} reaches within tolerance")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
    common.add_argument("--config", help="experiment INI file (searched on TEACHSIM_CONFIG_PATH)")
    common.add_argument("--out", default="out", help="output directory")

    parser = argparse.ArgumentParser(prog="teachsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("teleop", parents=[common], help="run a bilateral teaching session")
    p.add_argument("--trajectory", help="CSV of t and 19 reference angles replacing the config's operator reference")
    p.add_argument("--duration", type=float, help="session length in s (default: config, or trajectory end)")
    p.add_argument("--repeat", type=int, default=1, help="independent sessions run in parallel")
    p.add_argument("--workers", type=int, default=0)
    p.add_argument("--gnuplot", action="store_true", help="also write a gnuplot script")
    p.set_defaults(func=cmd_teleop)

    p = sub.add_parser("identify", parents=[common], help="identify J, D and gravity from a log")
    p.add_argument("--log", required=True)
    p.add_argument("--group", action="append", choices=sorted(GROUPS))
    p.add_argument("--robot", choices=("follower", "leader"), default="follower")
    p.add_argument("--params", help="robot preset or .conf supplying the filter cutoffs")
    p.add_argument("--test-seconds", type=float, default=10.0)
    p.add_argument("--threshold", type=float, default=0.05)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("logtool", help="inspect, filter or speed up a motion log")
    p.add_argument("action", choices=("info", "filter", "speedup"))
    p.add_argument("log")
    p.add_argument("target", nargs="?", metavar="out", help="output log (same as --output)")
    p.add_argument("--output", "-o")
    p.add_argument("--params", help="robot preset or .conf supplying the filter cutoffs")
    p.add_argument("--filter", action="store_true", help="zero-phase filter before speeding up")
    p.set_defaults(func=cmd_logtool)

    p = sub.add_parser("mocopy", parents=[common], help="replay a recorded session on the follower")
    p.add_argument("--log", required=True)
    p.add_argument("--follower", help="follower preset or .conf (default: from the log)")
    p.add_argument("--speedup", type=int, choices=(1, 2), default=1)
    p.add_argument("--filter", action="store_true")
    p.add_argument("--repeat", type=int, default=1, help="playback cycles, separated by a reset ramp")
    p.add_argument("--reset-seconds", type=float, default=2.0)
    p.add_argument("--hold-seconds", type=float, default=0.0)
    p.add_argument("--sensor-noise", type=float, default=0.0)
    p.add_argument("--gnuplot", action="store_true")
    p.set_defaults(func=cmd_mocopy)

    p = sub.add_parser("dataset", help="imitation-learning datasets")
    dsub = p.add_subparsers(dest="action", required=True)
    b = dsub.add_parser("build", parents=[common])
    b.add_argument("--logs", nargs="+", required=True)
    b.add_argument("--arm", choices=("right", "left"), default="right")
    b.add_argument("--joints", nargs="+", help="explicit 1-based joints instead of --arm")
    b.add_argument("--noise-variance", type=float, default=0.01)
    b.add_argument("--validation", type=int, default=3, help="trailing logs held out for validation")
    b.set_defaults(func=cmd_dataset)

    p = sub.add_parser("train", parents=[common], help="train the policy")
    p.add_argument("--dataset", required=True)
    p.add_argument("--preset", choices=("desk", "paper"), default="desk")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--window", type=int, default=100)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--gnuplot", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", parents=[common], help="run the trained policy in closed loop")
    p.add_argument("--weights", required=True)
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--scene", help="scene JSON; the target is chosen by select-target")
    target.add_argument("--xy", type=float, nargs=2)
    p.add_argument("--follower", default="foodly-typer")
    p.add_argument("--duration", type=float, default=3.0)
    p.add_argument("--sensor-noise", type=float, default=0.0)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("select-target", help="choose the object to pick from a scene")
    p.add_argument("--scene", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("demo-teach-replay", parents=[common], help="teach with contact, then replay")
    p.set_defaults(func=cmd_demo_teach_replay)

    p = sub.add_parser("demo-identify", parents=[common], help="excite, then identify arm groups")
    p.add_argument("--leader", default="sciurus17")
    p.add_argument("--follower", default="foodly-typer")
    p.add_argument("--group", action="append", choices=sorted(GROUPS))
    p.add_argument("--duration", type=float, default=60.0)
    p.add_argument("--mismatch", type=float, default=0.1)
    p.set_defaults(func=cmd_demo_identify)

    p = sub.add_parser("demo-imitation", parents=[common], help="reach demos, training and held-out trials")
    p.add_argument("--leader", default="foodly-typer")
    p.add_argument("--follower", default="foodly-typer")
    p.add_argument("--demos", type=int, default=20)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--validation", type=int, default=0)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--lr", type=float, default=1e-2)
    p.add_argument("--preset", choices=("desk", "paper"), default="desk")
    p.add_argument("--tolerance", type=float, default=0.1)
    p.set_defaults(func=cmd_demo_imitation)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, LogFormatError, ContainerError, NoTargetError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, TrainingError, FloatingPointError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
