"""Acceptance gate: one PASS/FAIL line per criterion, at the stated tolerances.

Each test prints its verdict line (visible with ``-s``); the lines are also
collected and repeated in the terminal summary of every pytest run. Runtime
bounds are part of each verdict.
"""

import json
import time

import numpy as np
import pytest

from teachsim.bilateral import BilateralPair, OperatorModel, Robot, simulate_teleop
from teachsim.cli import DEFAULT_TEACH, main
from teachsim.experiment import loads_config
from teachsim.imitation import build_dataset
from teachsim.imitation.dataset import episode_indices
from teachsim.imitation.inference import run_inference
from teachsim.imitation.network import NetworkParams, backward, forward
from teachsim.imitation.selection import ObjectScene, select_target
from teachsim.imitation.tasks import SPAN, SUBCHAIN, angles_to_xy, reach_demo
from teachsim.imitation.train import train
from teachsim.mocopy import prepare_replay, run_motion_copy, tracking_rms
from teachsim.motionlog import double_speed, two_pass_gain, zero_phase_filter
from teachsim.params import N_JOINTS
from teachsim.plant import GRAVITY_JOINTS, ContactModel, gravity_torque
from teachsim.sysid import (
    GroupParams,
    add_torque_noise,
    batch_least_squares,
    build_regressor,
    evaluate_params,
    excitation_reference,
    group_joints,
    identify,
    rls_fit,
    split_test,
)

from helpers import synthetic_log
from oracles import brute_force_select, gravity_reference, raw_gravity_args

RESULTS = {}


def verdict(number, title, checks, elapsed, limit):
    """Record and print the verdict; ``checks`` is a list of (ok, description)."""
    ok = all(c for c, _ in checks) and elapsed < limit
    detail = "; ".join(d for _, d in checks)
    line = f"ACCEPTANCE {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}; runtime {elapsed:.1f} s (< {limit:g} s)"
    RESULTS[number] = line
    print(line)
    return ok


# ------------------------------------------------------------------ 1


def test_01_bilateral_sync(sciurus, foodly):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    goal = np.zeros(N_JOINTS)
    goal[:16] = rng.uniform(-0.4, 0.4, 16)
    pair = BilateralPair.create(sciurus, foodly)
    K, B = OperatorModel.gains_for(sciurus, foodly)
    res = simulate_teleop(pair, OperatorModel.reach(np.zeros(N_JOINTS), goal, 0.5, 6.0, K, B), ContactModel.none(), 10.0)
    log = res.log
    tail = slice(len(log) - 1000, len(log))  # last 2 s
    sync = np.abs(log.theta_l[tail] - log.theta_f[tail]).max(axis=0)
    reached = np.abs(log.theta_f[-1] - goal).max()
    elapsed = time.perf_counter() - t0
    ok = verdict(
        1,
        "bilateral sync",
        [
            (sync.max() < 1e-2, f"max steady |theta_l - theta_f| = {sync.max():.2e} rad (< 1e-2)"),
            (reached < 0.05, f"final distance to goal {reached:.3f} rad"),
        ],
        elapsed,
        10,
    )
    assert ok


# ------------------------------------------------------------------ 2


def test_02_action_reaction(sciurus, foodly):
    t0 = time.perf_counter()
    goal = np.zeros(N_JOINTS)
    goal[[0, 3, 9]] = [0.5, 0.6, -0.5]
    contact = ContactModel(
        engagement=np.where(np.isin(np.arange(N_JOINTS), [0, 3]), 0.3, -0.3),
        stiffness=50.0,
        damping=0.5,
        enabled=np.isin(np.arange(N_JOINTS), [0, 3, 9]),
        direction=np.where(np.arange(N_JOINTS) == 9, -1.0, 1.0),
    )
    pair = BilateralPair.create(sciurus, foodly)
    K, B = OperatorModel.gains_for(sciurus, foodly)
    res = simulate_teleop(pair, OperatorModel.reach(np.zeros(N_JOINTS), goal, 0.5, 2.5, K, B), contact, 6.0)
    log = res.log
    checks = []
    for j in (0, 3, 9):
        m = np.abs(res.contact_torque[:, j]) > 0
        force_sum = np.mean(np.abs(log.tau_l[m, j] + log.tau_f[m, j]))
        mean_contact = np.mean(np.abs(res.contact_torque[m, j]))
        ratio = force_sum / mean_contact
        checks.append((m.sum() > 1000 and ratio < 0.05, f"joint {j + 1} ratio {100 * ratio:.2f}% over {m.sum()} ticks"))
    elapsed = time.perf_counter() - t0
    assert verdict(2, "action-reaction (< 5% of mean contact torque)", checks, elapsed, 10)


# ------------------------------------------------------------------ 3


def test_03_gravity(sciurus, foodly):
    t0 = time.perf_counter()
    worst, pattern_ok = 0.0, True
    zero = [j for j in range(N_JOINTS) if j not in GRAVITY_JOINTS]
    for k, params in enumerate((foodly, sciurus)):
        rng = np.random.default_rng(100 + k)
        theta = rng.uniform(-np.pi, np.pi, (500_000, N_JOINTS))
        g = gravity_torque(theta, params.gravity)
        ref = gravity_reference(theta, **raw_gravity_args(params))
        # normwise relative error per pose
        rel = np.abs(g - ref).max(axis=1) / np.abs(ref).max(axis=1)
        worst = max(worst, float(rel.max()))
        pattern_ok &= bool(np.all(g[:, zero] == 0.0))
    elapsed = time.perf_counter() - t0
    ok = verdict(
        3,
        "gravity vs term-by-term reference",
        [
            (worst < 1e-12, f"max relative error {worst:.2e} on 10^6 poses (< 1e-12)"),
            (pattern_ok, "zero pattern exact" if pattern_ok else "zero pattern violated"),
        ],
        elapsed,
        5,
    )
    assert ok


# ------------------------------------------------------------------ 4, 5

SYSID_GROUPS = ("1-4", "5-8", "9-12")


def _excitation(leader, follower, group, duration=60.0, seed=0):
    pair = BilateralPair.create(leader, follower, seed=seed)
    K, B = OperatorModel.gains_for(leader, follower)
    times, angles = excitation_reference(group_joints(group), duration, seed, amplitude=0.6)
    res = simulate_teleop(pair, OperatorModel(times, angles, K, B), ContactModel.none(), duration, seed=seed)
    return res.log, pair.follower.plant_params


@pytest.fixture(scope="module")
def sysid_logs(sciurus, foodly):
    t0 = time.perf_counter()
    logs = {g: _excitation(sciurus, foodly, g) for g in SYSID_GROUPS}
    return logs, time.perf_counter() - t0


def _rel_errors(est: GroupParams, true: GroupParams) -> dict:
    names = list(est.as_dict())
    return {n: abs(a / b - 1.0) for n, a, b in zip(names, est.vector(), true.vector())}


def test_04_sysid_recovery(sysid_logs, foodly):
    logs, build = sysid_logs
    t0 = time.perf_counter()
    checks = []
    for g in SYSID_GROUPS:
        log, truth = logs[g]
        true = GroupParams.from_robot(g, truth)
        clean = identify(log, g, foodly.cutoff)
        noisy = identify(add_torque_noise(log, 0.01, seed=7), g, foodly.cutoff)
        e_clean, e_noisy = _rel_errors(clean.params, true), _rel_errors(noisy.params, true)
        worst_c = max(e_clean, key=e_clean.get)
        worst_n = max(e_noisy, key=e_noisy.get)
        checks.append((e_clean[worst_c] < 0.02, f"{g} noiseless worst {worst_c} {100 * e_clean[worst_c]:.2f}% (< 2%)"))
        checks.append((e_noisy[worst_n] < 0.10, f"{g} 1% noise worst {worst_n} {100 * e_noisy[worst_n]:.2f}% (< 10%)"))
        if "p1" in e_clean:
            ident_est, ident_true = clean.params.identifiable(), true.identifiable()
            sum_err = abs(ident_est["p1+p3"] / ident_true["p1+p3"] - 1)
            p2_err = abs(ident_est["p2"] / ident_true["p2"] - 1)
            checks.append((True, f"{g} p1+p3 {100 * sum_err:.1e}%, p2 {100 * p2_err:.1e}% (info)"))
        train_log, _ = split_test(log, 10.0)
        reg = build_regressor(train_log, g, foodly.cutoff).interleaved()
        rls, batch = rls_fit(reg).theta, batch_least_squares(reg)
        rel = float(np.max(np.abs(rls - batch) / np.abs(batch)))
        checks.append((rel < 1e-6, f"{g} RLS vs batch {rel:.1e} (< 1e-6)"))
    elapsed = time.perf_counter() - t0 + build
    assert verdict(4, "system identification recovery", checks, elapsed, 30)


def test_05_held_out_evaluation(sysid_logs, foodly):
    logs, build = sysid_logs
    t0 = time.perf_counter()
    checks = []
    for g in SYSID_GROUPS:
        log, _ = logs[g]
        res = identify(log, g, foodly.cutoff, test_seconds=10.0)
        _, test_log = split_test(log, 10.0)
        reg = build_regressor(test_log, g, foodly.cutoff)

        def total_rms(p):
            return float(np.sqrt(np.mean((reg.y - reg.X @ p.vector()) ** 2)))

        base = total_rms(res.params)
        margin = np.inf
        for i in range(len(res.params.vector())):
            for sign in (-1, 1):
                vec = res.params.vector().copy()
                vec[i] *= 1 + 0.2 * sign
                margin = min(margin, total_rms(GroupParams.from_vector(g, vec)) - base)
        per_joint = evaluate_params(res.params, reg)
        checks.append((margin > 0, f"{g} test RMS {base:.2e} N m, smallest perturbation increase {margin:.2e}"))
        assert max(per_joint.values()) <= base * 10 + 1e-12
    # the excitation logs are shared with criterion 4 and timed there
    elapsed = time.perf_counter() - t0
    assert verdict(5, "held-out evaluation vs 20% perturbations", checks, elapsed, 10)


# ------------------------------------------------------------------ 6, 7


def test_06_motion_copy(foodly):
    t0 = time.perf_counter()
    cfg = loads_config(DEFAULT_TEACH)
    leader, follower = cfg.leader_params(), cfg.follower_params()
    pair = BilateralPair.create(leader, follower, seed=cfg.seed)
    contact = cfg.build_contact()
    teach = simulate_teleop(pair, cfg.build_operator(leader, follower), contact, cfg.duration, seed=cfg.seed)
    commands = prepare_replay(teach.log)
    replay = run_motion_copy(commands, Robot.create(follower), contact)
    rms = tracking_rms(replay, teach.log)

    # 5 mm at the arm's reach, expressed as an angle about the contact joint
    gp = follower.gravity
    offset = 0.005 / (gp.l2 + gp.l3)
    j = int(np.flatnonzero(contact.enabled)[0])
    shifted = ContactModel(contact.engagement + offset * np.eye(N_JOINTS)[j], contact.stiffness, contact.damping, contact.enabled, contact.direction)
    robot = Robot.create(follower)
    shifted_log = run_motion_copy(commands, robot, shifted)
    steady = slice(len(teach.log) - 500, len(teach.log))
    f_rec = np.mean(np.abs(teach.contact_torque[steady, j]))
    # contact torque of the shifted replay, recomputed from its follower angles
    from teachsim.plant import PlantState, contact_torque

    f_rep = np.mean(
        [abs(contact_torque(PlantState(th, om), shifted)[j]) for th, om in zip(shifted_log.theta_f[steady], shifted_log.omega_f[steady])]
    )
    change = abs(f_rep / f_rec - 1)
    elapsed = time.perf_counter() - t0
    ok = verdict(
        6,
        "motion-copy self-consistency",
        [
            (rms.max() < 0.02, f"replay RMS {rms.max():.2e} rad (< 0.02)"),
            (f_rep > 0 and change < 0.30, f"contact shifted {offset:.4f} rad: steady force {f_rep:.3f} vs {f_rec:.3f} N m ({100 * change:.1f}% < 30%)"),
        ],
        elapsed,
        20,
    )
    assert ok


def test_07_double_speed(foodly):
    t0 = time.perf_counter()
    log = synthetic_log(1000, (0.4, 0.6), seed=3)
    fast = double_speed(log)
    cmd = prepare_replay(log, speedup=2)
    kept = np.arange(0, 1000, 2)
    half = fast.duration == pytest.approx(log.duration / 2, rel=0, abs=1e-12)
    omega_ok = np.array_equal(cmd.omega, 2.0 * log.omega_l[kept]) and np.array_equal(fast.omega_f, 2.0 * log.omega_f[kept])
    exact = np.array_equal(cmd.theta, log.theta_l[kept]) and np.array_equal(cmd.tau_res, log.tau_l[kept])
    exact &= np.array_equal(fast.theta_f, log.theta_f[kept]) and np.array_equal(fast.tau_f, log.tau_f[kept])
    elapsed = time.perf_counter() - t0
    ok = verdict(
        7,
        "double-speed contract",
        [
            (half, f"duration {fast.duration:.3f} s of {log.duration:.3f} s"),
            (omega_ok, "omega exactly 2x"),
            (exact, "theta and tau bit-equal to retained samples"),
        ],
        elapsed,
        1,
    )
    assert ok


# ------------------------------------------------------------------ 8, 9


def test_08_zero_phase():
    t0 = time.perf_counter()
    dt, w, fc = 1 / 500, 5.0, 30.0
    # 113 periods of 5 rad/s at 500 Hz span 71000.0 samples to within 0.002,
    # so the correlation window holds whole periods and has no edge bias
    window, pad = 71000, 2000
    n = window + 2 * pad
    t = np.arange(n) * dt
    log = synthetic_log(n, (0, 0))
    x = np.sin(w * t)
    log.theta_l[:, 0] = x
    y = zero_phase_filter(log, fc).theta_l[:, 0]
    lags = np.arange(-50, 51)
    xm = x[pad : pad + window]
    xc = [np.dot(xm, y[pad + k : pad + k + window]) for k in lags]
    lag = int(lags[np.argmax(xc)])
    amp = np.sqrt(2 * np.mean(y[pad : pad + window] ** 2))
    gain = two_pass_gain(w, fc, dt)
    err = abs(amp / gain - 1)
    elapsed = time.perf_counter() - t0
    ok = verdict(
        8,
        "zero-phase filter",
        [(lag == 0, f"cross-correlation peak lag {lag} samples"), (err < 0.05, f"amplitude {amp:.5f} vs analytic {gain:.5f} ({100 * err:.3f}% < 5%)")],
        elapsed,
        1,
    )
    assert ok


def test_09_augmentation():
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    sizes = rng.integers(20, 3000, 6)
    logs = [synthetic_log(int(n), rng.uniform(0, 1, 2), seed=i) for i, n in enumerate(sizes)]
    ds = build_dataset(logs, validation=2)
    counts_ok = all(
        np.sum(ds.source == i) == 10 and all(len(ds.inputs[k]) == n // 10 for k in np.flatnonzero(ds.source == i))
        for i, n in enumerate(sizes)
    )
    counts_ok &= all(len(e) == 10 for e in [episode_indices(int(n)) for n in sizes])
    tr = ds.split(True)
    worst = 0.0
    for arrays in (ds.clean_inputs, ds.targets):
        s = np.vstack([arrays[i] for i in tr])
        worst = max(worst, np.abs(s.mean(axis=0)).max(), np.abs(s.std(axis=0) - 1).max())
    elapsed = time.perf_counter() - t0
    ok = verdict(
        9,
        "augmentation arithmetic",
        [(counts_ok, f"10 episodes of floor(N/10) steps for N in {sizes.tolist()}"), (worst < 1e-6, f"train stats off by {worst:.1e} (< 1e-6)")],
        elapsed,
        1,
    )
    assert ok


# ------------------------------------------------------------------ 10


def test_10_gradient_check():
    t0 = time.perf_counter()
    net = NetworkParams.preset("desk", 24, 24, seed=2)
    rng = np.random.default_rng(10)
    X, C, T = rng.normal(size=(2, 4, 24)), rng.normal(size=(2, 2)), rng.normal(size=(2, 4, 24))

    def outputs():
        return forward(net, X, C, keep_cache=False)[0]

    Y, cache, _ = forward(net, X, C)
    grads = backward(net, cache, Y - T)
    eps = 1e-5
    worst, count = 0.0, 0
    for k, w in net.weights.items():
        flat = w.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + eps
            y_up = outputs()
            flat[i] = old - eps
            y_down = outputs()
            flat[i] = old
            # L = 0.5 sum (Y - T)^2, so L+ - L- = 0.5 sum (Y+ - Y-)(Y+ + Y- - 2T) without cancellation
            num = 0.5 * np.sum((y_up - y_down) * (y_up + y_down - 2 * T)) / (2 * eps)
            ana = grads[k].reshape(-1)[i]
            scale = max(abs(num), abs(ana))
            if scale > 1e-6:
                worst = max(worst, abs(num - ana) / scale)
                count += 1
    elapsed = time.perf_counter() - t0
    assert verdict(10, "gradient check (desk 2x16, float64)", [(worst < 1e-4, f"max relative error {worst:.1e} over {count} weights (< 1e-4)")], elapsed, 30)


# ------------------------------------------------------------------ 11


def test_11_closed_loop_imitation(foodly):
    t0 = time.perf_counter()
    rng = np.random.default_rng(np.random.SeedSequence([0, 50]))
    train_xy = rng.uniform(0.1, 0.9, (20, 2))
    test_xy = rng.uniform(0.2, 0.8, (5, 2))
    logs = [reach_demo(foodly, foodly, xy, seed=i) for i, xy in enumerate(train_xy)]
    ds = build_dataset(logs, noise_variance=0.01, seed=0, validation=0, joints=SUBCHAIN)
    net = NetworkParams.preset("desk", ds.n_in, ds.n_out, seed=0)
    res = train(net, ds, lr=1e-2, epochs=100, seed=0, batch_size=16, window=100)
    errors, periodic = [], True
    for xy in test_xy:
        log = run_inference(res.net, ds.norm, Robot.create(foodly), xy, 3.0)
        errors.append(float(np.linalg.norm(angles_to_xy(log.theta_f[-1]) - xy)))
        changes = np.flatnonzero(np.any(np.diff(log.as_array()[:, 1 : 1 + 3 * N_JOINTS], axis=0) != 0, axis=1)) + 1
        periodic &= bool(np.all(changes % 10 == 0))
    hits = sum(e < 0.1 for e in errors)
    elapsed = time.perf_counter() - t0
    ok = verdict(
        11,
        "closed-loop imitation (desk preset)",
        [
            (hits >= 4, f"{hits}/5 held-out reaches within 10% of span (errors {', '.join(f'{e:.3f}' for e in errors)}; span {SPAN} rad -> unit square)"),
            (periodic, "command stream piecewise-constant with period 10 ticks"),
        ],
        elapsed,
        300,
    )
    assert ok


# ------------------------------------------------------------------ 12


def _random_scene(rng):
    n = int(rng.integers(0, 13))
    tray = (0.0, 0.0, float(rng.choice([1.0, 2.0])), 1.0)
    centers = rng.integers(0, 65, (n, 2)) / 64.0 * np.array([tray[2], 1.0])
    band = None
    if rng.random() < 0.7:
        half = rng.choice([0.0625, 0.125, 0.5]) * tray[2]
        band = (tray[2] / 2 - half, 0.0, tray[2] / 2 + half, 1.0)
    margin = float(rng.choice([0.0, 0.03125, 0.0625, 0.25]))
    return centers, tray, band, margin


def _quarter_turn(scene: ObjectScene) -> ObjectScene:
    """Rotate by 90 degrees about the origin: (x, y) -> (-y, x)."""

    def rect(r):
        return None if r is None else (-r[3], r[0], -r[1], r[2])

    c = scene.centers
    return ObjectScene(np.column_stack([-c[:, 1], c[:, 0]]), rect(scene.tray), rect(scene.band), scene.edge_margin)


def test_12_target_selection():
    t0 = time.perf_counter()
    rng = np.random.default_rng(12)
    mismatches, empties = 0, 0
    for _ in range(10_000):
        centers, tray, band, margin = _random_scene(rng)
        got = select_target(ObjectScene(centers.reshape(-1, 2), tray, band, margin))
        want = brute_force_select(centers.tolist(), tray, band, margin)
        mismatches += got != want
        empties += want is None
    invariance_fail = 0
    for _ in range(1_000):
        centers, tray, band, margin = _random_scene(rng)
        scene = ObjectScene(centers.reshape(-1, 2), tray, band, margin)
        scale = float(rng.choice([0.25, 0.5, 2.0, 8.0]))
        shift = tuple(rng.integers(-8, 9, 2).astype(float))
        moved = scene.transformed(scale, shift)
        if rng.random() < 0.5:
            moved = _quarter_turn(moved)
        invariance_fail += select_target(moved) != select_target(scene)
    elapsed = time.perf_counter() - t0
    ok = verdict(
        12,
        "target selection",
        [
            (mismatches == 0, f"{mismatches} mismatches vs brute force on 10^4 scenes ({empties} empty outcomes)"),
            (invariance_fail == 0, f"{invariance_fail} changes under similarity transforms on 10^3 scenes"),
        ],
        elapsed,
        10,
    )
    assert ok


# ------------------------------------------------------------------ 13


def _artifacts(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_13_determinism(tmp_path, foodly):
    t0 = time.perf_counter()
    demo = tmp_path / "demo.csv"
    from teachsim import motionlog

    motionlog.save(reach_demo(foodly, foodly, (0.3, 0.7), duration=1.0), demo)
    demo2 = tmp_path / "demo2.csv"
    motionlog.save(reach_demo(foodly, foodly, (0.6, 0.4), duration=1.0, seed=1), demo2)
    runs = {}
    for tag in ("a", "b"):
        root = tmp_path / tag
        codes = [
            main(["demo-teach-replay", "--seed", "3", "--out", str(root / "teach")]),
            main(["teleop", "--repeat", "2", "--seed", "4", "--out", str(root / "teleop")]),
            main(["mocopy", "--log", str(root / "teach" / "teach.csv"), "--speedup", "2", "--filter", "--out", str(root / "mocopy")]),
            main(["dataset", "build", "--logs", str(demo), str(demo2), "--joints", "5", "6", "--validation", "1", "--seed", "5", "--out", str(root / "ds")]),
            main(["train", "--dataset", str(root / "ds" / "dataset.npz"), "--epochs", "3", "--workers", "2", "--seed", "6", "--out", str(root / "train")]),
            main(["infer", "--weights", str(root / "train" / "weights.npz"), "--xy", "0.5", "0.5", "--duration", "0.4", "--out", str(root / "infer")]),
        ]
        assert codes == [0] * len(codes)
        runs[tag] = _artifacts(root)
    differing = sorted(k for k in runs["a"] if runs["a"][k] != runs["b"].get(k))
    same_names = set(runs["a"]) == set(runs["b"])
    n_logs = sum(k.endswith((".csv", ".npz")) for k in runs["a"])
    elapsed = time.perf_counter() - t0
    ok = verdict(
        13,
        "determinism",
        [(same_names and not differing, f"{len(runs['a'])} artifacts ({n_logs} logs/weights/datasets) byte-identical across repeats" + (f"; differing: {differing}" if differing else ""))],
        elapsed,
        120,
    )
    assert ok
