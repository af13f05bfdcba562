import numpy as np
import pytest

from teachsim.params import (
    CONFIG_PATH_ENV,
    N_JOINTS,
    ConfigError,
    GravityParams,
    RobotParams,
    dumps_robot_params,
    load_robot_params,
    loads_robot_params,
    preset,
)

# Controller and hardware parameters of the two robots (joint 1..19).
SCIURUS = {
    "kp": [50, 15, 30, 30, 10, 35, 20, 80] * 2 + [40, 128, 128],
    "kd": [20, 40, 33, 20, 20, 20, 20, 20] * 2 + [20, 20, 20],
    "kf": [0.9, 0.4, 0.5, 0.5, 0.7, 0.7, 0.5, 0.9] * 2 + [0.0, 0.0, 0.0],
    "inertia": [0.1099, 0.1147, 0.0432, 0.0582, 0.005676, 0.0066, 0.006281, 0.006891] * 2 + [0.1, 0.005, 0.005],
    "viscous": [0.4105, 0.7655, 0.2187, 0.2687, 0.0400, 0.0391, 0.0500, 0.021] * 2 + [0.0, 0.0, 0.0],
    "cutoff": [30] * 16 + [15, 20, 20],
}
FOODLY = {
    "kp": [50, 15, 30, 30, 10, 35, 20, 150] * 2 + [40, 128, 128],
    "kd": [20, 40, 33, 40, 20, 20, 20, 20] * 2 + [20, 20, 20],
    "kf": [0.9, 0.4, 0.5, 0.5, 0.7, 0.7, 0.5, 0.9] * 2 + [0.0, 0.0, 0.0],
    "inertia": [0.0649, 0.1067, 0.0536, 0.0506, 0.0100, 0.0130, 0.0120, 0.0130] * 2 + [0.2, 0.01, 0.01],
    "viscous": [0.1609, 0.4466, 0.2730, 0.1706, 0.0400, 0.0391, 0.0500, 0.0210] * 2 + [0.0, 0.0, 0.0],
    "cutoff": [30] * 16 + [15, 20, 20],
}
GRAVITY = {
    "sciurus17": dict(m2=0.1936, m3=0.1936, m4=0.3112, c2=0.1936, c3=0.1936, c4=0.3948, l2=0.1903, l3=0.1870),
    "foodly-typer": dict(m2=0.1958, m3=0.1958, m4=0.3203, c2=0.1958, c3=0.1958, c4=0.3965, l2=0.1933, l3=0.1909),
}


@pytest.mark.parametrize("name,table", [("sciurus17", SCIURUS), ("foodly-typer", FOODLY)])
def test_preset_joint_tables(name, table):
    p = preset(name)
    for field, values in table.items():
        np.testing.assert_array_equal(getattr(p, field), np.array(values, dtype=float), err_msg=field)


@pytest.mark.parametrize("name", ["sciurus17", "foodly-typer"])
def test_preset_gravity_tables(name):
    gp = preset(name).gravity
    for field, value in GRAVITY[name].items():
        assert getattr(gp, field) == value, field
    assert gp.g == 9.80665


def test_lumped_parameters():
    gp = GravityParams(**GRAVITY["foodly-typer"], g=9.80665)
    lp = gp.lumped()
    assert lp.p1 == pytest.approx(0.1958 * 0.1958 + (0.1958 + 0.1933) * 0.1958)
    assert lp.p2 == pytest.approx(0.3965 * 0.3203)
    assert lp.p3 == pytest.approx((0.1933 + 0.1909) * 0.3203)


def test_round_trip_is_exact(foodly, rng):
    p = foodly.perturbed(0.1, rng)
    q = loads_robot_params(dumps_robot_params(p))
    for field in ("kp", "kd", "kf", "inertia", "viscous", "cutoff"):
        np.testing.assert_array_equal(getattr(p, field), getattr(q, field))
    assert p.fingerprint() == q.fingerprint()


def test_perturbed_only_touches_inertia_and_friction(foodly, rng):
    p = foodly.perturbed(0.1, rng)
    assert np.all(np.abs(p.inertia / foodly.inertia - 1) <= 0.1)
    np.testing.assert_array_equal(p.kp, foodly.kp)
    assert foodly.perturbed(0.0, rng).fingerprint() == foodly.fingerprint()


def test_validation_rejects_bad_arrays(foodly):
    with pytest.raises(ValueError):
        foodly.with_updates(inertia=np.zeros(N_JOINTS))
    with pytest.raises(ValueError):
        foodly.with_updates(kp=np.ones(5))


def test_missing_config_is_config_error():
    with pytest.raises(ConfigError):
        load_robot_params("no-such-robot")
    with pytest.raises(ConfigError):
        preset("no-such-robot")


def test_bad_config_text():
    with pytest.raises(ConfigError):
        loads_robot_params("[joints]\nkp = 1, 2\n")


def test_search_path_env(tmp_path, monkeypatch, sciurus):
    (tmp_path / "custom.conf").write_text(dumps_robot_params(sciurus.with_updates(name="custom")))
    monkeypatch.setenv(CONFIG_PATH_ENV, str(tmp_path))
    p = load_robot_params("custom")
    assert isinstance(p, RobotParams)
    assert p.name == "custom"
    np.testing.assert_array_equal(p.inertia, sciurus.inertia)


def test_table_anomalies_are_flagged_not_fixed(foodly, sciurus):
    for p in (foodly, sciurus):
        notes = p.gravity.anomalies()
        assert len(notes) == 3 and any("exceeds" in n for n in notes)
    assert foodly.gravity.c2 == foodly.gravity.m2  # loaded as printed


def test_anomalies_logged_once(tmp_path, caplog, foodly):
    from teachsim.params import load_robot_params, save_robot_params

    path = tmp_path / "copy.conf"
    save_robot_params(foodly, path)
    with caplog.at_level("WARNING", logger="teachsim.params"):
        load_robot_params(path)
        load_robot_params(path)
    flagged = [r for r in caplog.records if "suspicious" in r.getMessage()]
    assert len(flagged) == 1
