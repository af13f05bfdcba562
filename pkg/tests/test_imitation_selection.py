import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from teachsim.imitation.selection import ObjectScene, select_target

from oracles import brute_force_select

TRAY = (0.0, 0.0, 1.0, 1.0)


def test_isolated_object_wins():
    centers = [[0.2, 0.2], [0.25, 0.2], [0.8, 0.8], [0.2, 0.3]]
    assert select_target(ObjectScene(centers, TRAY)) == 2


def test_band_excludes_boundary():
    centers = [[0.5, 0.5], [0.2, 0.2], [0.25, 0.25], [0.4, 0.9]]
    scene = ObjectScene(centers, TRAY, band=(0.4, 0.0, 0.6, 1.0))
    assert not scene.eligible()[3]  # on the band edge
    assert select_target(scene) in (1, 2)


def test_edge_margin():
    scene = ObjectScene([[0.01, 0.5], [0.3, 0.5], [0.7, 0.5]], TRAY, edge_margin=0.05)
    np.testing.assert_array_equal(scene.eligible(), [False, True, True])


def test_no_eligible_and_single():
    assert select_target(ObjectScene([[0.5, 0.5]], TRAY, band=(0.4, 0, 0.6, 1))) is None
    assert select_target(ObjectScene([[0.5, 0.5], [0.1, 0.5]], TRAY, band=(0.4, 0, 0.6, 1))) == 1


def test_ties_go_to_lowest_index():
    centers = [[0.2, 0.5], [0.4, 0.5], [0.8, 0.5], [0.8, 0.7]]
    # 0 and 1 are 0.2 apart, as are 2 and 3: every minimum distance ties
    assert select_target(ObjectScene(centers, TRAY)) == 0


def test_defaults():
    scene = ObjectScene.with_defaults([[0.1, 0.1]], (0.0, 0.0, 2.0, 1.0))
    assert scene.band == pytest.approx((0.85, 0.0, 1.15, 1.0))
    assert scene.edge_margin == pytest.approx(0.05 * np.sqrt(5))


def test_invalid_scenes():
    with pytest.raises(ValueError):
        ObjectScene([[1.5, 0.5]], TRAY)
    with pytest.raises(ValueError):
        ObjectScene([[0.5, 0.5]], (1, 1, 0, 0))
    with pytest.raises(ValueError):
        ObjectScene([[0.5, 0.5]], TRAY, edge_margin=-1)


def test_json_round_trip(tmp_path):
    scene = ObjectScene([[0.1, 0.2], [0.7, 0.3]], TRAY, (0.4, 0, 0.6, 1), 0.02)
    back = ObjectScene.from_json(scene.to_json())
    np.testing.assert_array_equal(back.centers, scene.centers)
    assert (back.tray, back.band, back.edge_margin) == (scene.tray, scene.band, scene.edge_margin)
    p = tmp_path / "scene.json"
    p.write_text('{"centers": [[0.2, 0.2]], "tray": [0, 0, 1, 1]}')
    assert ObjectScene.load(p).band is not None
    with pytest.raises(ValueError):
        ObjectScene.from_json('{"tray": [0, 0, 1, 1]}')


scenes = st.integers(1, 12).flatmap(
    lambda n: st.tuples(
        st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=n, max_size=n),
        st.booleans(),
        st.floats(0, 0.2),
    )
)


@given(scenes)
@settings(max_examples=200, deadline=None)
def test_matches_brute_force(args):
    centers, use_band, margin = args
    band = (0.42, 0.0, 0.58, 1.0) if use_band else None
    scene = ObjectScene(centers, TRAY, band, margin)
    assert select_target(scene) == brute_force_select(centers, TRAY, band, margin)


@given(
    st.lists(st.tuples(st.floats(0.06, 0.94), st.floats(0.06, 0.94)), min_size=2, max_size=10, unique=True),
    st.sampled_from([0.5, 2.0, 4.0]),
    st.tuples(st.sampled_from([-3.0, 0.0, 1.5]), st.sampled_from([-1.0, 0.0, 2.5])),
)
@settings(max_examples=100, deadline=None)
def test_similarity_invariance(centers, scale, shift):
    # power-of-two style scales and exact shifts keep distances ordered the same
    scene = ObjectScene.with_defaults(centers, TRAY)
    d = np.array([[np.hypot(*(np.subtract(a, b))) for b in centers] for a in centers])
    np.fill_diagonal(d, np.inf)
    mins = np.sort(d.min(axis=1))
    if len(mins) > 1 and np.any(np.diff(np.unique(mins)) < 1e-9):
        return  # near ties can flip under rounding
    c = np.array(centers)
    edge = np.minimum.reduce([c[:, 0], 1 - c[:, 0], c[:, 1], 1 - c[:, 1]])
    if np.any(np.abs(edge - scene.edge_margin) < 1e-9) or np.any(np.abs(np.abs(c[:, 0] - 0.5) - 0.075) < 1e-9):
        return  # so can points on an exclusion boundary
    assert select_target(scene.transformed(scale, shift)) == select_target(scene)
