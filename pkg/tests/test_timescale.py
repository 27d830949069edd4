import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tsfrac.errors import DegenerateScaleError, NotANodeError, NotInScaleError, OverlapError, ResolutionError
from tsfrac.timescale import (
    Side,
    build_mesh,
    build_time_scale,
    classify,
    graininess,
    parse_scale_text,
    preset,
    rho,
    sigma,
)


def test_construction_and_merge():
    ts = build_time_scale([(0, 0), (1, 2), (3, 3)])
    assert (ts.a, ts.b) == (0, 3)
    assert 1.5 in ts and 2.5 not in ts
    assert build_time_scale([(0, 1), (1, 2)]).segments == ((0.0, 2.0),)
    assert build_time_scale([(3, 3), (0, 1)]).segments == ((0.0, 1.0), (3.0, 3.0))


@pytest.mark.parametrize(
    "segs, err",
    [([(0, 2), (1, 3)], OverlapError), ([(2, 1)], OverlapError), ([(1, 1)], DegenerateScaleError), ([], DegenerateScaleError)],
)
def test_bad_segments(segs, err):
    with pytest.raises(err):
        build_time_scale(segs)


def test_jumps_on_mixed(mixed_scale):
    ts = mixed_scale
    assert sigma(ts, 0) == 1 and sigma(ts, 1.5) == 1.5 and sigma(ts, 3) == 3
    assert rho(ts, 1) == 0 and rho(ts, 1.5) == 1.5 and rho(ts, 0) == 0
    assert graininess(ts, 0) == 1 and graininess(ts, 1.5) == 0 and graininess(ts, 2) == 1
    with pytest.raises(NotInScaleError):
        sigma(ts, 2.5)


def test_classify(mixed_scale):
    c0 = classify(mixed_scale, 0)
    assert c0.right is Side.SCATTERED and c0.left is Side.BOUNDARY and c0.label == "right-scattered"
    assert classify(mixed_scale, 1.5).label == "dense"
    c3 = classify(mixed_scale, 3)
    assert c3.left is Side.SCATTERED and c3.right is Side.BOUNDARY
    assert classify(build_time_scale([(0, 0), (1, 1), (2, 2)]), 1).isolated


def test_mesh_examples():
    m = build_mesh(preset("unit-interval"), 0.25)
    np.testing.assert_array_equal(m.nodes, [0, 0.25, 0.5, 0.75, 1])
    assert m.dense_cells == 4 and m.scattered_cells == 0
    np.testing.assert_array_equal(m.mu[:-1], 0.25)

    m = build_mesh(preset("integer-4"), 0.01)
    np.testing.assert_array_equal(m.nodes, [0, 1, 2, 3])
    assert m.purely_scattered and np.all(m.mu[:-1] == 1)

    m = build_mesh(build_time_scale([(0, 0), (1, 2)]), 0.5)
    np.testing.assert_array_equal(m.nodes, [0, 1, 1.5, 2])
    assert m.cell_kinds == ["scattered", "dense", "dense"]
    assert m.mu.sum() == 2


def test_mesh_index_and_caps():
    m = build_mesh(preset("mixed"), 0.5)
    assert m.index(1.5) == 2
    with pytest.raises(NotANodeError):
        m.index(1.25)
    with pytest.raises(ResolutionError):
        build_mesh(preset("unit-interval"), 1e-6, node_cap=1000)
    with pytest.raises(ValueError):
        build_mesh(preset("unit-interval"), 0.0)


def test_mesh_arrays_read_only():
    m = build_mesh(preset("unit-interval"), 0.5)
    with pytest.raises(ValueError):
        m.nodes[0] = 1.0


def test_parse_scale_text():
    ts = parse_scale_text("# mixed\n0 0\n1 2   # dense part\n3\n")
    assert ts == preset("mixed")
    with pytest.raises(ValueError, match="line 1"):
        parse_scale_text("1 2 3")


segment_lists = st.lists(
    st.tuples(st.floats(0.05, 2.0), st.floats(0.0, 2.0), st.booleans()), min_size=1, max_size=5
)


def _scale_from(draw):
    segs, x = [], 0.0
    for gap, length, is_point in draw:
        hi = x if is_point else x + max(length, 0.05)
        segs.append((x, hi))
        x = hi + gap
    segs.append((x, x))
    return build_time_scale(segs)


@given(segment_lists, st.floats(0.01, 0.5))
def test_mesh_invariants(draw, h):
    ts = _scale_from(draw)
    m = build_mesh(ts, h)
    assert math.isclose(m.mu.sum(), ts.b - ts.a, rel_tol=1e-12)
    for lo, _ in ts.segments:
        assert lo in m.nodes
    assert all(t in m.nodes for t in ts.isolated_points)
    for i, t in enumerate(m.nodes[:-1]):
        s = sigma(ts, t)
        assert s <= m.nodes[i + 1]
        assert (s == m.nodes[i + 1]) == bool(m.scattered[i])
        assert m.scattered[i] == (graininess(ts, t) > 0)
        assert classify(ts, t).right_scattered == (graininess(ts, t) > 0)
    assert np.all(m.mu[:-1] <= h * (1 + 1e-9) + np.where(m.scattered, np.inf, 0))


@given(segment_lists, st.integers(1, 40))
def test_refinement_monotone(draw, k):
    """Halving h: scattered cells unchanged, dense cells per segment at least 2n - 1, exactly 2n when L/h is integral."""
    ts = _scale_from(draw)
    h = 0.5 / k
    coarse, fine = build_mesh(ts, h), build_mesh(ts, h / 2)
    assert coarse.scattered_cells == fine.scattered_cells
    for lo, hi in ts.segments:
        if lo == hi:
            continue
        nc = int(np.sum((coarse.nodes[:-1] >= lo) & (coarse.nodes[:-1] < hi)))
        nf = int(np.sum((fine.nodes[:-1] >= lo) & (fine.nodes[:-1] < hi)))
        assert nf >= 2 * nc - 1


def test_refinement_doubles_on_integral_ratio():
    ts = build_time_scale([(0, 0), (1, 3), (4, 4.5)])
    for h in (0.5, 0.25, 0.125):
        c, f = build_mesh(ts, h), build_mesh(ts, h / 2)
        assert f.dense_cells == 2 * c.dense_cells
        assert f.scattered_cells == c.scattered_cells == 2
