import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrlab.geometry import OutsideDomainError, ball, boundary_distance, box, region_gap
from qrlab.seeding import rng_for

finite_coords = st.floats(-5, 5, allow_nan=False)


def test_ball_center_distance():
    region = ball([0.0, 0.0], 1.0)
    assert boundary_distance(region, [0.0, 0.0]) == 1.0


def test_ball_offset_distance():
    region = ball([0.0, 0.0], 1.0)
    assert boundary_distance(region, [0.4, 0.0]) == pytest.approx(0.6)


def test_box_distance_min_over_faces():
    # oracle: distance to each of the four faces of [-1,1]^2 from (0.5, 0)
    region = box([-1.0, -1.0], [1.0, 1.0])
    x = np.array([0.5, 0.0])
    faces = [x[0] - (-1.0), 1.0 - x[0], x[1] - (-1.0), 1.0 - x[1]]
    assert min(faces) == 0.5
    assert boundary_distance(region, x) == pytest.approx(min(faces))


def test_outside_point_refused():
    with pytest.raises(OutsideDomainError):
        boundary_distance(ball([0.0, 0.0], 1.0), [2.0, 0.0])


def test_dimension_floor():
    with pytest.raises(ValueError):
        ball([0.0], 1.0)
    with pytest.raises(ValueError):
        box([0.0], [1.0])


def test_degenerate_box_refused():
    with pytest.raises(ValueError):
        box([0.0, 0.0], [1.0, 0.0])


@settings(max_examples=60, derandomize=True, deadline=None)
@given(st.lists(finite_coords, min_size=2, max_size=2),
       st.lists(finite_coords, min_size=2, max_size=2))
def test_boundary_distance_is_1_lipschitz_on_ball(p, q):
    region = ball([0.0, 0.0], 10.0)
    p, q = np.array(p), np.array(q)
    lhs = abs(region.boundary_distance(p) - region.boundary_distance(q))
    assert lhs <= np.linalg.norm(p - q) + 1e-12


@settings(max_examples=60, derandomize=True, deadline=None)
@given(st.lists(finite_coords, min_size=2, max_size=2),
       st.lists(finite_coords, min_size=2, max_size=2))
def test_boundary_distance_is_1_lipschitz_on_box(p, q):
    region = box([-6.0, -6.0], [6.0, 6.0])
    p, q = np.array(p), np.array(q)
    lhs = abs(region.boundary_distance(p) - region.boundary_distance(q))
    assert lhs <= np.linalg.norm(p - q) + 1e-12


@pytest.mark.parametrize("region", [ball([0.3, -0.2], 0.8), box([-1.0, 0.0], [2.0, 1.0])])
def test_sampler_stays_inside(region):
    pts = region.sample(500, rng_for(0, "geometry"))
    assert np.all(region.contains(pts))
    assert np.all(region.boundary_distance(pts) >= 0)


def test_region_gap_ball_in_ball():
    inner = ball([0.1, 0.0], 0.3)
    outer = ball([0.0, 0.0], 1.0)
    assert region_gap(inner, outer) == pytest.approx(1.0 - 0.1 - 0.3)


def test_region_gap_box_in_ball():
    inner = box([-0.2, -0.2], [0.2, 0.2])
    outer = ball([0.0, 0.0], 1.0)
    # farthest corner sits at radius 0.2*sqrt(2)
    assert region_gap(inner, outer) == pytest.approx(1.0 - 0.2 * np.sqrt(2))


def test_region_gap_ball_in_box():
    inner = ball([0.25, 0.0], 0.25)
    outer = box([-1.0, -1.0], [1.0, 1.0])
    assert region_gap(inner, outer) == pytest.approx(0.5)
