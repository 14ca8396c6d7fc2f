import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from col_lab.errors import DomainError
from col_lab.geometry import DecisionSet, diameter, project, project_point
from col_lab.verification import projection_gap

from oracles import project_ball, project_box, project_floored_simplex_bisect
from strategies import decision_sets, finite, set_and_point


def reference_projection(dset, y):
    if dset.kind == "box":
        return project_box(y, dset.lower, dset.upper)
    if dset.kind == "ball":
        return project_ball(y, dset.center, dset.radius)
    blocks = y.reshape(dset.num_blocks, dset.block_size)
    return np.concatenate([project_floored_simplex_bisect(b, dset.eps) for b in blocks])


class TestProjectionExamples:
    def test_box_clip(self):
        res = project(DecisionSet.box([-1, -1], [1, 1]), [2.0, -3.0])
        np.testing.assert_array_equal(res.point, [1.0, -1.0])
        assert res.residual == pytest.approx(np.sqrt(1 + 4))

    def test_simplex_vertex(self):
        res = project(DecisionSet.simplices(1, 2), [2.0, 0.0])
        np.testing.assert_array_equal(res.point, [1.0, 0.0])

    def test_member_is_fixed(self):
        dset = DecisionSet.simplices(2, 3, 0.05)
        y = np.array([0.2, 0.3, 0.5, 0.9, 0.05, 0.05])
        res = project(dset, y)
        np.testing.assert_array_equal(res.point, y)
        assert res.residual == 0.0

    def test_floored_simplex_of_expert_row(self):
        # projection of a deterministic row onto the 0.1-floored 2-simplex
        np.testing.assert_allclose(project_point(DecisionSet.simplices(1, 2, 0.1), [1.0, 0.0]),
                                   [0.9, 0.1], atol=1e-15)

    def test_ball_radial(self):
        np.testing.assert_allclose(project_point(DecisionSet.ball([1.0, 0.0], 2.0), [5.0, 3.0]),
                                   [1.0 + 2 * 0.8, 2 * 0.6])

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            project(DecisionSet.box([0, 0], [1, 1]), [1.0, 2.0, 3.0])

    @pytest.mark.parametrize("eps", [0.24999999999999997, 0.25 - 1e-12, 0.2499])
    def test_floor_close_to_one_over_size(self, eps):
        # block_size * eps within rounding of 1: the set shrinks to (almost) a point
        dset = DecisionSet.simplices(2, 4, eps)
        y = np.array([0.0, 0.0, 0.0, 2.0, -5.0, 1e3, 0.0, 0.0])
        p = project_point(dset, y)
        assert dset.contains(p)
        np.testing.assert_allclose(p, project_floored_simplex_bisect(y[:4], eps).tolist()
                                   + project_floored_simplex_bisect(y[4:], eps).tolist(), atol=1e-12)

    def test_tie_break_is_deterministic(self):
        # equal coordinates must stay equal
        p = project_point(DecisionSet.simplices(1, 4), [3.0, 3.0, 3.0, -1.0])
        np.testing.assert_allclose(p, [1 / 3, 1 / 3, 1 / 3, 0.0], atol=1e-15)


class TestDiameter:
    def test_box(self):
        assert diameter(DecisionSet.box([-1, -1], [1, 1])) == pytest.approx(2 * np.sqrt(2), abs=1e-15)

    def test_ball(self):
        assert diameter(DecisionSet.ball([0, 0, 0], 3.0)) == 6.0

    def test_simplex(self):
        assert diameter(DecisionSet.simplices(1, 2)) == pytest.approx(np.sqrt(2), abs=1e-15)

    def test_simplex_product(self):
        assert diameter(DecisionSet.simplices(3, 4)) == pytest.approx(np.sqrt(6), abs=1e-15)

    @given(decision_sets(kinds=("box", "simplices"), max_dim=4))
    def test_matches_vertex_brute_force(self, dset):
        if dset.num_vertices() > 300:
            return
        V = dset.vertices()
        brute = np.max(np.linalg.norm(V[:, None] - V[None], axis=2))
        assert dset.diameter == pytest.approx(brute, abs=1e-12)

    def test_infeasible_floor(self):
        with pytest.raises(DomainError):
            DecisionSet.simplices(1, 4, 0.3)


class TestProjectionProperties:
    @given(set_and_point())
    def test_output_is_feasible(self, case):
        dset, y = case
        assert dset.contains(project_point(dset, y))

    @given(set_and_point())
    def test_matches_reference(self, case):
        dset, y = case
        np.testing.assert_allclose(project_point(dset, y), reference_projection(dset, y), atol=1e-9)

    @given(set_and_point())
    def test_idempotent_exactly(self, case):
        dset, y = case
        p = project_point(dset, y)
        np.testing.assert_array_equal(project_point(dset, p), p)

    @given(set_and_point(), st.lists(finite, min_size=15, max_size=15))
    def test_nonexpansive(self, case, other):
        dset, y1 = case
        y2 = np.array(other[: dset.dimension])
        gap = np.linalg.norm(project_point(dset, y1) - project_point(dset, y2))
        assert gap <= np.linalg.norm(y1 - y2) + 1e-12

    @given(set_and_point(max_dim=4), st.integers(0, 2**32 - 1))
    def test_no_closer_feasible_point_on_a_slice(self, case, seed):
        dset, y = case
        p = project_point(dset, y)
        assert projection_gap(dset, y, p, np.random.default_rng(seed)) <= 1e-6

    @given(set_and_point())
    def test_variational_characterisation(self, case):
        # <y - P(y), z - P(y)> <= 0 for feasible z
        dset, y = case
        p = project_point(dset, y)
        zs = dset.sample(np.random.default_rng(0), 20)
        scale = max(1.0, np.linalg.norm(y - p)) * max(1.0, dset.diameter)
        assert np.max((zs - p) @ (y - p)) <= 1e-9 * scale


class TestSetQueries:
    @given(decision_sets(), st.integers(0, 1000))
    def test_samples_are_members(self, dset, seed):
        pts = dset.sample(np.random.default_rng(seed), 25)
        assert all(dset.contains(p) for p in pts)

    @given(decision_sets(max_dim=2))
    def test_grid_is_feasible(self, dset):
        if dset.dimension > 3:
            return
        assert all(dset.contains(p) for p in dset.grid(7))

    def test_midpoint_member(self):
        for dset in (DecisionSet.box([0, 1], [2, 3]), DecisionSet.ball([1, 1], 0.5),
                     DecisionSet.simplices(2, 3, 0.1)):
            assert dset.contains(dset.midpoint())
