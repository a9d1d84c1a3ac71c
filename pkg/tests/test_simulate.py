"""轨迹模拟测试"""

import numpy as np
import pytest

from conelyap.analysis.simulate import simulate
from conelyap.errors import DimensionMismatchError


class TestSimulate:
    @pytest.mark.parametrize("policy", ["min_V", "vertex"])
    def test_halving_on_feasible_subspace(self, ex3, policy):
        trajectory = simulate(ex3, [1.0, 0.0], 10, policy)
        np.testing.assert_allclose(trajectory.norms, 0.5 ** np.arange(11), rtol=1e-9)
        assert trajectory.stopped is None
        assert trajectory.converges()

    def test_min_v_on_wedge(self, ex2, half_identity):
        trajectory = simulate(ex2, [2.0, 1.0], 5, "min_V", half_identity)
        np.testing.assert_allclose(trajectory.states[1], [1.0, 0.5], atol=1e-7)
        np.testing.assert_allclose(trajectory.values[1:] / trajectory.values[:-1], 0.25, rtol=1e-6)

    def test_random_policy_is_seeded(self, ex2):
        a = simulate(ex2, [2.0, 1.0], 6, "random", seed=5)
        b = simulate(ex2, [2.0, 1.0], 6, "random", seed=5)
        np.testing.assert_array_equal(a.states, b.states)
        for k in range(6):
            assert ex2.image_of_point(a.states[k]).contains(a.states[k + 1], 1e-7)

    def test_empty_image_stops(self, ex3):
        trajectory = simulate(ex3, [0.0, -1.0], 5)
        assert trajectory.stopped == "empty_image"
        assert len(trajectory.states) == 1
        assert not trajectory.converges()

    def test_bad_policy(self, ex3):
        with pytest.raises(ValueError):
            simulate(ex3, [1.0, 0.0], 3, "greedy")

    def test_dimension_mismatch(self, ex3):
        with pytest.raises(DimensionMismatchError):
            simulate(ex3, [1.0, 0.0, 0.0], 3)

    def test_to_frame(self, ex3):
        frame = simulate(ex3, [1.0, 0.0], 3).to_frame()
        assert list(frame.columns) == ["k", "x1", "x2", "norm", "V"]
        assert frame["k"].tolist() == [0, 1, 2, 3]
        assert frame["V"].iloc[-1] == pytest.approx(0.5 * 0.125**2)
