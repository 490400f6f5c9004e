import pytest
from hypothesis import given
from hypothesis import strategies as st

from apiscope.fusion import (
    DEFAULT_GRID,
    FusionConfig,
    classify_thread,
    joint_score,
    macro_f1,
    tune_weighting_factor,
)

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


class TestJointScore:
    def test_x_one_ignores_b(self):
        assert joint_score(0.7, 0.123, 1.0) == 0.7

    def test_x_zero_ignores_a(self):
        assert joint_score(0.9, 0.4, 0.0) == 0.4

    def test_hand_arithmetic(self):
        # 0.3 * 1.0 + 0.7 * 0.5
        assert joint_score(1.0, 0.5, 0.3) == pytest.approx(0.65, abs=1e-12)

    @pytest.mark.parametrize("a,b,x", [(1.2, 0.5, 0.5), (0.5, -0.1, 0.5), (0.5, 0.5, 1.5)])
    def test_out_of_range_rejected(self, a, b, x):
        with pytest.raises(ValueError):
            joint_score(a, b, x)

    @given(unit, unit, unit)
    def test_bounded_by_inputs(self, a, b, x):
        c = joint_score(a, b, x)
        assert min(a, b) - 1e-12 <= c <= max(a, b) + 1e-12

    @given(unit, unit, unit, unit)
    def test_monotone_in_a_and_b(self, a, b, x, bump):
        higher_a = min(1.0, a + bump)
        higher_b = min(1.0, b + bump)
        assert joint_score(higher_a, b, x) >= joint_score(a, b, x)
        assert joint_score(a, higher_b, x) >= joint_score(a, b, x)


class TestClassify:
    def test_above_threshold(self):
        assert classify_thread(0.65, 0.5) is True

    def test_boundary_is_strict(self):
        assert classify_thread(0.5, 0.5) is False

    def test_zero_threshold_zero_score(self):
        assert classify_thread(0.0, 0.0) is False


class TestTune:
    def test_grid_has_eleven_values(self):
        assert len(DEFAULT_GRID) == 11
        assert DEFAULT_GRID == tuple(round(i / 10, 1) for i in range(11))

    def test_perfect_syntactic_signal_selects_one(self):
        # A alone classifies perfectly; B is adversarial noise
        records = {
            "api.one.A.m": [(1.0, 0.1, True), (0.0, 0.9, False), (1.0, 0.2, True)],
            "api.two.B.m": [(0.0, 0.8, False), (1.0, 0.05, True), (0.0, 0.95, False)],
        }
        assert tune_weighting_factor(records) == 1.0

    def test_all_ties_break_to_largest(self):
        # A == B everywhere, so every x yields the same predictions
        records = {"a.b.C.m": [(0.9, 0.9, True), (0.1, 0.1, False)]}
        assert tune_weighting_factor(records) == 1.0

    def test_chosen_x_attains_exhaustive_maximum(self):
        records = {
            "a.b.C.m": [(0.8, 0.4, True), (0.2, 0.9, False), (0.6, 0.7, True)],
            "d.e.F.m": [(0.1, 0.8, True), (0.9, 0.3, False)],
        }
        chosen = tune_weighting_factor(records)
        scores = {x: macro_f1(records, x, 0.5) for x in DEFAULT_GRID}
        assert scores[chosen] == max(scores.values())

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            tune_weighting_factor({"a.b.C.m": [(1.0, 1.0, True)]}, grid=[])


class TestFusionConfig:
    def test_defaults(self):
        cfg = FusionConfig()
        assert cfg.t == 0.5
        assert cfg.grid == DEFAULT_GRID

    def test_bad_threshold_rejected(self):
        with pytest.raises(ValueError):
            FusionConfig(t=1.5)
