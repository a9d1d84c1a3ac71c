"""Lyapunov 验证与对偶定理流水线测试"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conelyap.analysis.functions import QuadOnCone, ScaledDistSq
from conelyap.analysis.lyapunov import (
    LyapunovQuery,
    SamplingSpec,
    check_theorem2,
    check_theorem3,
    check_theorem3_hypothesis,
    dual_candidate,
    gamma_search,
    slice_polyhedron,
    verify,
)
from conelyap.analysis.verdict import Verdict
from conelyap.data.generators import random_quadratic, random_strict_process
from conelyap.errors import DimensionMismatchError
from conelyap.geometry.cone import NEGATIVE, POSITIVE, PolyCone

FAST = SamplingSpec(count=60, seed=0, mesh=0.05)


class TestQuery:
    def test_gamma_range(self, ex3, half_identity):
        for gamma in (0.0, 1.0, 1.5):
            with pytest.raises(ValueError):
                LyapunovQuery(ex3, half_identity, gamma)

    def test_unknown_mode(self, ex3, half_identity):
        with pytest.raises(ValueError):
            LyapunovQuery(ex3, half_identity, 0.5, mode="sideways")

    def test_dimension_mismatch(self, ex3):
        V = QuadOnCone(np.eye(3), PolyCone.full(3))
        with pytest.raises(DimensionMismatchError):
            LyapunovQuery(ex3, V, 0.5)
        with pytest.raises(DimensionMismatchError):
            LyapunovQuery(ex3, QuadOnCone(np.eye(2), PolyCone.full(2)), 0.5, points=[[1.0, 0.0, 0.0]])

    def test_mode_flags(self, ex3, half_identity):
        query = LyapunovQuery(ex3, half_identity, 0.5, mode="goebel_strong")
        assert query.goebel and query.strong


class TestSlice:
    def test_slice_inside_feasible_set(self, ex3):
        F = ex3.feasible_set().cone
        S = slice_polyhedron(ex3, np.array([1.0, 0.0]), F)
        vertices, rays, lines = S.vertices_and_rays()
        np.testing.assert_allclose(vertices, [[-0.5, 0.0]], atol=1e-9)
        assert len(rays) == 0 and len(lines) == 0

    def test_slice_without_region(self, ex3):
        S = slice_polyhedron(ex3, np.array([1.0, 0.0]), None)
        _, rays, _ = S.vertices_and_rays()
        np.testing.assert_allclose(rays, [[0.0, -1.0]], atol=1e-9)


class TestVerify:
    def test_strong_margin_on_feasible_subspace(self, ex3, half_identity):
        report = verify(LyapunovQuery(ex3, half_identity, 0.25, "strong", FAST))
        assert report.verdict == Verdict.HOLDS
        assert report.gamma_margin == pytest.approx(0.25, abs=1e-9)
        assert report.details["region"] == "F(H)"
        assert report.sub_reports[0].name == "posdef"

    def test_strong_fails_below_margin(self, ex3, half_identity):
        report = verify(LyapunovQuery(ex3, half_identity, 0.2, "strong", FAST))
        assert report.verdict == Verdict.FAILS
        assert report.witness["ratio"] == pytest.approx(0.25, abs=1e-9)
        assert report.verdict.exit_code == 1

    def test_goebel_strong_fails_with_ray_witness(self, ex3, half_identity):
        query = LyapunovQuery(ex3, half_identity, 0.5, "goebel_strong", FAST, points=[[0.0, 1.0]])
        report = verify(query)
        assert report.verdict == Verdict.FAILS
        np.testing.assert_allclose(report.witness["x"], [0.0, 1.0])
        np.testing.assert_allclose(report.witness["ray"], [0.0, -1.0], atol=1e-9)
        assert report.witness["ratio"] == np.inf

    def test_weak_holds_on_subspace(self, ex3, half_identity):
        report = verify(LyapunovQuery(ex3, half_identity, 0.25, "weak", FAST))
        assert report.holds

    def test_weak_margin_on_wedge(self, ex2, half_identity):
        report = verify(LyapunovQuery(ex2, half_identity, 0.5, "weak", FAST))
        assert report.holds
        assert report.gamma_margin == pytest.approx(0.25, abs=1e-6)

    def test_goebel_weak_on_wedge(self, ex2, half_identity):
        report = verify(LyapunovQuery(ex2, half_identity, 0.5, "goebel_weak", SamplingSpec(count=1000, seed=0)))
        assert report.holds
        assert report.gamma_margin <= 0.05 + 1e-9
        assert report.details["region"] == "dom H"

    def test_posdef_failure_is_hypothesis_not_met(self, fixtures_dir):
        from conelyap.data.loader import load_process

        H = load_process(fixtures_dir / "linear_half.json")
        V = QuadOnCone(np.diag([1.0, 0.0]), PolyCone.full(2))
        report = verify(LyapunovQuery(H, V, 0.5, "weak", FAST))
        assert report.verdict == Verdict.HYPOTHESIS_NOT_MET
        assert report.stage("posdef").verdict == Verdict.HYPOTHESIS_NOT_MET

    def test_explicit_points_outside_region_are_skipped(self, ex3, half_identity):
        query = LyapunovQuery(ex3, half_identity, 0.25, "strong", FAST, points=[[0.0, 1.0]])
        report = verify(query)
        assert report.holds

    def test_unconverged_feasible_set_is_inconclusive(self, ex3, half_identity):
        ex3.max_iter = 1
        report = verify(LyapunovQuery(ex3, half_identity, 0.5, "weak", FAST))
        assert report.verdict == Verdict.INCONCLUSIVE
        assert report.details["reason"] == "feasible_set_not_converged"

    def test_deterministic(self, ex2, half_identity):
        a = verify(LyapunovQuery(ex2, half_identity, 0.5, "weak", FAST, max_workers=4))
        b = verify(LyapunovQuery(ex2, half_identity, 0.5, "weak", FAST, max_workers=1))
        assert a.to_dict() == b.to_dict()


class TestGammaSearch:
    def test_bisects_to_contraction_rate(self, strict_diag, half_identity):
        result = gamma_search(LyapunovQuery(strict_diag, half_identity, 0.5, "weak", FAST))
        assert result.gamma is not None
        assert 0.25 - 1e-3 <= result.gamma <= 0.25 + 1e-3
        assert result.report.holds
        assert result.evaluations > 1

    def test_no_gamma_when_not_decreasing(self, ex3, half_identity):
        result = gamma_search(LyapunovQuery(ex3, half_identity, 0.5, "goebel_strong", FAST))
        assert result.gamma is None
        assert result.report.verdict == Verdict.FAILS


class TestDualCandidate:
    def test_conjugate_of_restriction(self, ex3, half_identity):
        W = dual_candidate(ex3, half_identity)
        # (½‖·‖² + δ_{x₂=0})*(y) = ½y₁²
        for y in ([1.0, 0.0], [2.0, 5.0], [-3.0, 1.0]):
            assert W(y) == pytest.approx(0.5 * y[0] ** 2, rel=1e-8)

    def test_full_feasible_set_gives_self_conjugate(self, strict_diag, half_identity):
        W = dual_candidate(strict_diag, half_identity)
        assert isinstance(W, ScaledDistSq)
        assert W([3.0, 4.0]) == pytest.approx(12.5)


class TestTheorem2:
    def test_transversality_failure(self, ex3, half_identity):
        report = check_theorem2(ex3, half_identity, 0.25, FAST)
        assert report.verdict == Verdict.HYPOTHESIS_NOT_MET
        assert report.sub_reports[0].name == "transversality_pos"
        assert report.verdict.exit_code == 2

    def test_strict_pipeline(self, strict_diag, half_identity):
        report = check_theorem2(strict_diag, half_identity, 0.25, FAST)
        assert report.verdict == Verdict.HOLDS
        assert [s.name for s in report.sub_reports] == [
            "transversality_pos",
            "verify:weak",
            "dual_candidate",
            "verify:strong",
        ]
        assert report.stage("verify:strong").gamma_margin <= 0.25 + 1e-9

    def test_weak_premise_failure(self, strict_diag, half_identity):
        report = check_theorem2(strict_diag, half_identity, 0.2, FAST)
        assert report.verdict == Verdict.HYPOTHESIS_NOT_MET
        assert report.stage("verify:weak").verdict == Verdict.FAILS

    @pytest.mark.slow
    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=100_000), st.integers(min_value=1, max_value=3))
    def test_random_strict_processes(self, seed, n):
        # ½‖Ax‖² ≤ ½‖A‖²‖x‖²，γ > ‖A‖² 时弱前提成立
        rng = np.random.default_rng(seed)
        norm = float(rng.uniform(0.2, 0.9))
        H = random_strict_process(rng, n, norm=norm)
        V = QuadOnCone(0.5 * np.eye(n), PolyCone.full(n))
        report = check_theorem2(H, V, norm**2 + 0.01, SamplingSpec(count=1000, seed=seed))
        assert report.stage("verify:weak").holds, report.to_dict()
        assert report.verdict == Verdict.HOLDS, report.to_dict()


class TestNecessaryCondition:
    def test_orthant_graph(self):
        from conelyap.analysis.process import ConvexProcess

        H = ConvexProcess(PolyCone.nonnegative_orthant(2))
        assert H.check_necessary_condition() is False
        V = QuadOnCone(np.eye(1), PolyCone.full(1))
        assert verify(LyapunovQuery(H, V, 0.5, "strong", FAST)).verdict == Verdict.FAILS

    @pytest.mark.slow
    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=100_000), st.integers(min_value=1, max_value=3))
    def test_violation_rules_out_strong_candidates(self, seed, n):
        rng = np.random.default_rng(seed)
        H = random_strict_process(rng, n, norm=float(rng.uniform(0.1, 0.9)))
        assert H.check_necessary_condition() is False
        V = random_quadratic(rng, n)
        gamma = float(rng.uniform(0.05, 0.95))
        report = verify(LyapunovQuery(H, V, gamma, "strong", SamplingSpec(count=100, seed=seed)))
        assert report.verdict == Verdict.FAILS, report.to_dict()


class TestTheorem3:
    @pytest.mark.parametrize("name", ["ex2.json", "ex3.json", "strict_diag.json", "diag_linear.json"])
    def test_hypothesis_auto_passes_for_adjoint(self, fixtures_dir, name):
        from conelyap.data.loader import load_process

        H = load_process(fixtures_dir / name)
        report = check_theorem3_hypothesis(H, H.dual(POSITIVE), FAST)
        assert report.verdict == Verdict.HOLDS
        assert report.details["auto"] == "G = H+"

    def test_linear_pipeline_with_negative_dual(self, diag_linear, half_identity):
        report = check_theorem3(diag_linear, diag_linear.dual(NEGATIVE), half_identity, 0.25, FAST)
        assert report.verdict == Verdict.HOLDS
        assert [s.name for s in report.sub_reports] == [
            "transversality",
            "hypothesis_inequality",
            "verify:strong",
            "verify:weak",
        ]

    def test_sampled_hypothesis_for_strict_process(self, strict_diag):
        report = check_theorem3_hypothesis(strict_diag, strict_diag, FAST)
        assert report.verdict in (Verdict.HOLDS, Verdict.HYPOTHESIS_NOT_MET)
        assert report.checked_points > 0

    def test_dimension_mismatch(self, diag_linear, half_identity):
        from conelyap.analysis.process import ConvexProcess

        G = ConvexProcess.from_matrix(np.eye(3))
        with pytest.raises(DimensionMismatchError):
            check_theorem3(diag_linear, G, half_identity, 0.25, FAST)
