"""类 𝒱 函数、共轭与正定性测试"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conelyap.analysis.functions import (
    ConjugateOf,
    PosDefBounds,
    PosDefRefutation,
    QuadOnCone,
    RestrictedTo,
    ScaledDistSq,
    check_theorem1_transfer,
    conjugate,
    function_from_dict,
    infimal_convolution,
    minimize_over,
    posdef_bounds,
    restrict,
)
from conelyap.analysis.verdict import Verdict
from conelyap.data.generators import random_cone, random_quadratic, random_transfer_pair
from conelyap.errors import DimensionMismatchError, FunctionError, ParseError
from conelyap.geometry.cone import NEGATIVE, PolyCone
from conelyap.geometry.polyhedron import Polyhedron
from conelyap.geometry.sampling import cross_section_samples, random_unit_vectors

seeds = st.integers(min_value=0, max_value=100_000)


@pytest.fixture
def orthant():
    return PolyCone.nonnegative_orthant(2)


@pytest.fixture
def half_norm_sq():
    return QuadOnCone(0.5 * np.eye(2), PolyCone.full(2))


class TestVariants:
    def test_quad_on_cone(self, orthant):
        f = QuadOnCone(np.diag([1.0, 2.0]), orthant)
        assert f([1.0, 1.0]) == pytest.approx(3.0)
        assert f([-1.0, 1.0]) == np.inf

    def test_rejects_indefinite(self):
        with pytest.raises(FunctionError):
            QuadOnCone(np.diag([1.0, -1.0]), PolyCone.full(2))

    def test_indefinite_allowed_where_nonnegative_on_cone(self):
        f = QuadOnCone(np.diag([1.0, -1.0]), PolyCone.from_generators([[1.0, 0.0]]))
        assert f([2.0, 0.0]) == pytest.approx(4.0)

    def test_rejects_asymmetric(self):
        with pytest.raises(FunctionError):
            QuadOnCone([[1.0, 1.0], [0.0, 1.0]], PolyCone.full(2))

    def test_scaled_dist_sq(self, orthant):
        f = ScaledDistSq(2.0, orthant)
        assert f([-3.0, 4.0]) == pytest.approx(18.0)
        assert f([1.0, 1.0]) == 0.0
        with pytest.raises(FunctionError):
            ScaledDistSq(0.0, orthant)

    def test_restricted_to(self, orthant):
        f = RestrictedTo(ScaledDistSq(1.0, PolyCone.zero(2)), orthant)
        assert f([1.0, 2.0]) == pytest.approx(5.0)
        assert f([-1.0, 2.0]) == np.inf

    def test_restrict_intersects_quadratic_domain(self, orthant, half_norm_sq):
        g = restrict(half_norm_sq, orthant)
        assert isinstance(g, QuadOnCone)
        assert g([1.0, 1.0]) == pytest.approx(1.0)
        assert g([-1.0, 1.0]) == np.inf
        with pytest.raises(DimensionMismatchError):
            restrict(half_norm_sq, PolyCone.full(3))

    def test_dimension_check(self, half_norm_sq):
        with pytest.raises(DimensionMismatchError):
            half_norm_sq([1.0, 2.0, 3.0])

    def test_scaled(self, orthant):
        assert QuadOnCone(np.eye(2), orthant).scaled(3.0)([1.0, 0.0]) == pytest.approx(3.0)
        assert ScaledDistSq(1.0, orthant).scaled(0.5)([-2.0, 0.0]) == pytest.approx(2.0)

    def test_lifted_model_reproduces_distance(self, orthant):
        f = ScaledDistSq(1.5, orthant)
        model = f.lifted()
        assert model.dim == 4
        x = np.array([-1.0, 2.0])
        value, _ = minimize_over(f, Polyhedron.point(x))
        assert value == pytest.approx(f(x), rel=1e-8)


class TestHomogeneity:
    @pytest.mark.slow
    @settings(max_examples=50, deadline=None)
    @given(seeds, st.integers(min_value=1, max_value=3))
    def test_degree_two_for_all_variants(self, seed, n):
        rng = np.random.default_rng(seed)
        C = random_cone(rng, n, integer=seed % 2 == 0)
        quad = random_quadratic(rng, n, C)
        # 投影与共轭经 QP 求值，容差放宽到 1e-8
        variants = [
            (quad, 1e-10),
            (RestrictedTo(random_quadratic(rng, n), C), 1e-10),
            (ScaledDistSq(float(rng.uniform(0.1, 3.0)), C), 1e-8),
            (ConjugateOf(quad), 1e-8),
        ]
        points = np.vstack([cross_section_samples(C, count=4, seed=seed), rng.standard_normal((2, n))])
        for f, rel in variants:
            for x in points:
                value = f(x)
                if not np.isfinite(value):
                    continue
                for lam in (0.0, 0.5, 2.0, 10.0):
                    assert f(lam * x) == pytest.approx(lam**2 * value, rel=rel, abs=1e-12)


class TestConjugates:
    def test_half_norm_is_self_conjugate(self, half_norm_sq):
        f_star = conjugate(half_norm_sq)
        assert isinstance(f_star, ScaledDistSq)
        for y in random_unit_vectors(2, 20, seed=1) * 3.0:
            assert f_star(y) == pytest.approx(0.5 * y @ y, rel=1e-9)

    def test_indicator_conjugate_is_polar_indicator(self, orthant):
        g = QuadOnCone(np.zeros((2, 2)), orthant)
        g_star = conjugate(g)
        for y in random_unit_vectors(2, 100, seed=2):
            expected = 0.0 if np.all(y <= 0) else np.inf
            assert g_star(y) == expected

    def test_infimal_convolution_conjugate(self, orthant, half_norm_sq):
        h = infimal_convolution(half_norm_sq, QuadOnCone(np.zeros((2, 2)), orthant))
        assert isinstance(h, ScaledDistSq)
        h_star = conjugate(h)
        for y in random_unit_vectors(2, 100, seed=3) * 2.0:
            expected = 0.5 * y @ y if np.all(y <= 1e-12) else np.inf
            assert h_star(y) == pytest.approx(expected, rel=1e-9)

    def test_infimal_convolution_unsupported(self, orthant):
        with pytest.raises(FunctionError):
            infimal_convolution(ScaledDistSq(1.0, orthant), ScaledDistSq(1.0, orthant))

    def test_numeric_conjugate_matches_closed_form(self, orthant):
        f = QuadOnCone(0.5 * np.eye(2), orthant)
        numeric = ConjugateOf(f)
        closed = conjugate(f)
        for y in random_unit_vectors(2, 50, seed=4) * 3.0:
            assert numeric(y) == pytest.approx(closed(y), rel=1e-6, abs=1e-9)

    def test_numeric_conjugate_detects_unbounded_direction(self, orthant):
        g = QuadOnCone(np.diag([1.0, 0.0]), orthant)
        g_star = ConjugateOf(g)
        assert g_star([0.0, 1.0]) == np.inf
        assert g_star([2.0, -1.0]) == pytest.approx(1.0, rel=1e-8)

    def test_conjugate_of_conjugate_returns_inner(self, orthant):
        g = QuadOnCone(np.diag([1.0, 0.0]), orthant)
        assert conjugate(ConjugateOf(g)) is g

    def test_scaling_rule(self, orthant):
        g = QuadOnCone(np.diag([2.0, 1.0]), orthant)
        y = np.array([1.0, 3.0])
        assert ConjugateOf(g).scaled(2.0)(y) == pytest.approx(2.0 * ConjugateOf(g)(y), rel=1e-8)

    def test_no_model_for_conjugate_of_distance(self, orthant):
        with pytest.raises(FunctionError):
            ConjugateOf(ScaledDistSq(1.0, orthant)).lifted()

    @pytest.mark.slow
    @settings(max_examples=50, deadline=None)
    @given(seeds, st.integers(min_value=1, max_value=3))
    def test_biconjugate_recovers_quadratic(self, seed, n):
        rng = np.random.default_rng(seed)
        C = random_cone(rng, n)
        f = random_quadratic(rng, n, C)
        f_bistar = ConjugateOf(ConjugateOf(f))
        for x in cross_section_samples(C, count=8, seed=seed):
            assert f_bistar(x) == pytest.approx(f(x), rel=1e-6, abs=1e-9)

    def test_biconjugate_is_infinite_off_domain(self, orthant):
        f = QuadOnCone(0.5 * np.eye(2), orthant)
        assert ConjugateOf(ConjugateOf(f))([-1.0, 0.0]) == np.inf


class TestMinimize:
    def test_minimize_over_halfplane(self, half_norm_sq):
        P = Polyhedron(2, [[-1.0, 0.0]], [-1.0])
        value, y = minimize_over(half_norm_sq, P)
        assert value == pytest.approx(0.5)
        np.testing.assert_allclose(y, [1.0, 0.0], atol=1e-8)

    def test_minimize_over_disjoint_domain(self, orthant):
        f = QuadOnCone(np.eye(2), orthant)
        value, y = minimize_over(f, Polyhedron.point([-1.0, -1.0]))
        assert value == np.inf
        assert y is None


class TestPositiveDefiniteness:
    def test_exact_for_scalar_quadratic(self):
        result = posdef_bounds(QuadOnCone(3.0 * np.eye(2), PolyCone.full(2)), PolyCone.full(2))
        assert isinstance(result, PosDefBounds)
        assert result.certified_by == "exact"
        assert result.alpha == result.beta == 3.0

    def test_sampled_bounds_on_wedge(self, fixtures_dir):
        f = function_from_dict({"variant": "quad_on_cone", "Q": [[1, 0], [0, 0]], "cone": {"dim": 2, "generators": [[1, 0], [1, 1]]}})
        result = posdef_bounds(f, f.cone, count=100, mesh=1e-2)
        assert isinstance(result, PosDefBounds)
        assert result.alpha == pytest.approx(0.5, abs=1e-12)
        assert result.beta == pytest.approx(1.0, abs=1e-12)

    def test_refuted_by_flat_direction(self):
        f = QuadOnCone(np.diag([1.0, 0.0]), PolyCone.full(2))
        result = posdef_bounds(f, PolyCone.full(2), count=50)
        assert isinstance(result, PosDefRefutation)
        assert result.kind == "refuted"
        assert abs(result.witness[0]) <= 1e-9

    def test_refuted_by_infinite_value(self, orthant):
        f = QuadOnCone(np.eye(2), orthant)
        result = posdef_bounds(f, PolyCone.full(2), count=50)
        assert isinstance(result, PosDefRefutation)
        assert result.value == np.inf

    def test_trivial_cone(self):
        result = posdef_bounds(QuadOnCone(np.zeros((2, 2)), PolyCone.full(2)), PolyCone.zero(2))
        assert isinstance(result, PosDefBounds)


class TestTransfer:
    def test_orthant_transfer_holds(self, orthant):
        report = check_theorem1_transfer(QuadOnCone(np.eye(2), PolyCone.full(2)), orthant, orthant, count=100)
        assert report.verdict == Verdict.HOLDS
        assert report.stage("posdef_conjugate_on_D").details["alpha"] == pytest.approx(0.25, rel=1e-6)

    def test_polar_meeting_domain_is_hypothesis_failure(self, orthant):
        f = QuadOnCone(np.eye(2), PolyCone.full(2))
        report = check_theorem1_transfer(f, orthant, orthant.polar(NEGATIVE), count=100)
        assert report.verdict == Verdict.HYPOTHESIS_NOT_MET
        assert report.stage("polar_C_meets_D_trivially").verdict == Verdict.HYPOTHESIS_NOT_MET

    def test_non_posdef_premise(self, orthant):
        f = QuadOnCone(np.diag([1.0, 0.0]), PolyCone.full(2))
        report = check_theorem1_transfer(f, PolyCone.full(2), orthant, count=50)
        assert report.verdict == Verdict.HYPOTHESIS_NOT_MET

    @pytest.mark.slow
    @settings(max_examples=50, deadline=None)
    @given(seeds, st.integers(min_value=2, max_value=3))
    def test_random_transversal_pairs(self, seed, n):
        rng = np.random.default_rng(seed)
        C, D = random_transfer_pair(rng, n, transversal=True)
        alpha = float(rng.uniform(0.2, 2.0))
        report = check_theorem1_transfer(QuadOnCone(alpha * np.eye(n), PolyCone.full(n)), C, D, count=64, seed=seed)
        assert report.verdict == Verdict.HOLDS
        assert report.stage("posdef_conjugate_on_D").details["alpha"] > 0

    @pytest.mark.slow
    @settings(max_examples=20, deadline=None)
    @given(seeds, st.integers(min_value=2, max_value=3))
    def test_random_violating_pairs(self, seed, n):
        rng = np.random.default_rng(seed)
        C, D = random_transfer_pair(rng, n, transversal=False)
        report = check_theorem1_transfer(QuadOnCone(np.eye(n), PolyCone.full(n)), C, D, count=64, seed=seed)
        assert report.verdict == Verdict.HYPOTHESIS_NOT_MET


class TestParsing:
    def test_all_variants(self):
        q = function_from_dict({"variant": "quad_on_cone", "Q": [[1, 0], [0, 1]]})
        d = function_from_dict({"variant": "scaled_dist_sq", "alpha": 2.0, "cone": {"dim": 2, "generators": [[1, 0]]}})
        r = function_from_dict({"variant": "restricted_to", "inner": {"variant": "quad_on_cone", "Q": [[1, 0], [0, 1]]}, "cone": {"dim": 2, "generators": [[1, 0], [0, 1]]}})
        c = function_from_dict({"variant": "conjugate_of", "inner": {"variant": "quad_on_cone", "Q": [[1, 0], [0, 1]]}})
        assert isinstance(q, QuadOnCone)
        assert isinstance(d, ScaledDistSq)
        assert isinstance(r, RestrictedTo)
        assert isinstance(c, ConjugateOf)
        assert c([2.0, 0.0]) == pytest.approx(1.0, rel=1e-8)

    def test_dist_without_cone_needs_dimension(self):
        with pytest.raises(ParseError):
            function_from_dict({"variant": "scaled_dist_sq", "alpha": 1.0})
        f = function_from_dict({"variant": "scaled_dist_sq", "alpha": 1.0}, n=2)
        assert f([1.0, 1.0]) == 0.0

    @pytest.mark.parametrize(
        "data",
        [
            {"Q": [[1]]},
            {"variant": "cubic"},
            {"variant": "quad_on_cone"},
            {"variant": "quad_on_cone", "Q": [[1, 0], [0, 1]], "cone": {"dim": 3, "generators": [[1, 0, 0]]}},
        ],
    )
    def test_errors(self, data):
        with pytest.raises(ParseError):
            function_from_dict(data, "f.json")

    def test_to_dict_roundtrip(self, orthant):
        f = RestrictedTo(ScaledDistSq(1.0, orthant), orthant)
        g = function_from_dict(f.to_dict())
        assert g([1.0, 2.0]) == pytest.approx(f([1.0, 2.0]))
