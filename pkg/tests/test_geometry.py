"""多面体锥与多面体测试"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conelyap.data.generators import random_cone, random_cone_pair
from conelyap.errors import DimensionMismatchError, ParseError
from conelyap.geometry.cone import NEGATIVE, POSITIVE, PolyCone
from conelyap.geometry.dd import hrep_to_vrep, unique_rows
from conelyap.geometry.polyhedron import Polyhedron
from conelyap.geometry.sampling import cross_section_samples

seeds = st.integers(min_value=0, max_value=100_000)


class TestRepresentations:
    def test_orthant_both_ways(self):
        C = PolyCone.from_inequalities(-np.eye(3))
        assert len(C.rays) == 3
        assert len(C.lines) == 0
        assert C.equals(PolyCone.nonnegative_orthant(3))

    def test_halfplane_has_lineality(self):
        C = PolyCone.from_inequalities([[0.0, -1.0]])
        assert len(C.rays) == 1
        assert len(C.lines) == 1
        np.testing.assert_allclose(C.rays[0], [0.0, 1.0], atol=1e-12)
        assert abs(C.lines[0] @ [0.0, 1.0]) <= 1e-12

    def test_redundant_generators_dropped(self):
        C = PolyCone.from_generators([[1, 0], [0, 1], [1, 1], [2, 1]])
        assert len(C.rays) == 2

    def test_full_and_zero(self):
        assert PolyCone.full(3).is_full()
        assert PolyCone.zero(3).is_trivial()
        assert PolyCone.from_generators([], dim=2).is_trivial()

    def test_hrep_to_vrep_direct(self):
        rays, lines = hrep_to_vrep(-np.eye(2), np.zeros((0, 2)), 2)
        assert len(lines) == 0
        assert len(unique_rows(rays)) == 2

    def test_from_dict_checks_consistency(self):
        data = {"dim": 2, "generators": [[1, 0], [0, 1]], "inequalities": [[-1, 0], [0, -1]]}
        assert PolyCone.from_dict(data).equals(PolyCone.nonnegative_orthant(2))
        bad = {"dim": 2, "generators": [[-1, 0]], "inequalities": [[-1, 0], [0, -1]]}
        with pytest.raises(ParseError) as info:
            PolyCone.from_dict(bad, "cone.json")
        assert info.value.field.startswith("cone.generators")

    def test_from_dict_missing_dim(self):
        with pytest.raises(ParseError):
            PolyCone.from_dict({"generators": [[1, 0]]})

    def test_dimension_mismatch(self):
        C = PolyCone.nonnegative_orthant(2)
        with pytest.raises(DimensionMismatchError):
            C.contains([1.0, 0.0, 0.0])
        with pytest.raises(DimensionMismatchError):
            C.sum(PolyCone.full(3))


class TestOperations:
    def test_polar_of_orthant(self):
        C = PolyCone.nonnegative_orthant(2)
        assert C.polar(NEGATIVE).equals(C.negate())
        assert C.polar(POSITIVE).equals(C)

    def test_polar_of_subspace_is_complement(self):
        S = PolyCone.subspace([[1.0, 1.0, 0.0]])
        P = S.polar()
        assert P.is_subspace()
        assert P.span_dim == 2
        assert P.contains([1.0, -1.0, 0.0])
        assert P.contains([0.0, 0.0, 1.0])

    def test_intersection_and_sum(self):
        A = PolyCone.from_generators([[1, 0], [1, 1]])
        B = PolyCone.from_generators([[1, 1], [0, 1]])
        assert A.intersect(B).equals(PolyCone.from_generators([[1, 1]]))
        assert A.sum(B).equals(PolyCone.nonnegative_orthant(2))

    def test_lineality_and_span(self):
        C = PolyCone(3, generators=[[0, 0, 1]], lineality=[[1, 0, 0]])
        assert C.lineality().span_dim == 1
        assert C.span().span_dim == 2
        assert C.orthogonal_complement().contains([0, 1, 0])

    def test_rel_interior(self):
        C = PolyCone.from_generators([[1, 0, 0], [0, 1, 0]])
        assert C.rel_interior_contains([1, 1, 0])
        assert not C.rel_interior_contains([1, 0, 0])
        assert not C.rel_interior_contains([1, 1, 1])

    def test_project_by_fourier_motzkin(self):
        C = PolyCone.from_inequalities([[1, 0, -1], [-1, 0, -1], [0, 1, -1], [0, -1, -1]])
        assert C.project([0, 1]).is_full()
        assert C.project([0, 2]).equals(PolyCone.from_generators([[1, 1], [-1, 1]]))

    def test_project_generators(self):
        C = PolyCone.nonnegative_orthant(3)
        assert C.project([0, 1]).equals(PolyCone.nonnegative_orthant(2))

    def test_embed(self):
        C = PolyCone.nonnegative_orthant(1).embed(3, [2])
        assert C.contains([-5.0, 3.0, 1.0])
        assert not C.contains([0.0, 0.0, -1.0])

    def test_linear_image(self):
        C = PolyCone.nonnegative_orthant(2)
        image = C.linear_image(np.array([[1.0, 1.0]]))
        assert image.equals(PolyCone.nonnegative_orthant(1))

    def test_project_point_onto_orthant(self):
        C = PolyCone.nonnegative_orthant(2)
        np.testing.assert_allclose(C.project_point([1.0, -2.0]), [1.0, 0.0], atol=1e-9)

    def test_to_dict_carries_both_representations(self):
        data = PolyCone.nonnegative_orthant(2).to_dict()
        assert set(data) == {"dim", "generators", "lineality", "inequalities", "equalities"}
        assert len(data["generators"]) == 2
        assert len(data["inequalities"]) == 2


class TestConeProperties:
    @settings(max_examples=200, deadline=None)
    @given(seeds, st.integers(min_value=1, max_value=4))
    def test_polar_involution(self, seed, n):
        C = random_cone(np.random.default_rng(seed), n, with_lineality=seed % 3 == 0, integer=seed % 2 == 0)
        assert C.polar().polar().equals(C)

    @settings(max_examples=200, deadline=None)
    @given(seeds, st.integers(min_value=1, max_value=4))
    def test_polar_of_sum_is_intersection_of_polars(self, seed, n):
        A, B = random_cone_pair(np.random.default_rng(seed), n, integer=seed % 2 == 0)
        assert A.sum(B).polar().equals(A.polar().intersect(B.polar()))

    @settings(max_examples=200, deadline=None)
    @given(seeds, st.integers(min_value=1, max_value=4))
    def test_polar_of_intersection_is_sum_of_polars(self, seed, n):
        A, B = random_cone_pair(np.random.default_rng(seed), n, integer=seed % 2 == 0)
        assert A.intersect(B).polar().equals(A.polar().sum(B.polar()))

    @settings(max_examples=100, deadline=None)
    @given(seeds, st.integers(min_value=1, max_value=4))
    def test_moreau_decomposition(self, seed, n):
        # 每例 10 个点，共 10³ 次分解
        rng = np.random.default_rng(seed)
        C = random_cone(rng, n, integer=seed % 2 == 0)
        C_polar = C.polar()
        for p in rng.standard_normal((10, n)):
            a = C.project_point(p)
            b = C_polar.project_point(p)
            np.testing.assert_allclose(a + b, p, atol=1e-8)
            assert abs(a @ b) <= 1e-8


class TestPolyhedron:
    def test_box_vertices(self):
        box = Polyhedron(2, np.vstack([np.eye(2), -np.eye(2)]), np.ones(4))
        vertices, rays, lines = box.vertices_and_rays()
        assert len(vertices) == 4
        assert len(rays) == 0 and len(lines) == 0
        assert box.contains([1.0, -1.0])
        assert not box.contains([1.1, 0.0])

    def test_empty(self):
        P = Polyhedron(1, [[1.0], [-1.0]], [-1.0, 0.0])
        assert P.is_empty()
        vertices, rays, lines = P.vertices_and_rays()
        assert vertices.shape == (0, 1)
        assert not P.contains([0.0])

    def test_halfline_recession(self):
        P = Polyhedron(1, [[-1.0]], [-2.0])
        vertices, rays, _ = P.vertices_and_rays()
        np.testing.assert_allclose(vertices, [[2.0]])
        np.testing.assert_allclose(rays, [[1.0]])
        assert P.recession_cone().equals(PolyCone.nonnegative_orthant(1))

    def test_minkowski_sum_of_point_and_cone(self):
        point = Polyhedron.point([1.0, 2.0])
        cone = Polyhedron.from_cone(PolyCone.nonnegative_orthant(2))
        total = point.minkowski_sum(cone)
        expected = Polyhedron(2, -np.eye(2), [-1.0, -2.0])
        assert total.equals(expected)

    def test_homogenization_roundtrip(self):
        P = Polyhedron(2, [[1.0, 1.0], [-1.0, 0.0], [0.0, -1.0]], [1.0, 0.0, 0.0])
        assert Polyhedron.from_homogenization(P.homogenize()).equals(P)

    def test_to_cone_requires_conic(self):
        with pytest.raises(ValueError):
            Polyhedron(1, [[1.0]], [1.0]).to_cone()
        assert Polyhedron(1, [[1.0]], [0.0]).to_cone().equals(PolyCone.nonnegative_orthant(1).negate())


class TestSampling:
    def test_samples_are_unit_and_inside(self):
        C = PolyCone.from_generators([[1, 0, 0], [0, 1, 0], [1, 1, 1]])
        points = cross_section_samples(C, count=200, seed=3)
        np.testing.assert_allclose(np.linalg.norm(points, axis=1), 1.0, atol=1e-12)
        assert all(C.contains(p, 1e-8) for p in points)

    def test_deterministic(self):
        C = PolyCone.nonnegative_orthant(3)
        a = cross_section_samples(C, count=50, seed=7)
        b = cross_section_samples(C, count=50, seed=7)
        np.testing.assert_array_equal(a, b)

    def test_extreme_rays_included(self):
        C = PolyCone.from_generators([[1, 0], [1, 1]])
        points = cross_section_samples(C, count=10, mesh=0.1)
        for ray in C.rays:
            assert np.min(np.linalg.norm(points - ray / np.linalg.norm(ray), axis=1)) <= 1e-12

    def test_trivial_cone_gives_no_samples(self):
        assert cross_section_samples(PolyCone.zero(2), count=10).shape == (0, 2)
