import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from persist_test import FilteredComplex, InputError, ResourceError, build_filtration, complex_at, pairwise_distances
from persist_test.errors import ConsistencyError
from persist_test.filtration import check_point_cloud

import oracles

coords = st.floats(-10, 10, allow_nan=False, allow_infinity=False, width=64)


def small_clouds(max_n=7):
    return st.integers(1, max_n).flatmap(lambda n: arrays(np.float64, (n, 2), elements=coords))


class TestFiveVertexExample:
    def test_counts_at_four(self, five_points):
        fc = build_filtration(five_points, max_dim=2, r_max=6.0)
        assert complex_at(fc, 4.0).counts() == [5, 6, 1]

    def test_triangle_and_edges(self, five_points):
        sub = complex_at(build_filtration(five_points, 2, 6.0), 4.0)
        simplices = {s.vertices for s in sub}
        assert (1, 2, 3) in simplices
        assert {s for s in simplices if len(s) == 2} == {(0, 1), (0, 4), (1, 2), (1, 3), (2, 3), (3, 4)}

    def test_triangle_facets(self, five_points):
        fc = complex_at(build_filtration(five_points, 2, 6.0), 4.0)
        edges = [tuple(e) for e in fc.simplices[1].tolist()]
        faces = {edges[i] for i in fc.facets(2)[0]}
        assert faces == {(1, 2), (1, 3), (2, 3)}


class TestBuild:
    def test_vertices_at_zero(self, rng):
        fc = build_filtration(rng.normal(size=(6, 2)), 2, 10.0)
        assert np.all(fc.values[0] == 0)
        assert fc.counts()[0] == 6

    @pytest.mark.parametrize("max_dim", [1, 2, 3])
    def test_matches_brute_force(self, rng, max_dim):
        X = rng.normal(size=(7, 2))
        r = float(np.median(pairwise_distances(X)))
        fc = build_filtration(X, max_dim, r)
        got = {s.vertices: s.filtration for s in fc}
        want = oracles.rips_simplices(X, max_dim, r)
        assert got.keys() == want.keys()
        for k, v in want.items():
            assert got[k] == pytest.approx(v, abs=1e-12)

    def test_closed_threshold(self):
        X = np.array([[0.0, 0.0], [1.0, 0.0]])
        assert build_filtration(X, 1, 1.0).counts() == [2, 1]
        assert build_filtration(X, 1, np.nextafter(1.0, 0)).counts() == [2, 0]

    def test_order_is_value_then_dim_then_lex(self):
        # square: four edges at 1, two diagonals and four triangles at sqrt 2
        X = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
        seq = list(build_filtration(X, 2, 2.0))
        keys = [(s.filtration, s.dim, s.vertices) for s in seq]
        assert keys == sorted(keys)
        assert [s.dim for s in seq[-6:]] == [1, 1, 2, 2, 2, 2]

    def test_precomputed_matches_euclidean(self, rng):
        X = rng.normal(size=(8, 3))
        a = build_filtration(X, 2, 1.5)
        b = build_filtration(pairwise_distances(X), 2, 1.5, metric="precomputed")
        assert a == b

    def test_infinite_r_max_becomes_diameter(self, rng):
        X = rng.normal(size=(5, 2))
        fc = build_filtration(X, 2)
        assert fc.r_max == pairwise_distances(X).max()
        assert fc.counts() == [5, 10, 10]

    def test_single_point(self):
        fc = build_filtration([[1.0, 2.0]], 2)
        assert fc.counts() == [1, 0, 0]
        assert fc.r_max == 1.0

    def test_duplicate_points(self):
        fc = build_filtration(np.zeros((3, 2)), 2, 1.0)
        assert fc.counts() == [3, 3, 1]
        assert np.all(np.concatenate(fc.values) == 0)

    def test_budget(self, rng):
        with pytest.raises(ResourceError) as info:
            build_filtration(rng.normal(size=(30, 2)), 2, 100.0, simplex_budget=1000)
        assert info.value.budget == 1000
        assert info.value.exit_code == 3

    @pytest.mark.parametrize(
        "bad",
        [np.empty((0, 2)), np.array([[0.0, np.nan]]), np.array([[np.inf, 1.0]]), np.zeros((2, 2, 2))],
    )
    def test_rejects_bad_clouds(self, bad):
        with pytest.raises(InputError):
            build_filtration(bad, 1, 1.0)

    def test_rejects_bad_parameters(self, rng):
        X = rng.normal(size=(4, 2))
        with pytest.raises(InputError):
            build_filtration(X, 0, 1.0)
        with pytest.raises(InputError):
            build_filtration(X, 1, -1.0)
        with pytest.raises(InputError):
            build_filtration(X, 1, 1.0, metric="cosine")

    def test_rejects_asymmetric_matrix(self):
        D = np.array([[0.0, 1.0], [2.0, 0.0]])
        with pytest.raises(InputError):
            build_filtration(D, 1, 1.0, metric="precomputed")

    def test_one_dimensional_input_is_a_column(self):
        assert check_point_cloud([0.0, 1.0, 3.0]).shape == (3, 1)


class TestComplexAt:
    def test_monotone(self, rng):
        fc = build_filtration(rng.normal(size=(7, 2)), 2, 3.0)
        prev = None
        for r in np.linspace(0, 3.0, 13):
            c = complex_at(fc, r).counts()
            if prev is not None:
                assert all(a >= b for a, b in zip(c, prev))
            prev = c

    def test_out_of_range(self, five_points):
        fc = build_filtration(five_points, 2, 6.0)
        with pytest.raises(InputError):
            complex_at(fc, 6.5)
        with pytest.raises(InputError):
            complex_at(fc, -0.1)


class TestSerialization:
    def test_text_round_trip(self, rng):
        fc = build_filtration(rng.normal(size=(6, 2)), 2, 2.0)
        again = FilteredComplex.from_text(fc.to_text(), fc.r_max, fc.n_vertices)
        assert again == fc

    def test_line_format(self, five_points):
        text = complex_at(build_filtration(five_points, 2, 6.0), 4.0).to_text()
        assert "2;1,2,3;" in text
        assert text.splitlines()[0] == "0;0;0.0"

    def test_missing_face_is_inconsistent(self):
        with pytest.raises(ConsistencyError):
            FilteredComplex.from_text("0;0;0.0\n0;1;0.0\n0;2;0.0\n1;0,1;1.0\n2;0,1,2;1.0\n", 2.0).validate()


class TestProperties:
    @given(small_clouds())
    def test_face_values_bounded_by_coface(self, X):
        fc = build_filtration(X, 2, 5.0)
        values = {s.vertices: s.filtration for s in fc}
        for s, v in values.items():
            for k in range(1, len(s)):
                for face in itertools.combinations(s, k):
                    assert values[face] <= v

    @given(small_clouds(6))
    def test_same_simplices_as_brute_force(self, X):
        got = {s.vertices for s in build_filtration(X, 2, 4.0)}
        assert got == set(oracles.rips_simplices(X, 2, 4.0))

    @given(small_clouds(), arrays(np.float64, 2, elements=st.floats(-5, 5)))
    def test_translation_invariance(self, X, shift):
        a = build_filtration(X, 2)
        b = build_filtration(X + shift, 2)
        assert a.counts() == b.counts()
        for va, vb in zip(a.values, b.values):
            np.testing.assert_allclose(va, vb, atol=1e-9)

    @given(small_clouds(), st.randoms(use_true_random=False))
    def test_point_order_only_relabels(self, X, rnd):
        perm = list(range(len(X)))
        rnd.shuffle(perm)
        a = build_filtration(X, 2, 3.0)
        b = build_filtration(X[perm], 2, 3.0)
        assert sorted((s.dim, s.filtration) for s in a) == sorted((s.dim, s.filtration) for s in b)
