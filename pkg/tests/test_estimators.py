import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from persist_test import (
    DiagramDistance,
    DistanceCache,
    GroupedDiagrams,
    InputError,
    PermutationTest,
    VietorisRipsPersistence,
    build_filtration,
    diagrams,
    omnibus_test,
    pairwise_diagram_distances,
    sample_circle,
)


@pytest.fixture
def clouds():
    return [sample_circle(r, 10, 0.05, rng=k) for k, r in enumerate([1, 1, 1, 0.4, 0.4, 0.4])]


class TestVietorisRipsPersistence:
    def test_learns_r_max(self, clouds):
        est = VietorisRipsPersistence().fit(clouds)
        diam = max(np.linalg.norm(c[:, None] - c[None], axis=2).max() for c in clouds)
        assert est.r_max_ == pytest.approx(1.1 * diam)

    def test_matches_functional(self, clouds):
        dgs = VietorisRipsPersistence(r_max=2.5).fit_transform(clouds)
        assert dgs[0] == diagrams(build_filtration(clouds[0], 2, 2.5), 1)[1]
        assert all(d.dim == 1 for d in dgs)

    def test_params(self):
        est = VietorisRipsPersistence(hom_dim=0, r_max=3.0)
        assert est.get_params() == {"hom_dim": 0, "r_max": 3.0, "r_max_factor": 1.1}
        assert clone(est).set_params(hom_dim=1).hom_dim == 1

    def test_not_fitted(self, clouds):
        with pytest.raises(NotFittedError):
            VietorisRipsPersistence().transform(clouds)


class TestDiagramDistance:
    def test_pipeline_gives_pairwise(self, clouds):
        D = make_pipeline(VietorisRipsPersistence(r_max=2.5), DiagramDistance()).fit_transform(clouds)
        dgs = VietorisRipsPersistence(r_max=2.5).fit_transform(clouds)
        assert np.array_equal(D, pairwise_diagram_distances(dgs))

    def test_transform_against_reference(self, clouds):
        dgs = VietorisRipsPersistence(r_max=2.5).fit_transform(clouds)
        est = DiagramDistance().fit(dgs[:2])
        D = est.transform(dgs)
        assert D.shape == (6, 2)
        assert D[0, 0] == 0.0

    def test_rejects_arrays(self):
        with pytest.raises(InputError):
            DiagramDistance().fit([np.zeros((2, 2))])


class TestPermutationTest:
    def test_matches_functional(self, clouds):
        dgs = VietorisRipsPersistence(r_max=2.5).fit_transform(clouds)
        est = PermutationTest(seed=1).fit(dgs, ["a"] * 3 + ["b"] * 3)
        gd = GroupedDiagrams(["a", "b"], [[0, 1, 2], [3, 4, 5]])
        ref = omnibus_test(gd, DistanceCache.from_diagrams(dgs), seed=1)
        assert est.p_value_ == ref.p_value == 0.1
        assert est.statistic_ == ref.observed_stat
        assert est.posthoc_ == []

    def test_precomputed(self, clouds):
        dgs = VietorisRipsPersistence(r_max=2.5).fit_transform(clouds)
        D = pairwise_diagram_distances(dgs)
        a = PermutationTest(metric="precomputed").fit(D, [0, 0, 0, 1, 1, 1])
        b = PermutationTest().fit(dgs, [0, 0, 0, 1, 1, 1])
        assert a.p_value_ == b.p_value_
        assert list(a.classes_) == ["0", "1"]

    def test_posthoc_always(self, clouds):
        dgs = VietorisRipsPersistence(r_max=2.5).fit_transform(clouds)
        est = PermutationTest(posthoc="always").fit(dgs, list("aabbcc"))
        assert [r.pair for r in est.posthoc_] == [("a", "b"), ("a", "c"), ("b", "c")]

    def test_label_mismatch(self, clouds):
        dgs = VietorisRipsPersistence(r_max=2.5).fit_transform(clouds)
        with pytest.raises(InputError):
            PermutationTest().fit(dgs, [0, 1])
        with pytest.raises(InputError):
            PermutationTest(metric="manhattan").fit(dgs, [0, 0, 0, 1, 1, 1])
