"""scikit-learn style wrappers around the filtration, metric and test modules.

These let the pipeline compose with ``sklearn.pipeline.Pipeline`` and
``get_params``/``set_params``; the numerical work stays in the core modules.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .errors import InputError
from .filtration import build_filtration, check_point_cloud, pairwise_distances
from .metric import diagram_distance, pairwise_diagram_distances
from .permutation import (
    DEFAULT_MAX_EXACT,
    DEFAULT_N_SAMPLES,
    DistanceCache,
    GroupedDiagrams,
    omnibus_test,
    post_hoc,
)
from .persistence import PersistenceDiagram
from .persistence import diagrams as compute_diagrams


def _check_clouds(X):
    if isinstance(X, np.ndarray) and X.ndim == 2:
        X = [X]
    clouds = [check_point_cloud(c, f"cloud {i}") for i, c in enumerate(X)]
    if not clouds:
        raise InputError("at least one point cloud is required")
    return clouds


def _check_diagrams(X):
    X = list(X)
    if not X:
        raise InputError("at least one diagram is required")
    for i, d in enumerate(X):
        if not isinstance(d, PersistenceDiagram):
            raise InputError(f"item {i} is {type(d).__name__}, expected PersistenceDiagram")
    return X


class VietorisRipsPersistence(TransformerMixin, BaseEstimator):
    """Point clouds to persistence diagrams of one homological dimension.

    Parameters
    ----------
    hom_dim : int, default=1
        Homological dimension of the returned diagrams.
    r_max : float or None, default=None
        Filtration cap. ``None`` learns ``r_max_factor`` times the largest
        diameter among the clouds passed to :meth:`fit`.
    r_max_factor : float, default=1.1
    """

    def __init__(self, hom_dim=1, r_max=None, r_max_factor=1.1):
        self.hom_dim = hom_dim
        self.r_max = r_max
        self.r_max_factor = r_max_factor

    def fit(self, X, y=None):
        clouds = _check_clouds(X)
        if int(self.hom_dim) < 0:
            raise InputError("hom_dim must be >= 0")
        if self.r_max is not None:
            self.r_max_ = float(self.r_max)
        else:
            diam = max(float(pairwise_distances(c).max()) for c in clouds)
            self.r_max_ = self.r_max_factor * diam if diam > 0 else 1.0
        return self

    def transform(self, X):
        check_is_fitted(self, "r_max_")
        d = int(self.hom_dim)
        return [compute_diagrams(build_filtration(c, d + 1, self.r_max_), d)[d] for c in _check_clouds(X)]


class DiagramDistance(TransformerMixin, BaseEstimator):
    """Distances from diagrams to the diagrams seen at fit time.

    ``fit_transform`` on one list gives the symmetric pairwise matrix.
    """

    def __init__(self, q=2.0, include_essential=True):
        self.q = q
        self.include_essential = include_essential

    def fit(self, X, y=None):
        self.reference_ = _check_diagrams(X)
        return self

    def transform(self, X):
        check_is_fitted(self, "reference_")
        X = _check_diagrams(X)
        return np.array(
            [[diagram_distance(a, b, self.q, include_essential=self.include_essential) for b in self.reference_]
             for a in X],
            dtype=np.float64,
        ).reshape(len(X), len(self.reference_))

    def fit_transform(self, X, y=None, **fit_params):
        self.fit(X)
        return pairwise_diagram_distances(self.reference_, self.q, include_essential=self.include_essential)


class PermutationTest(BaseEstimator):
    """Omnibus permutation test of equal shape across labelled diagrams.

    ``fit(X, y)`` takes diagrams (or, with ``metric="precomputed"``, a square
    matrix of diagram distances) and group labels; results land in
    ``statistic_``, ``p_value_``, ``result_`` and ``posthoc_``.

    Parameters
    ----------
    q : float, default=2.0
        Diagram metric exponent.
    metric : {"diagram", "precomputed"}
    max_exact, n_samples, seed
        Passed to :func:`omnibus_test`.
    alpha : float, default=0.05
    posthoc : {"never", "gated", "always"}, default="gated"
    """

    def __init__(self, q=2.0, metric="diagram", max_exact=DEFAULT_MAX_EXACT, n_samples=DEFAULT_N_SAMPLES,
                 seed=0, alpha=0.05, posthoc="gated", include_essential=True):
        self.q = q
        self.metric = metric
        self.max_exact = max_exact
        self.n_samples = n_samples
        self.seed = seed
        self.alpha = alpha
        self.posthoc = posthoc
        self.include_essential = include_essential

    def fit(self, X, y):
        y = [str(v) for v in np.asarray(y, dtype=object).ravel()]
        if self.metric == "precomputed":
            D = np.asarray(X, dtype=np.float64)
            if D.shape != (len(y), len(y)):
                raise InputError(f"precomputed matrix shape {D.shape} does not match {len(y)} labels")
            cache = DistanceCache(list(range(len(y))), D * D)
        elif self.metric == "diagram":
            X = _check_diagrams(X)
            if len(X) != len(y):
                raise InputError(f"{len(X)} diagrams but {len(y)} labels")
            cache = DistanceCache.from_diagrams(X, self.q, include_essential=self.include_essential)
        else:
            raise InputError(f"metric must be 'diagram' or 'precomputed', got {self.metric!r}")
        if self.posthoc not in ("never", "gated", "always"):
            raise InputError(f"posthoc must be never, gated or always, got {self.posthoc!r}")
        names = sorted(set(y))
        gd = GroupedDiagrams(names, [[i for i, v in enumerate(y) if v == n] for n in names])
        kw = dict(max_exact=self.max_exact, n_samples=self.n_samples, seed=self.seed)
        self.result_ = omnibus_test(gd, cache, **kw)
        self.statistic_ = self.result_.observed_stat
        self.p_value_ = self.result_.p_value
        self.classes_ = np.array(names, dtype=object)
        run = self.posthoc == "always" or (self.posthoc == "gated" and self.p_value_ <= self.alpha)
        self.posthoc_ = post_hoc(gd, cache, self.alpha, **kw) if run and len(names) >= 3 else []
        return self
