"""Joint-loss permutation tests for groups of persistence diagrams.

The statistic is the sum over groups of the mean squared diagram distance
within each group. Under the null hypothesis every assignment of the pooled
diagrams to groups of the observed sizes is equally likely; the p-value is
the fraction of assignments whose statistic is less than or equal to the
observed one.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numba
import numpy as np

from ._rng import substream
from .errors import InputError
from .metric import pairwise_diagram_distances

DEFAULT_MAX_EXACT = 200_000
DEFAULT_N_SAMPLES = 100_000
# relative slack when comparing replicates with the observed statistic, so
# partitions with equal distances but a different summation order still tie
TIE_RTOL = 100 * np.finfo(np.float64).eps


@dataclass
class GroupedDiagrams:
    """Named groups of diagram identifiers, plus the diagrams when available.

    ``members[g]`` lists the identifiers in group ``names[g]``; identifiers
    key into a :class:`DistanceCache`.
    """

    names: list
    members: list
    diagrams: dict = field(default=None, repr=False)

    def __post_init__(self):
        self.names = [str(n) for n in self.names]
        self.members = [list(m) for m in self.members]
        if len(self.names) != len(self.members):
            raise InputError("one member list is needed per group name")
        if len(set(self.names)) != len(self.names):
            raise InputError(f"group names must be distinct: {self.names}")
        if len(self.names) < 2:
            raise InputError("at least two groups are required")
        for name, m in zip(self.names, self.members):
            if len(m) < 2:
                raise InputError(f"group {name!r} has {len(m)} diagram(s); at least 2 are required")
        ids = self.ids
        if len(set(ids)) != len(ids):
            raise InputError("diagram identifiers must be unique across groups")
        if self.diagrams is not None:
            dims = {self.diagrams[i].dim for i in ids}
            if len(dims) > 1:
                raise InputError(f"diagrams span several homological dimensions: {sorted(dims)}")

    @classmethod
    def from_groups(cls, groups):
        """Build from a mapping ``name -> list of diagrams``; ids are ``"name/k"``."""
        names, members, diagrams = [], [], {}
        for name, dgms in groups.items():
            ids = [f"{name}/{k}" for k in range(len(dgms))]
            diagrams.update(zip(ids, dgms))
            names.append(name)
            members.append(ids)
        return cls(names, members, diagrams)

    @property
    def ids(self):
        return [i for m in self.members for i in m]

    @property
    def sizes(self):
        return [len(m) for m in self.members]

    @property
    def dim(self):
        if not self.diagrams:
            return None
        return next(iter(self.diagrams.values())).dim

    def subset(self, names):
        idx = [self.names.index(n) for n in names]
        return GroupedDiagrams([self.names[i] for i in idx], [self.members[i] for i in idx], self.diagrams)


@dataclass
class DistanceCache:
    """Squared diagram distances, computed once and shared by every permutation."""

    ids: list
    d2: np.ndarray

    def __post_init__(self):
        self.ids = list(self.ids)
        self.d2 = np.asarray(self.d2, dtype=np.float64)
        n = len(self.ids)
        if self.d2.shape != (n, n):
            raise InputError(f"distance matrix shape {self.d2.shape} does not match {n} identifiers")
        if len(set(self.ids)) != n:
            raise InputError("cache identifiers must be unique")
        if not np.all(np.isfinite(self.d2)) or np.any(self.d2 < 0):
            raise InputError("squared distances must be finite and non-negative")
        if np.any(np.diag(self.d2) != 0) or not np.array_equal(self.d2, self.d2.T):
            raise InputError("squared distances must be symmetric with a zero diagonal")
        self._pos = {k: i for i, k in enumerate(self.ids)}

    @classmethod
    def from_diagrams(cls, diagrams, q=2.0, *, include_essential=True):
        """Cache over ``diagrams``: a GroupedDiagrams, a mapping ``id -> diagram``,
        or a sequence (ids become positions)."""
        if isinstance(diagrams, GroupedDiagrams):
            if diagrams.diagrams is None:
                raise InputError("grouped input carries no diagrams to measure")
            ids = diagrams.ids
            dgms = [diagrams.diagrams[i] for i in ids]
        elif isinstance(diagrams, dict):
            ids, dgms = list(diagrams), list(diagrams.values())
        else:
            dgms = list(diagrams)
            ids = list(range(len(dgms)))
        D = pairwise_diagram_distances(dgms, q, include_essential=include_essential)
        return cls(ids, D * D)

    def index(self, ids):
        try:
            return np.array([self._pos[i] for i in ids], dtype=np.int64)
        except KeyError as exc:
            raise InputError(f"diagram {exc.args[0]!r} is not in the distance cache") from None


@dataclass
class TestResult:
    __test__ = False

    observed_stat: float
    p_value: float
    replicates: int
    mode: str
    seed: int
    groups: list
    sizes: list
    null_stats: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        return {
            "statistic": self.observed_stat,
            "p_value": self.p_value,
            "replicates": self.replicates,
            "mode": self.mode,
            "seed": self.seed,
            "groups": list(self.groups),
            "sizes": list(self.sizes),
        }


class PostHocResult(NamedTuple):
    pair: tuple
    result: TestResult
    significant: bool

    def to_dict(self):
        return {"pair": list(self.pair), "significant": self.significant, **self.result.to_dict()}


@numba.njit(cache=True)
def _joint_loss_rows(d2, assign, sizes):
    # per-group sums over sorted members, then group terms added in sorted
    # order: equal partitions give bitwise-equal statistics
    B = assign.shape[0]
    s = sizes.shape[0]
    out = np.empty(B)
    terms = np.empty(s)
    for b in range(B):
        start = 0
        for g in range(s):
            n_m = sizes[g]
            idx = np.sort(assign[b, start:start + n_m])
            acc = 0.0
            for i in range(n_m):
                row = idx[i]
                for j in range(i + 1, n_m):
                    acc += d2[row, idx[j]]
            terms[g] = acc / (n_m * (n_m - 1))
            start += n_m
        ts = np.sort(terms)
        tot = 0.0
        for g in range(s):
            tot += ts[g]
        out[b] = tot
    return out


def _pooled(gd, cache):
    pos = cache.index(gd.ids)
    return np.ascontiguousarray(cache.d2[np.ix_(pos, pos)]), np.asarray(gd.sizes, dtype=np.int64)


def joint_loss(gd: GroupedDiagrams, cache: DistanceCache) -> float:
    """Sum over groups of ``1 / (2 n (n - 1))`` times the double sum of squared distances."""
    d2, sizes = _pooled(gd, cache)
    return float(_joint_loss_rows(d2, np.arange(len(d2))[None, :], sizes)[0])


def assignment_count(sizes):
    """Number of ordered assignments of the pooled items to groups of the given sizes."""
    sizes = [int(n) for n in sizes]
    if not sizes:
        raise InputError("at least one group size is required")
    if any(n < 1 for n in sizes):
        raise InputError(f"group sizes must be >= 1, got {sizes}")
    out = math.factorial(sum(sizes))
    for n in sizes:
        out //= math.factorial(n)
    return out


def enumerate_assignments(sizes):
    """All assignments as an array of pooled indices in group-block order.

    Row ``b`` lists the members of group 0, then group 1, and so on, each
    block ascending; rows come in lexicographic order of the successive choices.
    """
    sizes = [int(n) for n in sizes]
    total = sum(sizes)
    rows = []

    def rec(remaining, g, prefix):
        if g == len(sizes) - 1:
            rows.append(prefix + remaining)
            return
        for combo in itertools.combinations(remaining, sizes[g]):
            chosen = set(combo)
            rec([x for x in remaining if x not in chosen], g + 1, prefix + list(combo))

    rec(list(range(total)), 0, [])
    return np.array(rows, dtype=np.int64).reshape(-1, total)


def _sampled_assignments(n, n_samples, seed):
    out = np.empty((n_samples, n), dtype=np.int64)
    for r in range(n_samples):
        out[r] = substream(seed, r + 1).permutation(n)
    return out


def _resolve_seed(seed):
    if seed is None:
        return int(np.random.SeedSequence().generate_state(1, np.uint64)[0] >> np.uint64(1))
    seed = int(seed)
    if seed < 0:
        raise InputError(f"seed must be a non-negative integer, got {seed}")
    return seed


def omnibus_test(gd: GroupedDiagrams, cache: DistanceCache, *, max_exact=DEFAULT_MAX_EXACT,
                 n_samples=DEFAULT_N_SAMPLES, seed=None, keep_null=False) -> TestResult:
    """Permutation test of no shape difference across all groups.

    Enumerates every assignment when their number is at most ``max_exact``;
    otherwise evaluates the observed assignment plus ``n_samples`` random ones,
    draw ``r`` coming from the substream keyed by ``(seed, r)``. The observed
    assignment is always among the replicates, and ties count as ``<=``
    (up to a relative slack of ``TIE_RTOL`` for floating-point round-off).
    """
    d2, sizes = _pooled(gd, cache)
    seed = _resolve_seed(seed)
    observed = float(_joint_loss_rows(d2, np.arange(len(d2))[None, :], sizes)[0])
    count = assignment_count(sizes)
    if count <= max_exact:
        mode = "exact"
        null = _joint_loss_rows(d2, enumerate_assignments(sizes), sizes)
    else:
        if n_samples < 1:
            raise InputError(f"n_samples must be >= 1 in sampled mode, got {n_samples}")
        mode = "sampled"
        sampled = _joint_loss_rows(d2, _sampled_assignments(len(d2), int(n_samples), seed), sizes)
        null = np.concatenate([[observed], sampled])
    hits = int(np.count_nonzero(null <= observed + TIE_RTOL * abs(observed)))
    return TestResult(
        observed_stat=observed,
        p_value=hits / len(null),
        replicates=len(null),
        mode=mode,
        seed=seed,
        groups=list(gd.names),
        sizes=sizes.tolist(),
        null_stats=null if keep_null else None,
    )


def two_group_test(gd: GroupedDiagrams, cache: DistanceCache, **kwargs) -> TestResult:
    """Two-group version of :func:`omnibus_test`."""
    if len(gd.names) != 2:
        raise InputError(f"two_group_test needs exactly 2 groups, got {len(gd.names)}")
    return omnibus_test(gd, cache, **kwargs)


def post_hoc(gd: GroupedDiagrams, cache: DistanceCache, alpha=0.05, **kwargs):
    """Two-group tests for every unordered pair of groups.

    Pairs are ordered lexicographically by group name and every pair uses the
    same keyword arguments (including the seed). p-values are not adjusted
    for multiplicity; ``alpha`` only sets the ``significant`` flag.
    """
    if len(gd.names) < 3:
        raise InputError("post-hoc tests need at least 3 groups; use two_group_test")
    if not 0 < alpha < 1:
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")
    kwargs["seed"] = _resolve_seed(kwargs.get("seed"))
    out = []
    for a, b in itertools.combinations(sorted(gd.names), 2):
        res = two_group_test(gd.subset([a, b]), cache, **kwargs)
        out.append(PostHocResult((a, b), res, res.p_value <= alpha))
    return out
