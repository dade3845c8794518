"""Tabular-data workflow: ingest, balance, check representativeness, analyze.

Rows are identified by their physical line number in the input CSV
(1-based, header included), and every cloud carries the row numbers it
was built from.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ._rng import derive_seed, substream
from .errors import InputError
from .filtration import build_filtration, pairwise_distances
from .permutation import (
    DEFAULT_MAX_EXACT,
    DEFAULT_N_SAMPLES,
    DistanceCache,
    GroupedDiagrams,
    omnibus_test,
    post_hoc,
)
from .persistence import diagrams as compute_diagrams

R_MAX_FACTOR = 1.1


class RepresentativenessError(InputError):
    """No trial passed the representativeness threshold."""


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    row_ids: np.ndarray
    feature_names: list
    group_levels: list
    standardized: bool = False

    @property
    def counts(self):
        return {g: int(np.count_nonzero(self.labels == g)) for g in self.group_levels}

    def rows_of(self, group):
        return np.flatnonzero(self.labels == group)

    def standardize(self):
        """Copy with every feature scaled to zero mean and unit variance over all rows."""
        X = self.features
        sd = X.std(axis=0)
        if np.any(sd == 0):
            bad = [n for n, s in zip(self.feature_names, sd) if s == 0]
            raise InputError(f"cannot standardize constant feature(s): {bad}")
        return Dataset((X - X.mean(axis=0)) / sd, self.labels, self.row_ids, self.feature_names,
                       self.group_levels, True)

    def points(self, row_ids):
        pos = {r: i for i, r in enumerate(self.row_ids.tolist())}
        try:
            return self.features[[pos[r] for r in row_ids]]
        except KeyError as exc:
            raise InputError(f"row {exc.args[0]} is not in the dataset") from None


def _resolve_column(spec, names, header):
    spec = str(spec).strip()
    if header and spec in names:
        return names.index(spec)
    try:
        idx = int(spec)
    except ValueError:
        raise InputError(f"column {spec!r} not found; available: {names if header else 'integer indices'}") from None
    if not 0 <= idx < len(names):
        raise InputError(f"column index {idx} out of range (file has {len(names)} columns)")
    return idx


def ingest(path, feature_columns, group_column, header=True, levels=None):
    """Read a CSV of numeric features plus one categorical group column.

    Columns are named when ``header`` is true, otherwise given as 0-based
    indices. ``levels`` restricts (and orders) the groups kept; by default
    all groups are kept in order of first appearance.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise InputError(f"{path} is empty")
    width = len(rows[0])
    names = [c.strip() for c in rows[0]] if header else [str(j) for j in range(width)]
    fcols = [_resolve_column(c, names, header) for c in feature_columns]
    gcol = _resolve_column(group_column, names, header)
    if not fcols:
        raise InputError("at least one feature column is required")
    start = 1 if header else 0
    feats, labels, ids = [], [], []
    wanted = None if levels is None else set(map(str, levels))
    for lineno, row in enumerate(rows[start:], start + 1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != width:
            raise InputError(f"{path}: row {lineno} has {len(row)} cells, expected {width}")
        label = row[gcol].strip()
        if wanted is not None and label not in wanted:
            continue
        vals = []
        for j in fcols:
            cell = row[j].strip()
            try:
                v = float(cell)
            except ValueError:
                raise InputError(
                    f"{path}: unparseable cell at row {lineno}, column {names[j]!r}: {cell!r}"
                ) from None
            if not np.isfinite(v):
                raise InputError(f"{path}: non-finite value at row {lineno}, column {names[j]!r}")
            vals.append(v)
        feats.append(vals)
        labels.append(label)
        ids.append(lineno)
    labels = np.array(labels, dtype=object)
    found = list(dict.fromkeys(labels.tolist()))
    if levels is None:
        group_levels = found
    else:
        group_levels = [str(g) for g in levels]
        empty = [g for g in group_levels if g not in found]
        if empty:
            raise InputError(f"{path}: group(s) {empty} have no rows")
    if len(group_levels) < 2:
        raise InputError(f"{path}: need at least 2 groups in column {names[gcol]!r}, found {group_levels}")
    return Dataset(
        np.array(feats, dtype=np.float64).reshape(-1, len(fcols)),
        labels,
        np.array(ids, dtype=np.int64),
        [names[j] for j in fcols],
        group_levels,
    )


@dataclass
class PartitionPlan:
    clouds_per_group: int
    points_per_cloud: int
    balance_to: int = None
    seed: int = 0

    def __post_init__(self):
        if self.balance_to is None:
            self.balance_to = self.clouds_per_group * self.points_per_cloud
        if self.clouds_per_group < 2:
            raise InputError("at least 2 clouds per group are required")
        if self.points_per_cloud < 1:
            raise InputError("points per cloud must be positive")
        if self.clouds_per_group * self.points_per_cloud != self.balance_to:
            raise InputError(
                f"clouds_per_group x points_per_cloud = {self.clouds_per_group * self.points_per_cloud} "
                f"must equal balance_to = {self.balance_to}"
            )


@dataclass
class LabeledCloud:
    group: str
    index: int
    row_ids: list
    points: np.ndarray = field(repr=False)

    @property
    def id(self):
        return f"{self.group}/{self.index}"


def _split(ds, group, rows, plan):
    k = plan.points_per_cloud
    return [
        LabeledCloud(group, c, ds.row_ids[rows[c * k:(c + 1) * k]].tolist(), ds.features[rows[c * k:(c + 1) * k]])
        for c in range(plan.clouds_per_group)
    ]


def balance_and_partition(ds: Dataset, plan: PartitionPlan, fixed_rows=None):
    """Subsample each group to ``balance_to`` rows and split it into clouds.

    ``fixed_rows`` maps a group to the exact row ids it must use (e.g. a
    representative selection); those rows are still shuffled into clouds.
    """
    fixed_rows = fixed_rows or {}
    out = []
    for g, group in enumerate(ds.group_levels):
        rng = substream(plan.seed, g)
        if group in fixed_rows:
            pos = {r: i for i, r in enumerate(ds.row_ids.tolist())}
            try:
                rows = np.array([pos[r] for r in fixed_rows[group]], dtype=np.int64)
            except KeyError as exc:
                raise InputError(f"fixed row {exc.args[0]} for group {group!r} is not in the dataset") from None
            if len(rows) != plan.balance_to:
                raise InputError(f"group {group!r}: fixed selection has {len(rows)} rows, need {plan.balance_to}")
            rows = rng.permutation(rows)
        else:
            avail = ds.rows_of(group)
            if len(avail) < plan.balance_to:
                feasible = min(ds.counts.values())
                raise InputError(
                    f"group {group!r} has {len(avail)} rows, fewer than balance_to={plan.balance_to}; "
                    f"the largest feasible balance_to is {feasible}"
                )
            rows = rng.choice(avail, size=plan.balance_to, replace=False)
        out.extend(_split(ds, group, rows, plan))
    return out


def pooled_r_max(clouds, factor=R_MAX_FACTOR):
    pts = np.vstack([c.points if isinstance(c, LabeledCloud) else c for c in clouds])
    diam = float(pairwise_distances(pts).max())
    return factor * diam if diam > 0 else 1.0


def _grouped(clouds, hom_dim, r_max):
    groups = {}
    for c in clouds:
        dg = compute_diagrams(build_filtration(c.points, hom_dim + 1, r_max), hom_dim)[hom_dim]
        groups.setdefault(c.group, []).append(dg)
    return GroupedDiagrams.from_groups(groups)


def analyze(clouds, hom_dim=1, r_max=None, *, metric_exponent=2.0, alpha=0.05, posthoc="gated",
            max_exact=DEFAULT_MAX_EXACT, n_samples=DEFAULT_N_SAMPLES, seed=0, standardized=False):
    """Diagrams, omnibus test and (gated) post-hoc tests for labeled clouds.

    Returns a JSON-ready dict with every p-value, statistic, seed, the
    configuration and the provenance of each cloud.
    """
    clouds = list(clouds)
    if posthoc not in ("never", "gated", "always"):
        raise InputError(f"posthoc must be never, gated or always, got {posthoc!r}")
    sizes = {}
    for c in clouds:
        sizes.setdefault(c.group, set()).add(len(c.points))
    if len(sizes) < 2:
        raise InputError("analysis needs clouds from at least 2 groups")
    r_policy = "given" if r_max is not None else f"pooled diameter x {R_MAX_FACTOR}"
    r_max = pooled_r_max(clouds) if r_max is None else float(r_max)
    gd = _grouped(clouds, hom_dim, r_max)
    cache = DistanceCache.from_diagrams(gd, metric_exponent)
    kw = dict(max_exact=max_exact, n_samples=n_samples)
    omni = omnibus_test(gd, cache, seed=derive_seed(seed, 1), **kw)
    pairwise = []
    if len(gd.names) >= 3 and (posthoc == "always" or (posthoc == "gated" and omni.p_value <= alpha)):
        pairwise = [r.to_dict() for r in post_hoc(gd, cache, alpha, seed=derive_seed(seed, 2), **kw)]
    return {
        **omni.to_dict(),
        "reject": omni.p_value <= alpha,
        "pairwise": pairwise,
        "config": {
            "hom_dim": hom_dim,
            "r_max": r_max,
            "r_max_policy": r_policy,
            "metric_exponent": metric_exponent,
            "alpha": alpha,
            "posthoc": posthoc,
            "max_exact": max_exact,
            "n_samples": n_samples,
            "seed": seed,
            "standardized": standardized,
            "points_per_cloud": {g: sorted(v) for g, v in sizes.items()},
        },
        "clouds": [{"id": c.id, "group": c.group, "index": c.index, "rows": list(c.row_ids)} for c in clouds],
    }


def clouds_from_provenance(ds: Dataset, records):
    """Rebuild labeled clouds from the ``clouds`` section of an analysis report."""
    return [LabeledCloud(r["group"], r["index"], list(r["rows"]), ds.points(r["rows"])) for r in records]


def representativeness(ds: Dataset, group, spaces=9, clouds_per_space=4, points_per_cloud=44, trials=150,
                       threshold=0.1, seed=0, *, hom_dim=1, r_max=None, metric_exponent=2.0,
                       max_exact=DEFAULT_MAX_EXACT, n_samples=DEFAULT_N_SAMPLES, progress=None):
    """Check whether equal-size subsamples of one large group look alike.

    Each trial randomly splits the group into ``spaces`` pseudo-groups of
    ``clouds_per_space * points_per_cloud`` rows (the remainder is discarded
    at random), runs the omnibus test across them, and calls the trial
    representative when ``p >= threshold``. One pseudo-group of a uniformly
    chosen representative trial becomes the selected subsample.
    """
    if group not in ds.group_levels:
        raise InputError(f"unknown group {group!r}; levels are {ds.group_levels}")
    if spaces < 2 or trials < 1:
        raise InputError("need spaces >= 2 and trials >= 1")
    space_size = clouds_per_space * points_per_cloud
    avail = ds.rows_of(group)
    need = spaces * space_size
    if len(avail) < need:
        raise InputError(
            f"group {group!r} has {len(avail)} rows; {spaces} spaces of {space_size} need {need}"
        )
    plan = PartitionPlan(clouds_per_space, points_per_cloud)
    r_policy = "given" if r_max is not None else f"pooled diameter x {R_MAX_FACTOR}"
    if r_max is None:
        r_max = pooled_r_max([ds.features[avail]])
    log, partitions = [], []
    for t in range(trials):
        rows = substream(seed, t).permutation(avail)[:need]
        clouds = []
        for s in range(spaces):
            block = rows[s * space_size:(s + 1) * space_size]
            for c in _split(ds, f"space{s}", block, plan):
                clouds.append(c)
        gd = _grouped(clouds, hom_dim, r_max)
        cache = DistanceCache.from_diagrams(gd, metric_exponent)
        res = omnibus_test(gd, cache, seed=derive_seed(seed, t, 1), max_exact=max_exact, n_samples=n_samples)
        log.append({"trial": t, "p_value": res.p_value, "mode": res.mode, "representative": res.p_value >= threshold})
        partitions.append([ds.row_ids[rows[s * space_size:(s + 1) * space_size]].tolist() for s in range(spaces)])
        if progress is not None:
            progress(log[-1])
    good = [e["trial"] for e in log if e["representative"]]
    if not good:
        raise RepresentativenessError(
            f"none of {trials} trials reached p >= {threshold}; run more trials or lower the threshold"
        )
    pick = substream(seed, trials, 0x5E1EC7)
    chosen_trial = int(good[int(pick.integers(len(good)))])
    chosen_space = int(pick.integers(spaces))
    return {
        "group": group,
        "rows": sorted(partitions[chosen_trial][chosen_space]),
        "selected_trial": chosen_trial,
        "selected_space": chosen_space,
        "representative_trials": len(good),
        "trials": log,
        "discarded_per_trial": len(avail) - need,
        "config": {
            "spaces": spaces,
            "clouds_per_space": clouds_per_space,
            "points_per_cloud": points_per_cloud,
            "threshold": threshold,
            "seed": seed,
            "hom_dim": hom_dim,
            "r_max": r_max,
            "r_max_policy": r_policy,
            "metric_exponent": metric_exponent,
            "max_exact": max_exact,
            "n_samples": n_samples,
            "standardized": ds.standardized,
        },
    }
