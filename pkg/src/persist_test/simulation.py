"""Monte Carlo study of the omnibus and post-hoc permutation tests.

A scenario fixes a set of spaces, the number of clouds drawn from each, and
optionally a grid over (points per cloud, noise sigma). Every trial samples
fresh clouds, computes their persistence diagrams and runs the tests; each
grid cell reports the percentage of trials with ``p <= alpha``.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from ._rng import derive_seed
from .errors import InputError, PersistTestError
from .filtration import build_filtration
from .permutation import (
    DEFAULT_MAX_EXACT,
    DistanceCache,
    GroupedDiagrams,
    omnibus_test,
    post_hoc,
)
from .persistence import diagrams as compute_diagrams
from .samplers import SpaceSpec, TrialPlan, sample_trial

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

POSTHOC_MODES = ("never", "gated", "always")
R_MAX_FACTOR = 1.1


@dataclass
class ScenarioConfig:
    plan: TrialPlan
    trials: int = 100
    alpha: float = 0.05
    hom_dim: int = 1
    n_perms: int = 100_000
    max_exact: int = DEFAULT_MAX_EXACT
    posthoc: str = "never"
    r_max: float = None
    metric_exponent: float = 2.0
    sweep: dict = None
    name: str = "scenario"

    def __post_init__(self):
        if self.trials < 1:
            raise InputError("trials must be >= 1")
        if not 0 < self.alpha < 1:
            raise InputError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.hom_dim < 0:
            raise InputError("hom_dim must be >= 0")
        if self.posthoc not in POSTHOC_MODES:
            raise InputError(f"posthoc must be one of {POSTHOC_MODES}, got {self.posthoc!r}")
        if self.r_max is not None and not self.r_max > 0:
            raise InputError(f"r_max must be > 0, got {self.r_max}")
        if self.sweep:
            pts = self.sweep.get("points_per_cloud") or [None]
            sig = self.sweep.get("noise_sigma") or [None]
            if any(p is not None and p < 1 for p in pts) or any(s is not None and s < 0 for s in sig):
                raise InputError("sweep entries must be positive sample sizes and non-negative sigmas")

    def resolved_r_max(self):
        """Shared filtration cap: the configured value, else 1.1 x the largest noiseless diameter."""
        if self.r_max is not None:
            return float(self.r_max)
        return R_MAX_FACTOR * max(spec.diameter() for spec in self.plan.specs)

    def cells(self):
        """Grid cells as ``(points_per_cloud list, sigma or None)``; None keeps each space's own sigma."""
        if not self.sweep:
            return [(list(self.plan.points_per_cloud), None)]
        pts = self.sweep.get("points_per_cloud") or [None]
        sig = self.sweep.get("noise_sigma") or [None]
        out = []
        for n, s in itertools.product(pts, sig):
            sizes = list(self.plan.points_per_cloud) if n is None else [int(n)] * len(self.plan.specs)
            out.append((sizes, None if s is None else float(s)))
        return out

    def to_dict(self):
        d = {
            "name": self.name,
            "seed": self.plan.seed,
            "trials": self.trials,
            "alpha": self.alpha,
            "hom_dim": self.hom_dim,
            "n_perms": self.n_perms,
            "max_exact": self.max_exact,
            "posthoc": self.posthoc,
            "r_max": self.r_max if self.r_max is not None else "auto",
            "metric_exponent": self.metric_exponent,
            "clouds_per_group": self.plan.clouds_per_group,
            "spaces": [
                {**{k: v for k, v in asdict(s).items() if v is not None}, "points": k}
                for s, k in zip(self.plan.specs, self.plan.points_per_cloud)
            ],
        }
        if self.sweep:
            d["sweep"] = dict(self.sweep)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        try:
            spaces = d.pop("spaces")
        except KeyError:
            raise InputError("scenario config needs a [[spaces]] list") from None
        specs, points = [], []
        for sp in spaces:
            sp = dict(sp)
            points.append(sp.pop("points", None))
            if "sigma" in sp:
                sp["noise_sigma"] = sp.pop("sigma")
            try:
                specs.append(SpaceSpec(**sp))
            except TypeError as exc:
                raise InputError(f"bad space entry {sp}: {exc}") from None
        sweep = d.pop("sweep", None)
        if any(p is None for p in points):
            if not sweep or not sweep.get("points_per_cloud"):
                raise InputError("every space needs 'points' unless sweep.points_per_cloud is given")
            points = [sweep["points_per_cloud"][0]] * len(specs)
        plan = TrialPlan(
            specs,
            clouds_per_group=int(d.pop("clouds_per_group", 20)),
            points_per_cloud=[int(p) for p in points],
            seed=int(d.pop("seed", 0)),
        )
        r_max = d.pop("r_max", None)
        if r_max == "auto":
            r_max = None
        known = {"trials", "alpha", "hom_dim", "n_perms", "max_exact", "posthoc", "metric_exponent", "name"}
        unknown = set(d) - known
        if unknown:
            raise InputError(f"unknown scenario config keys: {sorted(unknown)}")
        return cls(plan=plan, r_max=r_max, sweep=sweep, **d)


def load_config(path):
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read scenario config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f"invalid TOML in {path}: {exc}") from None
    return ScenarioConfig.from_dict(data)


@dataclass
class TrialOutcome:
    trial: int
    p_value: float
    statistic: float
    posthoc: dict = None


def run_trial(plan: TrialPlan, cfg: ScenarioConfig, trial_index, sigma=None, r_max=None):
    """Sample one trial's clouds and run the omnibus (and possibly post-hoc) tests."""
    r_max = cfg.resolved_r_max() if r_max is None else r_max
    try:
        clouds = sample_trial(plan, trial_index, sigma)
        groups = {
            label: [
                compute_diagrams(build_filtration(c, cfg.hom_dim + 1, r_max), cfg.hom_dim)[cfg.hom_dim]
                for c in cs
            ]
            for label, cs in clouds.items()
        }
        gd = GroupedDiagrams.from_groups(groups)
        cache = DistanceCache.from_diagrams(gd, cfg.metric_exponent)
        kw = dict(max_exact=cfg.max_exact, n_samples=cfg.n_perms)
        res = omnibus_test(gd, cache, seed=derive_seed(plan.seed, trial_index, 1), **kw)
        ph = None
        run_ph = cfg.posthoc == "always" or (cfg.posthoc == "gated" and res.p_value <= cfg.alpha)
        if run_ph and len(gd.names) >= 3:
            ph = {
                f"{a} vs {b}": r.p_value
                for (a, b), r, _ in post_hoc(gd, cache, cfg.alpha, seed=derive_seed(plan.seed, trial_index, 2), **kw)
            }
        return TrialOutcome(trial_index, res.p_value, res.observed_stat, ph)
    except PersistTestError as exc:
        raise type(exc)(f"trial {trial_index}: {exc}") from exc


@dataclass
class CellResult:
    points_per_cloud: list
    sigma: float
    outcomes: list = field(default_factory=list)
    error: str = None

    def percent(self, alpha, pair=None):
        if not self.outcomes:
            return float("nan")
        if pair is None:
            hits = [o.p_value <= alpha for o in self.outcomes]
        else:
            hits = [bool(o.posthoc) and o.posthoc.get(pair, 1.0) <= alpha for o in self.outcomes]
        return 100.0 * sum(hits) / len(hits)


@dataclass
class ScenarioReport:
    config: dict
    r_max: float
    pairs: list
    cells: list

    def rows(self):
        alpha = self.config["alpha"]
        out = []
        for cell in self.cells:
            tests = [("omnibus", None)] + [(p, p) for p in self.pairs]
            for name, pair in tests:
                ran = len(cell.outcomes) if pair is None else sum(bool(o.posthoc) for o in cell.outcomes)
                out.append({
                    "scenario": self.config["name"],
                    "points_per_cloud": "/".join(map(str, cell.points_per_cloud)),
                    "sigma": "" if cell.sigma is None else repr(cell.sigma),
                    "test": name,
                    "trials": len(cell.outcomes),
                    "tests_run": ran,
                    "percent_significant": repr(cell.percent(alpha, pair)),
                    "alpha": repr(alpha),
                    "r_max": repr(self.r_max),
                    "seed": self.config["seed"],
                    "error": cell.error or "",
                })
        return out

    def to_csv(self):
        buf = io.StringIO()
        rows = self.rows()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()

    def pvalues_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["points_per_cloud", "sigma", "trial", "test", "p_value"])
        for cell in self.cells:
            n = "/".join(map(str, cell.points_per_cloud))
            s = "" if cell.sigma is None else repr(cell.sigma)
            for o in cell.outcomes:
                w.writerow([n, s, o.trial, "omnibus", repr(o.p_value)])
                for pair, p in (o.posthoc or {}).items():
                    w.writerow([n, s, o.trial, pair, repr(p)])
        return buf.getvalue()

    def text_table(self, test="omnibus"):
        """Percent significant laid out with sample sizes as rows and noise levels as columns."""
        pair = None if test == "omnibus" else test
        sizes = list(dict.fromkeys("/".join(map(str, c.points_per_cloud)) for c in self.cells))
        sigmas = list(dict.fromkeys(c.sigma for c in self.cells))
        lookup = {("/".join(map(str, c.points_per_cloud)), c.sigma): c for c in self.cells}
        head = ["Sample Size"] + ["per-space" if s is None else f"{s:.4g}" for s in sigmas]
        lines = [
            f"{self.config['name']}: {test}, percent of {self.config['trials']} trials with p <= {self.config['alpha']}",
            " | ".join(f"{h:>11}" for h in head),
        ]
        for n in sizes:
            vals = []
            for s in sigmas:
                cell = lookup.get((n, s))
                vals.append("err" if cell is None or cell.error else f"{cell.percent(self.config['alpha'], pair):.0f}")
            lines.append(" | ".join(f"{v:>11}" for v in [n] + vals))
        return "\n".join(lines) + "\n"

    def to_text(self):
        return "\n".join(self.text_table(t) for t in ["omnibus"] + self.pairs)

    def write(self, outdir):
        import os

        os.makedirs(outdir, exist_ok=True)
        files = {
            "report.csv": self.to_csv(),
            "pvalues.csv": self.pvalues_csv(),
            "tables.txt": self.to_text(),
            "config.json": json.dumps({**self.config, "r_max_used": self.r_max}, indent=2, sort_keys=True) + "\n",
        }
        for name, text in files.items():
            with open(os.path.join(outdir, name), "w", newline="") as fh:
                fh.write(text)
        return sorted(files)


def run_scenario(cfg: ScenarioConfig, *, n_jobs=1, progress=None) -> ScenarioReport:
    """Run every grid cell; a failing cell is recorded and the others still run."""
    r_max = cfg.resolved_r_max()
    labels = sorted(s.label for s in cfg.plan.specs)
    pairs = []
    if cfg.posthoc != "never" and len(labels) >= 3:
        pairs = [f"{a} vs {b}" for a, b in itertools.combinations(labels, 2)]
    cells = []
    for sizes, sigma in cfg.cells():
        plan = TrialPlan(cfg.plan.specs, cfg.plan.clouds_per_group, sizes, cfg.plan.seed)
        cell = CellResult(sizes, sigma)
        try:
            if n_jobs == 1:
                cell.outcomes = [run_trial(plan, cfg, t, sigma, r_max) for t in range(cfg.trials)]
            else:
                from joblib import Parallel, delayed

                cell.outcomes = Parallel(n_jobs=n_jobs)(
                    delayed(run_trial)(plan, cfg, t, sigma, r_max) for t in range(cfg.trials)
                )
        except PersistTestError as exc:
            cell.error = str(exc)
        cells.append(cell)
        if progress is not None:
            progress(cell)
    return ScenarioReport(cfg.to_dict(), r_max, pairs, cells)


def _spaces(kind):
    if kind == "unbalanced-circles":
        return [SpaceSpec("circle", [1.0], label=f"circle-{k}") for k in (18, 36, 54)], [18, 36, 54]
    if kind == "scaled-circles":
        return [SpaceSpec("circle", [r], label=f"circle-r{r:.3g}") for r in (1.0, 1 / 2, 1 / 3)], [24] * 3
    if kind == "wedges-unit":
        return [
            SpaceSpec("circle", [1.0], label="circle"),
            SpaceSpec("wedge", [1.0, 1.0], label="two-wedge"),
            SpaceSpec("wedge", [1.0, 1.0, 1.0], label="three-wedge"),
        ], [60] * 3
    if kind == "wedges-scaled":
        return [
            SpaceSpec("circle", [1.0], label="circle"),
            SpaceSpec("wedge", [1 / 2, 1 / 2], label="two-wedge"),
            SpaceSpec("wedge", [1 / 3, 1 / 3, 1 / 3], label="three-wedge"),
        ], [60] * 3
    if kind == "circle-chords":
        return [
            SpaceSpec("circle", [1.0], label="circle"),
            SpaceSpec("chorded_circle", chords=1, label="one-chord"),
            SpaceSpec("chorded_circle", chords=2, label="two-chords"),
        ], [60] * 3
    if kind == "null-circles":
        return [SpaceSpec("circle", [1.0], label=f"circle-{k}") for k in "abc"], [24] * 3
    raise InputError(f"unknown preset {kind!r}; choose from {PRESETS}")


PRESETS = ("unbalanced-circles", "scaled-circles", "wedges-unit", "wedges-scaled", "circle-chords", "null-circles")
SAMPLE_SIZES = [6, 12, 18, 24, 30, 36, 42, 48, 54, 60]
NOISE_LEVELS = [0.0, 1 / 3, 2 / 3]


def preset(name, *, desk=False, seed=0):
    """Built-in scenarios; ``desk=True`` uses 20 trials and 2000 permutations."""
    specs, points = _spaces(name)
    sweep = None
    posthoc = "never"
    if name in ("wedges-unit", "wedges-scaled", "circle-chords"):
        sweep = {"points_per_cloud": list(SAMPLE_SIZES), "noise_sigma": list(NOISE_LEVELS)}
        posthoc = "always"
    return ScenarioConfig(
        plan=TrialPlan(specs, clouds_per_group=20, points_per_cloud=points, seed=seed),
        trials=20 if desk else 100,
        n_perms=2000 if desk else 100_000,
        posthoc=posthoc,
        sweep=sweep,
        name=name,
    )


def percent_significant(pvalues, alpha=0.05):
    p = np.asarray(pvalues, dtype=float)
    return 100.0 * float(np.mean(p <= alpha))
