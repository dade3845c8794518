"""``persist-test`` command-line interface.

Exit codes: 0 success, 2 input error, 3 resource error, 4 internal
consistency error. Every command is deterministic given its flags and seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from . import io as pio
from ._rng import substream
from .errors import InputError, PersistTestError
from .filtration import build_filtration, check_point_cloud, pairwise_distances
from .metric import pairwise_diagram_distances
from .permutation import DEFAULT_MAX_EXACT, DistanceCache, GroupedDiagrams, omnibus_test, post_hoc
from .persistence import diagrams as compute_diagrams
from .samplers import KINDS, SpaceSpec
from .simulation import PRESETS, R_MAX_FACTOR, load_config, preset, run_scenario
from .workflow import (
    PartitionPlan,
    analyze,
    balance_and_partition,
    clouds_from_provenance,
    ingest,
    representativeness,
)

def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None

def _dump_json(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        _ensure_parent(path)
        with open(path, "w", newline="") as fh:
            fh.write(text)

def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)

def _write_text(path, text):
    _ensure_parent(path)
    with open(path, "w", newline="") as fh:
        fh.write(text)

def _add_test_flags(p, *, hom=True, rmax=True):
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    if hom:
        p.add_argument("--hom-dim", type=int, default=1, help="homological dimension (default 1)")
    if rmax:
        p.add_argument("--r-max", type=float, default=None, help=f"filtration cap (default {R_MAX_FACTOR} x diameter)")
    p.add_argument("--metric-exponent", type=float, default=2.0, help="diagram metric exponent q (default 2)")
    p.add_argument("--n-perms", type=int, default=100_000, help="sampled permutations (default 100000)")
    p.add_argument("--max-exact", type=int, default=DEFAULT_MAX_EXACT,
                   help=f"enumerate when the assignment count is at most this (default {DEFAULT_MAX_EXACT})")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level (default 0.05)")

def _add_dataset_flags(p):
    p.add_argument("--input", required=True, help="CSV dataset")
    p.add_argument("--features", required=True, help="comma-separated feature columns (names, or indices without --header)")
    p.add_argument("--group-column", required=True, help="categorical group column")
    p.add_argument("--header", action="store_true", help="row 1 holds column names")
    p.add_argument("--levels", default=None, help="comma-separated group levels to keep, in order")
    p.add_argument("--standardize", action="store_true", help="z-score every feature over all kept rows")

def _load_dataset(args):
    levels = None if args.levels is None else [v.strip() for v in args.levels.split(",")]
    ds = ingest(args.input, [c.strip() for c in args.features.split(",")], args.group_column, args.header, levels)
    return ds.standardize() if args.standardize else ds

def cmd_sample(args):
    spec = SpaceSpec(args.kind, args.radii, chords=args.chords, noise_sigma=args.sigma)
    cloud = spec.sample(args.n, substream(args.seed))
    pio.write_cloud(args.out, cloud)

def cmd_diagram(args):
    if args.precomputed:
        D = pio.read_cloud(args.input, args.header)
        metric = "precomputed"
        diam = float(D.max()) if D.size else 0.0
        data = D
    else:
        data = check_point_cloud(pio.read_cloud(args.input, args.header))
        metric = "euclidean"
        diam = float(pairwise_distances(data).max())
    r_max = args.r_max if args.r_max is not None else (R_MAX_FACTOR * diam if diam > 0 else 1.0)
    fc = build_filtration(data, args.hom_dim + 1, r_max, metric=metric)
    dg = compute_diagrams(fc, args.hom_dim)
    pio.write_diagrams(args.out, dg)

def _diagram_of(path, dim):
    return pio.read_diagrams(path, dims=[dim])[dim]

def _unique_ids(paths):
    ids = [pio.stem(p) for p in paths]
    return ids if len(set(ids)) == len(ids) else list(paths)

def cmd_distance(args):
    dgms = [_diagram_of(p, args.hom_dim) for p in args.diagrams]
    D = pairwise_diagram_distances(dgms, args.metric_exponent)
    pio.write_distance_matrix(args.out, _unique_ids(args.diagrams), D)

def _parse_groups(entries):
    groups = {}
    for e in entries:
        name, sep, items = e.partition("=")
        if not sep or not name or not items:
            raise InputError(f"--group expects NAME=item1,item2,... got {e!r}")
        if name in groups:
            raise InputError(f"group {name!r} given twice")
        groups[name] = [s for s in items.split(",") if s]
    return groups

def cmd_test(args):
    groups = _parse_groups(args.group)
    if args.distances:
        ids, D = pio.read_distance_matrix(args.distances)
        cache = DistanceCache(ids, D * D)
        gd = GroupedDiagrams(list(groups), list(groups.values()))
    else:
        dgms = {}
        members = []
        for name, paths in groups.items():
            members.append(paths)
            for p in paths:
                dgms[p] = _diagram_of(p, args.hom_dim)
        gd = GroupedDiagrams(list(groups), members, dgms)
        cache = DistanceCache.from_diagrams(gd, args.metric_exponent)
    kw = dict(max_exact=args.max_exact, n_samples=args.n_perms, seed=args.seed)
    res = omnibus_test(gd, cache, keep_null=bool(args.dump_null), **kw)
    pairwise = []
    run = args.posthoc == "always" or (args.posthoc == "gated" and res.p_value <= args.alpha)
    if run and len(gd.names) >= 3:
        pairwise = [r.to_dict() for r in post_hoc(gd, cache, args.alpha, **kw)]
    if args.dump_null:
        _ensure_parent(args.dump_null)
        with open(args.dump_null, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["replicate", "statistic"])
            for i, v in enumerate(res.null_stats):
                w.writerow([i, repr(float(v))])
    _dump_json({**res.to_dict(), "reject": res.p_value <= args.alpha, "pairwise": pairwise}, args.out)

def cmd_simulate(args):
    if (args.config is None) == (args.preset is None):
        raise InputError("give exactly one of --config or --preset")
    if args.config:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.plan.seed = args.seed
    else:
        cfg = preset(args.preset, desk=args.desk, seed=0 if args.seed is None else args.seed)
    if args.trials is not None:
        cfg.trials = args.trials
    if args.n_perms is not None:
        cfg.n_perms = args.n_perms

    def progress(cell):
        if not args.quiet:
            label = "/".join(map(str, cell.points_per_cloud))
            msg = "error" if cell.error else f"{cell.percent(cfg.alpha):.0f}% significant"
            print(f"n={label} sigma={cell.sigma}: {msg}", file=sys.stderr)

    report = run_scenario(cfg, n_jobs=args.jobs, progress=progress)
    report.write(args.out)
    if not args.quiet:
        sys.stdout.write(report.to_text())

def _analysis_text(rep):
    cfg = rep["config"]
    lines = [
        f"groups: {', '.join(rep['groups'])} (clouds per group: {', '.join(map(str, rep['sizes']))})",
        f"hom_dim={cfg['hom_dim']} r_max={cfg['r_max']!r} ({cfg['r_max_policy']}) q={cfg['metric_exponent']!r} "
        f"standardized={cfg['standardized']}",
        f"omnibus: statistic={rep['statistic']!r} p={rep['p_value']!r} ({rep['mode']}, {rep['replicates']} replicates, "
        f"seed {rep['seed']})",
    ]
    for ph in rep["pairwise"]:
        mark = " *" if ph["significant"] else ""
        lines.append(f"  {ph['pair'][0]} vs {ph['pair'][1]}: p={ph['p_value']!r} ({ph['mode']}, {ph['replicates']}){mark}")
    if not rep["pairwise"]:
        lines.append("  post-hoc tests not run")
    return "\n".join(lines) + "\n"

def cmd_analyze(args):
    ds = _load_dataset(args)
    if args.rows_from:
        with open(args.rows_from) as fh:
            clouds = clouds_from_provenance(ds, json.load(fh)["clouds"])
    else:
        fixed = {}
        for path in args.use_selection or []:
            with open(path) as fh:
                sel = json.load(fh)
            fixed[sel["group"]] = sel["rows"]
        balance_to = args.balance_to if args.balance_to is not None else args.clouds * args.points
        plan = PartitionPlan(args.clouds, args.points, balance_to, args.seed)
        clouds = balance_and_partition(ds, plan, fixed)
    rep = analyze(
        clouds, args.hom_dim, args.r_max, metric_exponent=args.metric_exponent, alpha=args.alpha,
        posthoc=args.posthoc, max_exact=args.max_exact, n_samples=args.n_perms, seed=args.seed,
        standardized=ds.standardized,
    )
    rep["config"]["features"] = ds.feature_names
    rep["config"]["counts"] = ds.counts
    os.makedirs(args.out, exist_ok=True)
    _dump_json(rep, os.path.join(args.out, "report.json"))
    text = _analysis_text(rep)
    _write_text(os.path.join(args.out, "report.txt"), text)
    sys.stdout.write(text)

def cmd_representativeness(args):
    ds = _load_dataset(args)
    sel = representativeness(
        ds, args.group, args.spaces, args.clouds, args.points, args.trials, args.threshold, args.seed,
        hom_dim=args.hom_dim, r_max=args.r_max, metric_exponent=args.metric_exponent,
        max_exact=args.max_exact, n_samples=args.n_perms,
    )
    os.makedirs(args.out, exist_ok=True)
    _dump_json(sel, os.path.join(args.out, "selection.json"))
    buf = ["trial,p_value,mode,representative"]
    buf += [f"{t['trial']},{t['p_value']!r},{t['mode']},{int(t['representative'])}" for t in sel["trials"]]
    _write_text(os.path.join(args.out, "trials.csv"), "\n".join(buf) + "\n")
    sys.stdout.write(
        f"{sel['representative_trials']} of {len(sel['trials'])} trials representative (p >= {args.threshold}); "
        f"selected space {sel['selected_space']} of trial {sel['selected_trial']} ({len(sel['rows'])} rows)\n"
    )

def build_parser():
    parser = argparse.ArgumentParser(prog="persist-test", description="Permutation tests on persistence diagrams.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample a point cloud from a circle, wedge or chorded circle")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--radii", type=_floats, default=[1.0], help="comma-separated radii (default 1)")
    p.add_argument("--chords", type=int, default=0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("diagram", help="persistence diagrams of one point cloud")
    p.add_argument("input")
    p.add_argument("--header", action="store_true", help="skip row 1 of the input")
    p.add_argument("--precomputed", action="store_true", help="input is a square distance matrix")
    p.add_argument("--hom-dim", type=int, default=1, help="highest homological dimension (default 1)")
    p.add_argument("--r-max", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_diagram)

    p = sub.add_parser("distance", help="pairwise diagram distance matrix")
    p.add_argument("diagrams", nargs="+")
    p.add_argument("--hom-dim", type=int, default=1)
    p.add_argument("--metric-exponent", type=float, default=2.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("test", help="omnibus and post-hoc permutation tests on diagram files")
    p.add_argument("--group", action="append", required=True, metavar="NAME=ITEM,ITEM,...",
                   help="diagram CSVs of one group (or matrix ids with --distances); repeat per group")
    p.add_argument("--distances", default=None, help="distance-matrix CSV to test instead of diagram files")
    p.add_argument("--posthoc", choices=["never", "gated", "always"], default="gated")
    p.add_argument("--dump-null", default=None, help="write the permutation distribution to this CSV")
    p.add_argument("--out", default=None, help="JSON report path (default stdout)")
    _add_test_flags(p, rmax=False)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="run a simulation scenario")
    p.add_argument("--config", default=None, help="scenario TOML file")
    p.add_argument("--preset", choices=PRESETS, default=None)
    p.add_argument("--desk", action="store_true", help="preset at 20 trials and 2000 permutations")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--n-perms", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--quiet", action="store_true")
    p.add_argument("--out", required=True, help="report directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="balance a labelled dataset into clouds and test for shape differences")
    _add_dataset_flags(p)
    p.add_argument("--clouds", type=int, default=4, help="clouds per group (default 4)")
    p.add_argument("--points", type=int, default=44, help="points per cloud (default 44)")
    p.add_argument("--balance-to", type=int, default=None, help="rows kept per group (default clouds x points)")
    p.add_argument("--use-selection", action="append", default=None,
                   help="selection.json from representativeness; fixes that group's rows")
    p.add_argument("--rows-from", default=None, help="reuse the cloud row sets recorded in a report.json")
    p.add_argument("--posthoc", choices=["never", "gated", "always"], default="gated")
    p.add_argument("--out", required=True, help="report directory")
    _add_test_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("representativeness", help="pick a representative subsample of an oversized group")
    _add_dataset_flags(p)
    p.add_argument("--group", required=True)
    p.add_argument("--spaces", type=int, default=9)
    p.add_argument("--clouds", type=int, default=4)
    p.add_argument("--points", type=int, default=44)
    p.add_argument("--trials", type=int, default=150)
    p.add_argument("--threshold", type=float, default=0.1)
    p.add_argument("--out", required=True, help="output directory")
    _add_test_flags(p)
    p.set_defaults(func=cmd_representativeness)
    return parser

def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except PersistTestError as exc:
        print(f"persist-test: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except json.JSONDecodeError as exc:
        print(f"persist-test: error: invalid JSON: {exc}", file=sys.stderr)
        return InputError.exit_code
    except (KeyError, OSError) as exc:
        print(f"persist-test: error: {exc}", file=sys.stderr)
        return InputError.exit_code
    return 0

if __name__ == "__main__":
    sys.exit(main())
