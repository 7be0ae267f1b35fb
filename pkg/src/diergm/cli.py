"""Command-line front end: simulate, estimate, ei, perturb, experiment.

Every run resolves its configuration from flags over an optional JSON
config file over built-in defaults, and writes the resolved values to
`manifest.json` in the output directory; re-running with
`--config manifest.json` reproduces the outputs byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .analysis import perturb_sweep, write_histogram_csv, ei_index
from .estimate import McmleOptions, mcmle, mple
from .graph import (
    AttributeTable,
    DirectedGraph,
    load_attributes,
    load_edgelist,
    write_edgelist,
    write_report,
)
from .sampler import SamplerConfig, simulate, spawn_seeds
from .terms import (
    Edges,
    Inhomo2Star,
    ModelSpec,
    NodeMatch,
    NodeMix,
    load_model,
)

# baseline coefficients for the segregation experiment's three model families
EXPERIMENT_BASELINES = {
    1: {"edges": -2.0, "nodematch": 0.75, "nodemix": -2.5, "i2s": False},
    2: {"edges": -2.0, "nodematch": 0.75, "nodemix": -2.5, "i2s": True},
    3: {"edges": -2.0, "nodematch": 3.0, "nodemix": -1.0, "i2s": True},
}

DEFAULT_GRID = [round(-1.0 + 0.05 * k, 2) for k in range(21)]


def experiment_model(model_id: int, theta_i2s: float):
    """Terms and coefficients for one experiment family at one grid value.

    Between-group mixing penalizes both ordered directions equally (two
    tied nodemix terms). Family 1 carries no boundary-maintenance term.
    """
    base = EXPERIMENT_BASELINES[model_id]
    terms = [Edges(), NodeMatch(), NodeMix(0, 1), NodeMix(1, 0)]
    theta = [base["edges"], base["nodematch"], base["nodemix"], base["nodemix"]]
    if base["i2s"]:
        terms.append(Inhomo2Star())
        theta.append(theta_i2s)
    return ModelSpec(terms), theta


def split_attrs(sizes: list[int]) -> AttributeTable:
    """Attribute table with the first sizes[0] nodes in group g0, and so on."""
    if not sizes or any(s < 1 for s in sizes):
        raise ValueError(f"group sizes must be positive, got {sizes}")
    codes = []
    for code, size in enumerate(sizes):
        codes.extend([code] * size)
    return AttributeTable(codes, [f"g{k}" for k in range(len(sizes))])


def default_attrs(n: int) -> AttributeTable:
    """Two groups: the first ceil(n/2) nodes in g0, the rest in g1."""
    first = math.ceil(n / 2)
    if first == n:
        return AttributeTable([0] * n, ["g0"])
    return split_attrs([first, n - first])


def _parse_int_list(text):
    return [int(x) for x in str(text).split(",") if x != ""]


def _parse_float_list(text):
    return [float(x) for x in str(text).split(",") if x != ""]


def _resolve(args, defaults):
    """Merge CLI flags (highest), config-file values, and hard defaults."""
    file_cfg = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_cfg = json.load(fh)
    resolved = {}
    for key, hard in defaults.items():
        flag = getattr(args, key, None)
        if flag is not None:
            resolved[key] = flag
        elif key in file_cfg:
            resolved[key] = file_cfg[key]
        else:
            resolved[key] = hard
    return resolved


def _write_manifest(command, cfg, out_dir):
    manifest = {"command": command}
    manifest.update(cfg)
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _ensure_out(cfg):
    out_dir = cfg["out"]
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


def _load_population(cfg):
    """Attribute table from --attrs, --groups sizes, or the default split of --n."""
    if cfg.get("attrs"):
        return load_attributes(cfg["attrs"])
    if cfg.get("groups"):
        sizes = _parse_int_list(cfg["groups"])
        attrs = split_attrs(sizes)
        if cfg.get("n") and cfg["n"] != attrs.n:
            raise ValueError(
                f"--groups sizes sum to {attrs.n} but --n is {cfg['n']}"
            )
        return attrs
    if cfg.get("n"):
        return default_attrs(cfg["n"])
    raise ValueError("population unspecified: pass --attrs, --groups, or --n")


def _load_model_theta(cfg, attrs):
    if not cfg.get("model"):
        raise ValueError("--model is required")
    model, theta = load_model(cfg["model"], attrs)
    if cfg.get("theta"):
        theta = _parse_float_list(cfg["theta"])
        if len(theta) != len(model.terms):
            raise ValueError(
                f"--theta has {len(theta)} values for {len(model.terms)} terms"
            )
    if theta is None:
        raise ValueError("coefficients missing: add 'theta' to the model file or pass --theta")
    return model, [float(t) for t in theta]


SIMULATE_DEFAULTS = {
    "model": None,
    "theta": None,
    "attrs": None,
    "groups": None,
    "n": None,
    "edges": None,
    "samples": 1000,
    "burnin": 10000,
    "interval": 1000,
    "seed": 0,
    "proposal": "tnt",
    "save_graphs": False,
    "out": ".",
}


def cmd_simulate(args) -> int:
    cfg = _resolve(args, SIMULATE_DEFAULTS)
    attrs = _load_population(cfg)
    model, theta = _load_model_theta(cfg, attrs)
    if cfg["edges"]:
        g0 = load_edgelist(cfg["edges"], attrs.n)
    else:
        g0 = DirectedGraph(attrs.n)
    chain = simulate(
        model,
        theta,
        g0,
        attrs,
        SamplerConfig(
            burn_in=cfg["burnin"],
            interval=cfg["interval"],
            n_samples=cfg["samples"],
            seed=cfg["seed"],
            proposal=cfg["proposal"],
            keep_graphs=bool(cfg["save_graphs"]),
        ),
    )
    out_dir = _ensure_out(cfg)
    stats_path = os.path.join(out_dir, "stats.csv")
    with open(stats_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample"] + chain.term_names + ["edge_count", "cross_count"])
        for s in range(len(chain)):
            writer.writerow(
                [s]
                + [repr(float(v)) for v in chain.stats[s]]
                + [int(chain.edge_counts[s]), int(chain.cross_counts[s])]
            )
    if cfg["save_graphs"]:
        sample_dir = os.path.join(out_dir, "samples")
        os.makedirs(sample_dir, exist_ok=True)
        for s, graph in enumerate(chain.graphs):
            write_edgelist(graph, os.path.join(sample_dir, f"sample_{s:05d}.csv"))
    _write_manifest("simulate", cfg, out_dir)
    print(
        f"simulate: {len(chain)} samples, acceptance rate {chain.acceptance_rate:.3f}, "
        f"stats written to {stats_path}"
    )
    return 0


ESTIMATE_DEFAULTS = {
    "model": None,
    "edges": None,
    "attrs": None,
    "n": None,
    "groups": None,
    "mcmle": False,
    "samples": 512,
    "burnin": None,
    "interval": None,
    "seed": 0,
    "out": None,
}


def cmd_estimate(args) -> int:
    cfg = _resolve(args, ESTIMATE_DEFAULTS)
    if not cfg["edges"]:
        raise ValueError("--edges is required")
    attrs = _load_population(cfg)
    g = load_edgelist(cfg["edges"], attrs.n)
    model, _ = load_model(cfg["model"], attrs) if cfg["model"] else (None, None)
    if model is None:
        raise ValueError("--model is required")
    fit = mple(model, g, attrs)
    if cfg["mcmle"]:
        fit = mcmle(
            model,
            g,
            attrs,
            fit.theta_hat,
            McmleOptions(
                samples=cfg["samples"],
                burn_in=cfg["burnin"],
                interval=cfg["interval"],
                seed=cfg["seed"],
            ),
        )
    print(fit.summary())
    if cfg["out"]:
        out_dir = _ensure_out(cfg)
        write_report(fit, os.path.join(out_dir, "fit.json"))
        _write_manifest("estimate", cfg, out_dir)
    return 0


EI_DEFAULTS = {"edges": None, "attrs": None, "out": None}


def cmd_ei(args) -> int:
    cfg = _resolve(args, EI_DEFAULTS)
    if not cfg["edges"] or not cfg["attrs"]:
        raise ValueError("--edges and --attrs are required")
    attrs = load_attributes(cfg["attrs"])
    g = load_edgelist(cfg["edges"], attrs.n)
    value = ei_index(g, attrs)
    print(repr(value))
    if cfg["out"]:
        out_dir = _ensure_out(cfg)
        write_report({"ei_index": value}, os.path.join(out_dir, "ei.json"))
        _write_manifest("ei", cfg, out_dir)
    return 0


PERTURB_DEFAULTS = {
    "model": None,
    "theta": None,
    "edges": None,
    "attrs": None,
    "scenario": "tie",
    "method": None,
    "seed": 0,
    "burnin": 200,
    "samples": 2000,
    "jobs": 1,
    "out": ".",
}


def cmd_perturb(args) -> int:
    cfg = _resolve(args, PERTURB_DEFAULTS)
    if not cfg["edges"] or not cfg["attrs"]:
        raise ValueError("--edges and --attrs are required")
    attrs = load_attributes(cfg["attrs"])
    g = load_edgelist(cfg["edges"], attrs.n)
    model, theta = _load_model_theta(cfg, attrs)
    report = perturb_sweep(
        model,
        theta,
        g,
        attrs,
        scenario=cfg["scenario"],
        method=cfg["method"],
        seed=cfg["seed"],
        jobs=cfg["jobs"],
        gibbs_burn=cfg["burnin"],
        gibbs_sweeps=cfg["samples"],
    )
    out_dir = _ensure_out(cfg)
    write_report(report, os.path.join(out_dir, "perturbation.json"))
    write_histogram_csv(report, os.path.join(out_dir, "histogram.csv"))
    _write_manifest("perturb", cfg, out_dir)
    print(
        f"perturb[{report.scenario}/{report.method}]: {len(report.cases)} cases, "
        f"mean expected in-degree change {report.mean_change:.4f}"
    )
    return 0


EXPERIMENT_DEFAULTS = {
    "models": "1,2,3",
    "grid": None,
    "n": 40,
    "groups": "20,20",
    "samples": 1000,
    "burnin": 100000,
    "interval": 1000,
    "seed": 0,
    "jobs": 1,
    "out": ".",
}


def _experiment_cell(payload):
    model_id, theta_i2s, attrs, burnin, interval, samples, seed = payload
    model, theta = experiment_model(model_id, theta_i2s)
    chain = simulate(
        model,
        theta,
        DirectedGraph(attrs.n),
        attrs,
        SamplerConfig(
            burn_in=burnin,
            interval=interval,
            n_samples=samples,
            seed=seed,
            keep_graphs=False,
        ),
    )
    ei = chain.ei_values()
    ei = ei[~np.isnan(ei)]
    if len(ei) == 0:
        return model_id, theta_i2s, float("nan"), float("nan"), float("nan")
    lo, hi = np.percentile(ei, [2.5, 97.5])
    return model_id, theta_i2s, float(ei.mean()), float(lo), float(hi)


def cmd_experiment(args) -> int:
    cfg = _resolve(args, EXPERIMENT_DEFAULTS)
    model_ids = _parse_int_list(cfg["models"])
    for mid in model_ids:
        if mid not in EXPERIMENT_BASELINES:
            raise ValueError(f"unknown model family {mid}; choose from 1, 2, 3")
    grid = _parse_float_list(cfg["grid"]) if cfg["grid"] else list(DEFAULT_GRID)
    attrs = split_attrs(_parse_int_list(cfg["groups"]))
    if cfg["n"] and cfg["n"] != attrs.n:
        raise ValueError(f"--groups sizes sum to {attrs.n} but --n is {cfg['n']}")
    cells = [(mid, x) for mid in model_ids for x in grid]
    seeds = spawn_seeds(cfg["seed"], len(cells))
    payloads = [
        (mid, x, attrs, cfg["burnin"], cfg["interval"], cfg["samples"], seeds[k])
        for k, (mid, x) in enumerate(cells)
    ]
    if cfg["jobs"] > 1:
        with ProcessPoolExecutor(max_workers=cfg["jobs"]) as pool:
            rows = list(pool.map(_experiment_cell, payloads))
    else:
        rows = [_experiment_cell(p) for p in payloads]
    out_dir = _ensure_out(cfg)
    curve_path = os.path.join(out_dir, "ei_curve.csv")
    with open(curve_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "theta_i2s", "mean_ei", "ei_lo95", "ei_hi95"])
        for mid, x, mean, lo, hi in rows:
            writer.writerow([mid, repr(float(x)), repr(mean), repr(lo), repr(hi)])
    _write_manifest("experiment", cfg, out_dir)
    print(f"experiment: {len(rows)} cells written to {curve_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diergm",
        description="Directed ERGM engine: simulation, estimation, segregation "
        "curves, and what-if perturbation analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *names):
        p.add_argument("--config", help="JSON config file; flags override its values")
        if "model" in names:
            p.add_argument("--model", help="model JSON file (list of term records)")
        if "theta" in names:
            p.add_argument("--theta", help="comma-separated coefficients (use --theta=-2,0.75)")
        if "edges" in names:
            p.add_argument("--edges", help="edge-list CSV (header from,to)")
        if "attrs" in names:
            p.add_argument("--attrs", help="attribute CSV (header id,group)")
        if "n" in names:
            p.add_argument("--n", type=int, help="node count for synthetic populations")
        if "groups" in names:
            p.add_argument("--groups", help="comma-separated group sizes, e.g. 20,20")
        if "seed" in names:
            p.add_argument("--seed", type=int, help="master RNG seed")
        if "out" in names:
            p.add_argument("--out", help="output directory")
        if "burnin" in names:
            p.add_argument("--burnin", type=int, help="burn-in proposals (or Gibbs burn-in sweeps)")
        if "interval" in names:
            p.add_argument("--interval", type=int, help="proposals between retained samples")
        if "samples" in names:
            p.add_argument("--samples", type=int, help="retained samples (or Gibbs sweeps)")
        if "method" in names:
            p.add_argument("--method", choices=["gibbs", "exact"], help="conditional-expectation method")
        if "jobs" in names:
            p.add_argument("--jobs", type=int, help="parallel worker processes")

    p = sub.add_parser("simulate", help="draw networks from a model")
    common(p, "model", "theta", "edges", "attrs", "n", "groups", "seed", "out", "burnin", "interval", "samples")
    p.add_argument("--proposal", choices=["tnt", "dyad"], help="proposal kind")
    p.add_argument("--save-graphs", dest="save_graphs", action=argparse.BooleanOptionalAction, help="write per-sample edge lists")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="fit coefficients to an observed network")
    common(p, "model", "edges", "attrs", "n", "groups", "seed", "out", "burnin", "interval", "samples")
    p.add_argument("--mcmle", action=argparse.BooleanOptionalAction, help="refine the MPLE by Monte Carlo MLE")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("ei", help="E-I segregation index of a network")
    common(p, "edges", "attrs", "out")
    p.set_defaults(func=cmd_ei)

    p = sub.add_parser("perturb", help="expected in-degree changes under what-if perturbations")
    common(p, "model", "theta", "edges", "attrs", "seed", "out", "burnin", "samples", "method", "jobs")
    p.add_argument("--scenario", choices=["tie", "attr"], help="perturbation scenario")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("experiment", help="segregation-curve harness over the model families")
    common(p, "n", "groups", "seed", "out", "burnin", "interval", "samples", "jobs")
    p.add_argument("--models", help="comma-separated model family ids from {1,2,3}")
    p.add_argument("--grid", help="comma-separated boundary-coefficient grid values")
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surface readable errors with a nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
