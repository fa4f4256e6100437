"""Command line interface.

Subcommands: fit, select, simulate, bench, crossval.  Every option can come
from a JSON config file (--config); explicit flags win over config values,
which win over the built-in defaults.  The master seed resolves from --seed,
then the config, then the TVCM_SEED environment variable, then 0.  Any
handled failure prints a one-line JSON error object and exits nonzero.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np
import scipy

from . import __version__
from .basis import (
    BasisFamily,
    BasisSpec,
    basis_matrix,
    build_design,
    default_bandwidth,
    make_spec,
    place_knots_quantile,
    split_alpha,
)
from .bootstrap import percentile_interval
from .data import ingest_csv
from .engines import fit_engine
from .errors import TvcmError
from .frequentist import fit_wls
from .mcmc import available_backends, dic, gibbs_backend, whiten
from .selection import crossval_amse, knot_search, select_knots
from .simgen import run_replications

_DEFAULTS = {
    "fit": {
        "family": "radial",
        "degree": 2,
        "knots": "auto",
        "placement": "equal",
        "bandwidth": None,
        "engine": "gibbs",
        "draws": 2000,
        "burnin": 500,
        "boot": 0,
        "tol": 1e-6,
        "level": 0.95,
        "grid": 200,
        "kmax": 10,
        "strategy": "auto",
        "threads": 1,
        "backend": "auto",
        "time_domain": None,
        "out": ".",
    },
    "select": {
        "family": "radial",
        "degree": 2,
        "kmax": 10,
        "strategy": "auto",
        "time_domain": None,
        "out": "select.json",
    },
    "simulate": {
        "scenario": 1,
        "n": 25,
        "reps": 50,
        "engines": "wls",
        "families": "radial,tpower",
        "degree": 2,
        "kmax": 5,
        "draws": 0,
        "burnin": 500,
        "level": "weak",
        "shape": "exp",
        "strategy": "auto",
        "threads": 1,
        "out_prefix": "sim",
    },
    "bench": {
        "scenario": 2,
        "n": "25,100",
        "engines": "gibbs,vb",
        "backends": "auto",
        "family": "radial",
        "degree": 2,
        "knots": 3,
        "draws": 2000,
        "burnin": 500,
        "reps": 3,
        "level": "weak",
        "shape": "exp",
        "out": "bench.json",
    },
    "crossval": {
        "family": "radial",
        "degree": 2,
        "knots": "auto",
        "kmax": 10,
        "strategy": "auto",
        "folds": 5,
        "engine": "wls",
        "draws": 0,
        "burnin": 500,
        "time_domain": None,
        "out": "crossval.json",
    },
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tvcm", description="Time-varying coefficient model fitting and study tools"
    )
    parser.add_argument("--version", action="version", version=f"tvcm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file supplying any of the other options")
    common.add_argument("--seed", type=int, help="master RNG seed (default: $TVCM_SEED or 0)")

    fit = sub.add_parser("fit", parents=[common], help="fit one dataset and write artifacts")
    fit.add_argument("--data", help="input CSV: subject,time,y,x1,...,xd")
    fit.add_argument("--family", choices=["radial", "tpower"])
    fit.add_argument("--degree", type=int)
    fit.add_argument("--knots", help="'auto', a single count, or comma counts per coefficient")
    fit.add_argument("--placement", choices=["equal", "quantile"])
    fit.add_argument("--bandwidth", type=float, help="radial kernel bandwidth override")
    fit.add_argument("--engine", choices=["wls", "gibbs", "vb"])
    fit.add_argument("--draws", type=int, help="posterior draws (gibbs/vb)")
    fit.add_argument("--burnin", type=int)
    fit.add_argument("--boot", type=int, help="bootstrap replicates when engine=wls")
    fit.add_argument("--tol", type=float, help="variational convergence tolerance")
    fit.add_argument("--level", type=float, help="interval level for curves.csv")
    fit.add_argument("--grid", type=int, help="curve grid size")
    fit.add_argument("--kmax", type=int, help="largest knot count tried by --knots auto")
    fit.add_argument("--strategy", choices=["auto", "full", "coordinate"])
    fit.add_argument("--threads", type=int)
    fit.add_argument("--backend", choices=["auto", "compiled", "python"])
    fit.add_argument("--time-domain", dest="time_domain", help="a,b override for the time domain")
    fit.add_argument("--out", help="output directory")

    sel = sub.add_parser("select", parents=[common], help="knot selection table for one dataset")
    sel.add_argument("--data")
    sel.add_argument("--family", choices=["radial", "tpower"])
    sel.add_argument("--degree", type=int)
    sel.add_argument("--kmax", type=int)
    sel.add_argument("--strategy", choices=["auto", "full", "coordinate"])
    sel.add_argument("--time-domain", dest="time_domain")
    sel.add_argument("--out")

    sim = sub.add_parser("simulate", parents=[common], help="replication study on synthetic data")
    sim.add_argument("--scenario", type=int, choices=[1, 2])
    sim.add_argument("--n", type=int, help="subjects per replication")
    sim.add_argument("--reps", type=int)
    sim.add_argument("--engines", help="comma list from wls,gibbs,vb")
    sim.add_argument("--families", help="comma list from radial,tpower")
    sim.add_argument("--degree", type=int)
    sim.add_argument("--kmax", type=int)
    sim.add_argument("--draws", type=int)
    sim.add_argument("--burnin", type=int)
    sim.add_argument("--level", choices=["weak", "medium", "high"])
    sim.add_argument("--shape", choices=["exp", "trig"])
    sim.add_argument("--strategy", choices=["auto", "full", "coordinate"])
    sim.add_argument("--threads", type=int)
    sim.add_argument("--out-prefix", dest="out_prefix")

    bench = sub.add_parser("bench", parents=[common], help="time the samplers on synthetic data")
    bench.add_argument("--scenario", type=int, choices=[1, 2])
    bench.add_argument("--n", help="comma list of subject counts")
    bench.add_argument(
        "--engines", "--engine", dest="engines",
        help="comma list from gibbs,vb; 'both' means gibbs,vb")
    bench.add_argument("--backends", help="comma list from auto,compiled,python (gibbs only)")
    bench.add_argument("--family", choices=["radial", "tpower"])
    bench.add_argument("--degree", type=int)
    bench.add_argument("--knots", type=int, help="knot count for every coefficient")
    bench.add_argument("--draws", type=int)
    bench.add_argument("--burnin", type=int)
    bench.add_argument("--reps", type=int, help="datasets per cell")
    bench.add_argument("--level", choices=["weak", "medium", "high"])
    bench.add_argument("--shape", choices=["exp", "trig"])
    bench.add_argument("--out")

    cv = sub.add_parser("crossval", parents=[common], help="fold-based predictive error")
    cv.add_argument("--data")
    cv.add_argument("--family", choices=["radial", "tpower"])
    cv.add_argument("--degree", type=int)
    cv.add_argument("--knots", help="'auto', a single count, or comma counts per coefficient")
    cv.add_argument("--kmax", type=int)
    cv.add_argument("--strategy", choices=["auto", "full", "coordinate"])
    cv.add_argument("--folds", type=int)
    cv.add_argument("--engine", choices=["wls", "gibbs", "vb"])
    cv.add_argument("--draws", type=int)
    cv.add_argument("--burnin", type=int)
    cv.add_argument("--time-domain", dest="time_domain")
    cv.add_argument("--out")
    return parser


def _resolve(args: argparse.Namespace) -> dict:
    """Layer defaults < config file < explicit flags."""
    config = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            config = json.load(fh)
        if not isinstance(config, dict):
            raise ValueError(f"{args.config}: config must be a JSON object")
    opts = dict(_DEFAULTS[args.command])
    for key, value in config.items():
        key = key.replace("-", "_")
        if key in ("seed", "data"):
            opts[key] = value
        elif key not in opts:
            raise ValueError(f"unknown config key {key!r} for command {args.command!r}")
        else:
            opts[key] = value
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        opts[key] = value
    if "seed" not in opts or opts.get("seed") is None:
        opts["seed"] = int(os.environ.get("TVCM_SEED", "0"))
    opts["seed"] = int(opts["seed"])
    return opts


def _parse_domain(value):
    if value in (None, ""):
        return None
    if isinstance(value, (list, tuple)):
        a, b = value
        return float(a), float(b)
    a, b = str(value).split(",")
    return float(a), float(b)


def _knot_counts(data, opts) -> tuple[int, ...]:
    raw = str(opts["knots"]).strip()
    n_coef = data.covariate_dim + 1
    if raw == "auto":
        return select_knots(data, opts["family"], opts["degree"], opts["kmax"], opts["strategy"])
    parts = [int(v) for v in raw.split(",")]
    if len(parts) == 1:
        return tuple(parts * n_coef)
    if len(parts) != n_coef:
        raise ValueError(f"--knots lists {len(parts)} counts but the model has {n_coef} coefficients")
    return tuple(parts)


def _specs_from_opts(data, opts, counts) -> tuple[BasisSpec, ...]:
    family = BasisFamily(opts["family"])
    domain = data.time_domain
    specs = []
    for k in counts:
        if opts.get("placement", "equal") == "quantile" and k > 0:
            knots = place_knots_quantile(data.times, k)
        else:
            knots = make_spec(family, opts["degree"], k, domain).knots
        bandwidth = None
        if family is BasisFamily.RADIAL:
            bandwidth = opts.get("bandwidth") or default_bandwidth(domain, k)
        specs.append(
            BasisSpec(family=family, degree=opts["degree"], knots=knots, bandwidth=bandwidth)
        )
    return tuple(specs)


def _json_safe(value):
    if isinstance(value, float) and not np.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(_json_safe(payload), fh, indent=2)
        fh.write("\n")


def _manifest(command, opts, artifacts) -> dict:
    return {
        "command": command,
        "package": "tvcm",
        "version": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "sampler_backend": gibbs_backend(),
        "options": {k: _json_safe(v) for k, v in sorted(opts.items())},
        "artifacts": artifacts,
    }


def cmd_fit(opts) -> int:
    if not opts.get("data"):
        raise ValueError("fit requires --data")
    data = ingest_csv(opts["data"], time_domain=_parse_domain(opts["time_domain"]))
    counts = _knot_counts(data, opts)
    specs = _specs_from_opts(data, opts, counts)
    engine = opts["engine"]
    n_draws = opts["boot"] if engine == "wls" else opts["draws"]
    result = fit_engine(
        data,
        specs,
        engine,
        rng=opts["seed"],
        draws=n_draws,
        burnin=opts["burnin"],
        tol=opts["tol"],
        threads=opts["threads"],
        backend=opts["backend"],
    )

    out_dir = opts["out"]
    os.makedirs(out_dir, exist_ok=True)
    artifacts = ["fit.json", "curves.csv", "manifest.json"]

    a, b = data.time_domain
    grid = np.linspace(a, b, opts["grid"])
    block_dims = tuple(s.n_terms for s in specs)
    blocks = split_alpha(result.alpha, block_dims)
    level = opts["level"]
    curve_rows = []
    for r, spec in enumerate(specs):
        bg = basis_matrix(spec, grid)
        est = bg @ blocks[r]
        if result.draws is not None:
            draw_blocks = split_alpha(result.draws.alpha_draws, block_dims)
            curve_draws = draw_blocks[r] @ bg.T
            lo_hi = [percentile_interval(curve_draws[:, g], level) for g in range(grid.size)]
        else:
            lo_hi = [(None, None)] * grid.size
        for g in range(grid.size):
            curve_rows.append((r, grid[g], est[g], lo_hi[g][0], lo_hi[g][1]))
    with open(os.path.join(out_dir, "curves.csv"), "w") as fh:
        fh.write("coefficient,t,estimate,lower,upper\n")
        for r, t, est, lo, hi in curve_rows:
            lo_s = "" if lo is None else repr(float(lo))
            hi_s = "" if hi is None else repr(float(hi))
            fh.write(f"{r},{float(t)!r},{float(est)!r},{lo_s},{hi_s}\n")

    fit_payload = {
        "engine": engine,
        "seed": opts["seed"],
        "data": opts["data"],
        "n_subjects": data.n_subjects,
        "n_obs": data.n_obs,
        "level": level,
        "basis": [s.to_dict() for s in specs],
        "knot_counts": list(counts),
        "alpha": {str(r): blocks[r].tolist() for r in range(len(blocks))},
        "sigma2": result.base_fit.sigma2_hat,
        "wls_sigma2": result.base_fit.sigma2_hat,
        "sampling_seconds": result.sampling_seconds,
    }
    if engine in ("gibbs", "vb"):
        bundle = build_design(data, specs)
        z_t, y_t = whiten(bundle)
        dic_value, p_dic = dic(result.draws, z_t, y_t)
        fit_payload["sigma2"] = float(result.draws.sigma2_draws.mean())
        fit_payload["prior"] = result.extra.get("prior")
        fit_payload["dic"] = {"dic": dic_value, "p_dic": p_dic}
        if engine == "vb":
            posterior = dict(result.extra["posterior"])
            posterior.pop("m_star", None)
            fit_payload["vb"] = posterior
    if result.draws is not None:
        result.draws.to_csv(os.path.join(out_dir, "draws.csv"))
        _write_json(os.path.join(out_dir, "draws_summary.json"), result.draws.summary(level))
        artifacts += ["draws.csv", "draws_summary.json"]
    _write_json(os.path.join(out_dir, "fit.json"), fit_payload)
    _write_json(os.path.join(out_dir, "manifest.json"), _manifest("fit", opts, sorted(artifacts)))
    print(json.dumps({"status": "ok", "out": out_dir, "artifacts": sorted(artifacts)}))
    return 0


def cmd_select(opts) -> int:
    if not opts.get("data"):
        raise ValueError("select requires --data")
    data = ingest_csv(opts["data"], time_domain=_parse_domain(opts["time_domain"]))
    best, table = knot_search(data, opts["family"], opts["degree"], opts["kmax"], opts["strategy"])
    payload = {
        "selected": list(best),
        "family": opts["family"],
        "degree": opts["degree"],
        "k_max": opts["kmax"],
        "strategy": opts["strategy"],
        "table": table,
    }
    _write_json(opts["out"], payload)
    print(json.dumps({"status": "ok", "selected": list(best), "out": opts["out"]}))
    return 0


def cmd_simulate(opts) -> int:
    report = run_replications(
        scenario=opts["scenario"],
        n=opts["n"],
        reps=opts["reps"],
        rng=opts["seed"],
        engines=tuple(opts["engines"].split(",")),
        families=tuple(opts["families"].split(",")),
        degree=opts["degree"],
        k_max=opts["kmax"],
        draws=opts["draws"],
        burnin=opts["burnin"],
        level=opts["level"],
        shape=opts["shape"],
        strategy=opts["strategy"],
        threads=opts["threads"],
    )
    prefix = opts["out_prefix"]
    report.to_csv(f"{prefix}_report.csv")
    _write_json(f"{prefix}_summary.json", report.summary())
    print(json.dumps(_json_safe(report.summary())))
    return 0


def cmd_bench(opts) -> int:
    from .mcmc import default_prior, gibbs
    from .simgen import gen_scenario1, gen_scenario2
    from .vb import vb_fit, vb_sample

    engines = [e.strip() for e in str(opts["engines"]).split(",")]
    if engines == ["both"]:
        engines = ["gibbs", "vb"]
    backends = [b.strip() for b in str(opts["backends"]).split(",")]
    available = available_backends()
    sizes = [int(v) for v in str(opts["n"]).split(",")]
    rows = []
    root = np.random.default_rng(opts["seed"])
    for n in sizes:
        for rep in range(opts["reps"]):
            child = root.spawn(1)[0]
            if opts["scenario"] == 1:
                data, _ = gen_scenario1(n, child, level=opts["level"], shape=opts["shape"])
            else:
                data, _ = gen_scenario2(n, child)
            specs = tuple(
                make_spec(opts["family"], opts["degree"], opts["knots"], data.time_domain)
                for _ in range(data.covariate_dim + 1)
            )
            bundle = build_design(data, specs)
            base = fit_wls(bundle)
            prior = default_prior(base)
            z_t, y_t = whiten(bundle)
            for engine in engines:
                if engine == "gibbs":
                    for backend in backends:
                        resolved = gibbs_backend() if backend == "auto" else backend
                        if resolved not in available:
                            continue
                        start = time.perf_counter()
                        gibbs(
                            z_t,
                            y_t,
                            prior,
                            draws=opts["draws"],
                            burnin=opts["burnin"],
                            rng=opts["seed"],
                            backend=resolved,
                        )
                        ms = 1000.0 * (time.perf_counter() - start)
                        rows.append({"n": n, "rep": rep, "engine": "gibbs", "backend": resolved, "ms": ms})
                elif engine == "vb":
                    start = time.perf_counter()
                    post = vb_fit(z_t, y_t, prior)
                    vb_sample(post, opts["draws"], opts["seed"])
                    ms = 1000.0 * (time.perf_counter() - start)
                    rows.append({"n": n, "rep": rep, "engine": "vb", "backend": "-", "ms": ms})
                else:
                    raise ValueError(f"bench engine must be gibbs or vb, got {engine!r}")
    cells = {}
    for row in rows:
        cells.setdefault((row["n"], row["engine"], row["backend"]), []).append(row["ms"])
    summary = [
        {
            "n": n,
            "engine": engine,
            "backend": backend,
            "mean_ms": float(np.mean(ms)),
            "min_ms": float(np.min(ms)),
            "reps": len(ms),
        }
        for (n, engine, backend), ms in sorted(cells.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2]))
    ]
    payload = {"scenario": opts["scenario"], "draws": opts["draws"], "rows": rows, "summary": summary}
    _write_json(opts["out"], payload)
    width = max(len(s["engine"]) + len(s["backend"]) for s in summary) + 3
    for s in summary:
        label = f"{s['engine']}/{s['backend']}"
        print(f"n={s['n']:>5}  {label:<{width}}  mean {s['mean_ms']:9.2f} ms  min {s['min_ms']:9.2f} ms")
    return 0


def cmd_crossval(opts) -> int:
    if not opts.get("data"):
        raise ValueError("crossval requires --data")
    data = ingest_csv(opts["data"], time_domain=_parse_domain(opts["time_domain"]))
    counts = _knot_counts(data, opts)
    specs = tuple(
        make_spec(opts["family"], opts["degree"], k, data.time_domain) for k in counts
    )
    value = crossval_amse(
        data,
        specs,
        n_folds=opts["folds"],
        rng=opts["seed"],
        engine=opts["engine"],
        draws=opts["draws"],
        burnin=opts["burnin"],
    )
    payload = {
        "amse": value,
        "folds": opts["folds"],
        "engine": opts["engine"],
        "knot_counts": list(counts),
        "family": opts["family"],
        "degree": opts["degree"],
        "seed": opts["seed"],
    }
    _write_json(opts["out"], payload)
    print(json.dumps(_json_safe(payload)))
    return 0


_HANDLERS = {
    "fit": cmd_fit,
    "select": cmd_select,
    "simulate": cmd_simulate,
    "bench": cmd_bench,
    "crossval": cmd_crossval,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = _resolve(args)
        return _HANDLERS[args.command](opts)
    except (TvcmError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}))
        return 1


if __name__ == "__main__":
    sys.exit(main())
