"""Command-line entry point.

    pspp simulate           one simulated series, filtered by DLM1 and DLM3
    pspp filter             run the unknown-V filter over a CSV
    pspp reproduce-tables   the replication study behind the forecast tables
    pspp postulate-check    Monte Carlo checks of the distributional examples
    pspp sop-compare        SOP vs conjugate posterior on random cases

Settings come from ``--config`` (TOML) and are overridden by flags.
Exit codes: 0 success, 2 configuration error, 3 data or I/O error,
4 numerical failure.
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np
import tomli

from . import checks
from .config import FIELD_KINDS, config_from_dict, parse_config
from .errors import ConfigError, DataError, DimensionError, DomainError, NumericalError
from .filters import forecast_metrics, run_filter
from .io import emit_report, ingest_csv, report_dict, series_table
from .linalg import vech
from .simulation import (DLM1Priors, SimSpec, aggregate_tables, run_experiment,
                         run_replication, simulate_series)
from .statespace import StateSpaceSpec

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
COMMANDS = ("simulate", "filter", "reproduce-tables", "postulate-check", "sop-compare")


def _list(conv):
    def parse(s):
        try:
            return [conv(v) for v in s.split(",") if v.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def _matrix(s):
    try:
        return json.loads(s)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"not a JSON row list: {exc}") from None


_FLAG_TYPES = {"str": str, "int": int, "float": float, "strs": _list(str),
               "ints": _list(int), "vector": _list(float), "matrix": _matrix}


def _flag(section, key):
    return "--out" if (section, key) == ("output", "path") else "--" + key.replace("_", "-")


def build_parser():
    parser = argparse.ArgumentParser(prog="pspp", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", type=Path, help="TOML run configuration")
        for section, kinds in FIELD_KINDS.items():
            grp = sp.add_argument_group(f"[{section}]")
            for key, kind in kinds.items():
                grp.add_argument(_flag(section, key), dest=f"{section}.{key}",
                                 type=_FLAG_TYPES[kind], default=None,
                                 metavar="JSON" if kind == "matrix" else None)
    return parser


def resolve_config(args):
    """Config file first (errors located in the file), then flag overrides."""
    raw, base = {}, None
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc.strerror}") from None
        base = args.config.parent
        parse_config(text, base_dir=base)
        raw = tomli.loads(text)
    overrides = False
    for dest, val in vars(args).items():
        if "." in dest and val is not None:
            section, key = dest.split(".")
            raw.setdefault(section, {})[key] = val
            overrides = True
    if args.config is None or overrides:
        return config_from_dict(raw, base_dir=base)
    return parse_config(text, base_dir=base)


def _priors(cfg):
    g = cfg.matrix
    return DLM1Priors(eta0=cfg.priors.eta0, m0=g("priors", "m0"), p0=g("priors", "p0"),
                      v0=g("priors", "v0"), k0=g("priors", "k0"))


def _out(cfg, default):
    return cfg.output.path or default


def cmd_simulate(cfg):
    spec = SimSpec(cfg.model.family, n_series=cfg.run.n_series, length=cfg.run.length,
                   seed=cfg.run.seed)
    idx = cfg.run.index
    ys = simulate_series(spec, idx)
    res = run_replication(spec, idx, tuple(cfg.run.models), tuple(cfg.run.snapshot_times),
                          _priors(cfg))
    series = {"t": list(range(1, len(ys) + 1))}
    for j in range(ys.shape[1]):
        series[f"y{j + 1}"] = ys[:, j].tolist()
    metrics = {m: met.as_dict() for m, met in res.metrics.items()}
    metrics["errors"] = res.errors
    rep = report_dict(cfg.to_dict(), cfg.run.seed, metrics,
                      {str(t): v for t, v in res.snapshots.items()}, series)
    paths = emit_report(rep, _out(cfg, f"simulate_{spec.family}_{idx}"), cfg.output.format)
    for m, met in res.metrics.items():
        print(f"{m}: MSSE {np.round(met.msse, 4).tolist()}")
    return paths


def cmd_filter(cfg):
    mdl = cfg.model
    if mdl.data is None:
        raise ConfigError("filter needs a data file", field="model.data")
    obs = ingest_csv(mdl.data, mdl.columns, mdl.time_column)
    p = obs.values.shape[1]
    b = cfg.matrix("model", "b")
    b = np.eye(p) if b is None else b
    c = cfg.matrix("model", "c")
    c = np.eye(b.shape[1]) if c is None else c
    if mdl.w is None and mdl.discounts is None:
        raise ConfigError("filter needs either w or discounts", field="model.discounts")
    spec = StateSpaceSpec(b=b, c=c, w=cfg.matrix("model", "w"),
                          discounts=None if mdl.discounts is None else np.array(mdl.discounts))
    if spec.p != p:
        raise ConfigError(f"b has {spec.p} rows but the data have {p} columns", field="model.b")
    state = _priors(cfg).initial_state(spec.m, p)
    _, reports = run_filter(obs.values, spec, state)
    met = forecast_metrics(reports, cfg.run.burn_in)
    series = series_table(reports)
    if obs.times is not None:
        series = {mdl.time_column: list(obs.times), **series}
    snaps = {str(t): vech(reports[t - 1].v_hat) for t in cfg.run.snapshot_times
             if t <= len(reports)}
    snaps["final"] = vech(reports[-1].v_hat)
    metrics = {"DLM1": met.as_dict(), "n_rows": obs.n_rows,
               "n_projected": int(sum(r.projected for r in reports))}
    rep = report_dict(cfg.to_dict(), cfg.run.seed, metrics, snaps, series)
    paths = emit_report(rep, _out(cfg, Path(mdl.data).stem + "_filter"), cfg.output.format)
    print(f"{obs.n_rows} rows, MSSE {np.round(met.msse, 4).tolist()}, "
          f"MSE {np.round(met.mse, 4).tolist()}")
    return paths


def cmd_reproduce_tables(cfg):
    run = cfg.run
    results, n_ok, failures, sds = {}, {}, {}, {}
    for fam in run.families:
        t0 = time.perf_counter()
        res = run_experiment(SimSpec(fam, n_series=run.n_series, length=run.length,
                                     seed=run.seed),
                             tuple(run.models), tuple(run.snapshot_times), _priors(cfg),
                             workers=run.workers)
        results[fam] = res
        n_ok[fam] = res.n_ok
        failures[fam] = {m: f for m, f in res.failures.items() if f}
        sds[fam] = {str(t): v for t, v in res.snapshot_sd.items()}
        print(f"{fam}: {run.n_series} replications in {time.perf_counter() - t0:.1f}s, "
              f"ok {res.n_ok}", file=sys.stderr)
    tab = aggregate_tables(results, tuple(run.families), tuple(run.models))
    metrics = {"rows": tab.metric_rows, "n_ok": n_ok, "failures": failures}
    snapshots = {"rows": tab.snapshot_rows, "sd": sds}
    rep = report_dict(cfg.to_dict(), run.seed, metrics, snapshots)
    paths = emit_report(rep, _out(cfg, "tables"), cfg.output.format)
    for row in tab.metric_rows:
        print(f"{row['family']:3s} {row['model']}  MSSE ({row['msse_y1']:.3f}, "
              f"{row['msse_y2']:.3f})  MSE ({row['mse_y1']:.3f}, {row['mse_y2']:.3f})")
    for row in tab.snapshot_rows:
        cells = "  ".join(f"t{t}={row[f't{t}']:.3f}" for t in run.snapshot_times
                          if f"t{t}" in row)
        print(f"{row['family']:3s} {row['entry']} true={row['true']:.3f}  {cells}")
    return paths


def cmd_postulate_check(cfg):
    rng = np.random.default_rng(cfg.run.seed)
    summary = checks.postulate_summary(rng, cfg.run.draws, cfg.run.bins)
    suite = checks.theorem1_suite(rng, cfg.run.cases)
    agree = sum(r.equivalent for _, r, _ in suite)
    metrics = {**summary, "theorem1": {"cases": len(suite), "equivalent": agree,
                                       "linear_mean": sum(r.linear_mean for _, r, _ in suite)}}
    rep = report_dict(cfg.to_dict(), cfg.run.seed, metrics)
    paths = emit_report(rep, _out(cfg, "postulates"), cfg.output.format)
    for fam in ("t", "inverted_t"):
        print(f"{fam}: max relative deviation {summary[fam]['max_rel_dev']:.4f}")
    print(f"wishart: |cond_var - resid_var| = {summary['wishart']['abs_diff']:.3e}")
    print(f"linear mean vs second-order independence: {agree}/{len(suite)} cases agree")
    return paths


def cmd_sop_compare(cfg):
    rng = np.random.default_rng(cfg.run.seed)
    cases = [checks.sop_conjugate_case(rng) for _ in range(cfg.run.cases)]
    worst = {k: max(getattr(c, k) for c in cases)
             for k in ("mean_rel", "cov_rel", "disc_rel", "var_rel")}
    rep = report_dict(cfg.to_dict(), cfg.run.seed, {"cases": len(cases), "max": worst})
    paths = emit_report(rep, _out(cfg, "sop_compare"), cfg.output.format)
    for k, v in worst.items():
        print(f"{k}: {v:.3e}")
    return paths


_HANDLERS = {"simulate": cmd_simulate, "filter": cmd_filter,
             "reproduce-tables": cmd_reproduce_tables,
             "postulate-check": cmd_postulate_check, "sop-compare": cmd_sop_compare}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        paths = _HANDLERS[args.command](cfg)
    except (ConfigError, DimensionError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure ({type(exc).__module__}.{type(exc).__name__}): {exc}",
              file=sys.stderr)
        return EXIT_NUMERIC
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
