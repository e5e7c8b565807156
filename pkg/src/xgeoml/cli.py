"""``xgeoml`` command line: synth | fit | scan | bench | render.

Exit status is 0 on success, 1 for invalid input or configuration and 2
when the computation itself fails.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import io as xio
from .bench import result_items, run_bench, summary_table
from .config import ConfigError, RunConfig
from .engine import (EngineError, explain_all, field_recovery, headline_explainer, holdout_evaluate,
                     loo_evaluate, scan_bandwidth)
from .kernels import KernelSpec
from .spatial import DatasetError, build_index, load_dataset, write_dataset
from .svg import HeatmapSpec, render_heatmap, render_panels
from .synth import SynthSpec, generate, read_truth, write_truth

log = logging.getLogger("xgeoml")

EXIT_OK, EXIT_INVALID, EXIT_COMPUTE = 0, 1, 2


def _load_config(path: str, overrides: list[str]) -> tuple[RunConfig, Path]:
    base = Path(path).resolve().parent
    cfg = RunConfig.load(path)
    for item in overrides or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        cfg = cfg.set(key.strip(), value.strip())
    # pin file paths so the echoed config reruns from anywhere
    for key in ("io.input", "io.truth", "io.output_dir"):
        value = cfg.get(key)
        if value:
            cfg = cfg.set(key, str((base / value).resolve()))
    return cfg, Path(cfg.get("io.output_dir"))


def _dataset(cfg: RunConfig):
    path = cfg.get("io.input")
    if not path:
        raise ConfigError("io.input is not set")
    ds = load_dataset(path, cfg.schema(), cfg.get("io.delimiter"))
    truth_path = cfg.get("io.truth")
    truth = read_truth(truth_path, ds.ids) if truth_path else None
    return ds, truth


def cmd_synth(args) -> int:
    spec = SynthSpec(grid_side=args.grid_side, seed=args.seed, noise_sd=args.noise_sd,
                     response_form=args.preset, noise_in_nonlinear=not args.no_noise_in_nonlinear,
                     cosine_periods=args.cosine_periods)
    ds, truth = generate(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset(ds, out / "dataset.csv")
    write_truth(truth, ds.ids, out / "truth.csv")
    print(f"wrote {ds.n} points to {out / 'dataset.csv'} and {out / 'truth.csv'}")
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg, out = _load_config(args.config, args.set)
    ds, truth = _dataset(cfg)
    start = time.perf_counter()
    index = build_index(ds)
    kernel, learner, explain = cfg.kernel(), cfg.learner(), cfg.explain()
    seed, threads = cfg.seed, cfg.threads
    results: dict[str, object] = {}
    loo = None
    if cfg.get("eval.protocol") == "loo":
        loo = loo_evaluate(ds, index, kernel, learner, seed, threads)
        results["loo_r2"] = loo.r2
        results["loo_failures"] = len(loo.failures)
    else:
        train, test = holdout_evaluate(ds, index, kernel, learner, seed, cfg.get("eval.test_fraction"), threads)
        results["holdout.train_r2"] = train
        results["holdout.test_r2"] = test
    fld = explain_all(ds, index, kernel, learner, explain, seed, threads)
    if loo is not None:
        fld.loo = loo.predictions
    results["explain_failures"] = len(fld.failures)
    if truth is not None:
        rec = field_recovery(fld, truth)
        for name, r in rec.items():
            for feat, c in zip(ds.feature_names, r.correlations):
                results[f"corr.{name}.{feat}"] = float(c)
            results[f"corr.{name}.mean"] = r.mean
        if rec:
            head = headline_explainer(learner, list(rec))
            results["average_correlation.explainer"] = head
            results["average_correlation"] = rec[head].mean
    results["seed"] = seed
    results["runtime_seconds"] = round(time.perf_counter() - start, 3)

    out.mkdir(parents=True, exist_ok=True)
    xio.write_attributions(out / "attributions.csv", ds, fld)
    xio.write_predictions(out / "predictions.csv", ds, fld)
    if fld.pd:
        xio.write_pd(out / "pd.csv", ds, fld)
    xio.write_text(out / "report.txt", xio.format_report(cfg.echo(), results, "fit report"))
    for key in ("loo_r2", "holdout.test_r2", "average_correlation"):
        if key in results:
            print(f"{key} = {results[key]}")
    print(f"outputs in {out}")
    return EXIT_OK


def cmd_scan(args) -> int:
    cfg, out = _load_config(args.config, args.set)
    ds, truth = _dataset(cfg)
    start = time.perf_counter()
    index = build_index(ds)
    learner, seed, threads = cfg.learner(), cfg.seed, cfg.threads
    want_corr = cfg.get("scan.correlations") and truth is not None
    scans, results, panels = [], {}, {}
    for kind in cfg.get("scan.kinds"):
        for mode in cfg.get("scan.modes"):
            grid = cfg.get(f"scan.grid.{mode}")
            base = KernelSpec(kind, mode, grid[0], cfg.get("kernel.sigma_multiplier"))
            s = scan_bandwidth(ds, index, base, learner, grid, seed, threads,
                               truth=truth if want_corr else None,
                               explain=cfg.explain() if want_corr else None)
            scans.append(s)
            label = f"{kind}.{mode}"
            results[f"{label}.chosen"] = s.chosen
            results[f"{label}.r2"] = float(np.nanmax(s.r2))
            panels[f"{kind} / {mode}"] = {label: (s.bandwidths, s.r2)}
    results["seed"] = seed
    results["runtime_seconds"] = round(time.perf_counter() - start, 3)
    out.mkdir(parents=True, exist_ok=True)
    xio.write_scans(out / "scan.csv", scans, ds.feature_names)
    xio.write_text(out / "scan.svg", render_panels(panels))
    xio.write_text(out / "report.txt", xio.format_report(cfg.echo(), results, "scan report"))
    for s in scans:
        print(f"{s.kernel.label():<24} chosen {s.chosen}  LOO R2 {np.nanmax(s.r2):.4f}")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = RunConfig.load(args.config) if args.config else RunConfig.from_pairs()
    if args.preset:
        cfg = cfg.set("bench.preset", args.preset)
    if args.seed is not None:
        cfg = cfg.set("run.seed", args.seed)
    if args.threads is not None:
        cfg = cfg.set("run.threads", args.threads)
    out = Path(args.out_dir or f"bench_{cfg.get('bench.preset')}")
    cfg = cfg.set("io.output_dir", str(out.resolve()))
    res = run_bench(cfg, progress=lambda msg: log.info(msg))
    table = summary_table(res)
    out.mkdir(parents=True, exist_ok=True)
    xio.write_text(out / "summary.txt", table)
    xio.write_text(out / "report.txt", xio.format_report(cfg.echo(), result_items(res), "bench report"))
    best = res.headline_run
    xio.write_pd(out / "pd.csv", res.ds, best.fld)
    xio.write_attributions(out / "attributions.csv", res.ds, best.fld)
    scans = [res.gwr_scan] + ([res.linear_scan] if res.linear_scan is not None else [])
    xio.write_scans(out / "scan.csv", scans, res.ds.feature_names)
    if not args.no_figures:
        coords = res.ds.coords
        for j, feat in enumerate(res.ds.feature_names):
            maps = {"truth": res.truth.matrix()[:, j], "gwr": res.gwr_coef[:, j]}
            for name, values in best.fld.explainer_fields().items():
                maps[name] = values[:, j]
            for name, values in maps.items():
                xio.write_text(out / f"map_{feat}_{name}.svg",
                               render_heatmap(HeatmapSpec(values, coords, res.ds.ids, title=f"{feat} {name}")))
    print(table)
    print(f"runtime {res.runtime:.1f} s; outputs in {out}")
    return EXIT_OK


def cmd_render(args) -> int:
    ds = load_dataset(args.dataset)
    cols = xio.read_columns(args.input)
    if {"feature", "explainer", "value"} <= set(cols):
        if not (args.feature and args.explainer):
            raise ValueError("long-format input needs --feature and --explainer")
        lookup = {pid: v for pid, f, e, v in zip(cols["id"], cols["feature"], cols["explainer"], cols["value"])
                  if f == args.feature and e == args.explainer}
        title = f"{args.feature} {args.explainer}"
    else:
        if args.column not in cols:
            raise ValueError(f"column {args.column!r} not in {args.input}")
        lookup = dict(zip(cols["id"], cols[args.column]))
        title = args.column
    missing = [pid for pid in ds.ids if pid not in lookup]
    if missing:
        raise ValueError(f"{len(missing)} dataset ids have no value, e.g. {missing[0]!r}")
    values = np.array([float(lookup[pid]) for pid in ds.ids])
    svg = render_heatmap(HeatmapSpec(values, ds.coords, ds.ids, low=args.low, high=args.high, title=title))
    xio.write_text(args.out, svg)
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="xgeoml", description="Geographically weighted machine learning with explanations.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic benchmark dataset and its true coefficients")
    s.add_argument("--preset", choices=("linear", "nonlinear"), default="nonlinear")
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--grid-side", type=int, default=30)
    s.add_argument("--noise-sd", type=float, default=0.5)
    s.add_argument("--cosine-periods", type=float, default=2.0)
    s.add_argument("--no-noise-in-nonlinear", action="store_true")
    s.add_argument("--out-dir", default=".")
    s.set_defaults(func=cmd_synth)

    for name, func, text in (("fit", cmd_fit, "evaluate and explain one kernel/learner configuration"),
                             ("scan", cmd_scan, "LOO R2 over bandwidth grids for each kernel kind and mode")):
        c = sub.add_parser(name, help=text)
        c.add_argument("config", help="key = value config file (a previous report also works)")
        c.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        c.set_defaults(func=func)

    b = sub.add_parser("bench", help="OLS vs GWR vs XGeoML on a synthetic preset")
    b.add_argument("preset", nargs="?", choices=("linear", "nonlinear"))
    b.add_argument("--config")
    b.add_argument("--seed", type=int)
    b.add_argument("--threads", type=int)
    b.add_argument("--out-dir")
    b.add_argument("--no-figures", action="store_true")
    b.set_defaults(func=cmd_bench)

    r = sub.add_parser("render", help="draw one field as an SVG heatmap")
    r.add_argument("input", help="wide CSV with an id column, or a long attributions CSV")
    r.add_argument("--dataset", required=True, help="dataset CSV supplying coordinates")
    r.add_argument("--column")
    r.add_argument("--feature")
    r.add_argument("--explainer")
    r.add_argument("--low", default="#fff5eb")
    r.add_argument("--high", default="#7f2704")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except (ConfigError, DatasetError, FileNotFoundError, IsADirectoryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
