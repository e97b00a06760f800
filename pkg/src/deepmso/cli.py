"""Command line entry point: ``deepmso {run,compare,sweep,check}``."""
import argparse
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
import itertools
import json
import logging
from pathlib import Path
import sys

from deepmso import config as cf
from deepmso.checks import RMS_RATIO_MAX, run_checks
from deepmso.errors import ConfigurationError
from deepmso.report import summarize, write_json, write_trace
from deepmso.sim import run_episode, tracking_metrics

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_ABORTED = 3
EXIT_CHECK = 4

log = logging.getLogger("deepmso")


class RunAborted(Exception):
    pass


def _load(args):
    text = ""
    if args.config:
        text = Path(args.config).read_text(encoding="utf-8")
    raw = cf.load_raw(text)
    overrides = {}
    if args.seed is not None:
        overrides["sim.seed"] = args.seed
    if getattr(args, "nn", None) is not None:
        overrides["sim.nn"] = args.nn
    return cf.with_overrides(raw, overrides), text


def _write_run(run_log, cfg, outdir, plots, label=""):
    outdir.mkdir(parents=True, exist_ok=True)
    write_trace(run_log, outdir / "trace.csv")
    (outdir / "experiment.ini").write_text(cf.emit(cfg), encoding="utf-8")
    summary = summarize(run_log, cfg.settle)
    summary["seed"] = cfg.seed
    summary["nn"] = cfg.nn
    if plots and len(run_log) > 1:
        from deepmso.plots import render_run

        summary["figures"] = render_run(run_log, outdir, label)
    write_json(summary, outdir / "summary.json")
    return summary


def cmd_run(args):
    raw, text = _load(args)
    cfg = cf.build_config(raw, text)
    out = Path(args.out)
    run_log = run_episode(cfg)
    summary = _write_run(run_log, cfg, out, not args.no_plots, "network on" if cfg.nn else "network off")
    _print_metrics("run", summary)
    if run_log.aborted:
        raise RunAborted(run_log.abort_reason)
    return EXIT_OK


def cmd_compare(args):
    raw, text = _load(args)
    cfg = cf.build_config(raw, text)
    out = Path(args.out)
    logs = {}
    summaries = {}
    for tag, flag in (("on", True), ("off", False)):
        c = replace(cfg, nn=flag, oracle=False)
        logs[tag] = run_episode(c)
        summaries[tag] = _write_run(logs[tag], c, out / tag, not args.no_plots, f"network {tag}")
    aborted = [t for t, l in logs.items() if l.aborted]
    report = {"on": summaries["on"].get("metrics"), "off": summaries["off"].get("metrics")}
    if not aborted:
        rms_on = tracking_metrics(logs["on"], cfg.settle)["rms_e_r"]
        rms_off = tracking_metrics(logs["off"], cfg.settle)["rms_e_r"]
        report["rms_ratio"] = rms_on / rms_off
        report["rms_ratio_ok"] = report["rms_ratio"] <= RMS_RATIO_MAX
        print(f"rms |e_r| on={rms_on:.6g} off={rms_off:.6g} ratio={report['rms_ratio']:.4g}")
    report["settle"] = cfg.settle
    report["aborted"] = aborted
    if not args.no_plots and not aborted:
        from deepmso.plots import plot_compare

        plot_compare(logs["on"], logs["off"], out / "compare.png")
        report["figures"] = ["compare.png"]
    write_json(report, out / "summary.json")
    if aborted:
        raise RunAborted(f"aborted runs: {', '.join(aborted)}")
    return EXIT_OK


def _parse_axes(specs):
    axes = []
    for spec in specs:
        if "=" not in spec:
            raise ConfigurationError(f"sweep axis {spec!r} is not key=v1,v2,...")
        key, values = spec.split("=", 1)
        cf.resolve_key(key.strip())
        vals = [v.strip() for v in values.split(";" if ";" in values else ",") if v.strip()]
        if not vals:
            raise ConfigurationError(f"sweep axis {key!r} has no values")
        axes.append((key.strip(), vals))
    return axes


def _sweep_cell(job):
    raw, overrides, outdir, plots = job
    cfg = cf.build_config(cf.with_overrides(raw, overrides))
    run_log = run_episode(cfg)
    summary = _write_run(run_log, cfg, Path(outdir), plots)
    return summary


def cmd_sweep(args):
    raw, _ = _load(args)
    axes = _parse_axes(args.axes)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = []
    cells = []
    for i, combo in enumerate(itertools.product(*[vals for _, vals in axes])):
        overrides = {key: v for (key, _), v in zip(axes, combo)}
        # validate before spending time on any cell
        cf.build_config(cf.with_overrides(raw, overrides))
        name = f"cell_{i:03d}"
        cells.append({"dir": name, "params": overrides})
        jobs.append((raw, overrides, str(out / name), not args.no_plots))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_sweep_cell, jobs))
    else:
        results = [_sweep_cell(j) for j in jobs]
    for cell, summary in zip(cells, results):
        cell["aborted"] = summary["aborted"]
        cell["metrics"] = summary.get("metrics")
    write_json({"axes": [{"key": k, "values": v} for k, v in axes], "cells": cells}, out / "index.json")
    print(f"sweep: {len(cells)} cells written to {out}")
    if any(c["aborted"] for c in cells):
        raise RunAborted("one or more sweep cells aborted")
    return EXIT_OK


def cmd_check(args):
    raw, text = _load(args)
    cfg = cf.build_config(raw, text)
    results, _, _ = run_checks(cfg)
    for r in results:
        print(r.line())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_json([r.__dict__ for r in results], out / "check.json")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def _print_metrics(tag, summary):
    m = summary.get("metrics")
    if m:
        print(f"{tag}: rms |e_r| {m['rms_e_r']:.6g}, joint rms {m['rms_joint'][0]:.4g}/{m['rms_joint'][1]:.4g} rad")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment file; built-in defaults when omitted")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--seed", type=int, help="override the network seed")
    common.add_argument("--jobs", type=int, default=1, help="parallel sweep cells")
    common.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="deepmso", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", parents=[common], help="single episode")
    p.add_argument("--nn", choices=("on", "off"))
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("compare", parents=[common], help="network on vs off")
    p.set_defaults(func=cmd_compare)
    p = sub.add_parser("sweep", parents=[common], help="grid over config keys")
    p.add_argument("--nn", choices=("on", "off"))
    p.add_argument("axes", nargs="+", metavar="KEY=V1,V2")
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("check", parents=[common], help="invariant and diagnostic suite")
    p.set_defaults(func=cmd_check)
    return parser


def _fail(code, kind, message):
    print(json.dumps({"error": kind, "message": message, "exit_code": code}), file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    except RunAborted as exc:
        return _fail(EXIT_ABORTED, "aborted", str(exc))
    except OSError as exc:
        return _fail(EXIT_IO, "io", str(exc))


if __name__ == "__main__":
    sys.exit(main())
