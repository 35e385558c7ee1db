"""Command line interface: ``stigspot {ingest,generate,run,tune,export}``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from datetime import date
from pathlib import Path

from . import io, runner, synthetic
from .hotspots import extract
from .config import ConfigError, load_config
from .pipeline import (SLOTS_PER_DAY, daily_trails, detect_intermittent, detect_permanent,
                       index_events, remove_in_mask, similarity_matrix)
from .trail import run

log = logging.getLogger("stigspot")


def _out(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def cmd_ingest(args):
    cfg = load_config(args.config)
    data = runner.load_inputs(cfg)
    out = _out(args.out)
    io.write_events(data.events, out / "events_clean.csv")
    report = data.report.as_dict()
    io.write_json(report, out / "ingest_report.json")
    print(f"kept {report['rows_kept']} of {report['rows_read']} rows")
    return 0


def cmd_generate(args):
    scenario = synthetic.load_scenario(args.scenario) if args.scenario else synthetic.planted_month()
    data = synthetic.generate(scenario, args.seed)
    paths = synthetic.write_synthetic(data, args.out)
    print(f"wrote {len(data.events)} events, {len(data.profiles)} profiles to {paths['events'].parent}")
    return 0


def _run_config(args):
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def cmd_run(args):
    cfg = _run_config(args)
    manifest = runner.run_pipeline(cfg, args.out, args.threads)
    c = manifest["counts"]
    print(f"{c['n_permanent_regions']} permanent, {c['n_intermittent_regions']} intermittent "
          f"regions; outputs in {args.out}")
    for w in manifest["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def cmd_tune(args):
    cfg = _run_config(args)
    if not cfg.wants_sweep:
        raise ConfigError("tune needs tau_permanent_candidates and tau_intermittent_candidates")
    data = runner.load_inputs(cfg)
    result, _, _ = runner.tune(cfg, data, args.threads)
    out = _out(args.out)
    runner.write_tuning_table(result.table, out / "tuning.csv")
    io.write_json({"tau_permanent": result.tau_permanent,
                   "tau_intermittent": result.tau_intermittent,
                   "objective": cfg.objective}, out / "tuned.json")
    print(f"tau_permanent={result.tau_permanent} tau_intermittent={result.tau_intermittent}")
    return 0


def cmd_export(args):
    cfg = _run_config(args)
    data = runner.load_inputs(cfg)
    acfg = runner.analysis_config(cfg, data)
    ev, _ = index_events(data.lat, data.lon, data.t, acfg)
    out = _out(args.out)
    if args.stream == "residual":
        perm = detect_permanent(ev, acfg, args.threads)
        ev, _ = remove_in_mask(ev, perm.hotspots.mask)

    if args.what == "matrix":
        occ = detect_intermittent(ev, acfg, args.threads)
        m = similarity_matrix(occ)
        path = out / f"similarity_matrix_{args.stream}.csv"
        io.export_matrix_csv([o.label for o in m.labels], m.values, path)
        print(f"wrote {path}")
        return 0

    if args.date is None:
        raise ConfigError("--date is required for heatmap and mask exports")
    d = date.fromisoformat(args.date)
    if d not in acfg.dates:
        raise ConfigError(f"{d} is outside the analysis period")
    di = acfg.dates.index(d)
    if args.slot is None:
        trail = daily_trails(ev, acfg, args.threads)[di]
        th, stem = acfg.tau_permanent, f"day_{d.isoformat()}"
    else:
        if not 0 <= args.slot < SLOTS_PER_DAY:
            raise ConfigError(f"--slot must be in [0, {SLOTS_PER_DAY})")
        t0 = di * acfg.steps_per_day + args.slot * acfg.steps_per_slot
        trail = run(acfg.grid, ev.rows, ev.cols, ev.steps, (t0, t0 + acfg.steps_per_slot),
                    acfg.mark, acfg.evap_intermittent)
        th, stem = acfg.tau_intermittent, f"slot_{d.isoformat()}_{args.slot:02d}"

    if args.what == "heatmap":
        io.export_heatmap_csv(trail.values, out / f"heatmap_{stem}.csv")
        if args.format == "pgm" or cfg.export_pgm:
            io.export_heatmap_pgm(trail.values, out / f"heatmap_{stem}.pgm")
    else:
        hs = extract(trail, th)
        io.export_mask_geojson(hs, out / f"mask_{stem}.geojson")
        io.export_mask_csv(hs, out / f"mask_{stem}.csv")
    print(f"wrote {args.what} for {stem} to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stigspot", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True, threads=True):
        if config:
            sp.add_argument("--config", required=True, help="flat key = value config file")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=None)
        if threads:
            sp.add_argument("--threads", type=int, default=1)

    sp = sub.add_parser("ingest", help="validate and filter an events file")
    common(sp, threads=False)
    sp.set_defaults(fn=cmd_ingest)

    sp = sub.add_parser("generate", help="write a synthetic scenario with ground truth")
    common(sp, config=False, threads=False)
    sp.add_argument("--scenario", help="scenario JSON (default: built-in planted month)")
    sp.set_defaults(fn=cmd_generate, seed=0)

    sp = sub.add_parser("run", help="full permanent/intermittent analysis")
    common(sp)
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("tune", help="threshold sweep only")
    common(sp)
    sp.set_defaults(fn=cmd_tune)

    sp = sub.add_parser("export", help="export a trail heatmap, hotspot mask or matrix")
    common(sp)
    sp.add_argument("what", choices=("heatmap", "mask", "matrix"))
    sp.add_argument("--date", help="local date YYYY-MM-DD")
    sp.add_argument("--slot", type=int, help="2-hour slot 0-11 (omit for the whole day)")
    sp.add_argument("--stream", choices=("all", "residual"), default="all",
                    help="events used for the trail; residual drops permanent areas")
    sp.add_argument("--format", choices=("csv", "pgm"), default="csv")
    sp.set_defaults(fn=cmd_export)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except (ConfigError, runner.PipelineError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
