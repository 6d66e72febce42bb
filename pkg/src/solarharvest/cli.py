"""Command line: ``solarharvest {fit,generate,validate,sweep,fixture}``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 model or validation error.
"""

from __future__ import annotations

import argparse
import datetime as dt
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

from . import pipeline
from .clustering import NIGHT_DAY, SCHEMES, SLOT, STATE_LABELS, SlotConfig
from .config import RunConfig, config_from_provenance, load_config
from .errors import ConfigError, DataError, ModelError
from .fixture import DEFAULT_DAYS, DEFAULT_NOISE, DEFAULT_SEED, DEFAULT_START, clear_sky_dataset
from .ingest import Dataset, group_by_month, parse_csv, write_csv
from .markov import atomic_write_text, generate_trace, load_model, save_model
from .validate import SUMMARY_COLUMNS, csv_text

log = logging.getLogger("solarharvest")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_MODEL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _months(text: str) -> list[int]:
    try:
        months = _int_list(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid month list {text!r}") from None
    if any(not 1 <= m <= 12 for m in months):
        raise argparse.ArgumentTypeError("months must be in 1..12")
    return sorted(set(months))


def _sizes(text: str) -> list[tuple[int, int]]:
    out = []
    for part in text.split(","):
        try:
            a, b = part.lower().split("x")
            out.append((int(a), int(b)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"size {part!r} is not of the form NPxNS") from None
    return out


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="solarharvest", description="Solar harvesting source models from hourly irradiance.")
    p.add_argument("-q", "--quiet", action="store_true", help="only report errors")
    quiet = argparse.ArgumentParser(add_help=False)
    quiet.add_argument("-q", "--quiet", action="store_true", default=argparse.SUPPRESS,
                       help="only report errors")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, **kw):
        return sub.add_parser(name, parents=[quiet], **kw)

    def common(sp, data=True):
        sp.add_argument("--config", help="TOML run configuration (default: bundled Los Angeles file)")
        if data:
            sp.add_argument("--data", help="hourly irradiance CSV")
        sp.add_argument("--seed", type=_seed, help="random seed (unsigned 64-bit)")
        sp.add_argument("--out", help="output directory")

    sp = add("fit", help="fit one semi-Markov model per month")
    common(sp)
    sp.add_argument("--months", type=_months, help="e.g. 1,2,8 or 6-8")
    sp.add_argument("--scheme", choices=SCHEMES)
    sp.add_argument("--slots", type=int, help="number of slots for the slot scheme")
    sp.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    sp = add("generate", help="synthesize a trace from a model file")
    sp.add_argument("--model", required=True, help="model JSON file")
    sp.add_argument("--horizon-h", type=float, required=True, help="trace length in hours")
    sp.add_argument("--seed", type=_seed, default=1)
    sp.add_argument("--out", default="out")
    sp.add_argument("--name", help="trace file name (default trace_<model>_s<seed>.csv)")

    sp = add("validate", help="KS, ACF and summary report of a model against data")
    common(sp)
    sp.add_argument("--model", required=True, help="model JSON file")
    sp.add_argument("--months", type=_months, help="expected month (must match the model)")
    sp.add_argument("--acf-slots", type=_int_list, default=list(pipeline.DEFAULT_ACF_SLOTS),
                    help="slot counts compared in the ACF table (default 2,6,12)")
    sp.add_argument("--replicates", type=int, default=pipeline.DEFAULT_REPLICATES,
                    help="synthetic traces averaged per ACF curve")
    sp.add_argument("--max-lag-h", type=int, default=72)
    sp.add_argument("--deviation-lag-h", type=float, default=pipeline.DEFAULT_DEVIATION_LAG_H,
                    help="largest lag entering the max-abs ACF deviation")
    sp.add_argument("--alpha", type=float, choices=(0.01, 0.05), default=0.01)
    sp.add_argument("--strict", action="store_true", help="exit 3 when a KS row fails")

    sp = add("sweep", help="day-state statistics over module sizes and sites")
    common(sp)
    sp.add_argument("--months", type=_months)
    sp.add_argument("--sizes", type=_sizes, help="e.g. 2x2,6x6 (default from config)")

    sp = add("fixture", help="write the synthetic clear-sky dataset")
    sp.add_argument("--config", help="site taken from this configuration")
    sp.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    sp.add_argument("--out", default="out")
    sp.add_argument("--name", default="fixture.csv")
    sp.add_argument("--start", type=dt.date.fromisoformat, default=DEFAULT_START)
    sp.add_argument("--days", type=int, default=DEFAULT_DAYS)
    sp.add_argument("--noise", type=float, default=DEFAULT_NOISE)
    return p


def _run_config(args) -> RunConfig:
    cfg = load_config(args.config)
    changes = {}
    for key in ("seed", "out", "data"):
        if getattr(args, key, None) is not None:
            changes[key] = getattr(args, key)
    if getattr(args, "months", None):
        changes["months"] = tuple(args.months)
    if getattr(args, "scheme", None):
        changes["scheme"] = args.scheme
    if getattr(args, "slots", None) is not None:
        changes["slots"] = SlotConfig(args.slots)
        if not getattr(args, "scheme", None):
            changes["scheme"] = SLOT
    return cfg.replace(**changes) if changes else cfg


def _load_data(path: Optional[str], cfg: RunConfig) -> Dataset:
    if not path:
        raise UsageError("no input data: pass --data or set [run] data in the config")
    if not os.path.isfile(path):
        raise DataError(f"{path}: no such file")
    try:
        return parse_csv(path, cfg.site)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def _outdir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def model_filename(scheme: str, n_states: int, month: int) -> str:
    tag = "night-day" if scheme == NIGHT_DAY else f"slot{n_states}"
    return f"model_{tag}_m{month:02d}.json"


def _fit_one(cfg: RunConfig, month_ds: Dataset, month: int, threshold: Optional[float], out: str):
    try:
        model, visits = pipeline.fit_month(cfg, month_ds, month, threshold)
    except ModelError as exc:
        raise type(exc)(f"month {month:02d}: {exc}") from None
    path = os.path.join(out, model_filename(model.scheme, model.n_states, month))
    save_model(model, path)
    th = model.provenance["clustering"].get("threshold_a")
    detail = f", threshold {th:.6g} A" if th is not None else ""
    return (f"month {month:02d}: {len(month_ds)} records, {len(visits)} visits{detail} -> {path}")


def cmd_fit(args) -> int:
    cfg = _run_config(args)
    ds = _load_data(cfg.data, cfg)
    out = _outdir(cfg.out)
    groups = group_by_month(ds)
    threshold = None
    if cfg.scheme == NIGHT_DAY and cfg.threshold_mode == "global":
        threshold = pipeline.global_threshold(cfg, pipeline.harvest(cfg, ds))
    for m in cfg.months:
        if len(groups[m]) == 0:
            raise DataError(f"month {m:02d}: no records in {cfg.data}")
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_fit_one, cfg, groups[m], m, threshold, out) for m in cfg.months]
            lines = [f.result() for f in futures]
    else:
        lines = [_fit_one(cfg, groups[m], m, threshold, out) for m in cfg.months]
    for line in lines:
        log.info(line)
    return EXIT_OK


def cmd_generate(args) -> int:
    model = load_model(args.model)
    trace = generate_trace(model, args.horizon_h, seed=args.seed)
    stem = os.path.splitext(os.path.basename(args.model))[0]
    name = args.name or f"trace_{stem.removeprefix('model_')}_s{args.seed}.csv"
    path = os.path.join(_outdir(args.out), name)
    trace.to_csv(path)
    log.info(f"{len(trace)} samples over {args.horizon_h:g} h -> {path}")
    return EXIT_OK


def _report_text(report: pipeline.ValidationReport, model_path: str, data_label: str, seed: int,
                 replicates: int) -> str:
    lines = [
        f"model: {model_path}",
        f"data: {data_label}",
        f"scheme: {report.scheme}, states: {report.n_states}, month: {report.month:02d}",
        f"seed: {seed}",
    ]
    if report.threshold_a is not None:
        lines.append(f"night-day threshold: {report.threshold_a!r} A")
    lines += ["", "Kolmogorov-Smirnov", f"  method: {pipeline.ks_method_note(report.alpha)}"]
    for r in report.ks_rows:
        name = STATE_LABELS[r.state] if report.scheme == NIGHT_DAY else f"slot {r.state}"
        if r.outcome == "skipped":
            lines.append(f"  {name:>8} {r.quantity:<8} n={r.n:<6} skipped ({r.variant})")
        else:
            lines.append(f"  {name:>8} {r.quantity:<8} n={r.n:<6} D={r.statistic:.4f} "
                         f"crit={r.critical:.4f} {r.outcome}")
    lines += ["", f"Autocorrelation (biased estimator, global mean; synthetic curves average "
                  f"{replicates} traces of the data length)",
              f"  max |r_emp - r_syn| over lags 0-{report.deviation_lag_h:g} h:"]
    for label, dev in report.deviations.items():
        lines.append(f"  {label:>10} {dev:.4f}")
    lines += ["", "Summary (empirical)"]
    for s in report.empirical_summary.values():
        lines.append(f"  state {s.state}: mean i {s.mean_current_a:.6g} A, max i {s.max_current_a:.6g} A, "
                     f"mean tau {s.mean_duration_h:.4g} h, min {s.min_duration_h:.4g} h, "
                     f"max {s.max_duration_h:.4g} h")
    return "\n".join(lines) + "\n"


def cmd_validate(args) -> int:
    model = load_model(args.model)
    try:
        cfg = config_from_provenance(model.provenance)
    except ConfigError as exc:
        raise ModelError(f"{args.model}: {exc}") from None
    seed = args.seed if args.seed is not None else 1
    if args.config:
        cfg = cfg.replace(site=load_config(args.config).site)
    if args.months and args.months != [model.month]:
        raise ModelError(f"month mismatch: model is for month {model.month:02d}, "
                         f"requested {','.join(map(str, args.months))}")
    data = args.data or load_config(args.config).data
    ds = _load_data(data, cfg)
    month_ds = group_by_month(ds)[model.month]
    if len(month_ds) == 0:
        present = sorted({int(m) for m in ds.months()})
        raise ModelError(f"month mismatch: model is for month {model.month:02d} but the data "
                         f"covers months {','.join(f'{m:02d}' for m in present)}")
    try:
        report = pipeline.validate_month(model, cfg, month_ds, seed, args.acf_slots, args.replicates,
                                         args.max_lag_h, args.deviation_lag_h, args.alpha)
    except ValueError as exc:
        if isinstance(exc, (DataError, ModelError)):
            raise
        raise ModelError(str(exc)) from None
    out = _outdir(args.out or "out")
    stem = os.path.splitext(os.path.basename(args.model))[0].removeprefix("model_")

    ks = csv_text(("state", "month", "quantity", "n", "statistic", "critical", "pass", "variant"),
                  [(r.state, r.month, r.quantity, r.n, r.statistic, r.critical, r.outcome, r.variant)
                   for r in report.ks_rows])
    labels = list(report.synthetic_acf)
    acf_rows = [(int(lag), report.empirical_acf.values[k], *(report.synthetic_acf[l].values[k] for l in labels))
                for k, lag in enumerate(report.empirical_acf.lags_h)]
    acf_text = csv_text(("lag_h", "empirical", *labels), acf_rows)
    summary_rows = []
    for source, stats in (("empirical", report.empirical_summary), ("synthetic", report.synthetic_summary)):
        for s in stats.values():
            summary_rows.append((source, s.state, s.month, s.n_samples, s.n_visits, s.n_complete,
                                 *(getattr(s, c) for c in SUMMARY_COLUMNS)))
    summary = csv_text(("source", "state", "month", "n_samples", "n_visits", "n_complete", *SUMMARY_COLUMNS),
                       summary_rows)
    files = {
        f"ks_report_{stem}.csv": ks,
        f"acf_{stem}.csv": acf_text,
        f"summary_{stem}.csv": summary,
        f"report_{stem}.txt": _report_text(report, os.path.basename(args.model), ds.source_label, seed,
                                           args.replicates),
    }
    for name, text in files.items():
        atomic_write_text(os.path.join(out, name), text)
    n_fail = sum(r.outcome == "fail" for r in report.ks_rows)
    devs = ", ".join(f"{k} {v:.3f}" for k, v in report.deviations.items())
    log.info(f"month {model.month:02d}: KS {len(report.ks_rows) - n_fail}/{len(report.ks_rows)} rows "
             f"not failing; ACF deviation {devs} -> {out}")
    if args.strict and n_fail:
        raise ModelError(f"{n_fail} KS row(s) failed at alpha = {args.alpha:g}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _run_config(args)
    sizes = args.sizes or list(cfg.sweep_sizes) or [(cfg.module.n_p, cfg.module.n_s)]
    sites = list(cfg.sweep_sites)
    rows = []
    if sites and not args.data:
        for s in sites:
            if not s.data:
                raise UsageError(f"sweep site {s.name!r} has no data file")
            site_cfg = cfg.replace(site=s.site)
            rows += pipeline.sweep_site(site_cfg, _load_data(s.data, site_cfg), sizes, cfg.months, s.name)
    else:
        rows = pipeline.sweep_site(cfg, _load_data(cfg.data, cfg), sizes, cfg.months)
    out = _outdir(cfg.out)
    text = csv_text(("site", "n_p", "n_s", "month", "n_visits", "n_complete", *SUMMARY_COLUMNS),
                    [(r.site, r.n_p, r.n_s, r.month, r.stats.n_visits, r.stats.n_complete,
                      *(getattr(r.stats, c) for c in SUMMARY_COLUMNS)) for r in rows])
    path = os.path.join(out, "sweep.csv")
    atomic_write_text(path, text)
    log.info(f"{len(rows)} rows ({len(sizes)} sizes) -> {path}")
    return EXIT_OK


def cmd_fixture(args) -> int:
    site = load_config(args.config).site
    if args.days < 1:
        raise UsageError("--days must be >= 1")
    if args.noise < 0:
        raise UsageError("--noise must be >= 0")
    ds = clear_sky_dataset(site, args.start, args.days, args.seed, args.noise)
    path = os.path.join(_outdir(args.out), args.name)
    tmp = path + ".part"
    write_csv(ds, tmp)
    os.replace(tmp, path)
    log.info(f"{len(ds)} records ({args.days} days from {args.start}) -> {path}")
    return EXIT_OK


COMMANDS = {
    "fit": cmd_fit,
    "generate": cmd_generate,
    "validate": cmd_validate,
    "sweep": cmd_sweep,
    "fixture": cmd_fixture,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    log.handlers[:] = [handler]
    log.propagate = False
    log.setLevel(logging.WARNING if args.quiet else logging.INFO)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        code, msg = EXIT_USAGE, str(exc)
    except DataError as exc:
        code, msg = EXIT_DATA, str(exc)
    except ModelError as exc:
        code, msg = EXIT_MODEL, str(exc)
    except FileNotFoundError as exc:
        code, msg = EXIT_DATA, f"{exc.filename}: no such file"
    except OSError as exc:
        code, msg = EXIT_DATA, f"{exc.filename or ''}: {exc.strerror}"
    print(f"solarharvest {args.command}: error: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
