"""End-to-end steps shared by the command line and the test suite."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .clustering import (
    DAY_STATE,
    NIGHT_DAY,
    SLOT,
    NightDayConfig,
    SlotConfig,
    StateVisit,
    night_day_cluster,
    night_day_threshold,
    slot_cluster,
)
from .config import RunConfig
from .ingest import Dataset, group_by_month
from .markov import SemiMarkovModel, build_model, generate_trace, trace_visits
from .power import HarvestSeries, harvest_series
from .pv import ModuleConfig
from .validate import (
    KS_CRITICAL,
    KS_MIN_N,
    AcfCurve,
    SummaryStats,
    acf,
    compare_acf,
    is_lattice,
    ks_test,
    mean_acf,
    summary_stats,
)

DEFAULT_ACF_SLOTS = (2, 6, 12)
DEFAULT_REPLICATES = 20
DEFAULT_DEVIATION_LAG_H = 48


def harvest(cfg: RunConfig, ds: Dataset, module: Optional[ModuleConfig] = None) -> HarvestSeries:
    return harvest_series(ds, cfg.panel, cfg.cell, module or cfg.module, cfg.thermal, cfg.processor)


def global_threshold(cfg: RunConfig, series: HarvestSeries) -> Optional[float]:
    """Dataset-wide threshold for ``threshold_mode = "global"``, else ``None``."""
    if cfg.threshold_mode != "global":
        return None
    return night_day_threshold(series, cfg.night_day)


def cluster(cfg: RunConfig, series: HarvestSeries,
            threshold_a: Optional[float] = None) -> tuple[list[StateVisit], Optional[float]]:
    """Visits under the configured scheme and the night-day threshold used."""
    if cfg.scheme == SLOT:
        return slot_cluster(series, cfg.slots), None
    th = night_day_threshold(series, cfg.night_day) if threshold_a is None else float(threshold_a)
    return night_day_cluster(series, cfg.night_day, threshold_a=th), th


def fit_month(cfg: RunConfig, month_ds: Dataset, month: int,
              threshold_a: Optional[float] = None) -> tuple[SemiMarkovModel, list[StateVisit]]:
    series = harvest(cfg, month_ds)
    visits, th = cluster(cfg, series, threshold_a)
    prov = cfg.provenance(month_ds.source_label)
    prov["month"] = int(month)
    prov["n_records"] = len(month_ds)
    if th is not None:
        prov["clustering"]["threshold_a"] = th
    n_slots = cfg.slots.n_slots if cfg.scheme == SLOT else None
    return build_model(visits, cfg.scheme, month, n_slots=n_slots, provenance=prov), visits


def synthetic_acf(model: SemiMarkovModel, length: int, max_lag: int, replicates: int,
                  seed_seq: np.random.SeedSequence, label: str = "") -> AcfCurve:
    """Mean ACF of ``replicates`` traces as long as the empirical series.

    Averaging equal-length replicates keeps the finite-sample bias of the
    estimator the same on both sides of the comparison.
    """
    traces = []
    for child in seed_seq.spawn(replicates):
        trace = generate_trace(model, float(length), rng=np.random.default_rng(child))
        if np.ptp(trace.values) > 0:
            traces.append(trace.values)
    if not traces:
        raise ValueError(f"model {label or model.scheme} only generates constant traces")
    return mean_acf(traces, max_lag, label=label)


@dataclass(frozen=True)
class KsRow:
    state: int
    month: int
    quantity: str
    n: int
    statistic: float
    critical: float
    outcome: str
    variant: str


@dataclass
class ValidationReport:
    month: int
    scheme: str
    n_states: int
    alpha: float
    ks_rows: list[KsRow]
    empirical_acf: AcfCurve
    synthetic_acf: dict[str, AcfCurve]
    deviation_lag_h: float
    deviations: dict[str, float]
    empirical_summary: dict[int, SummaryStats]
    synthetic_summary: dict[int, SummaryStats]
    threshold_a: Optional[float] = None
    notes: list[str] = field(default_factory=list)

    @property
    def ks_passed(self) -> bool:
        return all(r.outcome != "fail" for r in self.ks_rows)


def _ks_rows(model: SemiMarkovModel, visits: Sequence[StateVisit], alpha: float) -> list[KsRow]:
    rows = []
    for sm in model.states:
        vs = [v for v in visits if v.state == sm.state_id]
        cur = np.concatenate([np.asarray(v.samples, dtype=float) for v in vs]) if vs else np.empty(0)
        checks = [("current", cur, sm.current, None)]
        if model.scheme == NIGHT_DAY:
            dur = np.array([v.duration_h for v in vs if not v.truncated], dtype=float)
            step = 1.0 if len(dur) and is_lattice(dur, 1.0) else None
            checks.append(("duration", dur, sm.duration, step))
        for quantity, data, dist, step in checks:
            if len(data) < KS_MIN_N:
                rows.append(KsRow(sm.state_id, model.month, quantity, len(data), math.nan,
                                  math.nan, "skipped", f"needs n >= {KS_MIN_N}"))
                continue
            res = ks_test(data, dist.cdf, alpha, model_cdf_left=dist.cdf_left, lattice_step=step)
            rows.append(KsRow(sm.state_id, model.month, quantity, res.n, res.statistic, res.critical,
                              "pass" if res.passed else "fail", res.variant))
    return rows


def validate_month(model: SemiMarkovModel, cfg: RunConfig, month_ds: Dataset, seed: int,
                   acf_slots: Sequence[int] = DEFAULT_ACF_SLOTS, replicates: int = DEFAULT_REPLICATES,
                   max_lag_h: int = 72, deviation_lag_h: float = DEFAULT_DEVIATION_LAG_H,
                   alpha: float = 0.01) -> ValidationReport:
    """KS, ACF and summary checks of ``model`` against one month of data.

    ``cfg`` carries the harvesting settings (normally rebuilt from the model
    provenance). The night-day threshold recorded at fit time is reused so
    the data are clustered exactly as when the model was built.
    """
    series = harvest(cfg, month_ds)
    threshold = model.provenance.get("clustering", {}).get("threshold_a")
    if model.scheme == SLOT:
        cfg = cfg.replace(scheme=SLOT, slots=SlotConfig(model.n_states))
    else:
        cfg = cfg.replace(scheme=NIGHT_DAY)
    visits, th = cluster(cfg, series, threshold)
    ks_rows = _ks_rows(model, visits, alpha)

    root = np.random.SeedSequence(seed)
    acf_seed, summary_seed = root.spawn(2)
    n = len(series)
    emp = acf(series.current_a, max_lag_h, label="empirical")
    configs: list[tuple[str, SemiMarkovModel]] = [("model", model)]
    for ns in acf_slots:
        slot_model, _ = fit_month(cfg.replace(scheme=SLOT, slots=SlotConfig(ns)), month_ds, model.month)
        configs.append((f"slots_{ns}", slot_model))
    synth = {}
    deviations = {}
    for (label, m), child in zip(configs, acf_seed.spawn(len(configs))):
        curve = synthetic_acf(m, n, max_lag_h, replicates, child, label)
        synth[label] = curve
        deviations[label] = compare_acf(emp, curve, deviation_lag_h).max_abs_deviation

    trace = generate_trace(model, float(n), rng=np.random.default_rng(summary_seed))
    return ValidationReport(
        month=model.month,
        scheme=model.scheme,
        n_states=model.n_states,
        alpha=alpha,
        ks_rows=ks_rows,
        empirical_acf=emp,
        synthetic_acf=synth,
        deviation_lag_h=deviation_lag_h,
        deviations=deviations,
        empirical_summary=summary_stats(visits, model.month),
        synthetic_summary=summary_stats(trace_visits(trace), model.month),
        threshold_a=th,
    )


def ks_method_note(alpha: float) -> str:
    return (f"one-sample Kolmogorov-Smirnov test of the observations against the fitted cdf, "
            f"alpha = {alpha:g}, critical value c(alpha)/sqrt(n) with asymptotic "
            f"c(alpha) = {KS_CRITICAL[alpha]} (Kolmogorov distribution quantile); "
            f"whole-hour sojourns use the grouped variant comparing against the model cdf "
            f"at the half-hour bin edges")


@dataclass(frozen=True)
class SweepRow:
    site: str
    n_p: int
    n_s: int
    month: int
    stats: SummaryStats


def sweep_site(cfg: RunConfig, ds: Dataset, sizes: Sequence[tuple[int, int]],
               months: Sequence[int], site_name: str = "") -> list[SweepRow]:
    """Day-state statistics for every (module size, month), night-day clustering."""
    groups = group_by_month(ds)
    nd = cfg.replace(scheme=NIGHT_DAY)
    rows = []
    for n_p, n_s in sizes:
        module = ModuleConfig(n_p, n_s)
        threshold = None
        if cfg.threshold_mode == "global":
            threshold = night_day_threshold(harvest(nd, ds, module), NightDayConfig(
                cfg.night_day.threshold_fraction))
        for month in months:
            series = harvest(nd, groups[month], module)
            visits, _ = cluster(nd, series, threshold)
            stats = summary_stats(visits, month)
            if DAY_STATE in stats:
                rows.append(SweepRow(site_name or ds.site.name, n_p, n_s, month, stats[DAY_STATE]))
    return rows
