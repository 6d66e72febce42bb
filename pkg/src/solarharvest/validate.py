"""Goodness of fit for fitted source models.

* one-sample Kolmogorov-Smirnov test of observations against a model cdf,
  with the asymptotic critical value ``c(alpha) / sqrt(n)``;
* biased, single-mean autocorrelation of hourly series and curve comparison;
* per-state summary statistics (mean/max current, mean/min/max sojourn).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .clustering import StateVisit

# asymptotic Kolmogorov quantiles: P(sqrt(n) D > c) = alpha
KS_CRITICAL = {0.01: 1.628, 0.05: 1.358}
KS_MIN_N = 8
DEFAULT_MAX_LAG_H = 72


@dataclass(frozen=True)
class KsResult:
    statistic: float
    n: int
    alpha: float
    critical: float
    passed: bool
    variant: str = "one-sample"


def ks_test(data, model_cdf: Callable, alpha: float = 0.01,
            model_cdf_left: Optional[Callable] = None,
            lattice_step: Optional[float] = None) -> KsResult:
    """Compare observations against a model cdf.

    The statistic is ``sup |F_emp - F_model|`` evaluated on both sides of
    every jump of the empirical cdf. ``model_cdf_left`` gives left limits for
    models with atoms (defaults to ``model_cdf``, i.e. a continuous model).

    With ``lattice_step`` the data are treated as values rounded to a grid of
    that spacing (e.g. sojourns counted in whole hours): the empirical cdf at
    a grid value ``k`` is compared with the model cdf at the bin edges
    ``k +/- step / 2``.
    """
    if alpha not in KS_CRITICAL:
        raise ValueError(f"alpha must be one of {sorted(KS_CRITICAL)}, got {alpha}")
    x = np.sort(np.asarray(data, dtype=float))
    n = len(x)
    if n < KS_MIN_N:
        raise ValueError(f"KS test needs at least {KS_MIN_N} observations, got {n}")
    u, counts = np.unique(x, return_counts=True)
    after = np.cumsum(counts) / n
    before = after - counts / n
    if lattice_step is None:
        f_at = np.asarray(model_cdf(u), dtype=float)
        f_left = f_at if model_cdf_left is None else np.asarray(model_cdf_left(u), dtype=float)
        variant = "one-sample"
    else:
        half = 0.5 * float(lattice_step)
        f_at = np.asarray(model_cdf(u + half), dtype=float)
        f_left = np.asarray(model_cdf(u - half), dtype=float)
        variant = f"one-sample grouped (step {lattice_step:g})"
    d = float(max(np.max(np.abs(after - f_at)), np.max(np.abs(before - f_left))))
    crit = KS_CRITICAL[alpha] / math.sqrt(n)
    return KsResult(d, n, alpha, crit, d < crit, variant)


def is_lattice(data, step: float, tol: float = 1e-9) -> bool:
    x = np.asarray(data, dtype=float) / step
    return bool(np.all(np.abs(x - np.round(x)) < tol))


@dataclass(frozen=True, eq=False)
class AcfCurve:
    lags_h: np.ndarray
    values: np.ndarray
    series_label: str = ""


def acf(series, max_lag: int = DEFAULT_MAX_LAG_H, label: str = "", step_h: float = 1.0) -> AcfCurve:
    """``r(l) = sum_t (x_t - m)(x_{t+l} - m) / sum_t (x_t - m)^2`` for l = 0..max_lag."""
    x = np.asarray(series, dtype=float)
    n = len(x)
    if max_lag < 0 or n <= max_lag + 1:
        raise ValueError(f"series of length {n} too short for max lag {max_lag}")
    x = x - x.mean()
    denom = float(np.dot(x, x))
    if denom <= 0.0 or not np.isfinite(denom):
        raise ValueError("ACF undefined for a constant series")
    nfft = 1 << int(math.ceil(math.log2(2 * n)))
    f = np.fft.rfft(x, nfft)
    r = np.fft.irfft(f * np.conj(f), nfft)[: max_lag + 1] / denom
    r[0] = 1.0
    r = np.clip(r, -1.0, 1.0)
    return AcfCurve(np.arange(max_lag + 1) * step_h, r, label)


def mean_acf(series_list: Iterable, max_lag: int = DEFAULT_MAX_LAG_H, label: str = "",
             step_h: float = 1.0) -> AcfCurve:
    """Average of the ACF curves of several replicate series."""
    curves = [acf(s, max_lag, step_h=step_h).values for s in series_list]
    if not curves:
        raise ValueError("no series given")
    return AcfCurve(np.arange(max_lag + 1) * step_h, np.mean(curves, axis=0), label)


@dataclass(frozen=True, eq=False)
class AcfComparison:
    lags_h: np.ndarray
    difference: np.ndarray
    max_abs_deviation: float


def compare_acf(empirical: AcfCurve, synthetic: AcfCurve, max_lag_h: Optional[float] = None) -> AcfComparison:
    """Per-lag difference ``empirical - synthetic`` and its maximum magnitude."""
    if empirical.lags_h.shape != synthetic.lags_h.shape or not np.allclose(empirical.lags_h, synthetic.lags_h):
        raise ValueError("ACF curves are on different lag grids")
    keep = np.ones(len(empirical.lags_h), dtype=bool)
    if max_lag_h is not None:
        keep = empirical.lags_h <= max_lag_h + 1e-9
    diff = empirical.values[keep] - synthetic.values[keep]
    return AcfComparison(empirical.lags_h[keep], diff, float(np.max(np.abs(diff))))


@dataclass(frozen=True)
class SummaryStats:
    state: int
    month: Optional[int]
    n_samples: int
    n_visits: int
    n_complete: int
    mean_current_a: float
    max_current_a: float
    mean_duration_h: float
    min_duration_h: float
    max_duration_h: float


def summary_stats(visits: Sequence[StateVisit], month: Optional[int] = None) -> dict[int, SummaryStats]:
    """Per-state statistics; durations use only non-truncated visits (NaN if none)."""
    if not visits:
        raise ValueError("no visits")
    out = {}
    for state in sorted({v.state for v in visits}):
        vs = [v for v in visits if v.state == state]
        cur = np.concatenate([np.asarray(v.samples, dtype=float) for v in vs])
        dur = np.array([v.duration_h for v in vs if not v.truncated], dtype=float)
        has_dur = len(dur) > 0
        out[state] = SummaryStats(
            state=state,
            month=month,
            n_samples=int(len(cur)),
            n_visits=len(vs),
            n_complete=int(len(dur)),
            mean_current_a=float(cur.mean()) if len(cur) else math.nan,
            max_current_a=float(cur.max()) if len(cur) else math.nan,
            mean_duration_h=float(dur.mean()) if has_dur else math.nan,
            min_duration_h=float(dur.min()) if has_dur else math.nan,
            max_duration_h=float(dur.max()) if has_dur else math.nan,
        )
    return out


SUMMARY_COLUMNS = ("mean_current_a", "max_current_a", "mean_duration_h", "min_duration_h", "max_duration_h")


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "pass" if x else "fail"
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()
