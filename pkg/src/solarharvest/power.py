"""Maximum power point of the module and the DC/DC conversion stage.

The power curve ``v * i(v)`` of the single-diode cell is strictly concave on
``[0, v_oc(F)]`` so a golden-section search brackets its unique maximum.
The search runs elementwise over numpy arrays with a shared iteration count,
which keeps whole-dataset harvesting vectorized and order independent.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from . import astro, pv
from .astro import PanelOrientation
from .errors import ConfigError
from .ingest import Dataset, RadianceRecord, SiteConfig, absolute_hours
from .pv import CellParams, ModuleConfig, ThermalModel

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
MPP_TOL_V = 1e-12


@dataclass(frozen=True)
class PowerProcessor:
    efficiency: float = 0.5
    battery_voltage_v: float = 3.0

    def __post_init__(self):
        if not 0.0 < self.efficiency < 1.0:
            raise ConfigError(f"efficiency must be in (0, 1), got {self.efficiency}")
        if not self.battery_voltage_v > 0:
            raise ConfigError(f"battery voltage must be > 0, got {self.battery_voltage_v}")


@dataclass(frozen=True)
class HarvestSample:
    year: int
    day_of_year: int
    local_time_h: float
    power_w: float
    current_a: float


def golden_section_max(func: Callable, lo, hi, tol: float = MPP_TOL_V):
    """Maximize a unimodal ``func`` on ``[lo, hi]`` elementwise.

    Returns ``(x_best, f_best)``. ``lo``/``hi`` broadcast against each other;
    the loop stops once every bracket is narrower than ``tol``.
    """
    a, b = np.broadcast_arrays(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
    a = a.copy()
    b = b.copy()
    width = float(np.max(b - a, initial=0.0))
    n_iter = 0 if width <= tol else int(math.ceil(math.log(tol / width) / math.log(INV_PHI)))
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc = func(c)
    fd = func(d)
    for _ in range(n_iter):
        left = fc > fd  # maximum lies in [a, d]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_x = np.where(left, b - INV_PHI * (b - a), a + INV_PHI * (b - a))
        f_new = func(new_x)
        d_next = np.where(left, c, new_x)
        fd_next = np.where(left, fc, f_new)
        c = np.where(left, new_x, d)
        fc = np.where(left, f_new, fd)
        d, fd = d_next, fd_next
    x = 0.5 * (a + b)
    fx = func(x)
    # keep the best point actually evaluated
    best_x = np.where(fc > fx, c, x)
    best_f = np.maximum(fc, fx)
    best_x = np.where(fd > best_f, d, best_x)
    best_f = np.maximum(fd, best_f)
    return best_x[()], best_f[()]


def cell_mpp(F, cell: CellParams, T):
    """Maximum of ``v * i(v)`` for one cell: ``(power_w, v_mpp)``, clamped at zero."""
    F = np.asarray(F, dtype=float)
    T = np.broadcast_to(np.asarray(T, dtype=float), np.broadcast_shapes(F.shape, np.shape(T)))
    F = np.broadcast_to(F, T.shape)
    hi = pv.open_circuit_voltage(F, cell, T)

    def power(v):
        return v * pv.cell_current(v, F, cell, T)

    v, p = golden_section_max(power, np.zeros_like(hi), hi)
    positive = p > 0
    return np.where(positive, p, 0.0)[()], np.where(positive, v, 0.0)[()]


def mpp_power(F, cell: CellParams, module: ModuleConfig, T):
    """Ideal module power at the maximum power point: ``(P_MPP, v_mpp_cell)``.

    The module maximum is ``n_p * n_s`` times the single-cell maximum, reached
    at the same cell voltage.
    """
    p, v = cell_mpp(F, cell, T)
    return (module.n_p * module.n_s * p)[()], v


def harvested_sample(
    rec: RadianceRecord,
    site: SiteConfig,
    panel: PanelOrientation,
    cell: CellParams,
    module: ModuleConfig,
    tm: ThermalModel,
    proc: PowerProcessor,
) -> HarvestSample:
    i_eff = astro.effective_irradiance(rec, site, panel)
    T = pv.cell_temperature(rec, i_eff, tm)
    p_mpp, _ = mpp_power(pv.radiation_rate(i_eff), cell, module, T)
    power = proc.efficiency * float(p_mpp)
    return HarvestSample(
        year=rec.year,
        day_of_year=rec.day_of_year,
        local_time_h=rec.local_time_h,
        power_w=power,
        current_a=power / proc.battery_voltage_v,
    )


@dataclass(frozen=True, eq=False)
class HarvestSeries:
    """Columnar sequence of :class:`HarvestSample` (hourly, time ordered)."""

    year: np.ndarray
    doy: np.ndarray
    hour: np.ndarray
    power_w: np.ndarray
    current_a: np.ndarray
    step_h: float = 1.0

    def __post_init__(self):
        n = len(self.year)
        for name in ("doy", "hour", "power_w", "current_a"):
            if len(getattr(self, name)) != n:
                raise ValueError("all columns must have the same length")

    def __len__(self) -> int:
        return len(self.year)

    def __getitem__(self, i) -> HarvestSample:
        return HarvestSample(
            int(self.year[i]), int(self.doy[i]), float(self.hour[i]),
            float(self.power_w[i]), float(self.current_a[i]),
        )

    def __iter__(self) -> Iterator[HarvestSample]:
        return (self[i] for i in range(len(self)))

    def absolute_hours(self) -> np.ndarray:
        return absolute_hours(self.year, self.doy, self.hour)

    def subset(self, mask) -> "HarvestSeries":
        return HarvestSeries(
            self.year[mask], self.doy[mask], self.hour[mask],
            self.power_w[mask], self.current_a[mask], self.step_h,
        )

    @classmethod
    def from_samples(cls, samples: Sequence[HarvestSample]) -> "HarvestSeries":
        return cls(
            year=np.array([s.year for s in samples], dtype=np.int64),
            doy=np.array([s.day_of_year for s in samples], dtype=np.int64),
            hour=np.array([s.local_time_h for s in samples], dtype=float),
            power_w=np.array([s.power_w for s in samples], dtype=float),
            current_a=np.array([s.current_a for s in samples], dtype=float),
        )

    @classmethod
    def from_currents(cls, currents, year: int = 1999, day_of_year: int = 1,
                      start_hour: int = 0, battery_voltage_v: float = 3.0) -> "HarvestSeries":
        """Contiguous hourly series starting at the given local time."""
        currents = np.asarray(currents, dtype=float)
        k = np.arange(len(currents)) + start_hour
        base = np.datetime64(f"{year:04d}-01-01") + (day_of_year - 1)
        days = base + (k // 24)
        years = days.astype("datetime64[Y]").astype(np.int64) + 1970
        doy = (days - days.astype("datetime64[Y]").astype("datetime64[D]")).astype(np.int64) + 1
        return cls(years, doy, (k % 24).astype(float), currents * battery_voltage_v, currents)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["year", "doy", "hour", "power_w", "current_a"])
            for i in range(len(self)):
                w.writerow([int(self.year[i]), int(self.doy[i]), _fmt_hour(self.hour[i]),
                            repr(float(self.power_w[i])), repr(float(self.current_a[i]))])


def _fmt_hour(h: float):
    return int(h) if float(h).is_integer() else repr(float(h))


def read_harvest_csv(path) -> HarvestSeries:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return HarvestSeries(
        year=np.array([int(r["year"]) for r in rows], dtype=np.int64),
        doy=np.array([int(r["doy"]) for r in rows], dtype=np.int64),
        hour=np.array([float(r["hour"]) for r in rows], dtype=float),
        power_w=np.array([float(r["power_w"]) for r in rows], dtype=float),
        current_a=np.array([float(r["current_a"]) for r in rows], dtype=float),
    )


def harvest_series(
    ds: Dataset,
    panel: PanelOrientation,
    cell: CellParams,
    module: ModuleConfig,
    tm: ThermalModel,
    proc: PowerProcessor,
) -> HarvestSeries:
    """Harvested power and current for every record of ``ds``, in order."""
    if len(ds) == 0:
        empty_i = np.empty(0, dtype=np.int64)
        empty_f = np.empty(0, dtype=float)
        return HarvestSeries(empty_i, empty_i, empty_f, empty_f, empty_f)
    c = ds.columns
    i_eff = astro.effective_irradiance_array(c["hour"], c["doy"], c["ghi"], ds.site, panel, c["year"])
    T = pv.cell_temperature_array(c["temp"], i_eff, tm)
    p_mpp, _ = mpp_power(pv.radiation_rate(i_eff), cell, module, T)
    power = proc.efficiency * np.atleast_1d(p_mpp)
    return HarvestSeries(
        year=np.array(c["year"]),
        doy=np.array(c["doy"]),
        hour=np.array(c["hour"]),
        power_w=power,
        current_a=power / proc.battery_voltage_v,
    )
