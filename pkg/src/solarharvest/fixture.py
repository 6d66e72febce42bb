"""Deterministic clear-sky irradiance with seeded day-to-day variability.

Each day is a half-sine bell of height ``peak(N) * m_d`` between sunrise and
sunset, centred on local solar noon. ``peak`` follows a yearly sinusoid with
its maximum at the June solstice, sunrise/sunset come from the sunset hour
angle ``cos(w_s) = -tan(lat) tan(decl)`` and ``m_d`` is a per-day
multiplicative factor ``clip(1 + noise * z, 0.1, 1.2)`` with ``z`` standard
normal. Irradiance is evaluated at the middle of each hour.
"""

from __future__ import annotations

import datetime as dt

import numpy as np

from .astro import declination, equation_of_time
from .ingest import Dataset, RadianceRecord, SiteConfig

LOS_ANGELES = SiteConfig(latitude_deg=34.05, longitude_deg=-118.24, utc_offset_h=-8.0,
                         name="Los Angeles, CA")
DEFAULT_START = dt.date(1999, 1, 1)
DEFAULT_DAYS = 30
DEFAULT_SEED = 7
DEFAULT_NOISE = 0.2


def clear_sky_dataset(site: SiteConfig = LOS_ANGELES, start: dt.date = DEFAULT_START,
                      days: int = DEFAULT_DAYS, seed: int = DEFAULT_SEED,
                      noise: float = DEFAULT_NOISE, peak_wm2: float = 1000.0,
                      seasonal_amplitude: float = 0.25, label: str = "clear-sky-fixture") -> Dataset:
    if days < 1:
        raise ValueError("days must be >= 1")
    rng = np.random.default_rng(seed)
    factors = np.clip(1.0 + noise * rng.standard_normal(days), 0.1, 1.2)
    records = []
    for k in range(days):
        date = start + dt.timedelta(days=k)
        N = date.timetuple().tm_yday
        decl = np.radians(declination(N))
        lat = np.radians(site.latitude_deg)
        cos_ws = np.clip(-np.tan(lat) * np.tan(decl), -1.0, 1.0)
        day_len = 2.0 * np.degrees(np.arccos(cos_ws)) / 15.0
        noon = 12.0 - (site.longitude_deg - 15.0 * site.utc_offset_h) / 15.0 - float(equation_of_time(N))
        peak = peak_wm2 * (1.0 - seasonal_amplitude + seasonal_amplitude
                           * np.cos(2.0 * np.pi * (N - 172) / 365.0))
        temp_base = 17.0 + 6.0 * np.sin(2.0 * np.pi * (N - 110) / 365.0)
        for hour in range(24):
            t = hour + 0.5
            phase = (t - (noon - day_len / 2.0)) / day_len
            bell = np.sin(np.pi * phase) if 0.0 < phase < 1.0 else 0.0
            ghi = round(float(peak * factors[k] * bell), 3)
            temp = round(float(temp_base + 5.0 * np.sin(2.0 * np.pi * (t - 9.0) / 24.0)), 2)
            records.append(RadianceRecord(float(hour), N, date.year, max(ghi, 0.0), temp))
    return Dataset(site=site, records=tuple(records), source_label=label)
