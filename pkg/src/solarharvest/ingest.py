"""Hourly irradiance CSV parsing, site metadata and per-month grouping.

The accepted file layout is::

    date,hour,ghi_wm2,temp_c
    1999-07-01,12,950.0,25.0

``hour`` is the start of the hour in local standard time (0-23) and the
irradiance is taken as constant over that hour. ``temp_c`` may be empty.
"""

from __future__ import annotations

import csv
import datetime as dt
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import ConfigError, DataError

CSV_HEADER = ("date", "hour", "ghi_wm2", "temp_c")


@dataclass(frozen=True)
class SiteConfig:
    """Installation site.

    ``dst_adjusted`` states whether input timestamps already include the
    daylight-saving adjustment. When it is false, ``dst_shift_h`` is added to
    the local time of every record whose calendar month lies in
    ``[dst_start_month, dst_end_month]``.
    """

    latitude_deg: float
    longitude_deg: float
    utc_offset_h: float
    dst_adjusted: bool = True
    dst_start_month: int = 4
    dst_end_month: int = 10
    dst_shift_h: float = 1.0
    name: str = ""

    def __post_init__(self):
        if not -90.0 <= self.latitude_deg <= 90.0:
            raise ConfigError(f"latitude must be in [-90, 90], got {self.latitude_deg}")
        if not -180.0 <= self.longitude_deg <= 180.0:
            raise ConfigError(f"longitude must be in [-180, 180], got {self.longitude_deg}")
        if not -12.0 <= self.utc_offset_h <= 14.0:
            raise ConfigError(f"utc_offset_h must be in [-12, 14], got {self.utc_offset_h}")
        for m in (self.dst_start_month, self.dst_end_month):
            if not 1 <= m <= 12:
                raise ConfigError(f"DST months must be in 1..12, got {m}")


@dataclass(frozen=True)
class RadianceRecord:
    local_time_h: float
    day_of_year: int
    year: int
    irradiance_wm2: float
    ambient_temp_c: Optional[float] = None

    def __post_init__(self):
        if not self.irradiance_wm2 >= 0.0:
            raise DataError(f"irradiance must be >= 0, got {self.irradiance_wm2}")
        if not 0.0 <= self.local_time_h < 24.0:
            raise DataError(f"local time must be in [0, 24), got {self.local_time_h}")
        if not 1 <= self.day_of_year <= days_in_year(self.year):
            raise DataError(f"day {self.day_of_year} is not valid for year {self.year}")

    @property
    def date(self) -> dt.date:
        return dt.date(self.year, 1, 1) + dt.timedelta(days=self.day_of_year - 1)

    @property
    def month(self) -> int:
        return self.date.month

    @property
    def key(self) -> tuple:
        return (self.year, self.day_of_year, self.local_time_h)


def days_in_year(year: int) -> int:
    return 366 if (year % 4 == 0 and year % 100 != 0) or year % 400 == 0 else 365


@dataclass(frozen=True)
class Dataset:
    """Time-ordered, site-tagged collection of hourly records.

    Column views (``columns``) are computed lazily for the vectorized
    pipeline stages; the dataclass equality only looks at the fields.
    """

    site: SiteConfig
    records: tuple[RadianceRecord, ...]
    source_label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        keys = [r.key for r in self.records]
        for i in range(1, len(keys)):
            if not keys[i - 1] < keys[i]:
                raise DataError(
                    f"records must be strictly increasing in time; "
                    f"{_fmt_key(keys[i - 1])} is followed by {_fmt_key(keys[i])}"
                )

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[RadianceRecord]:
        return iter(self.records)

    @cached_property
    def columns(self) -> dict[str, np.ndarray]:
        """Numpy arrays ``year``, ``doy``, ``hour``, ``ghi``, ``temp`` (NaN if missing)."""
        n = len(self.records)
        cols = {
            "year": np.fromiter((r.year for r in self.records), dtype=np.int64, count=n),
            "doy": np.fromiter((r.day_of_year for r in self.records), dtype=np.int64, count=n),
            "hour": np.fromiter((r.local_time_h for r in self.records), dtype=float, count=n),
            "ghi": np.fromiter((r.irradiance_wm2 for r in self.records), dtype=float, count=n),
            "temp": np.fromiter(
                (np.nan if r.ambient_temp_c is None else r.ambient_temp_c for r in self.records),
                dtype=float,
                count=n,
            ),
        }
        for arr in cols.values():
            arr.flags.writeable = False
        return cols

    def months(self) -> np.ndarray:
        c = self.columns
        return month_of(c["year"], c["doy"])


def _fmt_key(key) -> str:
    year, doy, hour = key
    d = dt.date(year, 1, 1) + dt.timedelta(days=doy - 1)
    return f"{d.isoformat()} {hour:g}h"


def month_of(year, doy) -> np.ndarray:
    """Calendar month (1..12) for arrays of year and day-of-year."""
    year = np.asarray(year, dtype=np.int64)
    doy = np.asarray(doy, dtype=np.int64)
    days = (year - 1970).astype("datetime64[Y]").astype("datetime64[D]") + (doy - 1)
    return days.astype("datetime64[M]").astype(np.int64) % 12 + 1


def absolute_hours(year, doy, hour) -> np.ndarray:
    """Hours elapsed since 1970-01-01 00:00 local standard time."""
    year = np.asarray(year, dtype=np.int64)
    doy = np.asarray(doy, dtype=np.int64)
    days = (year - 1970).astype("datetime64[Y]").astype("datetime64[D]").astype(np.int64) + doy - 1
    return days * 24.0 + np.asarray(hour, dtype=float)


def parse_csv(path, site: SiteConfig, source_label: Optional[str] = None) -> Dataset:
    """Read an hourly irradiance file into a :class:`Dataset`.

    Raises :class:`DataError` naming the line for malformed rows, negative
    irradiance and non-increasing timestamps, and for files without rows.
    """
    path = os.fspath(path)
    if source_label is None:
        source_label = os.path.splitext(os.path.basename(path))[0]
    records = []
    prev_key = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        header = [h.strip().lower() for h in header]
        if header[:3] != list(CSV_HEADER[:3]) or (len(header) > 3 and header[3] != "temp_c"):
            raise DataError(f"expected header {','.join(CSV_HEADER)}, got {','.join(header)}", line=1)
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            rec = _parse_row(row, line)
            if prev_key is not None and not prev_key < rec.key:
                raise DataError(
                    f"timestamp {_fmt_key(rec.key)} does not follow {_fmt_key(prev_key)}", line=line
                )
            prev_key = rec.key
            records.append(rec)
    if not records:
        raise DataError(f"{path}: no data rows")
    return Dataset(site=site, records=tuple(records), source_label=source_label)


def _parse_row(row: Sequence[str], line: int) -> RadianceRecord:
    if len(row) not in (3, 4):
        raise DataError(f"expected 3 or 4 fields, got {len(row)}", line=line)
    try:
        date = dt.date.fromisoformat(row[0].strip())
    except ValueError:
        raise DataError(f"bad date {row[0]!r}", line=line) from None
    try:
        hour = int(row[1].strip())
    except ValueError:
        raise DataError(f"bad hour {row[1]!r}", line=line) from None
    if not 0 <= hour <= 23:
        raise DataError(f"hour must be in 0..23, got {hour}", line=line)
    try:
        ghi = float(row[2])
    except ValueError:
        raise DataError(f"bad irradiance {row[2]!r}", line=line) from None
    if not np.isfinite(ghi) or ghi < 0:
        raise DataError(f"irradiance must be a finite value >= 0, got {row[2].strip()}", line=line)
    temp = None
    if len(row) == 4 and row[3].strip():
        try:
            temp = float(row[3])
        except ValueError:
            raise DataError(f"bad temperature {row[3]!r}", line=line) from None
    return RadianceRecord(
        local_time_h=float(hour),
        day_of_year=date.timetuple().tm_yday,
        year=date.year,
        irradiance_wm2=ghi,
        ambient_temp_c=temp,
    )


def write_csv(ds: Dataset, path) -> None:
    """Serialize ``ds`` in the input layout; ``parse_csv`` reads it back unchanged."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in ds.records:
            if r.local_time_h != int(r.local_time_h):
                raise DataError(f"cannot write fractional hour {r.local_time_h} in hourly layout")
            writer.writerow(
                [
                    r.date.isoformat(),
                    int(r.local_time_h),
                    repr(r.irradiance_wm2),
                    "" if r.ambient_temp_c is None else repr(r.ambient_temp_c),
                ]
            )


def group_by_month(ds: Dataset) -> dict[int, Dataset]:
    """Split ``ds`` by calendar month, pooling all years; every month 1..12 is present."""
    months = ds.months() if len(ds) else np.empty(0, dtype=np.int64)
    buckets: dict[int, list] = {m: [] for m in range(1, 13)}
    for rec, m in zip(ds.records, months):
        buckets[int(m)].append(rec)
    return {
        m: Dataset(site=ds.site, records=tuple(recs), source_label=f"{ds.source_label}:month{m:02d}")
        for m, recs in buckets.items()
    }


def filter_months(ds: Dataset, months) -> Dataset:
    keep = set(int(m) for m in months)
    mask = [int(m) in keep for m in ds.months()]
    recs = tuple(r for r, k in zip(ds.records, mask) if k)
    return Dataset(site=ds.site, records=recs, source_label=ds.source_label)
