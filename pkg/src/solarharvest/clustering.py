"""Partition harvested-current series into Markov-state visits.

Two schemes are provided:

* night-day: a current threshold splits the series into alternating
  high-energy (``DAY_STATE = 0``) and low-energy (``NIGHT_STATE = 1``) runs;
* slot: the 24 h day is cut into ``n_slots`` equal slots, each one a state.

Sample gaps (missing hours, the jump between years of a month) break
night-day runs. Runs touching a gap or a data edge are flagged ``truncated``
since their true length is unknown; two same-state runs meeting across a
gap are merged, which keeps visits strictly alternating.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, DegenerateMonthError
from .power import HarvestSeries

DAY_STATE = 0
NIGHT_STATE = 1
STATE_LABELS = {DAY_STATE: "day", NIGHT_STATE: "night"}

NIGHT_DAY = "night-day"
SLOT = "slot"
SCHEMES = (NIGHT_DAY, SLOT)


@dataclass(frozen=True)
class NightDayConfig:
    """Threshold is ``threshold_fraction`` times a reference maximum current.

    With ``reference_max_a`` unset the maximum of the clustered series is used
    (per-month scoping when the series is one month); set it to a dataset-wide
    maximum for global thresholds.
    """

    threshold_fraction: float = 1.0 / 50.0
    reference_max_a: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.threshold_fraction < 1.0:
            raise ConfigError(f"threshold fraction must be in (0, 1), got {self.threshold_fraction}")
        if self.reference_max_a is not None and not self.reference_max_a >= 0:
            raise ConfigError("reference maximum current must be >= 0")


@dataclass(frozen=True)
class SlotConfig:
    n_slots: int = 12

    def __post_init__(self):
        if int(self.n_slots) != self.n_slots or self.n_slots < 2:
            raise ConfigError(f"n_slots must be an integer >= 2, got {self.n_slots}")
        if 24 % self.n_slots:
            raise ConfigError(f"n_slots must divide 24 for hourly data, got {self.n_slots}")

    @property
    def slot_length_h(self) -> float:
        return 24.0 / self.n_slots


@dataclass(frozen=True)
class StateVisit:
    state: int
    duration_h: float
    samples: tuple[float, ...]
    year: int
    day_of_year: int
    start_h: float
    truncated: bool = False

    def __post_init__(self):
        if not self.duration_h > 0:
            raise ValueError(f"visit duration must be > 0, got {self.duration_h}")

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    @property
    def start(self) -> str:
        d = dt.date(self.year, 1, 1) + dt.timedelta(days=self.day_of_year - 1)
        h = int(self.start_h)
        m = int(round((self.start_h - h) * 60))
        return f"{d.isoformat()}T{h:02d}:{m:02d}"


def night_day_threshold(series: HarvestSeries, cfg: NightDayConfig) -> float:
    ref = cfg.reference_max_a
    if ref is None:
        ref = float(np.max(series.current_a)) if len(series) else 0.0
    return cfg.threshold_fraction * ref


def _segment_bounds(series: HarvestSeries) -> np.ndarray:
    """Boolean array: True where sample i does not directly follow sample i - 1."""
    t = series.absolute_hours()
    brk = np.ones(len(t), dtype=bool)
    brk[1:] = ~np.isclose(np.diff(t), series.step_h)
    return brk


def night_day_cluster(series: HarvestSeries, cfg: NightDayConfig = NightDayConfig(),
                      threshold_a: Optional[float] = None) -> list[StateVisit]:
    """Run-length segmentation into alternating day (>= threshold) and night visits.

    ``threshold_a`` overrides the threshold derived from ``cfg``.
    """
    if len(series) == 0:
        raise DegenerateMonthError("empty series")
    i_th = night_day_threshold(series, cfg) if threshold_a is None else float(threshold_a)
    cur = np.asarray(series.current_a, dtype=float)
    if not np.any(cur >= i_th) or np.max(cur) <= 0.0:
        raise DegenerateMonthError("no harvested current above the threshold: cannot form a day state")
    states = np.where(cur >= i_th, DAY_STATE, NIGHT_STATE)
    seg_start = _segment_bounds(series)
    run_start = seg_start.copy()
    run_start[1:] |= states[1:] != states[:-1]
    starts = np.flatnonzero(run_start)
    ends = np.append(starts[1:], len(cur))
    seg_end = np.append(seg_start[1:], True)  # sample i is the last of its segment

    visits: list[StateVisit] = []
    for s, e in zip(starts, ends):
        state = int(states[s])
        truncated = bool(seg_start[s] or seg_end[e - 1])
        samples = tuple(float(x) for x in cur[s:e])
        duration = float((e - s) * series.step_h)
        if visits and visits[-1].state == state:
            # only possible across a gap: merge the two partial runs
            prev = visits.pop()
            visits.append(StateVisit(state, prev.duration_h + duration, prev.samples + samples,
                                     prev.year, prev.day_of_year, prev.start_h, truncated=True))
            continue
        visits.append(StateVisit(state, duration, samples, int(series.year[s]),
                                 int(series.doy[s]), float(series.hour[s]), truncated))
    return visits


def slot_cluster(series: HarvestSeries, cfg: SlotConfig) -> list[StateVisit]:
    """One visit per (day, slot) holding the samples observed in that slot."""
    if len(series) == 0:
        raise DegenerateMonthError("empty series")
    T = cfg.slot_length_h
    slot = np.floor(np.asarray(series.hour) / T).astype(np.int64)
    day = np.floor(series.absolute_hours() / 24.0).astype(np.int64)
    new = np.ones(len(slot), dtype=bool)
    new[1:] = (slot[1:] != slot[:-1]) | (day[1:] != day[:-1])
    starts = np.flatnonzero(new)
    ends = np.append(starts[1:], len(slot))
    cur = series.current_a
    return [
        StateVisit(int(slot[s]), T, tuple(float(x) for x in cur[s:e]),
                   int(series.year[s]), int(series.doy[s]), float(slot[s] * T))
        for s, e in zip(starts, ends)
    ]


def transition_matrix(scheme: str, n_states: Optional[int] = None) -> np.ndarray:
    """Deterministic transition matrix of a clustering scheme."""
    if scheme == NIGHT_DAY:
        if n_states not in (None, 2):
            raise ConfigError("night-day scheme has exactly 2 states")
        return np.array([[0.0, 1.0], [1.0, 0.0]])
    if scheme == SLOT:
        if n_states is None or n_states < 2:
            raise ConfigError("slot scheme needs n_states >= 2")
        return np.roll(np.eye(n_states), 1, axis=1)
    raise ConfigError(f"unknown scheme {scheme!r}")


def write_visits_csv(visits: Sequence[StateVisit], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["state", "start", "duration_h", "n_samples"])
        for v in visits:
            w.writerow([v.state, v.start, repr(v.duration_h), v.n_samples])
