"""Semi-Markov source model: build from clustered visits, simulate, persist.

On entering a state the model draws a current from that state's current
density and a sojourn length from its duration density (or uses the fixed
slot length), holds the current for the whole sojourn, then moves on
according to the transition matrix.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .clustering import DAY_STATE, NIGHT_DAY, NIGHT_STATE, SCHEMES, SLOT, StateVisit, transition_matrix
from .density import (
    Distribution,
    Kde,
    PointMass,
    distribution_from_dict,
    fit_current,
    fit_duration,
)
from .errors import DegenerateDataError, ModelError, ModelFileError

FORMAT_NAME = "solarharvest-semi-markov"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class StateModel:
    state_id: int
    duration: Union[Kde, PointMass]
    current: Distribution
    sample_count: int
    visit_count: int = 0
    degenerate: bool = False


@dataclass(frozen=True, eq=False)
class SemiMarkovModel:
    scheme: str
    month: int
    states: tuple[StateModel, ...]
    transitions: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        P = np.array(self.transitions, dtype=float)
        P.flags.writeable = False
        object.__setattr__(self, "transitions", P)
        _check_invariants(self)

    @property
    def n_states(self) -> int:
        return len(self.states)


def _check_invariants(m: SemiMarkovModel) -> None:
    if m.scheme not in SCHEMES:
        raise ModelError(f"unknown scheme {m.scheme!r}")
    if not 1 <= int(m.month) <= 12:
        raise ModelError(f"month must be in 1..12, got {m.month}")
    n = len(m.states)
    P = m.transitions
    if P.shape != (n, n):
        raise ModelError(f"transition matrix shape {P.shape} does not match {n} states")
    if np.any(P < 0) or not np.allclose(P.sum(axis=1), 1.0, rtol=0, atol=1e-12):
        raise ModelError("transition matrix rows must be non-negative and sum to 1")
    if m.scheme == NIGHT_DAY and n != 2:
        raise ModelError("night-day model must have 2 states")
    if m.scheme == SLOT and (n < 2 or 24 % n):
        raise ModelError(f"slot model state count must divide 24, got {n}")
    if not np.array_equal(P, transition_matrix(m.scheme, n)):
        raise ModelError(f"transition matrix is not the deterministic {m.scheme} matrix")
    for i, s in enumerate(m.states):
        if s.state_id != i:
            raise ModelError(f"state {i} has id {s.state_id}")
        if s.current.support[0] < 0:
            raise ModelError(f"state {i} current support extends below 0")
        if not s.duration.support[0] > 0:
            raise ModelError(f"state {i} duration support must be positive")


def build_model(visits: Sequence[StateVisit], scheme: str, month: int,
                n_slots: Optional[int] = None, provenance: Optional[dict] = None) -> SemiMarkovModel:
    """Fit per-state current and duration densities to clustered visits.

    Currents use every sample seen in a state; night-day durations use only
    visits not truncated by data edges or gaps. Slot durations are the fixed
    slot length.
    """
    if scheme == NIGHT_DAY:
        n = 2
    elif scheme == SLOT:
        if n_slots is None:
            raise ModelError("slot scheme needs n_slots")
        n = int(n_slots)
    else:
        raise ModelError(f"unknown scheme {scheme!r}")

    by_state: dict[int, list[StateVisit]] = {s: [] for s in range(n)}
    for v in visits:
        if v.state not in by_state:
            raise ModelError(f"visit state {v.state} outside 0..{n - 1}")
        by_state[v.state].append(v)

    states = []
    for s in range(n):
        vs = by_state[s]
        if not vs:
            raise ModelError(f"state {s} ({_label(scheme, s)}) is never visited")
        samples = np.concatenate([np.asarray(v.samples, dtype=float) for v in vs])
        if len(samples) == 0:
            raise ModelError(f"state {s} ({_label(scheme, s)}) has no samples")
        current = fit_current(samples)
        if scheme == SLOT:
            duration: Union[Kde, PointMass] = PointMass(24.0 / n)
            degenerate = isinstance(current, PointMass)
        else:
            complete = [v.duration_h for v in vs if not v.truncated]
            try:
                duration = fit_duration(complete)
            except DegenerateDataError:
                raise ModelError(
                    f"state {s} ({_label(scheme, s)}) has no complete sojourn to estimate durations"
                ) from None
            degenerate = isinstance(current, PointMass) or isinstance(duration, PointMass)
        states.append(StateModel(s, duration, current, sample_count=int(len(samples)),
                                 visit_count=len(vs), degenerate=degenerate))
    return SemiMarkovModel(scheme, int(month), tuple(states), transition_matrix(scheme, n),
                           dict(provenance or {}))


def _label(scheme: str, s: int) -> str:
    if scheme == NIGHT_DAY:
        return {DAY_STATE: "day", NIGHT_STATE: "night"}[s]
    return f"slot {s}"


@dataclass(frozen=True)
class Sojourn:
    state: int
    start_h: float
    duration_h: float
    current_a: float


@dataclass(frozen=True, eq=False)
class SyntheticTrace:
    sampling_step_h: float
    values: np.ndarray
    state_log: np.ndarray
    seed: Optional[int]
    sojourns: tuple[Sojourn, ...] = ()

    def __len__(self) -> int:
        return len(self.values)

    @property
    def hours(self) -> np.ndarray:
        return np.arange(len(self.values)) * self.sampling_step_h

    def to_csv(self, path) -> None:
        rows = ["hour,state,current_a"]
        for t, s, v in zip(self.hours, self.state_log, self.values):
            h = int(t) if float(t).is_integer() else repr(float(t))
            rows.append(f"{h},{int(s)},{float(v)!r}")
        atomic_write_text(path, "\n".join(rows) + "\n")


def generate_trace(m: SemiMarkovModel, horizon_h: float, seed=None,
                   step_h: float = 1.0, rng: Optional[np.random.Generator] = None) -> SyntheticTrace:
    """Simulate ``horizon_h`` hours of harvested current sampled every ``step_h``.

    Night-day traces start in the night state partway through a sojourn (a
    drawn night length scaled by a uniform residual); slot traces start at
    the slot containing hour 0. Sample ``j`` holds the current of the sojourn
    covering time ``j * step_h``; a partial final step is dropped.
    """
    if not horizon_h > 0:
        raise ValueError("horizon must be > 0")
    if not step_h > 0:
        raise ValueError("step must be > 0")
    if rng is None:
        rng = np.random.default_rng(seed)
    P = m.transitions
    n_steps = int(math.floor(horizon_h / step_h + 1e-9))

    if m.scheme == NIGHT_DAY:
        state = NIGHT_STATE
        first = m.states[state]
        cur = float(first.current.sample(rng))
        dur = float(first.duration.sample(rng)) * rng.random()
    else:
        state = 0
        cur = float(m.states[0].current.sample(rng))
        dur = float(m.states[0].duration.sample(rng))

    sojourns = []
    t = 0.0
    while True:
        sojourns.append(Sojourn(state, t, dur, cur))
        t += dur
        if t >= horizon_h:
            break
        state = _next_state(P, state, rng)
        sm = m.states[state]
        cur = float(sm.current.sample(rng))
        dur = float(sm.duration.sample(rng))

    starts = np.array([s.start_h for s in sojourns])
    grid = np.arange(n_steps) * step_h
    idx = np.searchsorted(starts, grid, side="right") - 1
    values = np.array([s.current_a for s in sojourns])[idx]
    log = np.array([s.state for s in sojourns], dtype=np.int64)[idx]
    return SyntheticTrace(step_h, values, log, seed if isinstance(seed, (int, np.integer)) else None,
                          tuple(sojourns))


def _next_state(P: np.ndarray, u: int, rng: np.random.Generator) -> int:
    row = P[u]
    nz = np.flatnonzero(row)
    if len(nz) == 1:
        return int(nz[0])
    return int(rng.choice(len(row), p=row))


def trace_visits(trace: SyntheticTrace) -> list[StateVisit]:
    """Sojourns of a trace as visits; the first and the last are truncated."""
    grid = trace.hours
    out = []
    for k, s in enumerate(trace.sojourns):
        i0 = np.searchsorted(grid, s.start_h, side="left")
        i1 = np.searchsorted(grid, s.start_h + s.duration_h, side="left")
        samples = tuple(float(x) for x in trace.values[i0:i1])
        truncated = k == 0 or k == len(trace.sojourns) - 1
        out.append(StateVisit(s.state, s.duration_h, samples, 0, 1, s.start_h, truncated))
    return out


def model_to_dict(m: SemiMarkovModel) -> dict:
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "scheme": m.scheme,
        "month": int(m.month),
        "transitions": [[float(p) for p in row] for row in m.transitions],
        "states": [
            {
                "state_id": s.state_id,
                "sample_count": s.sample_count,
                "visit_count": s.visit_count,
                "degenerate": s.degenerate,
                "duration": s.duration.to_dict(),
                "current": s.current.to_dict(),
            }
            for s in m.states
        ],
        "provenance": m.provenance,
    }


def model_from_dict(d: dict) -> SemiMarkovModel:
    if not isinstance(d, dict) or d.get("format") != FORMAT_NAME:
        raise ModelFileError("not a semi-Markov model file")
    if d.get("version") != FORMAT_VERSION:
        raise ModelFileError(f"unsupported model file version {d.get('version')!r} "
                             f"(expected {FORMAT_VERSION})")
    try:
        states = []
        for s in d["states"]:
            duration = distribution_from_dict(s["duration"])
            if not isinstance(duration, (Kde, PointMass)):
                raise ModelFileError("duration must be a kde or a point mass")
            states.append(StateModel(int(s["state_id"]), duration,
                                     distribution_from_dict(s["current"]),
                                     int(s["sample_count"]), int(s.get("visit_count", 0)),
                                     bool(s.get("degenerate", False))))
        return SemiMarkovModel(str(d["scheme"]), int(d["month"]), tuple(states),
                               np.array(d["transitions"], dtype=float), dict(d.get("provenance", {})))
    except ModelFileError:
        raise
    except ModelError as exc:
        raise ModelFileError(f"model file violates an invariant: {exc}") from None
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"malformed model file: {exc!r}") from None


def dumps_model(m: SemiMarkovModel) -> str:
    return json.dumps(model_to_dict(m), indent=1) + "\n"


def save_model(m: SemiMarkovModel, path) -> None:
    atomic_write_text(path, dumps_model(m))


def load_model(path) -> SemiMarkovModel:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: corrupted model file ({exc.msg} at line {exc.lineno})") from None
    return model_from_dict(d)


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


__all__ = [
    "SemiMarkovModel",
    "StateModel",
    "Sojourn",
    "SyntheticTrace",
    "build_model",
    "generate_trace",
    "load_model",
    "save_model",
    "trace_visits",
]
