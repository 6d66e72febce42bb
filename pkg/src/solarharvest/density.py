"""Bounded one-dimensional densities for state currents and durations.

:class:`Kde` is a Gaussian kernel estimate confined to ``[lo, hi]`` by
reflection. A draw is a data point plus ``bandwidth`` times a standard
normal, folded back into the support as many times as needed; ``pdf`` and
``cdf`` are the exact law of that folded draw (the sum over all mirror
images of every kernel, truncated once images are more than
``IMAGE_CUTOFF`` bandwidths away and renormalized).

:class:`PointMass` and :class:`ZeroInflated` cover states whose samples are
all identical (e.g. zero current at night) or contain an atom at zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import ndtr

from .errors import DegenerateDataError, ModelFileError

IMAGE_CUTOFF = 10.0
MAX_IMAGE_PAIRS = 200
CURRENT_HEADROOM = 1.05
_CHUNK_ELEMS = 2_000_000


def silverman_bandwidth(data) -> float:
    """``0.9 * min(std, IQR / 1.34) * n ** -0.2``.

    Falls back to the standard deviation when the IQR is zero; returns 0 for
    constant data.
    """
    x = np.asarray(data, dtype=float)
    n = len(x)
    sd = float(np.std(x, ddof=1)) if n > 1 else 0.0
    q75, q25 = np.percentile(x, [75, 25])
    iqr = float(q75 - q25)
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    return 0.9 * spread * n ** -0.2


def fold(y, lo: float, hi: float):
    """Reflect values into ``[lo, hi]`` (triangle-wave folding)."""
    w = hi - lo
    u = np.mod(np.asarray(y, dtype=float) - lo, 2.0 * w)
    return lo + np.where(u > w, 2.0 * w - u, u)


@dataclass(frozen=True, eq=False)
class Kde:
    support_lo: float
    support_hi: float
    sample_points: np.ndarray
    bandwidth: float
    kernel: str = "gaussian"

    def __post_init__(self):
        pts = np.array(self.sample_points, dtype=float)
        pts.flags.writeable = False
        object.__setattr__(self, "sample_points", pts)
        if self.kernel != "gaussian":
            raise ValueError(f"unsupported kernel {self.kernel!r}")
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be > 0, got {self.bandwidth}")
        if not self.support_hi > self.support_lo:
            raise ValueError("support must have positive width")
        if len(pts) == 0:
            raise ValueError("no sample points")
        if pts.min() < self.support_lo or pts.max() > self.support_hi:
            raise ValueError("sample points must lie inside the support")
        object.__setattr__(self, "_centers", self._image_centers())
        lo_z = (self.support_lo - self._centers) / self.bandwidth
        hi_z = (self.support_hi - self._centers) / self.bandwidth
        object.__setattr__(self, "_base", ndtr(lo_z))
        object.__setattr__(self, "_total", float(np.sum(ndtr(hi_z) - self._base)))

    def _image_centers(self) -> np.ndarray:
        lo, hi, h = self.support_lo, self.support_hi, self.bandwidth
        w = hi - lo
        k_max = min(MAX_IMAGE_PAIRS, int(math.ceil((IMAGE_CUTOFF * h / w + 1.0) / 2.0)))
        shifts = 2.0 * w * np.arange(-k_max, k_max + 1)
        pts = self.sample_points
        centers = np.concatenate([
            (pts[None, :] + shifts[:, None]).ravel(),
            ((2.0 * lo - pts)[None, :] + shifts[:, None]).ravel(),
        ])
        near = (centers > lo - IMAGE_CUTOFF * h) & (centers < hi + IMAGE_CUTOFF * h)
        return np.sort(centers[near])

    @property
    def support(self) -> tuple[float, float]:
        return self.support_lo, self.support_hi

    def _kernel_sum(self, x, fn):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        out = np.empty(flat.shape)
        c = self._centers
        step = max(1, _CHUNK_ELEMS // len(c))
        for i in range(0, len(flat), step):
            z = (flat[i:i + step, None] - c[None, :]) / self.bandwidth
            out[i:i + step] = fn(z)
        return out.reshape(x.shape)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.support_lo) & (x <= self.support_hi)
        dens = self._kernel_sum(
            x, lambda z: np.exp(-0.5 * z * z).sum(axis=1) / math.sqrt(2.0 * math.pi)
        ) / (self.bandwidth * self._total)
        return np.where(inside, dens, 0.0)[()]

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, self.support_lo, self.support_hi)
        base = self._base
        raw = self._kernel_sum(xc, lambda z: (ndtr(z) - base[None, :]).sum(axis=1)) / self._total
        raw = np.clip(raw, 0.0, 1.0)
        raw = np.where(x <= self.support_lo, 0.0, raw)
        return np.where(x >= self.support_hi, 1.0, raw)[()]

    cdf_left = cdf

    def sample(self, rng: np.random.Generator, size=None):
        pts = self.sample_points
        idx = rng.integers(0, len(pts), size=size)
        y = pts[idx] + self.bandwidth * rng.standard_normal(size=size)
        out = fold(y, self.support_lo, self.support_hi)
        return float(out) if size is None else out

    def mean(self) -> float:
        grid = np.linspace(self.support_lo, self.support_hi, 4001)
        dens = self.pdf(grid)
        return float(trapezoid(grid * dens, grid) / trapezoid(dens, grid))

    def to_dict(self) -> dict:
        return {
            "kind": "kde",
            "kernel": self.kernel,
            "bandwidth": float(self.bandwidth),
            "support": [float(self.support_lo), float(self.support_hi)],
            "points": [float(p) for p in self.sample_points],
        }


@dataclass(frozen=True)
class PointMass:
    value: float

    @property
    def support(self) -> tuple[float, float]:
        return self.value, self.value

    def pdf(self, x):
        """Density of the atom: infinite at ``value``, zero elsewhere."""
        x = np.asarray(x, dtype=float)
        return np.where(x == self.value, np.inf, 0.0)[()]

    def cdf(self, x):
        return np.where(np.asarray(x, dtype=float) >= self.value, 1.0, 0.0)[()]

    def cdf_left(self, x):
        return np.where(np.asarray(x, dtype=float) > self.value, 1.0, 0.0)[()]

    def sample(self, rng: np.random.Generator, size=None):
        if size is None:
            return float(self.value)
        return np.full(size, self.value, dtype=float)

    def mean(self) -> float:
        return float(self.value)

    def to_dict(self) -> dict:
        return {"kind": "point", "value": float(self.value)}


@dataclass(frozen=True)
class ZeroInflated:
    """Atom at exactly zero with probability ``zero_probability``, else ``positive``."""

    zero_probability: float
    positive: Union[Kde, PointMass]

    def __post_init__(self):
        if not 0.0 < self.zero_probability < 1.0:
            raise ValueError("zero probability must be in (0, 1)")

    @property
    def support(self) -> tuple[float, float]:
        return 0.0, self.positive.support[1]

    def pdf(self, x):
        """Continuous part only (the zero atom is excluded)."""
        return ((1.0 - self.zero_probability) * np.asarray(self.positive.pdf(x)))[()]

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        p0 = self.zero_probability
        return (p0 * (x >= 0.0) + (1.0 - p0) * np.asarray(self.positive.cdf(x)))[()]

    def cdf_left(self, x):
        x = np.asarray(x, dtype=float)
        p0 = self.zero_probability
        return (p0 * (x > 0.0) + (1.0 - p0) * np.asarray(self.positive.cdf_left(x)))[()]

    def sample(self, rng: np.random.Generator, size=None):
        if size is None:
            u = rng.random()
            return 0.0 if u < self.zero_probability else self.positive.sample(rng)
        u = rng.random(size)
        pos = np.asarray(self.positive.sample(rng, size=size))
        return np.where(u < self.zero_probability, 0.0, pos)

    def mean(self) -> float:
        return (1.0 - self.zero_probability) * self.positive.mean()

    def to_dict(self) -> dict:
        return {
            "kind": "zero-inflated",
            "zero_probability": float(self.zero_probability),
            "positive": self.positive.to_dict(),
        }


Distribution = Union[Kde, PointMass, ZeroInflated]


def fit_kde(data, support_lo: float, support_hi: float,
            bandwidth: Optional[float] = None) -> Kde:
    """Reflected Gaussian KDE with Silverman bandwidth unless ``bandwidth`` is given.

    Raises :class:`DegenerateDataError` for fewer than two points or a
    zero-width support. Constant data on a wider support gets a bandwidth
    floor of ``1e-6`` of the support width, i.e. a sharp peak.
    """
    x = np.asarray(data, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise DegenerateDataError(f"need at least 2 points to fit a density, got {x.size}")
    if not support_hi > support_lo:
        raise DegenerateDataError("support has zero width")
    if x.min() < support_lo or x.max() > support_hi:
        raise ValueError("data must lie inside the support")
    h = silverman_bandwidth(x) if bandwidth is None else float(bandwidth)
    if not h > 0:
        h = 1e-6 * (support_hi - support_lo)
    return Kde(support_lo, support_hi, x, h)


def fit_duration(durations) -> Union[Kde, PointMass]:
    """Sojourn-length density on ``[min, max]`` of the observed durations."""
    x = np.asarray(durations, dtype=float)
    if len(x) == 0:
        raise DegenerateDataError("no complete sojourns observed")
    lo, hi = float(x.min()), float(x.max())
    if len(x) < 2 or hi == lo:
        return PointMass(lo)
    return fit_kde(x, lo, hi)


def fit_current(samples) -> Distribution:
    """Current density on ``[0, 1.05 max]``, splitting off an atom at exact zero."""
    x = np.asarray(samples, dtype=float)
    if len(x) == 0:
        raise DegenerateDataError("no current samples")
    if np.any(x < 0):
        raise ValueError("currents must be >= 0")
    pos = x[x > 0]
    p0 = 1.0 - len(pos) / len(x)
    if len(pos) == 0:
        return PointMass(0.0)
    if len(pos) == 1 or pos.min() == pos.max():
        positive: Union[Kde, PointMass] = PointMass(float(pos[0]))
    else:
        positive = fit_kde(pos, 0.0, CURRENT_HEADROOM * float(pos.max()))
    return positive if p0 == 0.0 else ZeroInflated(p0, positive)


def distribution_from_dict(d: dict) -> Distribution:
    try:
        kind = d["kind"]
        if kind == "kde":
            lo, hi = d["support"]
            return Kde(float(lo), float(hi), np.array(d["points"], dtype=float),
                       float(d["bandwidth"]), d.get("kernel", "gaussian"))
        if kind == "point":
            return PointMass(float(d["value"]))
        if kind == "zero-inflated":
            return ZeroInflated(float(d["zero_probability"]), distribution_from_dict(d["positive"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"invalid distribution entry: {exc}") from None
    raise ModelFileError(f"unknown distribution kind {kind!r}")
