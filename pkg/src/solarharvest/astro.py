"""Sun-panel geometry and effective irradiance on a tilted, rotated panel.

Angles are stored and returned in degrees; conversion to radians happens
inside each function. Every function broadcasts over numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .ingest import RadianceRecord, SiteConfig, month_of

AXIAL_TILT_DEG = 23.45


@dataclass(frozen=True)
class PanelOrientation:
    """Panel tilt from horizontal and azimuthal displacement from due south (positive West)."""

    tilt_deg: float = 0.0
    azimuth_disp_deg: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.tilt_deg <= 90.0:
            raise ConfigError(f"tilt must be in [0, 90], got {self.tilt_deg}")
        if not -90.0 <= self.azimuth_disp_deg <= 90.0:
            raise ConfigError(f"azimuthal displacement must be in [-90, 90], got {self.azimuth_disp_deg}")


@dataclass(frozen=True)
class SolarAngles:
    day_angle_deg: float
    declination_deg: float
    equation_of_time_h: float
    apparent_solar_time_h: float
    hour_angle_deg: float
    cos_incidence: float


def day_angle(N):
    """Day angle in degrees, zero at the March equinox (day 81)."""
    return 360.0 * (np.asarray(N, dtype=float) - 81.0) / 365.0


def declination(N):
    d = np.radians(day_angle(N))
    return np.degrees(np.arcsin(np.sin(np.radians(AXIAL_TILT_DEG)) * np.sin(d)))


def equation_of_time(N):
    """Equation of time in hours."""
    d = np.radians(day_angle(N))
    return (9.87 * np.sin(2.0 * d) - 7.53 * np.cos(d) - 1.5 * np.sin(d)) / 60.0


def dst_adjusted_time(t_local, N, site: SiteConfig, year=None):
    """Local time after the site's daylight-saving rule.

    Identity when ``site.dst_adjusted`` is set. Otherwise records whose month
    falls in the configured window get ``site.dst_shift_h`` added. Without
    ``year`` the month is taken from a non-leap calendar.
    """
    t_local = np.asarray(t_local, dtype=float)
    if site.dst_adjusted:
        return t_local
    months = month_of(1999 if year is None else year, N)
    lo, hi = site.dst_start_month, site.dst_end_month
    if lo <= hi:
        active = (months >= lo) & (months <= hi)
    else:  # window wraps the new year (southern hemisphere)
        active = (months >= lo) | (months <= hi)
    return t_local + np.where(active, site.dst_shift_h, 0.0)


def apparent_solar_time(t_local, N, site: SiteConfig, year=None):
    """AST in hours; not wrapped into [0, 24)."""
    gma = site.utc_offset_h * 15.0
    delta_t = (site.longitude_deg - gma) / 15.0
    return dst_adjusted_time(t_local, N, site, year) + delta_t + equation_of_time(N)


def hour_angle(t_local, N, site: SiteConfig, year=None):
    return 15.0 * (apparent_solar_time(t_local, N, site, year) - 12.0)


def _cos_incidence(decl_deg, omega_deg, lat_deg, tilt_deg, az_deg):
    g = np.radians(decl_deg)
    w = np.radians(omega_deg)
    la = np.radians(lat_deg)
    b = np.radians(tilt_deg)
    a = np.radians(az_deg)
    sg, cg = np.sin(g), np.cos(g)
    sl, cl = np.sin(la), np.cos(la)
    sb, cb = np.sin(b), np.cos(b)
    c = (
        sg * sl * cb
        - sg * cl * sb * np.cos(a)
        + cg * cl * cb * np.cos(w)
        + cg * sl * sb * np.cos(a) * np.cos(w)
        + cg * sb * np.sin(a) * np.sin(w)
    )
    # rounding only; the expression is a dot product of unit vectors
    return np.clip(c, -1.0, 1.0)


def cos_incidence(t_local, N, site: SiteConfig, panel: PanelOrientation, year=None):
    """Cosine of the angle between the sun's rays and the panel normal.

    Five-term expression in declination, latitude, tilt, azimuthal
    displacement and hour angle. Negative values mean the sun is behind the
    panel (or below the horizon).
    """
    return _cos_incidence(
        declination(N),
        hour_angle(t_local, N, site, year),
        site.latitude_deg,
        panel.tilt_deg,
        panel.azimuth_disp_deg,
    )


def solar_angles(t_local, N, site: SiteConfig, panel: PanelOrientation, year=None) -> SolarAngles:
    ast = apparent_solar_time(t_local, N, site, year)
    omega = 15.0 * (ast - 12.0)
    decl = declination(N)
    return SolarAngles(
        day_angle_deg=float(day_angle(N)),
        declination_deg=float(decl),
        equation_of_time_h=float(equation_of_time(N)),
        apparent_solar_time_h=float(ast),
        hour_angle_deg=float(omega),
        cos_incidence=float(
            _cos_incidence(decl, omega, site.latitude_deg, panel.tilt_deg, panel.azimuth_disp_deg)
        ),
    )


def effective_irradiance_array(t_local, N, ghi, site: SiteConfig, panel: PanelOrientation, year=None):
    """Vectorized ``I_sun * max(0, cos_incidence)``."""
    c = cos_incidence(t_local, N, site, panel, year)
    return np.asarray(ghi, dtype=float) * np.maximum(0.0, c)


def effective_irradiance(
    rec: RadianceRecord, site: SiteConfig, panel: PanelOrientation
) -> float:
    return float(
        effective_irradiance_array(
            rec.local_time_h, rec.day_of_year, rec.irradiance_wm2, site, panel, rec.year
        )
    )
