"""Single-diode solar cell I-V characteristic and module scaling.

The dark saturation current is not an input: it is the value that puts the
open-circuit point of the fully lit (``F = 1``) curve exactly at ``v_oc``.
The diode term is evaluated as ``i_sc * expm1(a v) / expm1(a v_oc)``,
rearranged so that large exponents never overflow.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .errors import ConfigError, DataError
from .ingest import RadianceRecord

ONE_SUN_WM2 = 1000.0
REFERENCE_TEMP_K = 298.15


@dataclass(frozen=True)
class PhysicalConstants:
    q: float = 1.602176634e-19  # C
    k: float = 1.380649e-23  # J/K


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class CellParams:
    """Cell datasheet values.

    ``di_sc_dT`` and ``dv_oc_dT`` (A/K, V/K) shift ``i_sc`` and ``v_oc`` linearly
    away from ``t_ref_k``; both default to zero.
    """

    i_sc_a: float = 0.005
    v_oc_v: float = 1.8
    ideality: float = 1.5
    area_cm2: float = 0.749
    efficiency_pct: float = 21.1
    di_sc_dT: float = 0.0
    dv_oc_dT: float = 0.0
    t_ref_k: float = REFERENCE_TEMP_K

    def __post_init__(self):
        if not self.i_sc_a > 0:
            raise ConfigError(f"i_sc must be > 0, got {self.i_sc_a}")
        if not self.v_oc_v > 0:
            raise ConfigError(f"v_oc must be > 0, got {self.v_oc_v}")
        if not self.ideality >= 1:
            raise ConfigError(f"ideality factor must be >= 1, got {self.ideality}")
        if not self.area_cm2 > 0:
            raise ConfigError(f"cell area must be > 0, got {self.area_cm2}")

    def i_sc_at(self, T):
        return self.i_sc_a + self.di_sc_dT * (np.asarray(T, dtype=float) - self.t_ref_k)

    def v_oc_at(self, T):
        return self.v_oc_v + self.dv_oc_dT * (np.asarray(T, dtype=float) - self.t_ref_k)


@dataclass(frozen=True)
class ModuleConfig:
    n_p: int = 1
    n_s: int = 1

    def __post_init__(self):
        if int(self.n_p) != self.n_p or int(self.n_s) != self.n_s or self.n_p < 1 or self.n_s < 1:
            raise ConfigError(f"n_p and n_s must be integers >= 1, got {self.n_p} x {self.n_s}")

    @property
    def n_cells(self) -> int:
        return self.n_p * self.n_s


@dataclass(frozen=True)
class ThermalModel:
    """Cell temperature law: ``fixed`` or ``ambient-plus-irradiance``.

    The latter is ambient (K) plus ``irradiance_coeff_k_per_wm2 * I_eff``;
    the default coefficient is the NOCT-style (45 - 20) / 800.
    """

    mode: str = "fixed"
    fixed_temp_k: float = REFERENCE_TEMP_K
    irradiance_coeff_k_per_wm2: float = 0.03125

    def __post_init__(self):
        if self.mode not in ("fixed", "ambient-plus-irradiance"):
            raise ConfigError(f"unknown thermal mode {self.mode!r}")
        if self.mode == "fixed" and not self.fixed_temp_k > 0:
            raise ConfigError(f"fixed temperature must be > 0 K, got {self.fixed_temp_k}")
        if self.irradiance_coeff_k_per_wm2 < 0:
            raise ConfigError("irradiance coefficient must be >= 0")


def thermal_voltage(T, cell: CellParams, constants: PhysicalConstants = CONSTANTS):
    """``n k T / q`` in volts."""
    return cell.ideality * constants.k * np.asarray(T, dtype=float) / constants.q


def dark_saturation_current(cell: CellParams, T, constants: PhysicalConstants = CONSTANTS):
    T = np.asarray(T, dtype=float)
    if np.any(T <= 0):
        raise ValueError("temperature must be > 0 K")
    x = cell.v_oc_at(T) / thermal_voltage(T, cell, constants)
    i_sc = cell.i_sc_at(T)
    # log-space when expm1 would overflow
    with np.errstate(over="ignore", under="ignore"):
        direct = i_sc / np.expm1(np.minimum(x, 700.0))
        logged = np.exp(np.log(i_sc) - x - np.log1p(-np.exp(-x)))
    return np.where(x > 700.0, logged, direct)[()]


def radiation_rate(i_eff):
    """Effective irradiance normalized to one sun, clamped to [0, 1]."""
    return np.clip(np.asarray(i_eff, dtype=float) / ONE_SUN_WM2, 0.0, 1.0)[()]


def _diode_ratio(v, x_oc, vt):
    """``expm1(v / vt) / expm1(x_oc)`` without overflow, for v >= 0."""
    y = np.asarray(v, dtype=float) / vt
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        r = np.exp(y - x_oc) * np.expm1(-y) / np.expm1(-x_oc)
    # y == 0 gives 0 * 0 / c; both terms are exact there
    return np.where(y == 0.0, 0.0, r)


def cell_current(v, F, cell: CellParams, T, constants: PhysicalConstants = CONSTANTS):
    """Cell output current ``i_sc F - i_o (exp(v / (n V_T)) - 1)`` in amperes."""
    vt = thermal_voltage(T, cell, constants)
    i_sc = cell.i_sc_at(T)
    x_oc = cell.v_oc_at(T) / vt
    return (i_sc * np.asarray(F, dtype=float) - i_sc * _diode_ratio(v, x_oc, vt))[()]


def open_circuit_voltage(F, cell: CellParams, T, constants: PhysicalConstants = CONSTANTS):
    """Voltage where :func:`cell_current` crosses zero at radiation rate ``F``."""
    F = np.asarray(F, dtype=float)
    vt = thermal_voltage(T, cell, constants)
    x_oc = cell.v_oc_at(T) / vt
    # solve F * expm1(x_oc) = expm1(y) for y
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        small = np.log1p(F * np.expm1(np.minimum(x_oc, 700.0)))
        large = x_oc + np.log(F + (1.0 - F) * np.exp(-x_oc))
    y = np.where(x_oc > 700.0, large, small)
    return np.where(F > 0, y * vt, 0.0)[()]


def module_operating_point(v_cell, F, cell: CellParams, module: ModuleConfig, T):
    """Module (current, voltage) for ``n_p`` parallel strings of ``n_s`` cells."""
    i = cell_current(v_cell, F, cell, T)
    return module.n_p * i, module.n_s * np.asarray(v_cell, dtype=float)[()]


def cell_temperature(rec: RadianceRecord, i_eff: float, tm: ThermalModel) -> float:
    return float(cell_temperature_array(rec.ambient_temp_c, i_eff, tm))


def cell_temperature_array(ambient_c, i_eff, tm: ThermalModel):
    """Vectorized cell temperature; ``ambient_c`` may hold NaN (or be None) for missing values."""
    if tm.mode == "fixed":
        return np.broadcast_to(tm.fixed_temp_k, np.shape(i_eff)).astype(float)[()]
    if ambient_c is None:
        raise DataError("ambient temperature missing; use the fixed thermal mode for this data")
    ambient_c = np.asarray(ambient_c, dtype=float)
    if np.any(np.isnan(ambient_c)):
        raise DataError("ambient temperature missing for some records; use the fixed thermal mode for this data")
    T = ambient_c + 273.15 + tm.irradiance_coeff_k_per_wm2 * np.asarray(i_eff, dtype=float)
    if np.any(T <= 0):
        raise DataError("cell temperature must be > 0 K")
    return T[()]


def cell_params_for_module(i_sc_module: float, v_oc_module: float, module: ModuleConfig,
                           **kwargs) -> CellParams:
    """Per-cell parameters from module datasheet values, assuming homogeneous cells."""
    return CellParams(i_sc_a=i_sc_module / module.n_p, v_oc_v=v_oc_module / module.n_s, **kwargs)


__all__ = [
    "CONSTANTS",
    "CellParams",
    "ModuleConfig",
    "PhysicalConstants",
    "ThermalModel",
    "cell_current",
    "cell_params_for_module",
    "cell_temperature",
    "cell_temperature_array",
    "dark_saturation_current",
    "module_operating_point",
    "open_circuit_voltage",
    "radiation_rate",
    "thermal_voltage",
]
