"""Run configuration: TOML loading, validation and provenance records.

Tables and keys (all optional, defaults are the bundled Los Angeles values)::

    [site]        latitude_deg, longitude_deg, utc_offset_h, dst_adjusted,
                  dst_start_month, dst_end_month, dst_shift_h, name
    [panel]       tilt_deg, azimuth_disp_deg
    [cell]        i_sc_a, v_oc_v, ideality, area_cm2, efficiency_pct,
                  di_sc_dT, dv_oc_dT, t_ref_k
    [module]      n_p, n_s
    [thermal]     mode, fixed_temp_k, irradiance_coeff_k_per_wm2
    [processor]   efficiency, battery_voltage_v
    [clustering]  scheme, threshold_fraction, threshold_mode, n_slots
    [run]         months, seed, out, data
    [sweep]       sizes = [[n_p, n_s], ...]
    [[sweep.sites]]  name, data, plus any [site] key
"""

from __future__ import annotations

import dataclasses
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .astro import PanelOrientation
from .clustering import NIGHT_DAY, SCHEMES, NightDayConfig, SlotConfig
from .errors import ConfigError
from .ingest import SiteConfig
from .power import PowerProcessor
from .pv import CellParams, ModuleConfig, ThermalModel

THRESHOLD_MODES = ("month", "global")
BUNDLED_CONFIG = "los_angeles.toml"


@dataclass(frozen=True)
class SweepSite:
    name: str
    site: SiteConfig
    data: Optional[str] = None


@dataclass(frozen=True)
class RunConfig:
    site: SiteConfig
    panel: PanelOrientation = PanelOrientation()
    cell: CellParams = CellParams()
    module: ModuleConfig = ModuleConfig()
    thermal: ThermalModel = ThermalModel()
    processor: PowerProcessor = PowerProcessor()
    scheme: str = NIGHT_DAY
    night_day: NightDayConfig = NightDayConfig()
    threshold_mode: str = "month"
    slots: SlotConfig = SlotConfig()
    months: tuple[int, ...] = tuple(range(1, 13))
    seed: int = 1
    out: str = "out"
    data: Optional[str] = None
    sweep_sizes: tuple[tuple[int, int], ...] = ()
    sweep_sites: tuple[SweepSite, ...] = ()
    source: str = field(default="", compare=False)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.threshold_mode not in THRESHOLD_MODES:
            raise ConfigError(f"threshold_mode must be one of {THRESHOLD_MODES}")
        bad = [m for m in self.months if not 1 <= int(m) <= 12]
        if bad or not self.months:
            raise ConfigError(f"months must be a non-empty subset of 1..12, got {list(self.months)}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def provenance(self, dataset_label: str = "") -> dict:
        """JSON-ready record of every setting that shaped a fitted model."""
        return {
            "dataset": dataset_label,
            "site": dataclasses.asdict(self.site),
            "panel": dataclasses.asdict(self.panel),
            "cell": dataclasses.asdict(self.cell),
            "module": dataclasses.asdict(self.module),
            "thermal": dataclasses.asdict(self.thermal),
            "processor": dataclasses.asdict(self.processor),
            "clustering": {
                "scheme": self.scheme,
                "threshold_fraction": self.night_day.threshold_fraction,
                "threshold_mode": self.threshold_mode,
                "n_slots": self.slots.n_slots,
            },
        }


def _build(cls, table: dict, name: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(table) - known
    if unknown:
        raise ConfigError(f"[{name}] unknown keys: {', '.join(sorted(unknown))}")
    try:
        return cls(**table)
    except TypeError as exc:
        raise ConfigError(f"[{name}] {exc}") from None


def config_from_dict(raw: dict, source: str = "") -> RunConfig:
    allowed = {"site", "panel", "cell", "module", "thermal", "processor", "clustering", "run", "sweep"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown tables: {', '.join(sorted(unknown))}")
    if "site" not in raw:
        raise ConfigError("[site] table is required")
    site = _build(SiteConfig, dict(raw["site"]), "site")
    kw: dict[str, Any] = {
        "site": site,
        "panel": _build(PanelOrientation, dict(raw.get("panel", {})), "panel"),
        "cell": _build(CellParams, dict(raw.get("cell", {})), "cell"),
        "module": _build(ModuleConfig, dict(raw.get("module", {})), "module"),
        "thermal": _build(ThermalModel, dict(raw.get("thermal", {})), "thermal"),
        "processor": _build(PowerProcessor, dict(raw.get("processor", {})), "processor"),
        "source": source,
    }
    cl = dict(raw.get("clustering", {}))
    unknown = set(cl) - {"scheme", "threshold_fraction", "threshold_mode", "n_slots"}
    if unknown:
        raise ConfigError(f"[clustering] unknown keys: {', '.join(sorted(unknown))}")
    kw["scheme"] = cl.get("scheme", NIGHT_DAY)
    kw["night_day"] = NightDayConfig(threshold_fraction=float(cl.get("threshold_fraction", 1 / 50)))
    kw["threshold_mode"] = cl.get("threshold_mode", "month")
    kw["slots"] = SlotConfig(int(cl.get("n_slots", 12)))

    run = dict(raw.get("run", {}))
    unknown = set(run) - {"months", "seed", "out", "data"}
    if unknown:
        raise ConfigError(f"[run] unknown keys: {', '.join(sorted(unknown))}")
    if "months" in run:
        kw["months"] = tuple(int(m) for m in run["months"])
    if "seed" in run:
        kw["seed"] = int(run["seed"])
    if "out" in run:
        kw["out"] = str(run["out"])
    if "data" in run:
        kw["data"] = _resolve(str(run["data"]), source)

    sweep = dict(raw.get("sweep", {}))
    unknown = set(sweep) - {"sizes", "sites"}
    if unknown:
        raise ConfigError(f"[sweep] unknown keys: {', '.join(sorted(unknown))}")
    try:
        kw["sweep_sizes"] = tuple((int(a), int(b)) for a, b in sweep.get("sizes", []))
    except (TypeError, ValueError):
        raise ConfigError("[sweep] sizes must be a list of [n_p, n_s] pairs") from None
    sites = []
    for entry in sweep.get("sites", []):
        entry = dict(entry)
        name = str(entry.pop("name", ""))
        data = entry.pop("data", None)
        merged = {**dataclasses.asdict(site), **entry, "name": name or site.name}
        sites.append(SweepSite(name or merged["name"], _build(SiteConfig, merged, "sweep.sites"),
                               None if data is None else _resolve(str(data), source)))
    kw["sweep_sites"] = tuple(sites)
    return RunConfig(**kw)


def _resolve(path: str, source: str) -> str:
    if os.path.isabs(path) or not source or source.startswith("<"):
        return path
    return os.path.join(os.path.dirname(os.path.abspath(source)), path)


def load_config(path=None) -> RunConfig:
    """Read a TOML run configuration; ``None`` loads the bundled Los Angeles file."""
    if path is None:
        text = resources.files("solarharvest").joinpath("data", BUNDLED_CONFIG).read_text()
        source = f"<bundled {BUNDLED_CONFIG}>"
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        source = os.fspath(path)
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return config_from_dict(raw, source)


def config_from_provenance(prov: dict) -> RunConfig:
    """Rebuild the harvesting and clustering settings recorded in a model file."""
    try:
        cl = prov["clustering"]
        return RunConfig(
            site=SiteConfig(**prov["site"]),
            panel=PanelOrientation(**prov["panel"]),
            cell=CellParams(**prov["cell"]),
            module=ModuleConfig(**prov["module"]),
            thermal=ThermalModel(**prov["thermal"]),
            processor=PowerProcessor(**prov["processor"]),
            scheme=cl["scheme"],
            night_day=NightDayConfig(threshold_fraction=cl["threshold_fraction"]),
            threshold_mode=cl["threshold_mode"],
            slots=SlotConfig(cl["n_slots"]),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"model provenance is incomplete: {exc!r}") from None
