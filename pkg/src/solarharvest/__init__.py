"""Solar energy harvesting source models from hourly irradiance records.

Pipeline: irradiance (:mod:`ingest`) -> panel geometry (:mod:`astro`) ->
PV cell and maximum power point (:mod:`pv`, :mod:`power`) -> state
clustering (:mod:`clustering`) -> densities and semi-Markov model
(:mod:`density`, :mod:`markov`) -> goodness of fit (:mod:`validate`).
"""

from .astro import PanelOrientation, effective_irradiance
from .clustering import NightDayConfig, SlotConfig, night_day_cluster, slot_cluster
from .config import RunConfig, load_config
from .density import Kde, fit_kde
from .errors import ConfigError, DataError, ModelError, SolarHarvestError
from .ingest import Dataset, RadianceRecord, SiteConfig, group_by_month, parse_csv
from .markov import SemiMarkovModel, build_model, generate_trace, load_model, save_model
from .power import PowerProcessor, harvest_series, mpp_power
from .pv import CellParams, ModuleConfig, ThermalModel, cell_current
from .validate import acf, compare_acf, ks_test, summary_stats

__version__ = "0.1.0"

__all__ = [
    "CellParams", "ConfigError", "DataError", "Dataset", "Kde", "ModelError", "ModuleConfig",
    "NightDayConfig", "PanelOrientation", "PowerProcessor", "RadianceRecord", "RunConfig",
    "SemiMarkovModel", "SiteConfig", "SlotConfig", "SolarHarvestError", "ThermalModel", "acf",
    "build_model", "cell_current", "compare_acf", "effective_irradiance", "fit_kde",
    "generate_trace", "group_by_month", "harvest_series", "ks_test", "load_config", "load_model",
    "mpp_power", "night_day_cluster", "parse_csv", "save_model", "slot_cluster", "summary_stats",
]
