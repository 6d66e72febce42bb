import numpy as np
import pytest

from solarharvest.config import load_config
from solarharvest.fixture import clear_sky_dataset
from solarharvest.ingest import Dataset, RadianceRecord, SiteConfig


@pytest.fixture(scope="session")
def la_config():
    return load_config()


@pytest.fixture(scope="session")
def fixture_ds():
    """The bundled 30-day January clear-sky dataset."""
    return clear_sky_dataset()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_dataset(rows, site=None, label="test"):
    """Dataset from (year, doy, hour, ghi) tuples."""
    site = site or SiteConfig(34.05, -118.24, -8.0)
    recs = tuple(RadianceRecord(float(h), int(n), int(y), float(g)) for y, n, h, g in rows)
    return Dataset(site, recs, label)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
