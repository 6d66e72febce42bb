"""Acceptance gate: one PASS/FAIL line per criterion (printed in the pytest summary).

Criterion 9 needs real Los Angeles hourly data; point SOLARHARVEST_LA_CSV at a
conforming CSV (ten or more years) to run it, otherwise it is reported as SKIP.
"""

import os
import time

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from solarharvest import astro, pipeline, pv
from solarharvest.cli import main
from solarharvest.clustering import DAY_STATE, NIGHT_DAY, SLOT, SlotConfig, slot_cluster
from solarharvest.density import fit_kde
from solarharvest.ingest import group_by_month, parse_csv, write_csv
from solarharvest.markov import generate_trace
from solarharvest.power import cell_mpp, mpp_power
from solarharvest.pv import CellParams, ModuleConfig
from solarharvest.validate import ks_test, summary_stats

from conftest import ACCEPTANCE

LA_DATA_ENV = "SOLARHARVEST_LA_CSV"


def report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


def test_criterion_1_astro_anchors():
    t0 = time.perf_counter()
    d81, d172 = astro.declination(81), astro.declination(172)
    rng = np.random.default_rng(101)
    decl, omega = rng.uniform(-23.45, 23.45, 1000), rng.uniform(-180, 180, 1000)
    lat, az = rng.uniform(-90, 90, 1000), rng.uniform(-90, 90, 1000)
    g, w, la = np.radians(decl), np.radians(omega), np.radians(lat)
    zenith = np.sin(la) * np.sin(g) + np.cos(la) * np.cos(g) * np.cos(w)
    err = float(np.max(np.abs(astro._cos_incidence(decl, omega, lat, 0.0, az) - zenith)))
    dt_s = time.perf_counter() - t0
    ok = d81 == 0.0 and abs(d172 - 23.44) <= 0.05 and err <= 1e-12 and dt_s < 1.0
    report(1, ok, f"decl(81)={d81:g} decl(172)={d172:.4f} flat-panel max err={err:.1e} runtime={dt_s:.2f}s")


def test_criterion_2_pv_anchors():
    cell, T = CellParams(), 298.15
    i0 = pv.cell_current(0.0, 1.0, cell, T)
    ivoc = pv.cell_current(cell.v_oc_v, 1.0, cell, T)
    anchors = abs(i0 - cell.i_sc_a) <= 1e-12 * cell.i_sc_a and abs(ivoc) <= 1e-12 * cell.i_sc_a
    rng = np.random.default_rng(102)
    mono = affine = 0
    for _ in range(1000):
        c = CellParams(i_sc_a=rng.uniform(1e-3, 5), v_oc_v=rng.uniform(0.3, 2.5), ideality=rng.uniform(1, 2))
        Tk, F = rng.uniform(250, 350), rng.uniform(0, 1)
        v = np.sort(rng.uniform(0, c.v_oc_v, 2))
        i = pv.cell_current(v, F, c, Tk)
        mono += bool(i[0] >= i[1])
        F1, F2 = rng.uniform(0, 1, 2)
        a, b, m = pv.cell_current(v[0], np.array([F1, F2, (F1 + F2) / 2]), c, Tk)
        affine += bool(abs(m - (a + b) / 2) <= 1e-12 * c.i_sc_a)
    ok = anchors and mono == 1000 and affine == 1000
    report(2, ok, f"i(0)-i_sc={i0 - cell.i_sc_a:.1e} i(v_oc)={ivoc:.1e} monotone {mono}/1000 affine {affine}/1000")


def test_criterion_3_mpp():
    t0 = time.perf_counter()
    rng = np.random.default_rng(103)
    worst = 0.0
    for _ in range(200):
        c = CellParams(i_sc_a=rng.uniform(1e-3, 1), v_oc_v=rng.uniform(0.4, 2.5), ideality=rng.uniform(1, 2))
        F, T = rng.uniform(0.01, 1), rng.uniform(260, 340)
        p, _ = cell_mpp(F, c, T)
        v = np.arange(0.0, float(pv.open_circuit_voltage(F, c, T)) + 1e-5, 1e-5)
        p_grid = float(np.max(v * pv.cell_current(v, F, c, T)))
        worst = max(worst, abs(p - p_grid) / p_grid)
    F = rng.uniform(0, 1, 200)
    base, _ = mpp_power(F, CellParams(), ModuleConfig(1, 1), 298.15)
    scale_err = 0.0
    for n_p, n_s in [(2, 2), (6, 6), (3, 5), (12, 12)]:
        p, _ = mpp_power(F, CellParams(), ModuleConfig(n_p, n_s), 298.15)
        nz = base > 0
        scale_err = max(scale_err, float(np.max(np.abs(p[nz] / (n_p * n_s * base[nz]) - 1))))
    dt_s = time.perf_counter() - t0
    ok = worst <= 1e-6 and scale_err <= 1e-12 and dt_s < 10
    report(3, ok, f"max rel gap to 1e-5 V grid={worst:.1e} scaling err={scale_err:.1e} runtime={dt_s:.1f}s")


def test_criterion_4_kde():
    t0 = time.perf_counter()
    rng = np.random.default_rng(104)
    kde = fit_kde(rng.gamma(2.0, 1.0, 500), 0.0, 12.0)
    norm = quad(kde.pdf, 0.0, 12.0, limit=500)[0]
    grid = np.linspace(-1, 13, 5001)
    monotone = bool(np.all(np.diff(kde.cdf(grid)) >= 0))
    draws = kde.sample(np.random.default_rng(105), size=100_000)
    ks_self = stats.kstest(draws, kde.cdf).statistic
    tn = stats.truncnorm(-0.5 / 0.6, 1.5 / 0.6, loc=0.5, scale=0.6)
    rec = fit_kde(tn.rvs(10_000, random_state=np.random.default_rng(106)), 0.0, 2.0)
    g = np.linspace(0, 2, 4001)
    ks_rec = float(np.max(np.abs(rec.cdf(g) - tn.cdf(g))))
    dt_s = time.perf_counter() - t0
    ok = abs(norm - 1) <= 1e-3 and monotone and ks_self < 0.01 and ks_rec < 0.02 and dt_s < 30
    report(4, ok, f"integral={norm:.6f} monotone={monotone} self-KS={ks_self:.4f} "
                  f"truncnorm KS={ks_rec:.4f} runtime={dt_s:.1f}s")


@pytest.fixture(scope="module")
def jan_models(la_config, fixture_ds):
    nd, _ = pipeline.fit_month(la_config, fixture_ds, 1)
    slot, _ = pipeline.fit_month(la_config.replace(scheme=SLOT, slots=SlotConfig(12)), fixture_ds, 1)
    return nd, slot


def test_criterion_5_ks_calibration(jan_models):
    dist = jan_models[0].states[DAY_STATE].current
    shift = 10 * dist.bandwidth
    passes = rejects = 0
    for seed in range(100):
        x = dist.sample(np.random.default_rng(seed), size=1000)
        passes += ks_test(x, dist.cdf, 0.01).passed
        rejects += not ks_test(x + shift, dist.cdf, 0.01).passed
    report(5, passes >= 95 and rejects >= 99,
           f"self-sampled pass rate {passes}/100, shifted (+{shift:.2e} A) rejected {rejects}/100")


def test_criterion_6_structure(jan_models, la_config, fixture_ds):
    nd, slot = jan_models
    nd_ok = nd.transitions.tolist() == [[0.0, 1.0], [1.0, 0.0]]
    slot_ok = np.array_equal(slot.transitions, np.roll(np.eye(12), 1, axis=1))
    t = generate_trace(slot, 24 * 60, seed=1)
    sojourn_ok = all(s.duration_h == 2.0 for s in t.sojourns) and all(
        v.duration_h == 2.0 for v in slot_cluster(pipeline.harvest(la_config, fixture_ds), SlotConfig(12)))
    _, visits = pipeline.fit_month(la_config, fixture_ds, 1)
    tn = generate_trace(nd, 24 * 365, seed=1)
    alt = [v.state for v in visits]
    alt_t = [s.state for s in tn.sojourns]
    alternate = all(a != b for a, b in zip(alt, alt[1:])) and all(a != b for a, b in zip(alt_t, alt_t[1:]))
    ok = nd_ok and slot_ok and sojourn_ok and alternate
    report(6, ok, f"night-day P exact={nd_ok} slot P cyclic={slot_ok} slot sojourns = T={sojourn_ok} "
                  f"night-day alternation={alternate}")


def test_criterion_7_acf_ordering(jan_models, la_config, fixture_ds):
    # exactly what `solarharvest validate` reports with its defaults
    t0 = time.perf_counter()
    rep = pipeline.validate_month(jan_models[0], la_config, fixture_ds, seed=1)
    dt_s = time.perf_counter() - t0
    d2, d12 = rep.deviations["slots_2"], rep.deviations["slots_12"]
    ok = d12 < d2 and d12 <= 0.1 and dt_s < 60
    report(7, ok, f"max |dACF| lags 0-48 h: N_s=2 {d2:.4f}, N_s=12 {d12:.4f} (bound 0.1) runtime={dt_s:.1f}s")


def test_criterion_8_determinism(tmp_path, fixture_ds):
    data = tmp_path / "fixture.csv"
    write_csv(fixture_ds, data)

    def run(out):
        assert main(["-q", "fit", "--data", str(data), "--months", "1", "--out", str(out)]) == 0
        model = out / "model_night-day_m01.json"
        assert main(["-q", "generate", "--model", str(model), "--horizon-h", "720", "--seed", "9",
                     "--out", str(out)]) == 0
        assert main(["-q", "validate", "--model", str(model), "--data", str(data), "--seed", "9",
                     "--out", str(out)]) == 0
        return {p.name: p.read_bytes() for p in sorted(out.iterdir())}

    a, b = run(tmp_path / "a"), run(tmp_path / "b")
    report(8, a == b and len(a) == 6, f"{len(a)} output files, byte-identical={a == b}")


def test_criterion_9_los_angeles_table(la_config):
    path = os.environ.get(LA_DATA_ENV)
    if not path:
        ACCEPTANCE.append(f"criterion 9: SKIP dataset absent (set {LA_DATA_ENV})")
        pytest.skip(f"{LA_DATA_ENV} not set")
    groups = group_by_month(parse_csv(path, la_config.site))
    targets = {8: (0.021292, 10.26), 12: (0.011189, 8.38)}
    parts, ok = [], True
    for month, (i_ref, tau_ref) in targets.items():
        _, visits = pipeline.fit_month(la_config.replace(scheme=NIGHT_DAY), groups[month], month)
        s = summary_stats(visits, month)[DAY_STATE]
        good = abs(s.mean_current_a / i_ref - 1) <= 0.2 and abs(s.mean_duration_h - tau_ref) <= 1.0
        ok &= good
        parts.append(f"m{month:02d} mean i={s.mean_current_a:.6f} A mean tau={s.mean_duration_h:.2f} h")
    report(9, ok, "; ".join(parts))
