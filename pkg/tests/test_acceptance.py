"""Acceptance criteria 1-9.  Each test records a pass/fail line that the
terminal summary prints; run with ``pytest tests/test_acceptance.py -v``."""

import os
import time
from pathlib import Path

import numpy as np
import pytest

from pspp import checks
from pspp.filters import forecast_metrics, pspp_dlm_step, pspp_initial_state, run_filter
from pspp.gsop import kronecker_correction
from pspp.io import ingest_csv
from pspp.simulation import SimSpec, run_experiment
from pspp.sop import ScalarVarBelief, sop_filter_step
from pspp.statespace import FilterState, StateSpaceSpec

from conftest import ACCEPTANCE, random_spd
from test_gsop import kronecker_by_loops

ROOT = Path(__file__).resolve().parents[1]


def record(n, ok, detail):
    ACCEPTANCE[n] = ("PASS" if ok else "FAIL", detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_criterion_1_sop_conjugate_identity():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    cases = [checks.sop_conjugate_case(rng) for _ in range(1000)]
    dt = time.perf_counter() - t0
    worst = {k: max(getattr(c, k) for c in cases) for k in ("mean_rel", "cov_rel", "disc_rel")}
    ok = all(v <= 1e-12 for v in worst.values()) and dt < 5.0
    record(1, ok, f"1000 cases, max rel {max(worst.values()):.2e}, {dt:.2f}s")


def test_criterion_2_variance_matching():
    rng = np.random.default_rng(2)
    worst = max(checks.sop_conjugate_case(rng).var_rel for _ in range(1000))
    record(2, worst <= 1e-12, f"1000 cases, max rel {worst:.2e}")


def test_criterion_3_theorem1_suite():
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    suite = checks.theorem1_suite(rng, 500, max_support=6)
    dt = time.perf_counter() - t0
    agree = sum(r.equivalent for _, r, _ in suite)
    designed = all(r.linear_mean == exp for _, r, exp in suite if exp is not None)
    record(3, agree == 500 and designed and dt < 10.0,
           f"{agree}/500 agree, constructions as designed: {designed}, {dt:.2f}s")


def test_criterion_4_postulate_factors():
    rng = np.random.default_rng(4)
    s = checks.postulate_summary(rng, draws=1_000_000, bins=10, n=30.0)
    dev = max(s["t"]["max_rel_dev"], s["inverted_t"]["max_rel_dev"])
    w = s["wishart"]
    wrel = abs(w["cond_var"] - w["resid_var"]) / abs(w["resid_var"])
    record(4, dev < 0.05 and wrel <= 1e-12,
           f"binned max rel dev {dev:.4f} (t, inverted t); wishart rel diff {wrel:.1e}")


@pytest.fixture(scope="module")
def experiments():
    t0 = time.perf_counter()
    res = {fam: run_experiment(SimSpec(fam, n_series=200, length=500, seed=0))
           for fam in ("LL", "LT", "LS")}
    return res, time.perf_counter() - t0


def test_criterion_5_table1(experiments):
    res, dt = experiments
    msse = {(f, m): r.metrics[m].msse for f, r in res.items() for m in ("DLM1", "DLM3")}
    ok = np.all(np.abs(msse["LL", "DLM1"] - [0.905, 1.045]) <= 0.15)
    ok &= np.all(np.abs(msse["LS", "DLM1"] - [1.054, 0.953]) <= 0.2)
    ok &= all(np.all(np.abs(msse[f, "DLM3"] - 1.0) <= 0.1) for f in res)
    ok &= all(not r.failures[m] for r in res.values() for m in r.failures)
    ok &= dt < 300
    detail = "; ".join(f"{f} {m} {np.round(v, 3).tolist()}" for (f, m), v in msse.items())
    record(5, bool(ok), f"{detail}; {dt:.0f}s")


def test_criterion_6_table2(experiments):
    res, _ = experiments
    ll = res["LL"]
    mean = ll.snapshot_mean[500]
    within = np.all(np.abs(mean - [0.988, 2.087, 5.215]) <= [0.3, 0.5, 1.0])
    sd = [ll.snapshot_sd[t] for t in (100, 200, 500)]
    shrink = all(np.all(b < a) for a, b in zip(sd, sd[1:]))
    record(6, bool(within and shrink),
           f"LL t500 mean {np.round(mean, 3).tolist()}, sd "
           + " > ".join(str(np.round(s, 3).tolist()) for s in sd))


def test_criterion_7_telescoping():
    rng = np.random.default_rng(7)
    # scalar: eta_t V_t = eta_0 V_0 + sum of tau
    state = FilterState([0.0, 0.0], np.eye(2), ScalarVarBelief(2.0, 1.0, 1.5))
    spec = StateSpaceSpec(b=[[1.0, 0.0]], c=[[1.0, 1.0], [0.0, 1.0]], w=0.1 * np.eye(2),
                          z=[[1.0]])
    total = 1.5 * 2.0
    for y in np.cumsum(rng.normal(size=1000)):
        state, rep = sop_filter_step(state, spec, [y])
        total += rep.tau
    b = state.var_belief
    scalar_rel = abs(b.eta * b.v_hat - total) / abs(total)

    # matrix: eta_t V_t = eta_0 V_0 + sum of (e e' - B R B')
    spec = StateSpaceSpec(b=np.eye(2), c=[[1.0, 1.0], [0.0, 1.0]], discounts=[0.9, 0.9])
    v0 = np.array([[2.0, 0.3], [0.3, 1.0]])
    state = pspp_initial_state(np.zeros(2), np.eye(2), v0, 1.0, np.zeros((3, 3)))
    total = v0.copy()
    for y in np.cumsum(rng.normal(size=(1000, 2)), axis=0):
        state, rep = pspp_dlm_step(state, spec, y)
        total += np.outer(rep.e, rep.e) - rep.extra["brb"]
    b = state.var_belief
    matrix_rel = np.abs(b.eta * b.v_hat - total).max() / np.abs(total).max()
    record(7, scalar_rel <= 1e-12 and matrix_rel <= 1e-12,
           f"1000 steps, scalar rel {scalar_rel:.1e}, matrix rel {matrix_rel:.1e}")


def test_criterion_8_kronecker_oracle():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(100):
        p, m = int(rng.integers(1, 4)), int(rng.integers(1, 5))
        d, left = rng.normal(size=p), rng.normal(size=(m, p))
        v2 = random_spd(rng, p * (p + 1) // 2)
        ref = kronecker_by_loops(d, left, v2)
        got = kronecker_correction(d, left, v2)
        worst = max(worst, np.abs(got - ref).max() / max(1.0, np.abs(ref).max()))
    record(8, worst <= 1e-10, f"100 instances, max diff {worst:.1e}")


def _us_data_path():
    env = os.environ.get("PSPP_US_DATA")
    if env:
        return Path(env)
    local = ROOT / "data" / "us_investment.csv"
    return local if local.exists() else None


def test_criterion_9_us_data():
    path = _us_data_path()
    if path is None:
        ACCEPTANCE[9] = ("SKIP", "no US investment CSV (set PSPP_US_DATA or add "
                                 "data/us_investment.csv)")
        pytest.skip("criterion 9 skipped: US investment/inventory CSV not supplied; set "
                    "PSPP_US_DATA or add data/us_investment.csv")
    obs = ingest_csv(path, time_column=os.environ.get("PSPP_US_TIME_COLUMN"))
    spec = StateSpaceSpec(b=np.eye(2), c=[[1.0, 1.0], [0.0, 1.0]], discounts=[0.2, 0.4])
    v0 = np.array([[66.403, 22.239], [22.239, 46.547]])
    state = pspp_initial_state(np.array([80.622, 4.047]), 1000 * np.eye(2), v0, 1.0,
                               np.zeros((3, 3)))
    _, reports = run_filter(obs.values[:, :2], spec, state)
    msse = forecast_metrics(reports).msse
    ok = np.all(np.abs(msse - [1.001, 1.101]) <= 0.05)
    record(9, bool(ok), f"{obs.n_rows} rows, MSSE {np.round(msse, 4).tolist()}")
