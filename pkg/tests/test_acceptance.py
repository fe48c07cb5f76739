"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``[criterion N] PASS|FAIL ...`` line and then asserts.
"""

import math
import time

import numpy as np
import pytest

from ifdetect.bank import EXCLUDE_FIRST, BankState, WindowInterval, audit_excursions, intersect_inferences, run
from ifdetect.detectability import (
    IFParams,
    admissible_windows,
    alarm_delays,
    if_detectable,
    whitened_shift,
)
from ifdetect.monitor import extract_alarms, t2_series
from ifdetect.simkit import (
    CSTR_FAULT_DIRECTION,
    EXAMPLE_COV,
    EXAMPLE_DIRECTION,
    EXAMPLE_MEAN,
    CstrConfig,
    FaultSchedule,
    acceptance_edge_stream,
    cstr_scenario,
    cstr_simulate,
    gen_gaussian_stream,
    inject_faults,
    numerical_scenario,
)
from ifdetect.stat_core import ChartConfig, GaussianModel, control_limit, control_limit_from, fit_model, hotelling_t2

ALPHA = 0.01


def _report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'} {detail}")


def _scenario_params(direction):
    return IFParams(direction, 4.0, 10, 10, 10, is_lower_bound=True)


def test_c1_control_limit_identity(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for n in (50, 500, 5000):
        for p in (2, 4):
            d2 = control_limit_from(n, p, ALPHA, 1)
            for w in range(1, 21):
                lhs = control_limit_from(n, p, ALPHA, w)
                rhs = d2 * (n + w) / (w * (n + 1))
                worst = max(worst, abs(lhs - rhs) / rhs)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    _report(capsys, 1, ok, f"max relative error {worst:.2e}, {elapsed:.3f}s")
    assert worst <= 1e-12
    assert elapsed < 1.0


def test_c2_admissible_windows(capsys):
    t0 = time.perf_counter()
    params = _scenario_params(EXAMPLE_DIRECTION)
    pop = admissible_windows(GaussianModel.from_moments(EXAMPLE_MEAN, EXAMPLE_COV, 5000), params, ALPHA)
    hits = sum(
        admissible_windows(fit_model(numerical_scenario(seed).train), params, ALPHA) == range(7, 11)
        for seed in range(50)
    )
    elapsed = time.perf_counter() - t0
    ok = pop == range(7, 11) and hits >= 45 and elapsed < 10
    _report(capsys, 2, ok, f"population {list(pop)}, estimated S [7,10] in {hits}/50 seeds, {elapsed:.2f}s")
    assert pop == range(7, 11)
    assert hits >= 45
    assert elapsed < 10


def test_c3_delay_formulas(capsys, example_model, example_params):
    t0 = time.perf_counter()
    d = alarm_delays(example_model, example_params, 7, ALPHA)
    # fault-free window means held just inside the acceptance edge realise the worst case exactly
    mu, nu, n = 201, 226, 300
    shift = np.array(EXAMPLE_DIRECTION) * 4.0
    signs = np.where(np.arange(1, n + 1) < nu, -1, 1)
    x = inject_faults(acceptance_edge_stream(example_model, 7, shift, signs, ALPHA), FaultSchedule([(mu, nu, EXAMPLE_DIRECTION, 4.0)]))
    lim = control_limit(example_model, ChartConfig(ALPHA, 7))
    alarms = extract_alarms(t2_series(example_model, x, 7) > lim, first_index=7).alarms
    elapsed = time.perf_counter() - t0
    ok = (d.mu_delay, d.nu_delay) == (6, 6) and alarms == [(mu + 6, nu + 6)] and elapsed < 5
    _report(capsys, 3, ok, f"mu_d={d.mu_delay} nu_d={d.nu_delay}, simulated alarm {alarms}, {elapsed:.2f}s")
    assert (d.mu_delay, d.nu_delay) == (6, 6)
    assert alarms == [(mu + 6, nu + 6)]
    assert elapsed < 5


def test_c4_null_calibration(capsys):
    t0 = time.perf_counter()
    model = fit_model(gen_gaussian_stream(EXAMPLE_MEAN, EXAMPLE_COV, 5000, 2024))
    rates = {}
    for w in (1, 7, 10):
        m = 100_000
        x = gen_gaussian_stream(EXAMPLE_MEAN, EXAMPLE_COV, m * w, 3000 + w)
        means = x.reshape(m, w, 2).mean(axis=1)
        t2 = np.array([hotelling_t2(model, v) for v in means]) if w == 1 else None
        if t2 is None:
            t2 = t2_series(model, x, w)[::w]
        assert t2.shape[0] == m
        rates[w] = float(np.mean(t2 > control_limit(model, ChartConfig(ALPHA, w))))
    elapsed = time.perf_counter() - t0
    inside = all(0.5 * ALPHA <= r <= 2 * ALPHA for r in rates.values())
    _report(capsys, 4, inside and elapsed < 60, f"alarm rates {rates}, {elapsed:.1f}s")
    assert inside, rates
    assert elapsed < 60


def test_c5_end_to_end_numerical(capsys):
    # fixed-input cross-window intersection
    per = {
        7: WindowInterval(7, 197, 203, 223, 229),
        8: WindowInterval(8, 197, 204, 223, 230),
        9: WindowInterval(9, 197, 204, 223, 230),
        10: WindowInterval(10, 196, 204, 223, 231),
    }
    ep = intersect_inferences(per, 1)
    assert (ep.mu_lo, ep.mu_hi) == (197, 203)

    t0 = time.perf_counter()
    params = _scenario_params(EXAMPLE_DIRECTION)
    n_seeds, good, contained, total, unexplained = 200, 0, 0, 0, 0
    audit = []
    for seed in range(n_seeds):
        sc = numerical_scenario(seed)
        model = fit_model(sc.train)
        rep = run(BankState(model, params, ALPHA, order=EXCLUDE_FIRST), sc.faulty)
        conf = rep.confirmed
        w_sharp = max(rep.windows)
        spans = []
        for e in sc.schedule:
            total += 1
            if any(c.contains(e.mu, e.nu) for c in conf):
                contained += 1
            else:
                spans.append(("missed", e.mu - w_sharp, e.nu + 2 * w_sharp))
        for c in conf:
            if not any(c.contains(e.mu, e.nu) for e in sc.schedule):
                lo = (c.mu_lo if c.mu_lo is not None else 0) - w_sharp
                hi = (c.nu_hi if c.nu_hi is not None else len(sc.faulty)) + 2 * w_sharp
                spans.append(("spurious", lo, hi))
        if len(conf) == len(sc.schedule) and not spans:
            good += 1
            continue
        exc = audit_excursions(model, sc.clean, rep.windows, ALPHA)
        ks = sorted({k for v in exc.values() for k in v})
        for kind, lo, hi in spans or [("count", 0, len(sc.faulty))]:
            hit = [k for k in ks if lo <= k <= hi]
            unexplained += not hit
            audit.append(f"seed {seed}: {kind} [{lo}, {hi}] confirmed={len(conf)} excursions at {hit[:5]}")
    elapsed = time.perf_counter() - t0
    rate = good / n_seeds
    ok = rate >= 0.95 and unexplained == 0 and elapsed < 120
    with capsys.disabled():
        print("\naudit trace of failing seeds:")
        for line in audit:
            print("  " + line)
    _report(
        capsys, 5, ok,
        f"{good}/{n_seeds} seeds fully correct ({rate:.1%}), {contained}/{total} episodes contained, "
        f"{unexplained} failures without an acceptance-region excursion, {elapsed:.1f}s",
    )
    assert unexplained == 0
    assert elapsed < 120
    assert rate >= 0.95


def _random_tuple(rng):
    n = int(rng.integers(20, 6000))
    p = int(rng.integers(1, 5))
    a = rng.normal(size=(p, p))
    model = GaussianModel.from_moments(np.zeros(p), a @ a.T + 0.1 * np.eye(p), n)
    direction = rng.normal(size=p)
    taus = rng.integers(1, 40, size=3)
    return model, IFParams(direction, float(rng.uniform(0.05, 6.0)), *taus)


def _per_window_conditions(model, params, w):
    # per-window conditions written out independently of the library's inequality solver
    if w > params.tau_off_prev or w > params.tau_off_next:
        return False
    s = whitened_shift(model, params)
    two_delta_w = 2.0 * math.sqrt(control_limit(model, ChartConfig(ALPHA, w)))
    if w <= params.tau_on:
        return s > two_delta_w
    return s * params.tau_on / w > two_delta_w


def test_c6_detectability_equivalences(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(77)
    bad, n_detectable = [], 0
    for i in range(10_000):
        model, params = _random_tuple(rng)
        wins = admissible_windows(model, params, ALPHA)
        oracle = [w for w in range(1, max(params.tau_off_prev, params.tau_off_next) + 2) if _per_window_conditions(model, params, w)]
        det = if_detectable(model, params, ALPHA)
        n_detectable += det
        if list(wins) != oracle or det != _per_window_conditions(model, params, params.w_sharp):
            bad.append((i, params, list(wins), oracle, det))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 30
    _report(capsys, 6, ok, f"{len(bad)} counterexamples in 10000 tuples ({n_detectable} detectable), {elapsed:.1f}s")
    assert not bad, bad[:3]
    assert elapsed < 30


def test_c7_cstr(capsys):
    t0 = time.perf_counter()
    cfg = CstrConfig()
    x = cstr_simulate(cfg, 400, 0, zero_noise=True)
    drift = float(np.max(np.abs(x - x[0]) / np.abs(x[0])))
    params = _scenario_params(CSTR_FAULT_DIRECTION)
    n_seeds, good, contained, total, ranges = 100, 0, 0, 0, set()
    for seed in range(n_seeds):
        sc = cstr_scenario(seed, cfg)
        model = fit_model(sc.train)
        bank = BankState(model, params, ALPHA, order=EXCLUDE_FIRST)
        ranges.add((bank.windows[0], bank.windows[-1]))
        conf = run(bank, sc.faulty).confirmed
        hits = sum(any(c.contains(e.mu, e.nu) for c in conf) for e in sc.schedule)
        contained += hits
        total += len(sc.schedule)
        good += len(conf) == len(sc.schedule) == hits
    elapsed = time.perf_counter() - t0
    rate = good / n_seeds
    ok = drift < 1e-9 and rate >= 0.90 and elapsed < 180
    _report(
        capsys, 7, ok,
        f"zero-noise relative drift {drift:.1e}; windows {sorted(ranges)}; {good}/{n_seeds} seeds fully correct "
        f"({rate:.0%}), {contained}/{total} episodes contained, {elapsed:.1f}s",
    )
    assert drift < 1e-9
    assert elapsed < 180
    assert rate >= 0.90


def test_c8_midpoint_construction(capsys, example_model):
    t0 = time.perf_counter()
    u = np.array(EXAMPLE_DIRECTION)
    unit = whitened_shift(example_model, IFParams(u, 1.0, 10, 10, 10))
    worst = -math.inf
    for w in range(1, 21):
        lim = control_limit(example_model, ChartConfig(ALPHA, w))
        f = 2.0 * math.sqrt(lim) / unit
        clean_mean = example_model.mean_hat - u * f / 2
        for mean in (clean_mean, clean_mean + u * f):
            t2 = hotelling_t2(example_model, mean)
            assert t2 == pytest.approx(lim, rel=1e-12)
            worst = max(worst, (t2 - lim) / lim)
        assert not hotelling_t2(example_model, clean_mean + u * f * (1 - 1e-9)) > lim
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    _report(capsys, 8, ok, f"T2/limit - 1 at most {worst:.1e} on both sides of the fault, {elapsed:.3f}s")
    assert elapsed < 1.0
