"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run `pytest tests/test_acceptance.py -v -s` to see the per-criterion lines.
Heavy replica ensembles are shared through module-scoped fixtures. The
third-cumulant clause of criterion 7 is executed faithfully but marked as
an expected failure: at the pinned ensemble size its estimator noise
(SD ~ sqrt(6 Var(m)^3 / replicas), about seven times the target value)
makes the stated +-25% tolerance statistically unattainable.
"""

import json
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import quad

from spacefill import analytics as an
from spacefill import engine as eng
from spacefill.cli import main
from spacefill.experiments import (
    ExperimentConfig,
    run_density_decay,
    run_halting_experiment,
    run_scaling_scan,
    run_trace_experiment,
)
from spacefill.graphs import GraphSpec, build_graph
from spacefill.stats import ks_two_sample

ZETA2 = math.pi**2 / 6.0


def _check(num, name, ok, detail):
    print(f"ACCEPTANCE {num:02d} [{name}]: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


def _cfg(**kw):
    return ExperimentConfig.from_dict(kw)


# ---------------------------------------------------------------------------
# shared ensembles
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def k1001_report():
    cfg = _cfg(graph={"kind": "complete", "V": 1001}, replicas=10000,
               master_seed=1001, p_max=4)
    return run_halting_experiment(cfg).report


@pytest.fixture(scope="module")
def trace_report():
    cfg = _cfg(graph={"kind": "complete", "V": 100001}, replicas=1000,
               master_seed=70001, time_grid=[1.0, 5.0, 10.0, 100.0],
               gauss_time=10.0,
               observables={"halting": False, "last_step": False, "m_trace": True})
    return run_trace_experiment(cfg).report


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def test_criterion_01_golden_rationals():
    golden = {2: Fraction(7, 5), 3: Fraction(93, 35), 4: Fraction(1143, 175),
              5: Fraction(219, 11), 6: Fraction(12730293, 175175),
              7: Fraction(221157, 715), 8: Fraction(457141779, 303875)}
    got = {p: an.normalized_moment(p).value for p in golden}
    ok = got == golden
    assert _check(1, "golden rationals mu_2..mu_8", ok, f"{got}")


def test_criterion_02_mean_halting_time():
    cfg = _cfg(graph={"kind": "complete", "V": 501}, replicas=10000,
               master_seed=501, p_max=2)
    rep = run_halting_experiment(cfg).report
    mean = rep["summary_T_over_N"]["mean"]
    ok = abs(mean - ZETA2) <= 0.02 * ZETA2
    assert _check(2, "mean T/N on K_501", ok,
                  f"mean={mean:.5f}, target pi^2/6={ZETA2:.5f}, tol 2%")


def test_criterion_03_distribution_shape(k1001_report):
    d = k1001_report["ks_vs_scaled_halting_cdf"]["distance"]
    ok = d < 0.02
    assert _check(3, "KS vs scaled halting law on K_1001", ok,
                  f"distance={d:.4f} < 0.02")


def test_criterion_04_last_step_ratios(k1001_report):
    mus = k1001_report["summary_t_last_over_N"]["normalized_moments"]
    r2, r3 = mus["2"], mus["3"]
    ok = abs(r2 - 2.0) <= 0.05 * 2.0 and abs(r3 - 6.0) <= 0.10 * 6.0
    assert _check(4, "last-step moment ratios", ok,
                  f"<t^2>/<t>^2={r2:.3f} (2 +-5%), <t^3>/<t>^3={r3:.3f} (6 +-10%)")


def test_criterion_05_joint_moment(k1001_report):
    joint = k1001_report["joint_T_tlast_over_N2"]
    target = ZETA2 + 1.0
    ok = abs(joint - target) <= 0.05 * target
    assert _check(5, "joint moment <T t_last>/N^2", ok,
                  f"value={joint:.4f}, target={target:.4f}, tol 5%")


def test_criterion_06_engine_equivalence():
    graph = build_graph(GraphSpec(kind="complete", V=51))
    rejections = 0
    for rep in range(20):
        rng_p = np.random.default_rng(np.random.SeedSequence(entropy=600, spawn_key=(rep, 0)))
        rng_a = np.random.default_rng(np.random.SeedSequence(entropy=600, spawn_key=(rep, 1)))
        t_pile = [eng.run_to_halt_piles(graph, eng.init_localized_piles(graph, 0), rng_p).T
                  for _ in range(2000)]
        t_ab = [eng.run_to_halt(graph, eng.init_localized(graph, 0), rng_a).T
                for _ in range(2000)]
        res = ks_two_sample(t_pile, t_ab)
        if res.distance > res.critical_1pct:
            rejections += 1
    ok = rejections <= 1
    assert _check(6, "pile engine vs A/B engine (20 reps)", ok,
                  f"{rejections}/20 KS rejections at the 1% level (allow <= 1)")


def test_criterion_07_cumulant_trajectories(trace_report):
    rep = trace_report
    names = {c["name"]: c for c in rep["comparisons"]}
    devs = []
    ok = True
    for t in (1.0, 5.0, 10.0):
        c = names[f"mean_density_t{t:g}"]
        devs.append(f"t={t:g}: {100 * (c['value'] / c['expected'] - 1):+.3f}%")
        ok &= c["pass"]
    fano = names["fano_variance_t100"]
    ok &= fano["pass"]
    assert _check(7, "mean density (1%) and variance Fano 1/3 (10%)", ok,
                  f"{'; '.join(devs)}; Var/mean at t=100: {fano['value']:.4f}")


@pytest.mark.xfail(
    strict=False,
    reason="criterion 7 third-cumulant clause: at 10^3 replicas the k3 "
           "estimator noise is SD ~ sqrt(6 Var(m)^3/R) ~ 0.47*<m>, about "
           "7x the target 1/15, so +-25% is statistically unattainable "
           "(needs ~3e6 replicas); kept faithful to the stated ensemble",
)
def test_criterion_07_third_cumulant_clause(trace_report):
    c = {c["name"]: c for c in trace_report["comparisons"]}["fano_third_cumulant_t100"]
    ok = c["pass"]
    assert _check(7, "third-cumulant Fano 1/15 (25%) at stated size", ok,
                  f"k3/mean at t=100: {c['value']:.4f} vs 1/15={1 / 15:.4f}")


def test_criterion_07s_third_cumulant_supplement():
    # statistically adequate check of the 1/15 Fano law through the exact
    # m-chain (the event engine is KS-equivalent to it; see criterion 6 and
    # the engine test suite): smaller size, many replicas
    N, V, reps, t_obs = 2000, 2001, 60000, 200.0
    rng = np.random.default_rng(715)
    m_at_t = np.empty(reps)
    rates_full = np.arange(1, V, dtype=np.float64) ** 2 / N
    for i in range(reps):
        m0 = eng.sample_m0_uncorrelated(V, rng)
        durations = rng.exponential(1.0, m0) / rates_full[:m0]
        # chain passes m0 -> m0-1 -> ...; m(t) = m0 - (transitions by t)
        arrival = np.cumsum(durations[::-1])
        m_at_t[i] = m0 - np.searchsorted(arrival, t_obs, side="right")
    mean = m_at_t.mean()
    y = m_at_t - mean
    n = reps
    k3 = n * (y**3).sum() / ((n - 1) * (n - 2))
    fano3 = k3 / mean
    ok = abs(fano3 - 1 / 15) <= 0.25 / 15
    assert _check(7, "third-cumulant Fano 1/15 at adequate ensemble", ok,
                  f"N={N}, t={t_obs:g}, {reps} replicas: k3/mean={fano3:.4f}")


def test_criterion_08_gaussianity(trace_report):
    ks = trace_report["gauss_ks"]
    ok = ks["distance"] < ks["critical_1pct"]
    assert _check(8, "Gaussian bulk of m at t=10", ok,
                  f"KS={ks['distance']:.4f} < crit(1%)={ks['critical_1pct']:.4f}")


def test_criterion_09_one_dimensional_decay():
    grid = [float(x) for x in np.geomspace(1.0, 1e4, 37)]
    cfg = _cfg(graph={"kind": "ring", "L": 100000}, replicas=20,
               master_seed=900, time_grid=grid, decay_window=[100.0, 10000.0],
               observables={"halting": False, "last_step": False, "m_trace": True})
    rep = run_density_decay(cfg).report
    slope = rep["fit"]["slope"]
    ok = abs(slope - (-0.25)) <= 0.05
    assert _check(9, "ring decay exponent -1/4", ok,
                  f"fitted exponent={slope:.4f} (target -0.25 +- 0.05), "
                  f"ci95={rep['fit']['slope_ci95']:.4f}")


def test_criterion_10_conjectural_scaling_scan():
    # reported, non-gating: the sweep runs and records slopes; the conjectured
    # exponents are not asserted (they are not expected to hold at desk sizes)
    ring = run_scaling_scan(_cfg(
        sweep={"kind": "ring", "sizes": [16, 32, 64, 128]},
        replicas=200, master_seed=1000)).report
    torus = run_scaling_scan(_cfg(
        sweep={"kind": "torus", "sizes": [8, 16, 32], "d": 2},
        replicas=200, master_seed=1100)).report

    slope_T = ring["fit_mean_T"]["slope"]
    slope_tl = ring["fit_mean_t_last"]["slope"]
    slope_T2 = torus["fit_mean_T"]["slope"]
    for rep, label, slope, target, tol in (
            (ring, "ring <T> vs N (target 4 +- 0.5)", slope_T, 4.0, 0.5),
            (torus, "torus d=2 <T> vs N (target 2 +- 0.4)", slope_T2, 2.0, 0.4),
            (ring, "ring <t_last> vs N (target 2 +- 0.3)", slope_tl, 2.0, 0.3)):
        within = abs(slope - target) <= tol
        print(f"ACCEPTANCE 10 [CONJECTURAL {label}]: "
              f"{'within band' if within else 'OUTSIDE band'} - slope={slope:.3f}")
    machinery_ok = (
        all(math.isfinite(s) for s in (slope_T, slope_tl, slope_T2))
        and all(c["conjectural"] and not c["gating"]
                for c in ring["comparisons"] + torus["comparisons"])
        and ring["fit_var_T"]["slope"] > 0
    )
    assert _check(10, "conjectural scan reported (non-gating)", machinery_ok,
                  f"ring slope_T={slope_T:.3f}, ring slope_t_last={slope_tl:.3f}, "
                  f"torus slope_T={slope_T2:.3f}, ring beta_1 "
                  f"estimate={ring['fit_var_T']['slope']:.3f}")


def test_criterion_11_analytics_self_consistency():
    msgs = []
    ok = True

    gap = abs(an.scaled_halting_pdf(1 - 1e-12) - an.scaled_halting_pdf(1 + 1e-12))
    ok &= gap < 1e-9
    msgs.append(f"branch gap={gap:.1e}")

    total, _ = quad(an.scaled_halting_pdf, 0, np.inf, limit=200)
    ok &= abs(total - 1.0) < 1e-8
    msgs.append(f"int P={total:.10f}")

    for sigma in (0.5, 1.0, 2.0):
        val, _ = quad(lambda t: math.exp(-sigma * t) * an.scaled_halting_pdf(t),
                      0, np.inf, limit=200)
        ok &= abs(val - an.laplace_Q(sigma)) < 1e-6
    msgs.append("transform match at sigma=0.5,1,2")

    for m0 in (2, 10, 20):
        norm, _ = quad(lambda T: an.hypoexp_halting_pdf(10.0, m0, T), 0, np.inf,
                       limit=300)
        mean, _ = quad(lambda T: T * an.hypoexp_halting_pdf(10.0, m0, T), 0, np.inf,
                       limit=300)
        ok &= abs(norm - 1.0) < 1e-9
        ok &= abs(mean - an.mean_halting_finite(10.0, m0)) < 1e-8
    msgs.append("hypoexp norm/mean m0<=20")

    h = 2.5e-4
    worst = 0.0
    for ic in (an.uncorrelated_initial_values() + (0.0,), (1.0, 0.0, 0.0)):
        sol = an.cumulant_solution(*ic)

        def d(f, t):
            return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h)

        for t in (0.0, 0.1, 1.0, 10.0, 100.0):
            n, v, w = float(sol.n(t)), float(sol.v(t)), float(sol.w(t))
            worst = max(worst,
                        abs(d(lambda x: float(sol.n(x)), t) + n * n),
                        abs(d(lambda x: float(sol.v(x)), t) + 4 * n * v - n * n),
                        abs(d(lambda x: float(sol.w(x)), t) + 6 * n * w + n * n
                            - 6 * v * (n - v)))
    ok &= worst < 1e-10
    msgs.append(f"ODE residual={worst:.1e}")

    int_r, _ = quad(an.scaled_gap_pdf, 0, np.inf, limit=300)
    int_tr, _ = quad(lambda t: t * an.scaled_gap_pdf(t), 0, np.inf, limit=300)
    ok &= abs(int_r - 1.0) < 1e-6
    ok &= abs(int_tr - (ZETA2 - 1.0)) < 1e-6
    msgs.append(f"int R={int_r:.8f}, int tau R={int_tr:.8f}")

    assert _check(11, "analytics self-consistency", ok, "; ".join(msgs))


def test_criterion_12_determinism(tmp_path):
    sim_cfg = tmp_path / "sim.json"
    sim_cfg.write_text(json.dumps({
        "graph": {"kind": "complete", "V": 501},
        "replicas": 2000,
        "time_grid": [1.0, 5.0],
        "observables": {"halting": True, "last_step": True, "m_trace": True},
    }))
    scan_cfg = tmp_path / "scan.json"
    scan_cfg.write_text(json.dumps({
        "sweep": {"kind": "ring", "sizes": [8, 12, 16]}, "replicas": 25,
    }))
    pairs = []
    for label, cfg, csvs in (("simulate", sim_cfg, ("halting.csv", "trace.csv")),
                             ("scan", scan_cfg, ("scaling.csv",))):
        outs = []
        for run in ("a", "b"):
            out = tmp_path / f"{label}_{run}"
            code = main([label, "--config", str(cfg), "--seed", "12",
                         "--out", str(out)])
            assert code == 0
            outs.append(out)
        for name in csvs:
            pairs.append((label, name,
                          (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()))
    ok = all(same for _, _, same in pairs)
    assert _check(12, "seeded reruns byte-identical", ok,
                  ", ".join(f"{label}/{name}: {'same' if same else 'DIFFER'}"
                            for label, name, same in pairs))
