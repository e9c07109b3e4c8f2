"""Acceptance criteria A1-A10, one test per criterion (prints one PASS/FAIL
line each; run with -s to see them). Criteria that a configuration makes
unattainable are implemented faithfully and fail with the measured numbers;
the `test_supplementary_*` checks at the bottom exercise the same substance on
configurations where it is attainable and are not acceptance criteria."""

import itertools
import math
import re
import subprocess
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

import oracles
from locsim import (
    CampaignSpec,
    ChannelKey,
    ClientParams,
    CostSpec,
    SystemConfig,
    channel_outcome,
    compute_targets,
    estimate_sigma_tot,
    idle_time,
    predicted_loc,
    predicted_total_loc,
    preset,
    run,
    run_campaign,
    summarize,
)

FRONTEND_CLI = Path(__file__).resolve().parents[1] / "frontend" / "dist" / "cli.js"

A5_POLICIES = ("mdvf", "ldf", "mw-aoi")


def report_line(tag, ok, detail):
    print(f"{tag}: {'PASS' if ok else 'FAIL'} — {detail}")


def mean_ci(values):
    a = np.asarray(values, dtype=float)
    m = float(a.mean())
    half = 1.96 * float(a.std(ddof=1)) / math.sqrt(a.size)
    return m, m - half, m + half


def truncated_low(horizon):
    base = preset("low")
    return SystemConfig(tau=base.tau, window_T=base.window_T,
                        clients=base.clients[:6], epsilon=base.epsilon,
                        cost=base.cost, horizon=horizon, seed=1)


# ---------------------------------------------------------------- fixtures


@pytest.fixture(scope="session")
def a5_campaigns(tmp_path_factory):
    """Both presets, 20 seeds, the three headline policies, per-interval CSVs.
    Shared by A5, A9/A10 consumers, and the supplementary checks."""
    out = {}
    start = time.perf_counter()
    for name in ("high", "low"):
        directory = tmp_path_factory.mktemp(f"a5_{name}")
        spec = CampaignSpec(
            config=preset(name),
            policies=A5_POLICIES,
            seeds=tuple(range(1, 21)),
            output_dir=directory,
            per_interval=True,
        )
        summary_path, interval_path = run_campaign(spec)
        stats = {}
        import csv

        with open(summary_path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            for rec in reader:
                if rec["client"] != "1":
                    continue
                stats.setdefault(rec["policy"], {})[int(rec["seed"])] = \
                    float(rec["mean_rolling_loc"])
        out[name] = {
            "summary": summary_path,
            "interval": interval_path,
            "stats": {pol: [v for _, v in sorted(by_seed.items())]
                      for pol, by_seed in stats.items()},
        }
    out["elapsed"] = time.perf_counter() - start
    return out


@pytest.fixture(scope="session")
def low_long_runs():
    """MDVF on the low preset, horizon 10^5, seeds 1..10. Feeds A6, A7, and
    the supplementary convergence checks."""
    base = preset("low")
    targets = compute_targets(base)
    per_seed = []
    seed_one = None
    for seed in range(1, 11):
        cfg = replace(base, horizon=100_000, seed=seed)
        trace = run(cfg, "mdvf", targets)
        rep = summarize(trace, cfg, targets)
        spread = rep.deficit_spread_series
        per_seed.append({
            "seed": seed,
            "early_max": float(spread[999:10_000].max()),   # t in [1e3, 1e4]
            "late_max": float(spread[9_999:100_000].max()),  # t in [1e4, 1e5]
            "xbar_maxdiff": float(np.max(np.abs(rep.xbar_emp - targets.xbar_star))),
            "sigma_ratio_cv": float(np.std(rep.sigma_i_emp / cfg.p)
                                    / np.mean(rep.sigma_i_emp / cfg.p)),
        })
        if seed == 1:
            seed_one = {
                "sim_mean_loc": float(rep.loc_series.mean()),
                "predicted": float(predicted_total_loc(rep.xbar_emp,
                                                       rep.sigma_i_emp, cfg)),
            }
    return {"targets": targets, "per_seed": per_seed, "seed_one": seed_one}


@pytest.fixture(scope="session")
def a4_sigma_by_eps():
    base = preset("low")
    targets = compute_targets(base)
    table = {}
    for eps in (0.0, 1.0, 5.0, 20.0):
        vals = []
        for seed in range(1, 21):
            cfg = replace(base, horizon=20_000, seed=seed, epsilon=eps)
            vals.append(estimate_sigma_tot(run(cfg, "mdvf", targets)))
        table[eps] = (float(np.mean(vals)),
                      float(np.std(vals, ddof=1) / math.sqrt(len(vals))))
    return table


# ---------------------------------------------------------------- criteria


def test_a1_idle_time_oracle():
    start = time.perf_counter()
    worst = 0.0
    cases = 0
    for n in (1, 2, 3):
        for p in itertools.product((0.3, 0.5, 1.0), repeat=n):
            parr = np.array(p)
            for tau in range(1, 7):
                for r in range(1, n + 1):
                    for ids in itertools.combinations(range(1, n + 1), r):
                        got = idle_time(set(ids), tau, parr)
                        want = oracles.enum_idle_time(set(ids), tau, parr)
                        worst = max(worst, abs(got - want))
                        cases += 1
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 5.0
    report_line("A1", ok,
                f"{cases} subset instances, max |idle - enum| = {worst:.3g}, "
                f"{elapsed:.2f}s")
    assert worst <= 1e-9
    assert elapsed < 5.0


def test_a2_mean_convergence_truncated_low():
    cfg = truncated_low(horizon=200_000)
    targets = compute_targets(cfg)
    if not targets.in_range:
        load = float((cfg.q / cfg.p).sum())
        cap = cfg.tau - targets.idle_full
        xb = ", ".join(f"{x:.4f}" for x in targets.xbar_star)
        detail = (
            f"targets for the 6-client truncation are outside [0, 1]: "
            f"xbar* = [{xb}]; required load {load:.3f} vs capacity "
            f"{cap:.3f} leaves slack {(cap - load) / cfg.n:.3f} per client, "
            f"pushing the strongest clients past one delivery per interval. "
            f"MDVF refuses such targets, and no policy can average above 1, "
            f"so |xbar_emp - xbar*| <= 0.02 is unachievable."
        )
        report_line("A2", False, detail)
        pytest.fail(f"A2 unattainable as specified: {detail}", pytrace=False)
    worst = 0.0
    sums = np.zeros(cfg.n)
    for seed in range(1, 11):
        rcfg = replace(cfg, seed=seed)
        rep = summarize(run(rcfg, "mdvf", targets), rcfg, targets)
        worst = max(worst, float(np.max(np.abs(rep.xbar_emp - targets.xbar_star))))
        sums += rep.xbar_emp
    avg_diff = float(np.max(np.abs(sums / 10 - targets.xbar_star)))
    ok = worst <= 0.02 and avg_diff <= 0.02
    report_line("A2", ok, f"max per-seed diff {worst:.4f}, seed-average diff "
                          f"{avg_diff:.4f} (tol 0.02)")
    assert ok


def test_a3_variance_proportionality_truncated_low():
    cfg = truncated_low(horizon=200_000)
    targets = compute_targets(cfg)
    if not targets.in_range:
        detail = (
            "blocked by the same configuration defect as A2: the truncated "
            "preset's closed-form targets exceed 1 for the strong clients "
            f"(xbar_1* = {targets.xbar_star[0]:.4f}), so the MDVF runs whose "
            "sigma_i the criterion measures cannot be produced."
        )
        report_line("A3", False, detail)
        pytest.fail(f"A3 unattainable as specified: {detail}", pytrace=False)
    worst_cv = 0.0
    for seed in range(1, 11):
        rcfg = replace(cfg, seed=seed)
        rep = summarize(run(rcfg, "mdvf", targets), rcfg, targets)
        ratios = rep.sigma_i_emp / cfg.p
        worst_cv = max(worst_cv, float(np.std(ratios) / np.mean(ratios)))
    ok = worst_cv <= 0.15
    report_line("A3", ok, f"max CV of sigma_i/p across seeds {worst_cv:.4f} "
                          f"(tol 0.15)")
    assert ok


def test_a4_sigma_tot_trend_in_epsilon(a4_sigma_by_eps):
    table = a4_sigma_by_eps
    eps_grid = sorted(table)
    detail = ", ".join(
        f"eps={e:g}: {table[e][0]:.3f}±{table[e][1]:.3f}" for e in eps_grid
    )
    ok = all(
        table[b][0] <= table[a][0] * 1.05
        for a, b in zip(eps_grid, eps_grid[1:])
    )
    report_line("A4", ok,
                f"low preset, 20 seeds, horizon 2e4; sigma^2_TOT {detail} "
                f"(nonincreasing with 5% slack per step)")
    assert ok


def test_a5_fig1_qualitative(a5_campaigns):
    assert a5_campaigns["elapsed"] < 300.0
    lines = []
    failed = []
    for name in ("high", "low"):
        stats = a5_campaigns[name]["stats"]
        ci = {pol: mean_ci(stats[pol]) for pol in A5_POLICIES}
        for rival in ("ldf", "mw-aoi"):
            sep = ci["mdvf"][2] < ci[rival][1]
            if not sep:
                diffs = np.array(stats[rival]) - np.array(stats["mdvf"])
                half = 1.96 * diffs.std(ddof=1) / math.sqrt(diffs.size)
                failed.append(
                    f"{name}: mdvf CI [{ci['mdvf'][1]:.2f}, {ci['mdvf'][2]:.2f}] "
                    f"overlaps {rival} CI [{ci[rival][1]:.2f}, {ci[rival][2]:.2f}] "
                    f"(paired diff {diffs.mean():.2f}±{half:.2f}, "
                    f"{int((diffs > 0).sum())}/20 seeds positive)"
                )
        order = " < ".join(
            f"{pol}={ci[pol][0]:.2f}" for pol in
            sorted(A5_POLICIES, key=lambda pol: ci[pol][0])
        )
        advisory = "ldf < mw-aoi" if ci["ldf"][0] < ci["mw-aoi"][0] else \
            "mw-aoi < ldf (contrary to expectation)"
        lines.append(f"{name}: {order}; advisory {advisory}")
    detail = "; ".join(lines)
    if failed:
        report_line("A5", False, detail + " | CI separation failures: "
                    + " | ".join(failed))
        pytest.fail(
            "A5 CI separation not met: " + " | ".join(failed) +
            ". Seed-mean ordering itself holds on both presets; on the high "
            "preset LoC is a rare tail event at horizon 1e4 and 20 seeds, so "
            "the mdvf-ldf gap stays inside sampling noise.",
            pytrace=False,
        )
    report_line("A5", True, detail)


def test_a6_deficit_spread_recurrence(low_long_runs):
    per_seed = low_long_runs["per_seed"]
    good = sum(1 for r in per_seed if r["late_max"] <= 2.0 * r["early_max"])
    ratios = ", ".join(f"{r['late_max'] / r['early_max']:.2f}" for r in per_seed)
    ok = good >= 9
    report_line("A6", ok,
                f"{good}/10 seeds with late/early max-spread ratio <= 2 "
                f"(ratios: {ratios})")
    assert ok


def test_a7_gaussian_objective_consistency(low_long_runs):
    seed_one = low_long_runs["seed_one"]
    rel = abs(seed_one["predicted"] - seed_one["sim_mean_loc"]) \
        / seed_one["sim_mean_loc"]

    cost = CostSpec()
    worst = 0.0
    for xbar in (0.2, 0.5, 0.75, 0.9, 1.0):
        for sigma in (0.05, 0.3, 1.0):
            for p in (0.3, 0.5, 1.0):
                for q in (0.1, 0.5, 0.85):
                    client = ClientParams(id=1, p=p, q=q)
                    got = predicted_loc(xbar, sigma, client, 100, cost)
                    want = oracles.quadratic_loc_exact(xbar, sigma, p, q, 100)
                    worst = max(worst, abs(got - want) / max(1.0, abs(want)))

    client = ClientParams(id=1, p=0.5, q=0.85)
    quad = predicted_loc(0.75, 0.3, client, 100, cost)
    mc, se = oracles.mc_predicted_loc(0.75, 0.3, 0.5, 0.85, 100, cost,
                                      n=10_000_000, seed=2024)
    mc_ok = abs(quad - mc) <= 3.0 * se

    ok = rel <= 0.25 and worst <= 1e-6 and mc_ok
    report_line("A7", ok,
                f"sim {seed_one['sim_mean_loc']:.2f} vs predicted "
                f"{seed_one['predicted']:.2f} ({100 * rel:.1f}% rel, tol 25%); "
                f"closed-form max err {worst:.2g} (tol 1e-6); "
                f"MC gap {abs(quad - mc):.4f} vs 3 SE {3 * se:.4f}")
    assert rel <= 0.25
    assert worst <= 1e-6
    assert mc_ok


def test_a8_mdvf_minimizes_interval_drift():
    start = time.perf_counter()
    d_sets = {
        1: [(0.0,), (2.5,)],
        2: [(0.0, 0.0), (1.0, -1.0), (2.0, 0.5), (-1.0, -1.0)],
        3: [(0.0, 0.0, 0.0), (1.0, -1.0, 0.0), (3.0, 1.0, 2.0),
            (0.5, 0.5, -2.0)],
    }
    checked = 0
    worst = 0.0
    for n in (1, 2, 3):
        for p in itertools.product((0.25, 0.5, 0.75, 1.0), repeat=n):
            for tau in (1, 2, 3):
                for eps in (0.0, 0.7, 5.0):
                    for d in d_sets[n]:
                        best = oracles.min_interval_value(p, d, eps, tau)
                        mdvf = oracles.mdvf_interval_value(p, d, eps, tau)
                        worst = max(worst, mdvf - best)
                        checked += 1
    # the dynamic program itself against literal strategy enumeration
    enum_checked = 0
    for p in itertools.product((0.25, 0.75, 1.0), repeat=2):
        for eps in (0.0, 1.0):
            values = oracles.enumerate_strategy_values(p, (1.0, -1.0), eps, 2)
            dp = oracles.min_interval_value(p, (1.0, -1.0), eps, 2)
            assert abs(min(values) - dp) <= 1e-12
            enum_checked += 1
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 60.0
    report_line("A8", ok,
                f"{checked} instances: max (MDVF - optimum) = {worst:.3g} "
                f"(tol 1e-9); DP vs {enum_checked} full strategy enumerations "
                f"exact; {elapsed:.1f}s")
    assert worst <= 1e-9
    assert elapsed < 60.0


def test_a9_determinism_and_coupling(tmp_path):
    cfg = replace(preset("high"), horizon=500)
    targets = compute_targets(cfg)
    first = run(cfg, "mdvf", targets)
    second = run(cfg, "mdvf", targets)
    trace_ok = (
        first.digest() == second.digest()
        and first.delivered.tobytes() == second.delivered.tobytes()
        and first.attempts.tobytes() == second.attempts.tobytes()
        and first.order.tobytes() == second.order.tobytes()
    )

    csv_bytes = []
    for sub in ("x", "y"):
        spec = CampaignSpec(config=cfg, policies=("mdvf", "ldf"), seeds=(1, 2),
                            output_dir=tmp_path / sub, per_interval=True)
        s, i = run_campaign(spec)
        csv_bytes.append((s.read_bytes(), i.read_bytes()))
    csv_ok = csv_bytes[0] == csv_bytes[1]

    # common random numbers: all four policies see the same channel, so every
    # trace must agree with the key-determined first-success attempt counts
    coupling_ok = True
    needed = np.zeros((cfg.horizon, cfg.n), dtype=int)
    for t in range(1, cfg.horizon + 1):
        for i in range(cfg.n):
            needed[t - 1, i] = cfg.tau + 1
            for a in range(cfg.tau):
                if channel_outcome(ChannelKey(cfg.seed, i + 1, t, a), cfg.p[i]):
                    needed[t - 1, i] = a + 1
                    break
    for policy in ("mdvf", "ldf", "mw-aoi", "max-deficit"):
        trace = run(cfg, policy, targets)
        hit = trace.delivered
        att = trace.attempts
        if not (np.all(att[hit] == needed[hit]) and np.all(att[~hit] < needed[~hit])):
            coupling_ok = False

    ok = trace_ok and csv_ok and coupling_ok
    report_line("A9", ok,
                f"trace digests equal: {trace_ok}; campaign CSVs byte-equal: "
                f"{csv_ok}; per-(client,interval,attempt) outcomes coincide "
                f"across 4 policies: {coupling_ok}")
    assert ok


def test_a10_secondary_plots_and_report(a5_campaigns, tmp_path):
    if not FRONTEND_CLI.exists():
        print("A10: SKIP — analysis-plots frontend not built "
              f"(missing {FRONTEND_CLI})")
        pytest.skip("analysis-plots frontend not built")

    figures = {}
    for name in ("high", "low"):
        fig = tmp_path / f"loc_{name}.svg"
        proc = subprocess.run(
            ["node", str(FRONTEND_CLI), "plot-loc",
             "--in", str(a5_campaigns[name]["interval"]),
             "--out", str(fig), "--scenario", name],
            capture_output=True, text=True, timeout=300,
        )
        assert proc.returncode == 0, proc.stderr
        body = fig.read_text(encoding="utf-8")
        assert "<svg" in body and len(body) > 1000
        figures[name] = fig

    report = tmp_path / "report_low.md"
    proc = subprocess.run(
        ["node", str(FRONTEND_CLI), "report",
         "--in", str(a5_campaigns["low"]["summary"]),
         "--out", str(report)],
        capture_output=True, text=True, timeout=300,
    )
    assert proc.returncode == 0, proc.stderr
    body = report.read_text(encoding="utf-8")

    # recompute the flags the report claims, straight from the same CSV
    import csv as _csv

    rows = []
    with open(a5_campaigns["low"]["summary"], newline="", encoding="utf-8") as fh:
        rows = [rec for rec in _csv.DictReader(fh) if rec["client"] != "0"]
    groups = sorted({(r["policy"], r["epsilon"]) for r in rows})
    matched = 0
    for policy, eps in groups:
        sub = [r for r in rows if r["policy"] == policy and r["epsilon"] == eps]
        clients = sorted({int(r["client"]) for r in sub})
        diffs = []
        ratios = []
        for c in clients:
            crows = [r for r in sub if int(r["client"]) == c]
            xbar_emp = np.mean([float(r["xbar_emp"]) for r in crows])
            xbar_star = float(crows[0]["xbar_star"])
            diffs.append(abs(xbar_emp - xbar_star))
            sigma = np.mean([float(r["sigma_i_emp"]) for r in crows])
            ratios.append(sigma / float(crows[0]["p"]))
        want_xbar = "PASS" if max(diffs) <= 0.02 else "FAIL"
        cv = float(np.std(ratios) / np.mean(ratios))
        want_cv = "PASS" if cv <= 0.15 else "FAIL"
        pat = rf"\[{re.escape(policy)} eps={re.escape(eps)}\]"
        got_xbar = re.search(pat + r" xbar max \|diff\| = [^ ]+ -> (PASS|FAIL)",
                             body)
        got_cv = re.search(pat + r" sigma/p CV = [^ ]+ -> (PASS|FAIL)", body)
        assert got_xbar and got_cv, f"report lacks flags for {policy} eps={eps}"
        assert got_xbar.group(1) == want_xbar, (policy, "xbar flag")
        assert got_cv.group(1) == want_cv, (policy, "cv flag")
        matched += 1

    report_line("A10", True,
                f"figures {', '.join(str(p) for p in figures.values())} "
                f"nonempty; report flags match recomputation for {matched} "
                f"policy groups")


# ------------------------------------------------- supplementary (not A2-A5)


def test_supplementary_full_low_mean_convergence(low_long_runs):
    """A2's substance on the full (untruncated) preset, where targets are in range."""
    worst = max(r["xbar_maxdiff"] for r in low_long_runs["per_seed"])
    assert worst <= 0.02, worst


def test_supplementary_full_low_variance_proportionality(low_long_runs):
    """A3's substance on the full preset: sigma_i/p_i level across clients."""
    worst = max(r["sigma_ratio_cv"] for r in low_long_runs["per_seed"])
    assert worst <= 0.15, worst


def test_supplementary_low_ci_separation(a5_campaigns):
    """The half of A5 that does separate: non-overlapping CIs on low."""
    stats = a5_campaigns["low"]["stats"]
    ci = {pol: mean_ci(stats[pol]) for pol in A5_POLICIES}
    assert ci["mdvf"][2] < ci["ldf"][1]
    assert ci["mdvf"][2] < ci["mw-aoi"][1]
    assert ci["ldf"][2] < ci["mw-aoi"][1]


def test_supplementary_high_ordering(a5_campaigns):
    """On high, MW-AoI separates cleanly and the mdvf-ldf ordering holds in
    the seed means (their CIs overlap, which is why A5 fails)."""
    stats = a5_campaigns["high"]["stats"]
    ci = {pol: mean_ci(stats[pol]) for pol in A5_POLICIES}
    assert ci["mdvf"][2] < ci["mw-aoi"][1]
    assert ci["ldf"][2] < ci["mw-aoi"][1]
    assert ci["mdvf"][0] < ci["ldf"][0]
