"""One pass/fail check per acceptance criterion."""

import filecmp
import os
import time
import warnings

import numpy as np
import pytest
from _oracles import standard_errors

from lqlc.bench import run_bench
from lqlc.cli import main
from lqlc.distfit import fit_bgmm_em, fit_gaussian, fit_logistic, fit_student_t
from lqlc.errmodels import BgmmModel, GaussianModel, LogisticModel, StudentTModel, log_likelihood
from lqlc.estimators import EstimatorSpec, cost, influence, weight
from lqlc.metrics import ErrorSeries, rmse_3d, std_3d
from lqlc.model import build_linear_system
from lqlc.simulate import MismatchSweepConfig, draw_errors, generate_epoch, scale_mismatch_sweep
from lqlc.solver import SolverConfig, irls_fixed, irls_solve

LS, LQLC = EstimatorSpec.LS, EstimatorSpec.LQLC
SOFT_SOLVE_TIME_S = 2.5e-4


def test_criterion_1_estimator_calculus():
    t0 = time.perf_counter()
    r = np.linspace(-50.0, 50.0, 10_001)
    h = 1e-5
    for spec in (LS, LQLC):
        fd = (cost(spec, r + h) - cost(spec, r - h)) / (2 * h)
        assert np.max(np.abs(fd - influence(spec, r))) < 1e-6
        nz = r != 0
        # equality up to the final rounding of the product
        np.testing.assert_allclose(weight(spec, r[nz]) * r[nz], influence(spec, r[nz]), rtol=4e-16, atol=0)
    w = weight(LQLC, r)
    assert np.all(w > 0) and np.all(w <= 0.5)
    np.testing.assert_array_equal(weight(LQLC, -r), w)
    half = w[r >= 0]
    assert np.all(np.diff(half) <= 0)
    assert time.perf_counter() - t0 < 1.0


def _grid_minimizer(H, y, s, center, half_width=150.0, step=0.5):
    offsets = np.arange(-half_width, half_width + step / 2, step)
    g0 = center[0] + offsets
    g1 = center[1] + offsets
    X0, X1 = np.meshgrid(g0, g1, indexing="ij")
    total = np.zeros_like(X0)
    for i in range(len(y)):
        total += cost(LQLC, (y[i] - H[i, 0] * X0 - H[i, 1] * X1) / s[i])
    i, j = np.unravel_index(np.argmin(total), total.shape)
    interior = 0 < i < len(g0) - 1 and 0 < j < len(g1) - 1
    return np.array([g0[i], g1[j]]), interior


def test_criterion_2_irls_matches_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    for _ in range(50):
        # unit direction rows, like the line-of-sight part of the pseudorange geometry matrix
        theta = rng.uniform(0.0, 2 * np.pi, 5)
        H = np.column_stack([np.cos(theta), np.sin(theta)])
        x_true = rng.uniform(-50.0, 50.0, 2)
        s = rng.uniform(1.0, 10.0, 5)
        y = H @ x_true + np.array([draw_errors(LogisticModel(0.0, si), rng, 1)[0] for si in s])

        lqlc = irls_fixed(H, y, s, LQLC, SolverConfig(step_tolerance=1e-8))
        assert lqlc.converged
        best, interior = _grid_minimizer(H, y, s, np.linalg.lstsq(H, y, rcond=None)[0])
        assert interior
        assert np.max(np.abs(lqlc.x - best)) <= 0.5
        # no grid point does better than the IRLS solution
        objective = lambda x: float(np.sum(cost(LQLC, (y - H @ x) / s)))  # noqa: E731
        assert objective(lqlc.x) <= objective(best) + 1e-12

        W = np.diag(1.0 / s**2)
        wls = np.linalg.solve(H.T @ W @ H, H.T @ W @ y)
        ls = irls_fixed(H, y, s, LS)
        assert np.max(np.abs(ls.x - wls)) < 1e-9
    assert time.perf_counter() - t0 < 30.0


def test_criterion_3_convergence_behavior(scenario):
    trials = 10_000
    converged = 0
    truth = scenario.truth_state()
    for k in range(trials):
        epoch = generate_epoch(scenario, LogisticModel(0.0, 10.0), np.random.SeedSequence([3, k]), k)
        report = irls_solve(epoch, LQLC)
        converged += report.converged and report.iterations <= 100
        if k % 10 == 0:
            sys_ = build_linear_system(epoch, truth)
            trace = np.array(irls_fixed(sys_.H, sys_.y, sys_.scales, LQLC).objective_trace)
            assert np.all(np.diff(trace) <= 1e-10)
    assert converged / trials >= 0.999


def test_criterion_4_robustness_ordering(dense_scenario):
    t0 = time.perf_counter()
    model = LogisticModel(0.0, 10.0)
    truth = dense_scenario.receiver_truth.as_array()
    errors = {LS: [], LQLC: []}
    for k in range(5000):
        epoch = generate_epoch(dense_scenario, model, np.random.SeedSequence([4, k]), k,
                               outlier_fraction=0.1, outlier_range=(200.0, 400.0))
        for spec in errors:
            report = irls_solve(epoch, spec)
            errors[spec].append(np.linalg.norm(report.state.position.as_array() - truth))
    ls, lqlc = ErrorSeries(np.array(errors[LS])), ErrorSeries(np.array(errors[LQLC]))
    assert rmse_3d(lqlc) <= 0.9 * rmse_3d(ls)
    assert std_3d(lqlc) <= 0.9 * std_3d(ls)
    assert time.perf_counter() - t0 < 60.0


def _within_3se(fitted, truth, loglik):
    se = standard_errors(loglik, fitted)
    return np.all(np.abs(np.asarray(fitted) - np.asarray(truth)) < 3 * se)


def test_criterion_5_distribution_recovery():
    t0 = time.perf_counter()
    n = 50_000
    rng = np.random.default_rng(5)

    g = GaussianModel(0.33, 18.49)
    x = draw_errors(g, rng, n)
    m = fit_gaussian(x).model
    assert _within_3se([m.mu, m.sigma], [g.mu, g.sigma], lambda t: log_likelihood(GaussianModel(*t), x))

    lg = LogisticModel(0.42, 9.52)
    x = draw_errors(lg, rng, n)
    m = fit_logistic(x).model
    assert _within_3se([m.m, m.s], [lg.m, lg.s], lambda t: log_likelihood(LogisticModel(*t), x))

    st = StudentTModel(0.46, 13.58, 4.68)
    x = draw_errors(st, rng, n)
    m = fit_student_t(x).model
    assert _within_3se([m.c, m.lam, m.nu], [st.c, st.lam, st.nu], lambda t: log_likelihood(StudentTModel(*t), x))

    bg = BgmmModel(0.93, 0.82, 13.97, -6.25, 47.72)
    x = draw_errors(bg, rng, n)
    report, trace = fit_bgmm_em(x)
    m = report.model
    fitted = [m.p1, m.mu1, m.sigma1, m.mu2, m.sigma2]
    assert _within_3se(fitted, [bg.p1, bg.mu1, bg.sigma1, bg.mu2, bg.sigma2],
                       lambda t: log_likelihood(BgmmModel(*t), x))
    assert trace.is_monotone(1e-9)
    assert time.perf_counter() - t0 < 120.0


def test_criterion_6_scale_mismatch_asymmetry(scenario):
    t0 = time.perf_counter()
    config = MismatchSweepConfig()
    assert config.trials_per_alpha == 2000 and len(config.alphas) == 21
    result = scale_mismatch_sweep(scenario, config, workers=min(4, os.cpu_count() or 1))
    lo, one, five, ten = (result.by_alpha(a) for a in (0.1, 1.0, 5.011872336272722, 10.0))
    assert lo.rmse_3d > one.rmse_3d
    assert abs(five.rmse_3d - ten.rmse_3d) / ten.rmse_3d < 0.05
    assert lo.mean_iterations > one.mean_iterations
    assert time.perf_counter() - t0 < 300.0


def test_criterion_7_efficiency_envelope(scenario, record_property):
    epoch = generate_epoch(scenario, LogisticModel(0.0, 10.0), 7)
    assert len(epoch.observations) == 8
    ls = run_bench(epoch, LS, runs=1000)
    lqlc = run_bench(epoch, LQLC, runs=1000)
    assert lqlc.mean_iterations > ls.mean_iterations
    for report in (ls, lqlc):
        record_property(f"mean_solve_time_{report.estimator.value}_s", report.mean_time)
        assert report.mean_time < 5e-3
        if report.mean_time >= SOFT_SOLVE_TIME_S:
            warnings.warn(f"{report.estimator.value}: mean solve {report.mean_time:.2e} s misses the "
                          f"{SOFT_SOLVE_TIME_S:.1e} s target", stacklevel=1)


def _pipeline(out):
    steps = [
        ["gen-synthetic", "--epochs", "60", "--seed", "8", "--output-dir", out / "gen"],
        ["solve", "--input", out / "gen" / "observations.csv", "--truth", out / "gen" / "truth.json",
         "--estimator", "ls", "--output-dir", out / "solve"],
        ["solve", "--input", out / "gen" / "observations.csv", "--truth", out / "gen" / "truth.json",
         "--baseline-metrics", out / "solve" / "metrics_ls.json", "--output-dir", out / "solve"],
        ["fit-dist", "--input", out / "gen" / "errors.csv", "--output-dir", out / "fit"],
        ["sweep-scale", "--alphas", "0.1,1,10", "--trials", "50", "--seed", "8", "--output-dir", out / "sweep"],
    ]
    for argv in steps:
        assert main([str(a) for a in argv]) == 0


def test_criterion_8_pipeline_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    _pipeline(a)
    _pipeline(b)
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    assert len(files) >= 14
    assert sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file()) == files
    for rel in files:
        assert filecmp.cmp(a / rel, b / rel, shallow=False), rel
