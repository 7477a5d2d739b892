import math

import numpy as np
import pytest
from _oracles import standard_errors

from lqlc.distfit import (
    fit,
    fit_bgmm_em,
    fit_gaussian,
    fit_logistic,
    fit_student_t,
    histogram_overlay,
    logistic_score,
    student_t_scaled_gradient,
)
from lqlc.errmodels import BgmmModel, GaussianModel, LogisticModel, StudentTModel, log_likelihood
from lqlc.errors import (
    ComponentCollapse,
    DegenerateSample,
    InsufficientSamples,
    NoConvergence,
    NonFiniteSample,
    ValidationError,
)
from lqlc.simulate import draw_errors

# logistic MLE of a fixed 8-point sample: score equations solved with mpmath findroot (40 digits)
FIXED_SAMPLE = [-3.1, 0.4, 1.7, 2.2, 5.9, -0.8, 12.5, 0.05]
ORACLE_LOGISTIC_MLE = (1.6592023332527741183, 2.407538958171886902)
# {-3, 3}: m = 0 and s = 3 / z with z tanh(z / 2) = 1
ORACLE_TWO_POINT_S = 1.9437546870888082488


def _draw(model, n, seed):
    return draw_errors(model, np.random.default_rng(seed), n)


class TestGaussian:
    def test_two_points(self):
        r = fit_gaussian([-1.0, 1.0])
        assert r.model == GaussianModel(0.0, 1.0)

    def test_constant(self):
        with pytest.raises(DegenerateSample):
            fit_gaussian([5.0, 5.0, 5.0])

    def test_minimum_and_finiteness(self):
        with pytest.raises(InsufficientSamples):
            fit_gaussian([1.0])
        with pytest.raises(NonFiniteSample):
            fit_gaussian([1.0, math.nan])

    def test_recovery(self):
        n = 50_000
        r = fit_gaussian(_draw(GaussianModel(0.33, 18.49), n, 1))
        assert abs(r.model.mu - 0.33) < 3 * 18.49 / math.sqrt(n)
        assert abs(r.model.sigma - 18.49) < 3 * 18.49 / math.sqrt(2 * n)


class TestLogistic:
    def test_fixed_sample_against_oracle(self):
        r = fit_logistic(FIXED_SAMPLE)
        assert (r.model.m, r.model.s) == pytest.approx(ORACLE_LOGISTIC_MLE, rel=1e-9)
        g, _ = logistic_score(np.array(FIXED_SAMPLE), r.model.m, r.model.s)
        assert np.max(np.abs(g)) < 1e-6

    def test_symmetric_two_point(self):
        r = fit_logistic([-3.0, 3.0])
        assert r.model.m == pytest.approx(0.0, abs=1e-12)
        assert r.model.s == pytest.approx(ORACLE_TWO_POINT_S, rel=1e-10)

    def test_recovery(self):
        n = 50_000
        x = _draw(LogisticModel(0.42, 9.52), n, 2)
        r = fit_logistic(x)
        se = standard_errors(lambda t: log_likelihood(LogisticModel(t[0], t[1]), x), [r.model.m, r.model.s])
        assert abs(r.model.m - 0.42) < 3 * se[0]
        assert abs(r.model.s - 9.52) < 3 * se[1]
        g, _ = logistic_score(x, r.model.m, r.model.s)
        assert np.max(np.abs(g)) < 1e-6

    def test_dominates_initializer(self):
        x = _draw(StudentTModel(0, 5, 2.5), 3000, 3)
        start = LogisticModel(float(np.median(x)), float(np.std(x)) * math.sqrt(3) / math.pi)
        assert fit_logistic(x).log_likelihood >= log_likelihood(start, x)

    def test_analytic_derivatives(self):
        x = np.array(FIXED_SAMPLE)
        m, s, h = 0.7, 3.1, 1e-6
        g, H = logistic_score(x, m, s)

        def ll(a, b):
            return log_likelihood(LogisticModel(a, b), x)

        fd_g = [(ll(m + h, s) - ll(m - h, s)) / (2 * h), (ll(m, s + h) - ll(m, s - h)) / (2 * h)]
        np.testing.assert_allclose(g, fd_g, rtol=1e-6)
        gm = lambda a, b: logistic_score(x, a, b)[0]  # noqa: E731
        fd_H = np.column_stack([(gm(m + h, s) - gm(m - h, s)) / (2 * h), (gm(m, s + h) - gm(m, s - h)) / (2 * h)])
        np.testing.assert_allclose(H, fd_H, rtol=1e-5)

    def test_error_shrinks_with_n(self):
        errs = []
        for n in (1_000, 10_000, 100_000):
            e = []
            for rep in range(8):
                r = fit_logistic(_draw(LogisticModel(0.42, 9.52), n, 100 + rep))
                e.append(abs(r.model.m - 0.42) + abs(r.model.s - 9.52))
            errs.append(np.mean(e))
        assert errs[0] > errs[1] > errs[2]

    def test_iteration_cap(self):
        with pytest.raises(NoConvergence):
            fit_logistic(_draw(LogisticModel(0, 1), 500, 4) * [1.0] + 300 * (np.arange(500) % 7 == 0), max_iter=1)

    def test_degenerate(self):
        with pytest.raises(DegenerateSample):
            fit_logistic([2.0, 2.0])


class TestStudentT:
    def test_cauchy(self):
        x = np.random.default_rng(5).standard_cauchy(50_000)
        r = fit_student_t(x)
        assert 0.9 <= r.model.nu <= 1.1

    def test_gaussian_data_escapes_upward(self):
        r = fit_student_t(_draw(GaussianModel(0, 5), 20_000, 6))
        assert r.model.nu > 50

    def test_two_point_midpoint(self):
        r = fit_student_t([-3.0, 3.0, -3.0, 3.0, 7.0, -7.0])
        assert r.model.c == pytest.approx(0.0, abs=1e-9)
        r = fit_student_t([1.0, 5.0, 1.0, 5.0])
        assert r.model.c == pytest.approx(3.0, abs=1e-9)

    def test_recovery_and_gradient(self):
        n = 50_000
        x = _draw(StudentTModel(0.46, 13.58, 4.68), n, 7)
        r = fit_student_t(x)
        m = r.model
        se = standard_errors(lambda t: log_likelihood(StudentTModel(*t), x), [m.c, m.lam, m.nu])
        assert abs(m.c - 0.46) < 3 * se[0]
        assert abs(m.lam - 13.58) < 3 * se[1]
        assert abs(m.nu - 4.68) < 3 * se[2]
        assert np.linalg.norm(student_t_scaled_gradient(x, m.c, m.lam, m.nu)) < 1e-5

    def test_minimum_samples(self):
        with pytest.raises(InsufficientSamples):
            fit_student_t([1.0, 2.0])


class TestBgmm:
    def test_well_separated(self):
        rng = np.random.default_rng(8)
        n = 10_000
        first = rng.random(n) < 0.5
        x = np.where(first, -50 + rng.standard_normal(n), 50 + rng.standard_normal(n))
        r, trace = fit_bgmm_em(x)
        m = r.model
        means = sorted([m.mu1, m.mu2])
        assert means[0] == pytest.approx(-50, abs=0.5) and means[1] == pytest.approx(50, abs=0.5)
        assert m.p1 == pytest.approx(0.5, abs=0.05)
        assert trace.is_monotone(1e-9)

    @pytest.mark.parametrize("seed", range(3))
    def test_init_at_truth(self, seed):
        truth = BgmmModel(0.7, -20.0, 3.0, 20.0, 5.0)
        r, _ = fit_bgmm_em(_draw(truth, 10_000, seed), init=truth)
        assert r.iterations <= 5 and r.converged

    def test_init_at_truth_overlapping(self):
        # heavily overlapping components contract slowly, so only a coarse gain tolerance is fast
        truth = BgmmModel(0.93, 0.82, 13.97, -6.25, 47.72)
        r, _ = fit_bgmm_em(_draw(truth, 10_000, 9), init=truth, tol=0.1)
        assert r.iterations <= 5 and r.converged

    def test_nests_gaussian(self):
        x = _draw(GaussianModel(1.0, 4.0), 5_000, 10)
        r, trace = fit_bgmm_em(x)
        assert r.log_likelihood >= fit_gaussian(x).log_likelihood - 1e-6
        assert trace.is_monotone(1e-9)

    def test_canonical_labels(self):
        rng = np.random.default_rng(11)
        for p in (0.1, 0.3, 0.7, 0.9):
            x = draw_errors(BgmmModel(p, -20, 3, 20, 3), rng, 4_000)
            r, _ = fit_bgmm_em(x)
            assert r.model.p1 >= 0.5
            big = -20 if p > 0.5 else 20
            assert r.model.mu1 == pytest.approx(big, abs=1.0)

    def test_trace_monotone(self):
        x = _draw(BgmmModel(0.93, 0.82, 13.97, -6.25, 47.72), 20_000, 12)
        r, trace = fit_bgmm_em(x)
        ll = np.array(trace.log_likelihood_per_iteration)
        assert np.all(np.diff(ll) >= -1e-9)
        assert ll[-1] == pytest.approx(r.log_likelihood, abs=1e-6)

    def test_collapse(self):
        x = np.concatenate([np.zeros(60), np.random.default_rng(13).normal(50, 5, 40)])
        with pytest.raises(ComponentCollapse):
            fit_bgmm_em(x)

    def test_minimum_samples(self):
        with pytest.raises(InsufficientSamples):
            fit_bgmm_em([1.0, 2.0, 3.0])


@pytest.mark.parametrize("name", ["gaussian", "logistic", "student_t", "bgmm"])
def test_reported_log_likelihood_consistent(name):
    x = _draw(LogisticModel(0.42, 9.52), 5_000, 14)
    r = fit(name, x)
    assert r.log_likelihood == pytest.approx(log_likelihood(r.model, x), abs=1e-9)
    assert r.sample_count == 5_000 and r.converged
    assert r.to_dict()["model"]["type"] == name


def test_fit_unknown_model():
    with pytest.raises(ValidationError):
        fit("cauchy", [1.0, 2.0, 3.0])


def test_histogram_overlay():
    x = _draw(LogisticModel(0, 2), 10_000, 15)
    table = histogram_overlay(x, {"logistic": LogisticModel(0, 2)}, bins=40)
    assert set(table) == {"bin_center", "empirical_density", "logistic_density"}
    width = np.diff(table["bin_center"])[0]
    assert np.sum(table["empirical_density"]) * width == pytest.approx(1.0, rel=1e-12)
    assert np.max(np.abs(table["empirical_density"] - table["logistic_density"])) < 0.02
