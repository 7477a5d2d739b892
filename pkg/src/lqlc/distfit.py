"""Maximum-likelihood fits of the four candidate error models.

* Gaussian: closed form (sample mean, divisor-n standard deviation).
* Logistic: damped Newton on ``(m, s)`` from the median and the
  moment-matched scale ``std * sqrt(3) / pi``.
* Student's t: ECME. Location and scale take the usual weighted EM updates;
  the degrees of freedom maximize the observed likelihood given the other
  two, found by bracketing the root of the profile score in ``[0.3, 1e3]``.
* BGMM: two-component EM initialized by splitting the samples at the median.

All samples are pooled; reported log-likelihoods come from
:func:`lqlc.errmodels.log_likelihood`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import digamma

from .errmodels import (
    BgmmModel,
    DistributionModel,
    GaussianModel,
    LogisticModel,
    StudentTModel,
    log_likelihood,
    model_to_dict,
    pdf,
)
from .errors import (
    ComponentCollapse,
    DegenerateSample,
    InsufficientSamples,
    NoConvergence,
    NonFiniteSample,
    ValidationError,
)

NU_BOUNDS = (0.3, 1e3)


@dataclass(frozen=True)
class FitReport:
    model: DistributionModel
    log_likelihood: float
    iterations: int
    converged: bool
    sample_count: int

    def to_dict(self) -> dict:
        return {
            "model": model_to_dict(self.model),
            "log_likelihood": self.log_likelihood,
            "iterations": self.iterations,
            "converged": self.converged,
            "sample_count": self.sample_count,
        }


@dataclass(frozen=True)
class EmTrace:
    log_likelihood_per_iteration: tuple[float, ...]

    def is_monotone(self, tol: float = 1e-9) -> bool:
        ll = np.asarray(self.log_likelihood_per_iteration)
        return bool(np.all(np.diff(ll) >= -tol))


def _prepare(samples, minimum: int, what: str) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise NonFiniteSample("samples contain NaN or infinite values")
    if x.size < minimum:
        raise InsufficientSamples(f"{what} fit needs at least {minimum} samples, got {x.size}")
    if np.all(x == x[0]):
        raise DegenerateSample(f"all {x.size} samples are identical")
    return x


def _report(model, x, iterations, converged) -> FitReport:
    return FitReport(model, log_likelihood(model, x), iterations, converged, int(x.size))


def fit_gaussian(samples) -> FitReport:
    x = _prepare(samples, 2, "Gaussian")
    mu = float(np.mean(x))
    sigma = float(np.sqrt(np.mean((x - mu) ** 2)))
    if sigma == 0:
        raise DegenerateSample("zero sample variance")
    return _report(GaussianModel(mu, sigma), x, 1, True)


# -- logistic ---------------------------------------------------------------

def _logistic_ll(x, m, s) -> float:
    z = np.abs(x - m) / s
    return float(np.sum(-z - 2.0 * np.log1p(np.exp(-z))) - x.size * math.log(s))


def logistic_score(x, m: float, s: float) -> tuple[np.ndarray, np.ndarray]:
    """Gradient and Hessian of the logistic log-likelihood in ``(m, s)``."""
    z = (x - m) / s
    t = np.tanh(0.5 * z)
    sech2 = 1.0 - t * t
    g = np.array([np.sum(t) / s, np.sum(z * t - 1.0) / s])
    h_mm = -0.5 * np.sum(sech2) / s**2
    h_ms = -np.sum(t + 0.5 * z * sech2) / s**2
    h_ss = np.sum(1.0 - 2.0 * z * t - 0.5 * z * z * sech2) / s**2
    return g, np.array([[h_mm, h_ms], [h_ms, h_ss]])


def fit_logistic(samples, max_iter: int = 200, grad_tol: float = 1e-6) -> FitReport:
    x = _prepare(samples, 2, "logistic")
    m = float(np.median(x))
    s = float(np.std(x)) * math.sqrt(3.0) / math.pi
    ll = _logistic_ll(x, m, s)
    for it in range(1, max_iter + 1):
        g, h = logistic_score(x, m, s)
        if np.max(np.abs(g)) < grad_tol * 1e-3:
            break
        try:
            step = -np.linalg.solve(h, g)
            ascent = float(step @ g) > 0 and np.all(np.linalg.eigvalsh(h) < 0)
        except np.linalg.LinAlgError:
            ascent = False
        if not ascent:
            step = g * (s * s / x.size)
        t = 1.0
        while t > 1e-12:
            m_new, s_new = m + t * float(step[0]), s + t * float(step[1])
            if s_new > 0:
                ll_new = _logistic_ll(x, m_new, s_new)
                if ll_new >= ll:
                    break
            t *= 0.5
        else:
            break  # no improving step at working precision
        moved = abs(m_new - m) + abs(s_new - s)
        m, s, ll = m_new, s_new, ll_new
        if moved <= 1e-15 * (abs(m) + s):
            break
    g, _ = logistic_score(x, m, s)
    if not np.max(np.abs(g)) < grad_tol:
        raise NoConvergence(f"logistic fit stopped with gradient {g} after {it} iterations")
    return _report(LogisticModel(m, s), x, it, True)


# -- Student's t ------------------------------------------------------------

def student_t_scaled_gradient(x, c: float, lam: float, nu: float) -> np.ndarray:
    """Mean log-likelihood gradient scaled by ``(lambda, lambda, nu)``."""
    d = (x - c) / lam
    d2 = d * d
    g_c = np.mean((nu + 1.0) * d / (nu + d2))
    g_lam = np.mean((nu + 1.0) * d2 / (nu + d2) - 1.0)
    g_nu = nu * _nu_score(d2, nu)
    return np.array([g_c, g_lam, g_nu])


def _nu_score(d2: np.ndarray, nu: float) -> float:
    """Mean derivative of the log-likelihood with respect to nu."""
    return 0.5 * (
        digamma(0.5 * (nu + 1.0)) - digamma(0.5 * nu) - 1.0 / nu
        - np.mean(np.log1p(d2 / nu)) + np.mean((nu + 1.0) * d2 / (nu * (nu + d2)))
    )


def _update_nu(d2: np.ndarray, nu: float) -> float:
    lo, hi = NU_BOUNDS
    f_lo, f_hi = _nu_score(d2, lo), _nu_score(d2, hi)
    if f_hi >= 0:
        return hi
    if f_lo <= 0:
        return lo
    return brentq(lambda v: _nu_score(d2, v), lo, hi, xtol=1e-12, rtol=1e-14)


def fit_student_t(samples, max_iter: int = 20000, grad_tol: float = 1e-7) -> FitReport:
    x = _prepare(samples, 3, "Student's t")
    c = float(np.median(x))
    lam = float(np.median(np.abs(x - c))) * 1.4826 or float(np.std(x))
    nu = 5.0
    for it in range(1, max_iter + 1):
        d2 = ((x - c) / lam) ** 2
        u = (nu + 1.0) / (nu + d2)
        c = float(np.sum(u * x) / np.sum(u))
        lam = math.sqrt(float(np.sum(u * (x - c) ** 2)) / x.size)
        if lam == 0:
            raise DegenerateSample("Student's t scale collapsed to zero")
        nu = _update_nu(((x - c) / lam) ** 2, nu)
        g = student_t_scaled_gradient(x, c, lam, nu)
        if nu in NU_BOUNDS:
            g[2] = 0.0  # projected gradient at an active bound
        if np.linalg.norm(g) < grad_tol:
            return _report(StudentTModel(c, lam, nu), x, it, True)
    raise NoConvergence(f"Student's t fit did not converge in {max_iter} iterations (gradient {g})")


# -- BGMM -------------------------------------------------------------------

def _canonical(model: BgmmModel) -> BgmmModel:
    if model.p1 >= 0.5:
        return model
    return BgmmModel(1.0 - model.p1, model.mu2, model.sigma2, model.mu1, model.sigma1)


def fit_bgmm_em(samples, init: BgmmModel | None = None, tol: float = 1e-8,
                max_iter: int = 20000) -> tuple[FitReport, EmTrace]:
    """Two-component Gaussian mixture by EM.

    Stops when an iteration raises the total log-likelihood by less than
    ``tol`` nats. The reported component 1 is the one with the larger weight.

    Raises
    ------
    ComponentCollapse
        If a component's sigma drops below ``1e-6`` times the sample std.
    """
    x = _prepare(samples, 4, "BGMM")
    n = x.size
    floor = 1e-6 * float(np.std(x))
    if init is None:
        med = float(np.median(x))
        lower, upper = x[x <= med], x[x > med]
        if upper.size == 0 or lower.size == 0:
            lower, upper = x[x < med], x[x >= med]
        if min(lower.size, upper.size) < 2:
            raise ComponentCollapse("median split leaves a component with fewer than two samples")
        p1, mu1, s1, mu2, s2 = 0.5, lower.mean(), lower.std(), upper.mean(), upper.std()
    else:
        p1, mu1, s1, mu2, s2 = init.p1, init.mu1, init.sigma1, init.mu2, init.sigma2
    if min(s1, s2) < floor:
        raise ComponentCollapse("initial component has (near) zero spread")

    trace = []
    converged = False
    iterations = 0
    while True:
        model = BgmmModel(p1, mu1, s1, mu2, s2)
        c1, c2 = model.component_logpdfs(x)
        lse = np.logaddexp(c1, c2)
        ll = float(np.sum(lse))
        if trace and ll - trace[-1] < tol:
            trace.append(ll)
            converged = True
            break
        trace.append(ll)
        if iterations >= max_iter:
            break
        iterations += 1
        r1 = np.exp(c1 - lse)
        r2 = 1.0 - r1
        n1 = float(np.sum(r1))
        n2 = n - n1
        if n1 <= 0 or n2 <= 0:
            raise ComponentCollapse("a mixture component lost all responsibility")
        mu1 = float(np.sum(r1 * x) / n1)
        mu2 = float(np.sum(r2 * x) / n2)
        s1 = math.sqrt(float(np.sum(r1 * (x - mu1) ** 2)) / n1)
        s2 = math.sqrt(float(np.sum(r2 * (x - mu2) ** 2)) / n2)
        p1 = n1 / n
        if min(s1, s2) < floor:
            raise ComponentCollapse(f"component sigma fell below {floor:g} at iteration {iterations}")
        if not 0.0 < p1 < 1.0:
            raise ComponentCollapse("mixture weight reached 0 or 1")

    # evaluated models keep the last accepted parameters
    model = _canonical(model)
    return _report(model, x, iterations, converged), EmTrace(tuple(trace))


FITTERS = {
    "gaussian": fit_gaussian,
    "logistic": fit_logistic,
    "bgmm": lambda samples: fit_bgmm_em(samples)[0],
    "student_t": fit_student_t,
}


def fit(name: str, samples) -> FitReport:
    try:
        fitter = FITTERS[name]
    except KeyError:
        raise ValidationError(f"unknown model {name!r}; choose from {sorted(FITTERS)}") from None
    return fitter(samples)


def histogram_overlay(samples, models: dict, bins: int = 100) -> dict:
    """Empirical density histogram plus each model's density at the bin centers."""
    x = np.asarray(samples, dtype=float).ravel()
    density, edges = np.histogram(x, bins=bins, density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    table = {"bin_center": centers, "empirical_density": density}
    for name, model in models.items():
        table[f"{name}_density"] = pdf(model, centers)
    return table
