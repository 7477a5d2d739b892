"""Candidate pseudorange-error distributions.

Gaussian, logistic, two-component Gaussian mixture (BGMM) and generalized
Student's t. Every model exposes a vectorized ``logpdf``; the module-level
functions are thin wrappers used throughout the package.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Union

import numpy as np
from scipy.special import expit, gammaln

from .errors import InvalidUniform, NonFiniteSample, ValidationError

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _positive(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0):
        raise ValidationError(f"{name} must be positive and finite, got {value}")


def _finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value}")


@dataclass(frozen=True)
class GaussianModel:
    mu: float
    sigma: float

    type_tag = "gaussian"

    def __post_init__(self):
        _finite("mu", self.mu)
        _positive("sigma", self.sigma)

    def logpdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return -0.5 * z * z - math.log(self.sigma) - _LOG_SQRT_2PI

    @property
    def scale(self) -> float:
        return self.sigma


@dataclass(frozen=True)
class LogisticModel:
    m: float
    s: float

    type_tag = "logistic"

    def __post_init__(self):
        _finite("m", self.m)
        _positive("s", self.s)

    def logpdf(self, x):
        # e^{-|z|} / (s (1 + e^{-|z|})^2), stable for any |z|
        z = np.abs((np.asarray(x, dtype=float) - self.m) / self.s)
        return -z - 2.0 * np.log1p(np.exp(-z)) - math.log(self.s)

    @property
    def scale(self) -> float:
        return self.s


@dataclass(frozen=True)
class BgmmModel:
    p1: float
    mu1: float
    sigma1: float
    mu2: float
    sigma2: float

    type_tag = "bgmm"

    def __post_init__(self):
        if not 0.0 < self.p1 < 1.0:
            raise ValidationError(f"p1 must lie in (0, 1), got {self.p1}")
        _finite("mu1", self.mu1)
        _finite("mu2", self.mu2)
        _positive("sigma1", self.sigma1)
        _positive("sigma2", self.sigma2)

    def component_logpdfs(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Weighted log-densities ``log p_k + log f_N(x; mu_k, sigma_k)``."""
        c1 = GaussianModel(self.mu1, self.sigma1).logpdf(x) + math.log(self.p1)
        c2 = GaussianModel(self.mu2, self.sigma2).logpdf(x) + math.log1p(-self.p1)
        return c1, c2

    def logpdf(self, x):
        c1, c2 = self.component_logpdfs(x)
        return np.logaddexp(c1, c2)

    @property
    def scale(self) -> float:
        """Standard deviation of the mixture."""
        p, q = self.p1, 1.0 - self.p1
        var = p * self.sigma1**2 + q * self.sigma2**2 + p * q * (self.mu1 - self.mu2) ** 2
        return math.sqrt(var)


@dataclass(frozen=True)
class StudentTModel:
    c: float
    lam: float
    nu: float

    type_tag = "student_t"

    def __post_init__(self):
        _finite("c", self.c)
        _positive("lambda", self.lam)
        _positive("nu", self.nu)

    def logpdf(self, x):
        nu = self.nu
        z = (np.asarray(x, dtype=float) - self.c) / self.lam
        norm = gammaln(0.5 * (nu + 1.0)) - gammaln(0.5 * nu) - 0.5 * math.log(nu * math.pi)
        return norm - math.log(self.lam) - 0.5 * (nu + 1.0) * np.log1p(z * z / nu)

    @property
    def scale(self) -> float:
        return self.lam


DistributionModel = Union[GaussianModel, LogisticModel, BgmmModel, StudentTModel]

MODEL_TYPES: dict[str, type] = {
    cls.type_tag: cls for cls in (GaussianModel, LogisticModel, BgmmModel, StudentTModel)
}


def logistic_pdf(x, model: LogisticModel):
    return np.exp(model.logpdf(x))


def logistic_cdf(x, model: LogisticModel):
    return expit((np.asarray(x, dtype=float) - model.m) / model.s)


def logistic_sample(u, model: LogisticModel):
    """Inverse-CDF draw for uniform deviate(s) ``u`` in the open interval (0, 1)."""
    u = np.asarray(u, dtype=float)
    if not np.all((u > 0.0) & (u < 1.0)):
        raise InvalidUniform("uniform deviates must lie strictly inside (0, 1)")
    out = model.m + model.s * (np.log(u) - np.log1p(-u))
    return out if out.ndim else float(out)


def gaussian_pdf(x, model: GaussianModel):
    return np.exp(model.logpdf(x))


def bgmm_pdf(x, model: BgmmModel):
    return np.exp(model.logpdf(x))


def student_t_pdf(x, model: StudentTModel):
    return np.exp(model.logpdf(x))


def pdf(model: DistributionModel, x):
    return np.exp(model.logpdf(x))


def log_likelihood(model: DistributionModel, samples) -> float:
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise ValidationError("log-likelihood needs at least one sample")
    if not np.all(np.isfinite(samples)):
        raise NonFiniteSample("samples contain NaN or infinite values")
    return float(np.sum(model.logpdf(samples)))


def model_to_dict(model: DistributionModel) -> dict:
    fields = asdict(model)
    if isinstance(model, StudentTModel):
        fields = {"c": model.c, "lambda": model.lam, "nu": model.nu}
    return {"type": model.type_tag, **fields}


def model_from_dict(data: dict) -> DistributionModel:
    data = dict(data)
    try:
        cls = MODEL_TYPES[data.pop("type")]
    except KeyError as exc:
        raise ValidationError(f"unknown or missing model type in {data!r}") from exc
    if cls is StudentTModel and "lambda" in data:
        data["lam"] = data.pop("lambda")
    try:
        return cls(**{k: float(v) for k, v in data.items()})
    except TypeError as exc:
        raise ValidationError(f"bad fields for {cls.type_tag}: {exc}") from exc


def dumps(model: DistributionModel) -> str:
    return json.dumps(model_to_dict(model), indent=2, sort_keys=False) + "\n"


def loads(text: str) -> DistributionModel:
    data = json.loads(text)
    # also accept a fit report wrapping the model
    if "model" in data and isinstance(data["model"], dict):
        data = data["model"]
    return model_from_dict(data)
