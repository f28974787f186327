"""Validated SIS parameters and the closed-form scalars derived from them."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any, Mapping

__all__ = [
    "ParameterError",
    "NonPositive",
    "NegativeSigma",
    "InitialOutOfRange",
    "ComplexRoot",
    "SigmaZero",
    "SisParams",
    "DerivedConstants",
    "validate_params",
    "derived_constants",
    "deterministic_limit",
    "ito_persistence_level",
    "ito_gray_regime",
]

PARAM_KEYS = ("N", "beta", "mu_plus_gamma", "sigma", "i0")


class ParameterError(ValueError):
    """Base class for rejected parameter records."""


class NonPositive(ParameterError):
    def __init__(self, field: str, value: float):
        super().__init__(f"{field} must be positive and finite, got {value!r}")
        self.field = field


class NegativeSigma(ParameterError):
    def __init__(self, value: float):
        super().__init__(f"sigma must be nonnegative and finite, got {value!r}")


class InitialOutOfRange(ParameterError):
    def __init__(self, i0: float, N: float):
        super().__init__(f"i0 must lie strictly inside ]0, N[ = ]0, {N}[, got {i0!r}")


class ComplexRoot(ValueError):
    """beta^2 < 2 sigma^2 (mu+gamma): the Ito persistence level is not real."""


class SigmaZero(ValueError):
    """The requested quantity needs sigma > 0."""


@dataclass(frozen=True)
class SisParams:
    """Epidemic parameters of the SIS model.

    ``mu_plus_gamma`` is the removal rate mu + gamma; the two rates never
    appear separately. Construction validates every field and never clamps.
    """

    N: float
    beta: float
    mu_plus_gamma: float
    sigma: float
    i0: float

    def __post_init__(self):
        for name in ("N", "beta", "mu_plus_gamma"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise NonPositive(name, v)
        if not (isinstance(self.sigma, (int, float)) and math.isfinite(self.sigma)
                and self.sigma >= 0):
            raise NegativeSigma(self.sigma)
        if not (isinstance(self.i0, (int, float)) and 0 < self.i0 < self.N):
            raise InitialOutOfRange(self.i0, self.N)
        for name in PARAM_KEYS:
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def delta(self) -> float:
        return self.N * self.beta - self.mu_plus_gamma

    @property
    def r0(self) -> float:
        return self.beta * self.N / self.mu_plus_gamma

    @property
    def r0_stochastic(self) -> float:
        return self.r0 - self.sigma**2 * self.N**2 / (2 * self.mu_plus_gamma)

    def replace(self, **changes: float) -> "SisParams":
        d = asdict(self)
        d.update(changes)
        return SisParams(**d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DerivedConstants:
    delta: float
    r0: float
    r0_stochastic: float


def validate_params(raw: Mapping[str, Any]) -> SisParams:
    """Build :class:`SisParams` from a mapping with keys N, beta,
    mu_plus_gamma, sigma, i0. Missing or unknown keys are errors."""
    keys = set(raw)
    missing = [k for k in PARAM_KEYS if k not in keys]
    unknown = sorted(keys - set(PARAM_KEYS))
    if missing:
        raise ParameterError(f"missing parameter(s): {', '.join(missing)}")
    if unknown:
        raise ParameterError(f"unknown parameter(s): {', '.join(unknown)}")
    values = {}
    for k in PARAM_KEYS:
        v = raw[k]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ParameterError(f"{k} must be a number, got {v!r}")
        values[k] = v
    return SisParams(**values)


def derived_constants(p: SisParams) -> DerivedConstants:
    return DerivedConstants(delta=p.delta, r0=p.r0, r0_stochastic=p.r0_stochastic)


def deterministic_limit(p: SisParams) -> float:
    """Long-time limit of the deterministic model: 0 if R0 <= 1, else N(1 - 1/R0)."""
    if p.r0 <= 1:
        return 0.0
    return p.N * (1 - 1 / p.r0)


def ito_persistence_level(p: SisParams) -> float:
    r"""Persistence level of the Ito model,
    :math:`\xi = (\sqrt{\beta^2 - 2\sigma^2(\mu+\gamma)} - (\beta - \sigma^2 N))/\sigma^2`.

    Evaluated as ``N - 2(mu+gamma)/(sqrt(...) + beta)``, which is the same
    number without the cancellation that ruins the textbook form for small sigma.
    """
    if p.sigma == 0:
        raise SigmaZero("sigma = 0: use deterministic_limit")
    s2 = p.sigma**2
    disc = p.beta**2 - 2 * s2 * p.mu_plus_gamma
    if disc < 0:
        raise ComplexRoot(f"beta^2 - 2 sigma^2 (mu+gamma) = {disc} < 0")
    return p.N - 2 * p.mu_plus_gamma / (math.sqrt(disc) + p.beta)


def ito_gray_regime(p: SisParams) -> dict:
    """Asymptotic regime of the Ito model from the published sufficient conditions.

    Returns a dict with ``verdict`` in {"extinct", "persistent", "indeterminate"}
    and the inequality values used. Boundary equalities are indeterminate.
    The refined rule (R0^S < 1 extinct, R0^S >= 1 recurrent) is reported
    alongside as ``refined``.
    """
    s2 = p.sigma**2
    r0s = p.r0_stochastic
    b_over_n = p.beta / p.N
    b2 = p.beta**2 / (2 * p.mu_plus_gamma)
    # Two sufficient conditions: R0^S < 1 with small noise, or large noise
    # alone (sigma^2 above both beta/N and beta^2/(2(mu+gamma))). The latter
    # can never coexist with R0^S > 1.
    if (r0s < 1 and s2 < b_over_n) or s2 > max(b_over_n, b2):
        verdict = "extinct"
    elif r0s > 1:
        verdict = "persistent"
    else:
        verdict = "indeterminate"
    out = {
        "verdict": verdict,
        "r0_stochastic": r0s,
        "sigma2": s2,
        "beta_over_N": b_over_n,
        "beta2_over_2m": b2,
        "refined": "extinct" if r0s < 1 else "recurrent",
    }
    if verdict == "persistent" and p.sigma > 0:
        out["xi"] = ito_persistence_level(p)
    return out
