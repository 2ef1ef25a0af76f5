"""Dependence of the transmission time on the mean computation time.

Spending longer on computation shrinks the payload, so the mean transmission
time falls as ``1/mu = b0 * exp(-alpha * E[P])``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .analytic import SystemParams
from .dist import CompFamily
from .errors import ParameterError


@dataclass(frozen=True)
class CouplingSpec:
    b0: float
    alpha: float
    p_min: float = 1.0
    p_max: float = 10.0

    def __post_init__(self):
        if not (math.isfinite(self.b0) and self.b0 > 0):
            raise ParameterError(f"b0 must be > 0, got {self.b0!r}")
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise ParameterError(f"alpha must be >= 0, got {self.alpha!r}")
        if not (math.isfinite(self.p_min) and math.isfinite(self.p_max) and 0 < self.p_min < self.p_max):
            raise ParameterError(f"need 0 < p_min < p_max, got ({self.p_min!r}, {self.p_max!r})")


def transmission_mean(spec: CouplingSpec, mean_comp: float) -> float:
    if not (spec.p_min <= mean_comp <= spec.p_max):
        raise ParameterError(
            f"mean_comp={mean_comp!r} outside [{spec.p_min!r}, {spec.p_max!r}]"
        )
    return spec.b0 * math.exp(-spec.alpha * mean_comp)


def resolve_params(spec: CouplingSpec, lam: float, family: CompFamily, mean_comp: float) -> SystemParams:
    return SystemParams(lam, family.at(mean_comp), 1.0 / transmission_mean(spec, mean_comp))
