"""Computation-time laws and their truncated moment generating functions.

Every transform here uses the decaying convention ``E[exp(-gamma * P)]`` and the
truncated moments ``E[P**n * exp(-gamma * P)]`` (n = 1, 2), all of which are
nonnegative for ``gamma >= 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import ParameterError


class Kind(str, Enum):
    GAMMA = "gamma"
    EXPONENTIAL = "exponential"
    DETERMINISTIC = "deterministic"


@dataclass(frozen=True)
class ServiceDistribution:
    """A computation-time law parameterised by its mean.

    ``shape_k`` only matters for :attr:`Kind.GAMMA`; the per-stage rate is
    ``shape_k / mean`` so the mean never depends on the shape.
    """

    kind: Kind
    mean: float
    shape_k: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if not (math.isfinite(self.mean) and self.mean > 0):
            raise ParameterError(f"mean must be finite and > 0, got {self.mean!r}")
        if self.kind is Kind.GAMMA and not (math.isfinite(self.shape_k) and self.shape_k > 0):
            raise ParameterError(f"shape_k must be finite and > 0, got {self.shape_k!r}")

    @classmethod
    def gamma(cls, mean: float, shape_k: float) -> ServiceDistribution:
        return cls(Kind.GAMMA, mean, shape_k)

    @classmethod
    def exponential(cls, mean: float) -> ServiceDistribution:
        return cls(Kind.EXPONENTIAL, mean)

    @classmethod
    def deterministic(cls, value: float) -> ServiceDistribution:
        return cls(Kind.DETERMINISTIC, value)

    @property
    def variance(self) -> float:
        if self.kind is Kind.GAMMA:
            return self.mean ** 2 / self.shape_k
        if self.kind is Kind.EXPONENTIAL:
            return self.mean ** 2
        return 0.0


@dataclass(frozen=True)
class CompFamily:
    """A distribution family with the mean left free (the optimiser's design variable)."""

    kind: Kind
    shape_k: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))

    def at(self, mean: float) -> ServiceDistribution:
        return ServiceDistribution(self.kind, mean, self.shape_k)


class MomentTriple(NamedTuple):
    """``(E[e^{-gP}], E[P e^{-gP}], E[P^2 e^{-gP}])`` at one argument g."""

    m0: float
    m1: float
    m2: float


def _check_gamma(gamma):
    if not gamma >= 0:
        raise ParameterError(f"gamma must be >= 0, got {gamma!r}")


def moments(dist: ServiceDistribution, gamma: float) -> MomentTriple:
    """All three truncated moments of ``dist`` at ``gamma``."""
    _check_gamma(gamma)
    m = dist.mean
    if dist.kind is Kind.GAMMA:
        k = dist.shape_k
        # log1p keeps (1 + x)^-k accurate for huge k (near-deterministic laws)
        lg = math.log1p(gamma * m / k)
        m0 = math.exp(-k * lg)
        m1 = m * math.exp(-(k + 1.0) * lg)
        m2 = m * m * (k + 1.0) / k * math.exp(-(k + 2.0) * lg)
    elif dist.kind is Kind.EXPONENTIAL:
        z = 1.0 / (1.0 + gamma * m)
        m0 = z
        m1 = m * z * z
        m2 = 2.0 * m * m * z ** 3
    else:
        e = math.exp(-gamma * m)
        m0, m1, m2 = e, m * e, m * m * e
    return MomentTriple(m0, m1, m2)


def mgf(dist: ServiceDistribution, gamma: float) -> float:
    return moments(dist, gamma).m0


def mgf_d1(dist: ServiceDistribution, gamma: float) -> float:
    """E[P exp(-gamma P)], i.e. minus the derivative of :func:`mgf` in gamma."""
    return moments(dist, gamma).m1


def mgf_d2(dist: ServiceDistribution, gamma: float) -> float:
    """E[P^2 exp(-gamma P)], the second derivative of :func:`mgf` in gamma."""
    return moments(dist, gamma).m2


def second_moment(dist: ServiceDistribution) -> float:
    return mgf_d2(dist, 0.0)


def sample(dist: ServiceDistribution, rng: np.random.Generator, size=None):
    """Draw from ``dist`` using the caller-owned generator ``rng``.

    Returns a float when ``size`` is None, otherwise an array.
    """
    if dist.kind is Kind.GAMMA:
        out = rng.gamma(dist.shape_k, dist.mean / dist.shape_k, size)
    elif dist.kind is Kind.EXPONENTIAL:
        out = rng.exponential(dist.mean, size)
    else:
        out = dist.mean if size is None else np.full(size, dist.mean)
    return float(out) if size is None else out
