"""Choosing the mean computation time, and the AoI / peak-AoI tradeoff."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from . import analytic
from .analytic import Scheme
from .coupling import CouplingSpec, resolve_params
from .dist import CompFamily, Kind
from .errors import NumericalError, ParameterError

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ObjectiveWeights:
    w1: float = 1.0
    w2: float = 0.0

    def __post_init__(self):
        if not (self.w1 >= 0 and self.w2 >= 0 and self.w1 + self.w2 > 0):
            raise ParameterError(f"weights must be >= 0 with a positive sum, got ({self.w1!r}, {self.w2!r})")
        if not (math.isfinite(self.w1) and math.isfinite(self.w2)):
            raise ParameterError("weights must be finite")


@dataclass(frozen=True)
class OptResult:
    best_mean_comp: float
    best_objective: float
    avg_aoi_at_opt: float
    avg_peak_at_opt: float
    evaluations: int


@dataclass(frozen=True)
class TradeoffPoint:
    w1: float
    w2: float
    mean_comp: float
    avg_aoi: float
    avg_peak_aoi: float


@dataclass(frozen=True)
class SweepRow:
    value: float
    mean_comp: float
    avg_aoi: float
    avg_peak_aoi: float
    objective: float


def _evaluate(scheme, lam, family, spec, mean_comp, weights):
    rep = analytic.full_report(scheme, resolve_params(spec, lam, family, mean_comp))
    obj = weights.w1 * rep.avg_aoi + weights.w2 * rep.avg_peak_aoi
    if not math.isfinite(obj):
        raise NumericalError(f"objective is not finite at mean_comp={mean_comp!r}")
    return obj, rep.avg_aoi, rep.avg_peak_aoi


def objective(scheme: Scheme | str, lam: float, family: CompFamily, spec: CouplingSpec,
              mean_comp: float, weights: ObjectiveWeights) -> float:
    """Weighted sum ``w1 * avg_aoi + w2 * avg_peak_aoi`` at the coupled parameters."""
    return _evaluate(Scheme(scheme), lam, family, spec, mean_comp, weights)[0]


def _golden(f: Callable[[float], float], lo: float, hi: float, tol: float):
    """Golden-section search on [lo, hi]; yields every (x, f(x)) it evaluates."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    yield c, fc
    yield d, fd
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
            yield c, fc
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
            yield d, fd


def optimize_mean_comp(scheme: Scheme | str, lam: float, family: CompFamily, spec: CouplingSpec,
                       weights: ObjectiveWeights, grid_points: int = 64,
                       refine_tol: float = 1e-4) -> OptResult:
    """Grid scan of [p_min, p_max] then golden-section refinement around the best sample.

    No unimodality is assumed: the returned incumbent is the best point seen,
    so it is never worse than any grid sample.
    """
    if grid_points < 3:
        raise ParameterError("grid_points must be >= 3")
    if not refine_tol > 0:
        raise ParameterError("refine_tol must be > 0")
    scheme = Scheme(scheme)
    cache: dict[float, tuple[float, float, float]] = {}

    def f(x: float) -> float:
        if x not in cache:
            cache[x] = _evaluate(scheme, lam, family, spec, x, weights)
        return cache[x][0]

    grid = np.linspace(spec.p_min, spec.p_max, grid_points)
    vals = [f(float(x)) for x in grid]
    i = int(np.argmin(vals))
    lo = float(grid[max(i - 1, 0)])
    hi = float(grid[min(i + 1, grid_points - 1)])
    for _ in _golden(f, lo, hi, refine_tol):
        pass

    best = min(cache, key=lambda x: (cache[x][0], x))
    obj, aoi, peak = cache[best]
    return OptResult(best, obj, aoi, peak, len(cache))


def _pareto(points: Sequence[TradeoffPoint]) -> list[TradeoffPoint]:
    keep = []
    for p in points:
        dominated = any(
            q.avg_aoi <= p.avg_aoi and q.avg_peak_aoi <= p.avg_peak_aoi
            and (q.avg_aoi < p.avg_aoi or q.avg_peak_aoi < p.avg_peak_aoi)
            for q in points
        )
        duplicate = any(q.avg_aoi == p.avg_aoi and q.avg_peak_aoi == p.avg_peak_aoi for q in keep)
        if not dominated and not duplicate:
            keep.append(p)
    return sorted(keep, key=lambda p: (p.avg_aoi, p.avg_peak_aoi))


def tradeoff_weights(steps: int) -> list[ObjectiveWeights]:
    """``(cos^2, sin^2)`` of evenly spaced angles in [0, pi/2], endpoints exact."""
    if steps < 2:
        raise ParameterError("weight_steps must be >= 2")
    out = []
    for j in range(steps):
        if j == 0:
            out.append(ObjectiveWeights(1.0, 0.0))
        elif j == steps - 1:
            out.append(ObjectiveWeights(0.0, 1.0))
        else:
            th = 0.5 * math.pi * j / (steps - 1)
            out.append(ObjectiveWeights(math.cos(th) ** 2, math.sin(th) ** 2))
    return out


def tradeoff_curve(scheme: Scheme | str, lam: float, family: CompFamily, spec: CouplingSpec,
                   weight_steps: int, grid_points: int = 64,
                   refine_tol: float = 1e-4) -> list[TradeoffPoint]:
    pts = []
    for w in tradeoff_weights(weight_steps):
        r = optimize_mean_comp(scheme, lam, family, spec, w, grid_points, refine_tol)
        pts.append(TradeoffPoint(w.w1, w.w2, r.best_mean_comp, r.avg_aoi_at_opt, r.avg_peak_at_opt))
    return _pareto(pts)


SWEEP_PARAMETERS = ("alpha", "k", "lambda", "mean_comp")


def sweep(scheme: Scheme | str, lam: float, family: CompFamily, spec: CouplingSpec,
          parameter: str, value_range: tuple[float, float], steps: int,
          weights: ObjectiveWeights, mean_comp: float | None = None,
          grid_points: int = 64, refine_tol: float = 1e-4) -> list[SweepRow]:
    """Vary one parameter over ``linspace(*value_range, steps)``.

    For ``mean_comp`` the objective is evaluated directly at each value; for
    the other parameters ``mean_comp`` (if given) is held fixed, otherwise
    the optimal mean computation time is found at every step.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ParameterError(f"unknown sweep parameter {parameter!r}")
    if steps < 1:
        raise ParameterError("steps must be >= 1")
    lo, hi = value_range
    if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
        raise ParameterError(f"invalid range ({lo!r}, {hi!r})")
    if parameter == "k" and family.kind is not Kind.GAMMA:
        raise ParameterError("a k sweep needs the gamma family")
    scheme = Scheme(scheme)
    rows = []
    for v in np.linspace(lo, hi, steps):
        v = float(v)
        lam_v, fam_v, spec_v, mc = lam, family, spec, mean_comp
        if parameter == "alpha":
            spec_v = replace(spec, alpha=v)
        elif parameter == "k":
            fam_v = replace(family, shape_k=v)
        elif parameter == "lambda":
            lam_v = v
        else:
            mc = v
        if mc is None:
            r = optimize_mean_comp(scheme, lam_v, fam_v, spec_v, weights, grid_points, refine_tol)
            rows.append(SweepRow(v, r.best_mean_comp, r.avg_aoi_at_opt, r.avg_peak_at_opt, r.best_objective))
        else:
            obj, aoi, peak = _evaluate(scheme, lam_v, fam_v, spec_v, mc, weights)
            rows.append(SweepRow(v, mc, aoi, peak, obj))
    return rows
