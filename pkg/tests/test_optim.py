import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tandem_aoi import analytic
from tandem_aoi.analytic import Scheme
from tandem_aoi.coupling import CouplingSpec, resolve_params
from tandem_aoi.dist import CompFamily, Kind
from tandem_aoi.errors import NumericalError, ParameterError
from tandem_aoi.optim import (
    ObjectiveWeights,
    objective,
    optimize_mean_comp,
    sweep,
    tradeoff_curve,
    tradeoff_weights,
)
from tandem_aoi.sim import SimConfig, simulate

from conftest import rel

SPEC = CouplingSpec(15, 0.1)
G10 = CompFamily(Kind.GAMMA, 10)


def dense_argmin(scheme, fam, spec, w, lam=0.4, n=10 ** 4):
    xs = np.linspace(spec.p_min, spec.p_max, n)
    v = [objective(scheme, lam, fam, spec, float(x), w) for x in xs]
    return float(xs[int(np.argmin(v))]), xs[1] - xs[0]


def test_objective_single_weights():
    p = resolve_params(SPEC, 0.4, G10, 4)
    rep = analytic.full_report(Scheme.NP_BUFFER, p)
    assert objective(Scheme.NP_BUFFER, 0.4, G10, SPEC, 4, ObjectiveWeights(1, 0)) == rep.avg_aoi
    assert objective(Scheme.NP_BUFFER, 0.4, G10, SPEC, 4, ObjectiveWeights(0, 1)) == rep.avg_peak_aoi


def test_objective_sum_vs_simulation():
    v = objective(Scheme.NP_BUFFER, 0.4, G10, SPEC, 4, ObjectiveWeights(1, 1))
    rep = analytic.full_report(Scheme.NP_BUFFER, resolve_params(SPEC, 0.4, G10, 4))
    assert v == rep.avg_aoi + rep.avg_peak_aoi
    r = simulate(SimConfig(Scheme.NP_BUFFER, resolve_params(SPEC, 0.4, G10, 4), seed=12))
    assert rel(r.avg_aoi + r.avg_peak_aoi, v) < 0.02


def test_flat_coupling_matches_dense_scan():
    spec = CouplingSpec(15, 0.0)
    w = ObjectiveWeights(1, 0)
    r = optimize_mean_comp(Scheme.NP_NOBUFFER, 0.4, G10, spec, w)
    x, dx = dense_argmin(Scheme.NP_NOBUFFER, G10, spec, w)
    assert abs(r.best_mean_comp - x) <= max(1e-4, dx)


def test_contract_endpoints():
    w = ObjectiveWeights(1, 0)
    r = optimize_mean_comp(Scheme.NP_BUFFER, 0.4, G10, SPEC, w)
    for e in (1.0, 10.0):
        assert r.best_objective <= objective(Scheme.NP_BUFFER, 0.4, G10, SPEC, e, w)
    assert 1.0 <= r.best_mean_comp <= 10.0
    assert r.best_objective == w.w1 * r.avg_aoi_at_opt + w.w2 * r.avg_peak_at_opt


@pytest.mark.parametrize("k", [0.5, 1.0, 5.0])
def test_np_buffer_matches_dense_scan(k):
    fam = CompFamily(Kind.GAMMA, k)
    w = ObjectiveWeights(1, 0)
    r = optimize_mean_comp(Scheme.NP_BUFFER, 0.4, fam, SPEC, w)
    x, dx = dense_argmin(Scheme.NP_BUFFER, fam, SPEC, w)
    assert abs(r.best_mean_comp - x) <= max(1e-4, dx)


def test_never_worse_than_grid():
    w = ObjectiveWeights(0.3, 0.7)
    for scheme in Scheme:
        r = optimize_mean_comp(scheme, 0.4, G10, SPEC, w, grid_points=17)
        grid = np.linspace(1, 10, 17)
        assert r.best_objective <= min(objective(scheme, 0.4, G10, SPEC, float(x), w) for x in grid)


def test_deterministic_and_idempotent():
    w = ObjectiveWeights(1, 1)
    assert optimize_mean_comp(Scheme.PREEMPT_COMP, 0.4, G10, SPEC, w) == \
        optimize_mean_comp(Scheme.PREEMPT_COMP, 0.4, G10, SPEC, w)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 10), st.floats(0, 1))
def test_weight_scaling(c, frac):
    w = ObjectiveWeights(frac, 1 - frac + 0.01)
    a = optimize_mean_comp(Scheme.NP_NOBUFFER, 0.4, G10, SPEC, w, grid_points=16, refine_tol=1e-3)
    b = optimize_mean_comp(Scheme.NP_NOBUFFER, 0.4, G10, SPEC, ObjectiveWeights(c * w.w1, c * w.w2),
                           grid_points=16, refine_tol=1e-3)
    assert a.best_mean_comp == pytest.approx(b.best_mean_comp, abs=1e-9)
    assert b.best_objective == pytest.approx(c * a.best_objective, rel=1e-12)


@pytest.mark.parametrize("kw", [dict(grid_points=2), dict(refine_tol=0.0)])
def test_optimizer_preconditions(kw):
    with pytest.raises(ParameterError):
        optimize_mean_comp(Scheme.NP_NOBUFFER, 0.4, G10, SPEC, ObjectiveWeights(1, 0), **kw)


@pytest.mark.parametrize("w", [(0, 0), (-1, 1), (float("inf"), 1)])
def test_weight_validation(w):
    with pytest.raises(ParameterError):
        ObjectiveWeights(*w)


def test_non_finite_objective_names_point(monkeypatch):
    real = analytic.full_report

    def broken(scheme, params):
        rep = real(scheme, params)
        if params.comp.mean > 5:
            return rep.__class__(**{**rep.__dict__, "avg_aoi": float("nan")})
        return rep

    monkeypatch.setattr(analytic, "full_report", broken)
    with pytest.raises(NumericalError, match="mean_comp="):
        optimize_mean_comp(Scheme.NP_NOBUFFER, 0.4, G10, SPEC, ObjectiveWeights(1, 0))


# --- tradeoff ----------------------------------------------------------------

def test_weights_cover_extremes():
    ws = tradeoff_weights(5)
    assert (ws[0].w1, ws[0].w2) == (1.0, 0.0) and (ws[-1].w1, ws[-1].w2) == (0.0, 1.0)
    for w in ws:
        assert w.w1 + w.w2 == pytest.approx(1.0, abs=1e-15)


def test_two_steps_gives_single_criterion_optima():
    pts = tradeoff_curve(Scheme.NP_NOBUFFER, 0.4, G10, SPEC, 2)
    assert 1 <= len(pts) <= 2
    assert {(p.w1, p.w2) for p in pts} <= {(1.0, 0.0), (0.0, 1.0)}


def _pairwise_non_dominated(pts):
    for a in pts:
        for b in pts:
            if a is b:
                continue
            assert not (b.avg_aoi <= a.avg_aoi and b.avg_peak_aoi <= a.avg_peak_aoi
                        and (b.avg_aoi < a.avg_aoi or b.avg_peak_aoi < a.avg_peak_aoi))


def _diameter(pts):
    a = np.array([[p.avg_aoi, p.avg_peak_aoi] for p in pts])
    return max(np.hypot(*(x - y)) for x in a for y in a)


def test_tradeoff_non_dominated_and_sorted():
    pts = tradeoff_curve(Scheme.NP_NOBUFFER, 0.4, G10, SPEC, 25)
    _pairwise_non_dominated(pts)
    assert [p.avg_aoi for p in pts] == sorted(p.avg_aoi for p in pts)


def test_tradeoff_high_variance_shrinks():
    hi = tradeoff_curve(Scheme.NP_NOBUFFER, 0.4, CompFamily(Kind.GAMMA, 0.5), SPEC, 25)
    lo = tradeoff_curve(Scheme.NP_NOBUFFER, 0.4, G10, SPEC, 25)
    assert _diameter(hi) < _diameter(lo)


def test_tradeoff_steps_precondition():
    with pytest.raises(ParameterError):
        tradeoff_curve(Scheme.NP_NOBUFFER, 0.4, G10, SPEC, 1)


# --- sweeps ------------------------------------------------------------------

def test_alpha_sweep_optimum_in_range():
    rows = sweep(Scheme.NP_NOBUFFER, 0.4, G10, SPEC, "alpha", (0.0, 0.5), 6, ObjectiveWeights(1, 0))
    assert len(rows) == 6
    for r in rows:
        assert math.isfinite(r.mean_comp) and 1 <= r.mean_comp <= 10


def test_mean_comp_sweep_variance_ordering_non_preemptive():
    for scheme in (Scheme.NP_NOBUFFER, Scheme.NP_BUFFER):
        lo = sweep(scheme, 0.4, CompFamily(Kind.GAMMA, 10), SPEC, "mean_comp", (1, 10), 10, ObjectiveWeights(1, 0))
        hi = sweep(scheme, 0.4, CompFamily(Kind.GAMMA, 0.5), SPEC, "mean_comp", (1, 10), 10, ObjectiveWeights(1, 0))
        assert [r.value for r in lo] == [r.mean_comp for r in lo]
        at4 = [i for i, r in enumerate(lo) if r.value == 4.0][0]
        assert lo[at4].avg_aoi < hi[at4].avg_aoi


def test_lambda_sweep_matches_direct_evaluation_and_sim():
    rows = sweep(Scheme.NP_BUFFER, 0.4, G10, SPEC, "lambda", (0.2, 1.0), 5, ObjectiveWeights(1, 0), mean_comp=2.0)
    at = [r for r in rows if abs(r.value - 0.4) < 1e-12][0]
    p = resolve_params(SPEC, 0.4, G10, 2.0)
    assert at.avg_aoi == analytic.avg_aoi(Scheme.NP_BUFFER, p)
    # scheme ordering at the reference point agrees between closed forms and simulation
    order_a = sorted(Scheme, key=lambda s: analytic.avg_aoi(s, p))
    sims = {s: simulate(SimConfig(s, p, seed=13)).avg_aoi for s in Scheme}
    order_s = sorted(Scheme, key=sims.get)
    assert order_a == order_s


def test_k_sweep_needs_gamma():
    with pytest.raises(ParameterError):
        sweep(Scheme.NP_NOBUFFER, 0.4, CompFamily(Kind.EXPONENTIAL), SPEC, "k", (1, 2), 2, ObjectiveWeights(1, 0))


@pytest.mark.parametrize("kw", [dict(parameter="mu"), dict(steps=0), dict(value_range=(2, 1))])
def test_sweep_preconditions(kw):
    args = dict(parameter="alpha", value_range=(0, 1), steps=2)
    args.update(kw)
    with pytest.raises(ParameterError):
        sweep(Scheme.NP_NOBUFFER, 0.4, G10, SPEC, weights=ObjectiveWeights(1, 0), **args)
