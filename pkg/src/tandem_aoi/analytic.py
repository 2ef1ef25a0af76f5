"""Closed-form average AoI and average peak AoI for the four tandem schemes.

Notation used throughout:

* ``I``  exponential idle gap until the next job arrival (rate ``lam``).
* ``C``  computation time of a job that reaches the transmitter.  It is the
  plain law ``P`` for the non-preemptive first stage and ``P' = P | P < I``
  when the computation server is preemptive.
* ``J``  time between a stage-1 exit and the start of the next job that will
  exit stage 1.  ``J = I`` without stage-1 preemption, ``J = I + Y`` with it,
  where ``Y`` is the restart period spent on preempted jobs.
* ``X = C_prev + J`` is the interval between entry times of consecutive
  packets, ``G = J + C`` the gap between their arrivals at the transmitter.

Average AoI is ``lam_eff * (E[XT] + E[X^2] / 2)`` and average peak AoI is
``E[(X + T) 1{delivered}] / Pr[delivered]`` where ``T`` is the system time in
the equivalent queue (a superseded packet is credited with the delivery of its
successor).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from . import dist as _dist
from .dist import MomentTriple, ServiceDistribution
from .errors import ConsistencyError, DegenerateConditioningError, ParameterError


class Scheme(str, Enum):
    NP_NOBUFFER = "np-nobuffer"
    NP_BUFFER = "np-buffer"
    PREEMPT_TX = "preempt-tx"
    PREEMPT_COMP = "preempt-comp"

    @property
    def label(self) -> str:
        return _LABELS[self]

    @property
    def buffered(self) -> bool:
        """True when the transmitter keeps one waiting packet (LCFS with discarding)."""
        return self in (Scheme.NP_BUFFER, Scheme.PREEMPT_COMP)


_LABELS = {
    Scheme.NP_NOBUFFER: "M/GI/1/1 -> GI/M/1/1",
    Scheme.NP_BUFFER: "M/GI/1/1 -> GI/M/1/2*",
    Scheme.PREEMPT_TX: "M/GI/1/1 -> GI/M/1 preemptive",
    Scheme.PREEMPT_COMP: "M/GI/1 preemptive -> GI/M/1/2*",
}


@dataclass(frozen=True)
class SystemParams:
    lam: float
    comp: ServiceDistribution
    mu: float

    def __post_init__(self):
        for name in ("lam", "mu"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be finite and > 0, got {v!r}")
        if not isinstance(self.comp, ServiceDistribution):
            raise ParameterError("comp must be a ServiceDistribution")


@dataclass(frozen=True)
class AoiReport:
    scheme: Scheme
    avg_aoi: float
    avg_peak_aoi: float
    p_busy: float
    eff_rate: float
    e_xt: float
    e_x2: float
    peak_numerator: float
    peak_prob: float


def _prob(x: float, what: str, closed: bool = False) -> float:
    ok = (0.0 < x <= 1.0) if closed else (0.0 < x < 1.0)
    if not (math.isfinite(x) and ok):
        raise ConsistencyError(f"{what} = {x!r} is not a valid probability")
    return x


def _exp_moments(rate: float, gamma: float) -> MomentTriple:
    z = rate + gamma
    return MomentTriple(rate / z, rate / z ** 2, 2.0 * rate / z ** 3)


def _convolve(a: MomentTriple, b: MomentTriple) -> MomentTriple:
    """Truncated moments of the sum of two independent variables."""
    return MomentTriple(
        a.m0 * b.m0,
        a.m1 * b.m0 + a.m0 * b.m1,
        a.m2 * b.m0 + 2.0 * a.m1 * b.m1 + a.m0 * b.m2,
    )


# ---------------------------------------------------------------------------
# Conditioning lemmas
# ---------------------------------------------------------------------------

def lemma_wait_plus_idle(mean_interarrival: float, exit_prob: float) -> float:
    """Mean residual service plus idle wait seen by a packet blocked at a bufferless server.

    The blocked packet waits a geometric number of arrival gaps (success
    probability ``exit_prob``), so by Wald's identity the mean is
    ``mean_interarrival / exit_prob``.
    """
    if not (0.0 < exit_prob <= 1.0):
        raise ParameterError(f"exit_prob must lie in (0, 1], got {exit_prob!r}")
    return mean_interarrival / exit_prob


def mgf_conditioned_shorter(dist: ServiceDistribution, lam: float, gamma: float) -> float:
    """MGF of G given G < F, with F ~ Exp(lam) independent of G ~ ``dist``."""
    norm = _dist.mgf(dist, lam)
    if norm <= 0.0:
        raise DegenerateConditioningError(f"Pr[G < F] = M_G({lam}) underflows to zero")
    return _dist.mgf(dist, gamma + lam) / norm


def mgf_exp_conditioned_shorter(lam: float, dist: ServiceDistribution, gamma: float) -> float:
    """MGF of F given F < G, with F ~ Exp(lam) independent of G ~ ``dist``."""
    if gamma < 0:
        raise ParameterError(f"gamma must be >= 0, got {gamma!r}")
    norm = 1.0 - _dist.mgf(dist, lam)
    if norm <= 0.0:
        raise DegenerateConditioningError(f"Pr[F < G] = 1 - M_G({lam}) is zero")
    return lam / (lam + gamma) * (1.0 - _dist.mgf(dist, gamma + lam)) / norm


# ---------------------------------------------------------------------------
# Preemptive computation server: laws of P', Y and the inter-entry time X
# ---------------------------------------------------------------------------

def conditioned_comp_moments(params: SystemParams, gamma: float = 0.0) -> MomentTriple:
    """Truncated moments of P' = P | P < I (a job finishing before the next arrival).

    ``.m1`` at ``gamma = 0`` is E[P'].
    """
    norm = _dist.mgf(params.comp, params.lam)
    if norm <= 0.0:
        raise DegenerateConditioningError("Pr[P < I] underflows to zero")
    m = _dist.moments(params.comp, gamma + params.lam)
    return MomentTriple(m.m0 / norm, m.m1 / norm, m.m2 / norm)


def restart_period_moments(params: SystemParams, gamma: float = 0.0) -> MomentTriple:
    """Truncated moments of the restart period Y burnt on preempted jobs.

    ``M_Y(g) = (lam + g) M_P(lam) / (g + lam M_P(g + lam))``; the derivatives are
    taken analytically in the nonnegative-moment convention.
    """
    lam = params.lam
    c = _dist.mgf(params.comp, lam)
    if c <= 0.0:
        raise DegenerateConditioningError("Pr[P < I] underflows to zero")
    a = _dist.moments(params.comp, gamma + lam)
    den = gamma + lam * a.m0
    dden = 1.0 - lam * a.m1
    num = (lam + gamma) * c
    m0 = num / den
    m1 = c * ((lam + gamma) * dden - den) / den ** 2
    m2 = -num * lam * a.m2 / den ** 2 + 2.0 * dden * m1 / den
    return MomentTriple(m0, m1, m2)


def preempt_interarrival_mgf(params: SystemParams, gamma: float) -> MomentTriple:
    """Truncated moments of the inter-entry time X under stage-1 preemption.

    ``M_X(g) = lam M_P(g + lam) / (g + lam M_P(g + lam))``, differentiated by the
    quotient rule over the primitives of P at ``g + lam``.
    """
    if gamma < 0:
        raise ParameterError(f"gamma must be >= 0, got {gamma!r}")
    lam = params.lam
    a = _dist.moments(params.comp, gamma + lam)
    den = gamma + lam * a.m0
    assert den > 0.0
    dden = 1.0 - lam * a.m1
    m0 = lam * a.m0 / den
    m1 = lam * (a.m1 * den + a.m0 * dden) / den ** 2
    m2 = lam * gamma * a.m2 / den ** 2 + 2.0 * m1 * dden / den
    return MomentTriple(m0, m1, m2)


def _gap_moments(params: SystemParams, preemptive: bool, gamma: float) -> MomentTriple:
    """Moments of J, the wait from a stage-1 exit to the next successful job start."""
    idle = _exp_moments(params.lam, gamma)
    if not preemptive:
        return idle
    return _convolve(idle, restart_period_moments(params, gamma))


def _comp_moments(params: SystemParams, preemptive: bool, gamma: float) -> MomentTriple:
    if preemptive:
        return conditioned_comp_moments(params, gamma)
    return _dist.moments(params.comp, gamma)


# ---------------------------------------------------------------------------
# Transmission queue: Markov chain of the state found by arriving packets
# ---------------------------------------------------------------------------

def preempt_service_moments(params: SystemParams) -> tuple[float, float]:
    """E[W'] and E[S'] for the preemptive transmitter behind a bufferless computer.

    W' is the time a packet spends superseded before the transmission that
    finally completes starts; S' is that transmission conditioned on beating the
    next arrival.
    """
    lam, mu = params.lam, params.mu
    mp = _dist.moments(params.comp, mu)
    s = lam + mu
    den = s - lam * mp.m0
    assert den > 0.0
    e_w = (lam * s * mp.m1 + lam * mp.m0) / (s * den)
    e_s = 1.0 / mu - lam / den * (mp.m1 + mp.m0 / s)
    return e_w, e_s


def transition_probs(scheme: Scheme | str, params: SystemParams) -> tuple[float, float]:
    """``(Pr[busy | prev idle], Pr[idle | prev busy])`` for consecutive stage-2 arrivals.

    Computed from the gap G = J + C directly, independently of the
    :func:`busy_prob` closed forms.
    """
    scheme = Scheme(scheme)
    pre = scheme is Scheme.PREEMPT_COMP
    g = _convolve(_gap_moments(params, pre, params.mu), _comp_moments(params, pre, params.mu))
    to_busy = g.m0  # Pr[G < S]
    if scheme.buffered:
        # remaining work after a busy arrival is residual + own service ~ Erlang(2, mu)
        stay_busy = g.m0 + params.mu * g.m1
    else:
        stay_busy = g.m0
    return to_busy, 1.0 - stay_busy


def busy_prob(scheme: Scheme | str, params: SystemParams) -> float:
    """Stationary probability that a packet leaving stage 1 finds the transmitter busy."""
    scheme = Scheme(scheme)
    lam, mu = params.lam, params.mu
    mp = _dist.moments(params.comp, mu)
    s = lam + mu
    if scheme in (Scheme.NP_NOBUFFER, Scheme.PREEMPT_TX):
        p = lam / s * mp.m0
    elif scheme is Scheme.NP_BUFFER:
        p = lam * s * mp.m0 / (s * s - lam * mu * mp.m0 - lam * mu * s * mp.m1)
    else:
        mx = preempt_interarrival_mgf(params, mu)
        p = mx.m0 / (1.0 - mu * mx.m1)
    return _prob(p, f"p_busy[{scheme.value}]")


def effective_rate(scheme: Scheme | str, params: SystemParams) -> float:
    scheme = Scheme(scheme)
    if scheme is Scheme.PREEMPT_COMP:
        return params.lam * _dist.mgf(params.comp, params.lam)
    return params.lam / (params.lam * params.comp.mean + 1.0)


def interarrival_second_moment(scheme: Scheme | str, params: SystemParams) -> float:
    scheme = Scheme(scheme)
    if scheme is Scheme.PREEMPT_COMP:
        return preempt_interarrival_mgf(params, 0.0).m2
    lam, comp = params.lam, params.comp
    return _dist.second_moment(comp) + 2.0 * comp.mean / lam + 2.0 / lam ** 2


@dataclass(frozen=True)
class _Stage2:
    p_busy: float
    e_xt: float
    peak_numerator: float
    peak_prob: float


def _nobuffer(params: SystemParams) -> _Stage2:
    lam, mu = params.lam, params.mu
    ep = params.comp.mean
    mp = _dist.moments(params.comp, mu)
    p_busy = busy_prob(Scheme.NP_NOBUFFER, params)
    e_x = ep + 1.0 / lam
    # blocked packets ride along with the next packet that finds the transmitter idle
    e_x_blocked = ep * p_busy + lam / (lam + mu) ** 2 * mp.m0
    e_wait = lemma_wait_plus_idle(e_x, 1.0 - p_busy)
    e_xt = e_x * (ep + 1.0 / mu) + e_x_blocked * e_wait
    # only packets that find the transmitter idle are delivered
    peak_prob = 1.0 - p_busy
    e_c_delivered = ep - lam / (lam + mu) * mp.m1
    peak_num = e_x + e_c_delivered + peak_prob / mu
    return _Stage2(p_busy, e_xt, peak_num, peak_prob)


def _preempt_tx(params: SystemParams) -> _Stage2:
    lam, mu = params.lam, params.mu
    ep = params.comp.mean
    mp = _dist.moments(params.comp, mu)
    s = lam + mu
    p_busy = busy_prob(Scheme.PREEMPT_TX, params)
    e_w, e_s = preempt_service_moments(params)
    e_t = ep + e_w + e_s
    e_xt = (1.0 / lam + ep) * e_t
    pre = lam / s * mp.m0  # Pr[next packet preempts this one]
    peak_num = 2 * ep + 1.0 / lam + e_w + e_s - e_t * pre - lam / s * mp.m1 - lam / s ** 2 * mp.m0
    return _Stage2(p_busy, e_xt, peak_num, 1.0 - pre)


def _buffered(scheme: Scheme, params: SystemParams) -> _Stage2:
    """Exact analysis of the one-slot LCFS transmitter.

    The computation time of packet i-1 enters both X_i and the state packet
    i-1 found, so E[X_i 1{packet i blocked}] is accumulated per previous
    state instead of factorised.
    """
    mu = params.mu
    pre = scheme is Scheme.PREEMPT_COMP
    j0, jm = _gap_moments(params, pre, 0.0), _gap_moments(params, pre, mu)
    c0, cm = _comp_moments(params, pre, 0.0), _comp_moments(params, pre, mu)
    e_c = c0.m1
    e_x = e_c + j0.m1
    g = _convolve(jm, cm)

    p_busy = busy_prob(scheme, params)
    p_idle = 1.0 - p_busy
    from_idle = g.m0                 # Pr[G < S]
    from_busy = g.m0 + mu * g.m1     # Pr[G < W + S]

    # E[C 1{K=busy}] for the packet's own computation time
    c_busy = p_idle * jm.m0 * cm.m1 + p_busy * (jm.m0 * cm.m1 + mu * (jm.m1 * cm.m1 + jm.m0 * cm.m2))
    c_idle = e_c - c_busy
    j_from_idle = jm.m1 * cm.m0                                  # E[J 1{G < S}]
    j_from_busy = j_from_idle + mu * (jm.m2 * cm.m0 + jm.m1 * cm.m1)  # E[J 1{G < W + S}]
    x_blocked = c_idle * from_idle + c_busy * from_busy + p_idle * j_from_idle + p_busy * j_from_busy

    # T = C + S + W 1{blocked}, residual W ~ Exp(mu) independent of the past
    e_xt = e_x * e_c + e_x / mu + x_blocked / mu

    # a blocked packet is superseded if the next one arrives within the residual
    peak_prob = 1.0 - p_busy * g.m0
    wait_served = (1.0 - g.m0 - mu * g.m1) / mu  # E[W 1{W < G}]
    e_t_delivered = e_c - c_busy * g.m0 + peak_prob / mu + p_busy * wait_served
    peak_num = e_x + e_t_delivered
    return _Stage2(p_busy, e_xt, peak_num, peak_prob)


def _stage2(scheme: Scheme, params: SystemParams) -> _Stage2:
    if scheme is Scheme.NP_NOBUFFER:
        return _nobuffer(params)
    if scheme is Scheme.PREEMPT_TX:
        return _preempt_tx(params)
    return _buffered(scheme, params)


def mean_xt(scheme: Scheme | str, params: SystemParams) -> float:
    """E[X T]: inter-entry time times the equivalent-queue system time of the same packet."""
    v = _stage2(Scheme(scheme), params).e_xt
    if not (math.isfinite(v) and v > 0):
        raise ConsistencyError(f"E[XT] = {v!r}")
    return v


def full_report(scheme: Scheme | str, params: SystemParams) -> AoiReport:
    scheme = Scheme(scheme)
    st = _stage2(scheme, params)
    if not (math.isfinite(st.e_xt) and st.e_xt > 0):
        raise ConsistencyError(f"E[XT] = {st.e_xt!r}")
    _prob(st.peak_prob, "Pr[delivered]", closed=True)
    rate = effective_rate(scheme, params)
    if not (0.0 < rate <= params.lam):
        raise ConsistencyError(f"effective rate {rate!r} outside (0, lam]")
    e_x2 = interarrival_second_moment(scheme, params)
    aoi = rate * (st.e_xt + e_x2 / 2.0)
    peak = st.peak_numerator / st.peak_prob
    if not (math.isfinite(aoi) and math.isfinite(peak) and aoi > 0 and peak > 0):
        raise ConsistencyError(f"non-physical AoI ({aoi!r}, {peak!r})")
    return AoiReport(
        scheme=scheme,
        avg_aoi=aoi,
        avg_peak_aoi=peak,
        p_busy=st.p_busy,
        eff_rate=rate,
        e_xt=st.e_xt,
        e_x2=e_x2,
        peak_numerator=st.peak_numerator,
        peak_prob=st.peak_prob,
    )


def avg_aoi(scheme: Scheme | str, params: SystemParams) -> float:
    return full_report(scheme, params).avg_aoi


def avg_peak_aoi(scheme: Scheme | str, params: SystemParams) -> float:
    return full_report(scheme, params).avg_peak_aoi
