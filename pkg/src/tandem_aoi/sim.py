"""Discrete-event simulation of the original tandem systems.

The kernel is compiled with numba and consumes pre-drawn blocks of random
durations; it hands control back to Python whenever a block runs dry, so the
three random streams (arrival gaps, computation, transmission) stay
independent of the scheme being simulated.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Sequence, TextIO

import numba as nb
import numpy as np
from scipy import stats

from . import dist as _dist
from .analytic import Scheme, SystemParams
from .errors import ConfigurationError, NumericalError, ParameterError

_CHUNK = 1 << 20
_SCHEME_CODE = {
    Scheme.NP_NOBUFFER: 0,
    Scheme.NP_BUFFER: 1,
    Scheme.PREEMPT_TX: 2,
    Scheme.PREEMPT_COMP: 3,
}

# kernel return codes
_DONE, _HORIZON, _NEED_GAPS, _NEED_COMP, _NEED_TX, _LOG_FULL = range(6)

# counter slots
_C_ARRIVALS, _C_DISCARD1, _C_DISCARD2, _C_STAGE1, _C_BUSY, _C_DELIVERED = range(6)


class EventKind(IntEnum):
    ARRIVAL = 0
    START = 1
    COMPLETE = 2
    DISCARD = 3
    BUFFER = 4
    DELIVER = 5


@dataclass(frozen=True)
class SimConfig:
    scheme: Scheme
    params: SystemParams
    deliveries: int = 10 ** 6
    warmup_deliveries: int = 10 ** 3
    seed: int = 0
    batches: int = 30

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.deliveries <= 0:
            raise ParameterError("deliveries must be > 0")
        if not 0 <= self.warmup_deliveries < self.deliveries:
            raise ParameterError("need 0 <= warmup_deliveries < deliveries")
        if self.batches < 2:
            raise ParameterError("batches must be >= 2")
        if self.deliveries - self.warmup_deliveries < self.batches:
            raise ParameterError("fewer post-warmup deliveries than batches")
        if not (0 <= int(self.seed) < 2 ** 64):
            raise ParameterError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class SimResult:
    avg_aoi: float
    avg_peak_aoi: float
    avg_aoi_halfwidth: float
    peak_halfwidth: float
    delivered: int
    discarded_stage1: int
    discarded_stage2: int
    busy_found_frac: float
    sim_time: float
    arrivals: int = 0
    stage1_completions: int = 0

    @property
    def stage1_rate(self) -> float:
        """Packets leaving the computation stage per unit time."""
        return self.stage1_completions / self.sim_time

    @property
    def in_flight(self) -> int:
        return self.arrivals - self.delivered - self.discarded_stage1 - self.discarded_stage2


@dataclass(frozen=True)
class TraceInput:
    arrival_times: Sequence[float]
    comp_times: Sequence[float]
    tx_times: Sequence[float] = field(default_factory=tuple)

    def __post_init__(self):
        arr = np.asarray(self.arrival_times, dtype=float)
        if arr.size == 0:
            raise ConfigurationError("trace has no arrivals")
        if arr[0] < 0 or np.any(np.diff(arr) < 0) or not np.all(np.isfinite(arr)):
            raise ConfigurationError("arrival times must be finite, >= 0 and ascending")
        for name in ("comp_times", "tx_times"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.size and not np.all((v > 0) & np.isfinite(v)):
                raise ConfigurationError(f"{name} must be strictly positive and finite")


# ---------------------------------------------------------------------------
# Kernel
# ---------------------------------------------------------------------------

@nb.njit(cache=True, nogil=True)
def _log(ev, lp, t, kind, pid, stage):
    i = lp[0]
    ev[i, 0] = t
    ev[i, 1] = kind
    ev[i, 2] = pid
    ev[i, 3] = stage
    lp[0] = i + 1


@nb.njit(cache=True, nogil=True)
def _kernel(scheme, gaps, comp, tx, pos, st, ids, cnt, dt, du, target, horizon,
            finite_arrivals, ev, lp, logging):
    # st: now, next_arr, comp_busy, comp_end, comp_ts, tx_busy, tx_end, tx_ts, buf_full, buf_ts
    # ids: comp_id, tx_id, buf_id
    while True:
        if cnt[5] >= target:
            return 0
        if logging and lp[0] + 4 > ev.shape[0]:
            return 5
        na = st[1]
        ce = st[3] if st[2] > 0 else np.inf
        te = st[6] if st[5] > 0 else np.inf
        t = min(na, ce, te)
        if t > horizon:
            return 1
        # ties resolve as transmission, computation, arrival
        if te <= ce and te <= na:
            if st[8] > 0 and pos[2] >= tx.shape[0]:
                return 4
            n = cnt[5]
            dt[n] = t
            du[n] = st[7]
            cnt[5] = n + 1
            if logging:
                _log(ev, lp, t, 5, ids[1], 2)
            if st[8] > 0:
                st[7] = st[9]
                ids[1] = ids[2]
                st[8] = 0.0
                st[6] = t + tx[pos[2]]
                pos[2] += 1
                if logging:
                    _log(ev, lp, t, 1, ids[1], 2)
            else:
                st[5] = 0.0
        elif ce <= na:
            needtx = st[5] == 0 or scheme == 2
            if needtx and pos[2] >= tx.shape[0]:
                return 4
            st[2] = 0.0
            cnt[3] += 1
            pid = ids[0]
            if logging:
                _log(ev, lp, t, 2, pid, 1)
            if st[5] > 0:
                cnt[4] += 1
                if scheme == 0:
                    cnt[2] += 1
                    if logging:
                        _log(ev, lp, t, 3, pid, 2)
                elif scheme == 2:
                    cnt[2] += 1
                    if logging:
                        _log(ev, lp, t, 3, ids[1], 2)
                        _log(ev, lp, t, 1, pid, 2)
                    st[7] = st[4]
                    ids[1] = pid
                    st[6] = t + tx[pos[2]]
                    pos[2] += 1
                else:
                    if st[8] > 0:
                        cnt[2] += 1
                        if logging:
                            _log(ev, lp, t, 3, ids[2], 2)
                    st[8] = 1.0
                    st[9] = st[4]
                    ids[2] = pid
                    if logging:
                        _log(ev, lp, t, 4, pid, 2)
            else:
                st[5] = 1.0
                st[7] = st[4]
                ids[1] = pid
                st[6] = t + tx[pos[2]]
                pos[2] += 1
                if logging:
                    _log(ev, lp, t, 1, pid, 2)
        else:
            if pos[0] >= gaps.shape[0] and not finite_arrivals:
                return 2
            needc = st[2] == 0 or scheme == 3
            if needc and pos[1] >= comp.shape[0]:
                return 3
            cnt[0] += 1
            pid = cnt[0]
            if pos[0] < gaps.shape[0]:
                st[1] = t + gaps[pos[0]]
                pos[0] += 1
            else:
                st[1] = np.inf
            if logging:
                _log(ev, lp, t, 0, pid, 1)
            if st[2] > 0:
                cnt[1] += 1
                if scheme == 3:
                    if logging:
                        _log(ev, lp, t, 3, ids[0], 1)
                        _log(ev, lp, t, 1, pid, 1)
                    ids[0] = pid
                    st[4] = t
                    st[3] = t + comp[pos[1]]
                    pos[1] += 1
                elif logging:
                    _log(ev, lp, t, 3, pid, 1)
            else:
                st[2] = 1.0
                ids[0] = pid
                st[4] = t
                st[3] = t + comp[pos[1]]
                pos[1] += 1
                if logging:
                    _log(ev, lp, t, 1, pid, 1)
        st[0] = t


@dataclass
class _Run:
    """Raw output of one kernel run."""
    dt: np.ndarray
    du: np.ndarray
    counts: np.ndarray
    end_time: float
    events: np.ndarray | None


class _Streams:
    def __init__(self, config: SimConfig):
        p = config.params
        ss = np.random.SeedSequence(int(config.seed)).spawn(3)
        self._rng = [np.random.default_rng(s) for s in ss]
        self._lam, self._comp, self._mu = p.lam, p.comp, p.mu

    def gaps(self):
        return self._rng[0].exponential(1.0 / self._lam, _CHUNK)

    def comp(self):
        return _dist.sample(self._comp, self._rng[1], _CHUNK)

    def tx(self):
        return self._rng[2].exponential(1.0 / self._mu, _CHUNK)


def _drive(scheme, gaps, comp, tx, first_arrival, target, horizon, trace_mode,
           streams=None, logging=False):
    code = _SCHEME_CODE[Scheme(scheme)]
    pos = np.zeros(3, np.int64)
    st = np.zeros(10)
    st[1] = first_arrival
    ids = np.zeros(3, np.int64)
    cnt = np.zeros(6, np.int64)
    dt = np.empty(target)
    du = np.empty(target)
    ev = np.empty((1 << 16 if logging else 1, 4))
    lp = np.zeros(1, np.int64)
    while True:
        r = _kernel(code, gaps, comp, tx, pos, st, ids, cnt, dt, du, target, horizon,
                    trace_mode, ev, lp, logging)
        if r in (_DONE, _HORIZON):
            break
        if r == _LOG_FULL:
            ev = np.concatenate([ev[: lp[0]], np.empty((2 * ev.shape[0], 4))])
            ev[lp[0]:] = 0.0
            continue
        if trace_mode:
            what = "computation" if r == _NEED_COMP else "transmission"
            raise ConfigurationError(f"trace exhausted: not enough {what} times")
        if r == _NEED_GAPS:
            gaps = streams.gaps()
            pos[0] = 0
        elif r == _NEED_COMP:
            comp = streams.comp()
            pos[1] = 0
        elif r == _NEED_TX:
            tx = streams.tx()
            pos[2] = 0
    n = int(cnt[_C_DELIVERED])
    end = float(horizon) if r == _HORIZON else float(st[0])
    return _Run(dt[:n].copy(), du[:n].copy(), cnt.copy(), end, ev[: lp[0]].copy() if logging else None)


def _run(config: SimConfig, logging: bool = False) -> _Run:
    streams = _Streams(config)
    gaps = streams.gaps()
    return _drive(config.scheme, gaps[1:], streams.comp(), streams.tx(), float(gaps[0]),
                  config.deliveries, np.inf, False, streams, logging)


def _sawtooth(run: _Run):
    """Per-interval areas, lengths and peak samples with the age starting at 0 at t = 0."""
    t = np.concatenate(([0.0], run.dt))
    u = np.concatenate(([0.0], run.du))
    d = np.diff(t)
    start = t[:-1] - u[:-1]
    area = d * (start + d / 2.0)
    peak = t[1:] - u[:-1]
    return area, d, peak


def _halfwidth(samples: np.ndarray) -> float:
    n = samples.size
    return float(stats.t.ppf(0.975, n - 1) * samples.std(ddof=1) / math.sqrt(n))


def _summarize(runs: list[_Run], config: SimConfig) -> SimResult:
    w = config.warmup_deliveries
    nb_ = config.batches
    areas, lens, peaks = [], [], []
    for run in runs:
        area, d, peak = _sawtooth(run)
        m = (area.size - w) // nb_ * nb_
        sl = slice(w, w + m)
        areas.append(area[sl].reshape(nb_, -1).sum(axis=1))
        lens.append(d[sl].reshape(nb_, -1).sum(axis=1))
        peaks.append(peak[sl].reshape(nb_, -1).mean(axis=1))
    a, l, p = np.concatenate(areas), np.concatenate(lens), np.concatenate(peaks)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(p))):
        raise NumericalError("non-finite accumulation in simulation")
    aoi = float(a.sum() / l.sum())
    peak = float(p.mean())
    counts = np.sum([r.counts for r in runs], axis=0)
    return SimResult(
        avg_aoi=aoi,
        avg_peak_aoi=peak,
        avg_aoi_halfwidth=_halfwidth(a / l),
        peak_halfwidth=_halfwidth(p),
        delivered=int(counts[_C_DELIVERED]),
        discarded_stage1=int(counts[_C_DISCARD1]),
        discarded_stage2=int(counts[_C_DISCARD2]),
        busy_found_frac=float(counts[_C_BUSY] / counts[_C_STAGE1]),
        sim_time=float(sum(r.end_time for r in runs)),
        arrivals=int(counts[_C_ARRIVALS]),
        stage1_completions=int(counts[_C_STAGE1]),
    )


def write_events(events: np.ndarray, stream: TextIO) -> None:
    """Dump an event array as ``time kind packet_id stage`` lines."""
    for t, kind, pid, stage in events:
        stream.write(f"{float(t)!r} {EventKind(int(kind)).name.lower()} {int(pid)} {int(stage)}\n")


def simulate(config: SimConfig, event_log: TextIO | None = None) -> SimResult:
    run = _run(config, logging=event_log is not None)
    if event_log is not None:
        write_events(run.events, event_log)
    return _summarize([run], config)


def simulate_events(config: SimConfig) -> np.ndarray:
    """Run ``config`` and return the event log as an ``(n, 4)`` array (time, kind, id, stage)."""
    return _run(config, logging=True).events


def simulate_trace(scheme: Scheme | str, trace: TraceInput, horizon: float,
                   event_log: TextIO | None = None) -> SimResult:
    """Replay fixed arrival and service durations up to ``horizon``.

    The age curve is integrated over the whole of ``[0, horizon]`` (no warmup)
    and the halfwidths are reported as 0.
    """
    if not (horizon > 0 and math.isfinite(horizon)):
        raise ParameterError("horizon must be finite and > 0")
    arr = np.asarray(trace.arrival_times, dtype=float)
    comp = np.asarray(trace.comp_times, dtype=float)
    tx = np.asarray(trace.tx_times, dtype=float)
    run = _drive(scheme, np.diff(arr), comp, tx, float(arr[0]), arr.size, float(horizon), True,
                 logging=event_log is not None)
    if event_log is not None:
        write_events(run.events, event_log)
    if run.dt.size == 0:
        raise ConfigurationError("no deliveries before the horizon")
    area, d, peak = _sawtooth(run)
    tail = horizon - run.dt[-1]
    age = run.dt[-1] - run.du[-1]
    total = area.sum() + tail * (age + tail / 2.0)
    c = run.counts
    return SimResult(
        avg_aoi=float(total / horizon),
        avg_peak_aoi=float(peak.mean()),
        avg_aoi_halfwidth=0.0,
        peak_halfwidth=0.0,
        delivered=int(c[_C_DELIVERED]),
        discarded_stage1=int(c[_C_DISCARD1]),
        discarded_stage2=int(c[_C_DISCARD2]),
        busy_found_frac=float(c[_C_BUSY] / c[_C_STAGE1]) if c[_C_STAGE1] else 0.0,
        sim_time=float(horizon),
        arrivals=int(c[_C_ARRIVALS]),
        stage1_completions=int(c[_C_STAGE1]),
    )


def replicate(config: SimConfig, replications: int, threads: int | None = None) -> SimResult:
    """Pool ``replications`` independent runs with seeds ``seed, seed + 1, ...``.

    Batch means of all runs are pooled, so one replication reproduces
    :func:`simulate` exactly.
    """
    if replications < 1:
        raise ParameterError("replications must be >= 1")
    configs = [
        SimConfig(config.scheme, config.params, config.deliveries, config.warmup_deliveries,
                  (int(config.seed) + i) % 2 ** 64, config.batches)
        for i in range(replications)
    ]
    workers = min(replications, threads or os.cpu_count() or 1)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            runs = list(pool.map(_run, configs))
    else:
        runs = [_run(c) for c in configs]
    return _summarize(runs, config)
