import math

import numpy as np
import pytest

from tandem_aoi.analytic import Scheme, SystemParams
from tandem_aoi.dist import ServiceDistribution
from tandem_aoi.sim import EventKind

# reference operating point: E[P] = 2, k = 10, B0 = 15, alpha = 0.1
MU_REF = 1.0 / (15.0 * math.exp(-0.2))

ALL_SCHEMES = list(Scheme)


@pytest.fixture
def ref_params():
    return SystemParams(0.4, ServiceDistribution.gamma(2.0, 10.0), MU_REF)


def fd1(f, x, h=1e-5):
    """Nonnegative-convention first moment: -d/dx f."""
    return (f(x - h) - f(x + h)) / (2 * h)


def fd2(f, x, h=1e-3):
    """Richardson-extrapolated second central difference."""
    def d(hh):
        return (f(x + hh) - 2 * f(x) + f(x - hh)) / hh ** 2
    return (4 * d(h / 2) - d(h)) / 3


def rel(a, b):
    return abs(a - b) / abs(b)


class Events:
    """Per-packet views of a simulator event log."""

    def __init__(self, ev: np.ndarray):
        t, kind, pid, stage = ev[:, 0], ev[:, 1].astype(int), ev[:, 2].astype(np.int64), ev[:, 3].astype(int)
        arr = kind == EventKind.ARRIVAL
        self.arrival = np.zeros(pid[arr].max() + 1)
        self.arrival[pid[arr]] = t[arr]
        c1 = (kind == EventKind.COMPLETE) & (stage == 1)
        self.exit_ids, self.exit_times = pid[c1], t[c1]
        dl = kind == EventKind.DELIVER
        self.deliv_ids, self.deliv_times = pid[dl], t[dl]
        s2 = (kind == EventKind.START) & (stage == 2)
        self.start2 = np.full(self.arrival.size, np.nan)
        self.start2[pid[s2]] = t[s2]  # later starts overwrite earlier ones

    def entry_gaps(self):
        """Inter-entry times X_i between consecutive packets leaving stage 1 (first one dropped)."""
        return np.diff(self.arrival[self.exit_ids])

    def equivalent_system_times(self):
        """T_i for each stage-1 exit: time until it or a newer packet is delivered.

        Returns ``(T, j)`` aligned with ``exit_ids``; ``j`` indexes the delivery
        that serves the exit, and the trailing exits with none get NaN / -1.
        """
        j = np.searchsorted(self.deliv_ids, self.exit_ids)
        ok = j < self.deliv_ids.size
        t = np.full(j.size, np.nan)
        t[ok] = self.deliv_times[j[ok]] - self.arrival[self.exit_ids[ok]]
        j[~ok] = -1
        return t, j


# --- the analytic-vs-simulation grid shared by sim and acceptance tests ------

GRID_K = (0.5, 1.0, 10.0)
GRID_LAM_MEAN = ((0.4, 2.0), (0.4, 4.0), (1.0, 2.0))
GRID_B0, GRID_ALPHA = 15.0, 0.1
GRID_SEED = 1


def grid_params():
    from tandem_aoi.coupling import CouplingSpec, resolve_params
    from tandem_aoi.dist import CompFamily, Kind

    spec = CouplingSpec(GRID_B0, GRID_ALPHA)
    out = []
    for scheme in ALL_SCHEMES:
        for k in GRID_K:
            for lam, mean in GRID_LAM_MEAN:
                out.append((scheme, k, lam, mean, resolve_params(spec, lam, CompFamily(Kind.GAMMA, k), mean)))
    return out


@pytest.fixture(scope="session")
def grid_runs():
    from tandem_aoi.analytic import full_report
    from tandem_aoi.sim import SimConfig, simulate

    runs = []
    for scheme, k, lam, mean, params in grid_params():
        res = simulate(SimConfig(scheme, params, seed=GRID_SEED))
        runs.append((scheme, k, lam, mean, params, full_report(scheme, params), res))
    return runs


# --- acceptance summary lines ------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
