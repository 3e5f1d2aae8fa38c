"""Initial states, stationarity diagnostics, window statistics and the
density / three-body scaling estimates."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .kinetics import Channels, Trajectory, simulate_pulse

PEAK_PROMINENCE = 2.0

# sodium numbers used for the loss estimates (SI units)
SODIUM_RECOIL_LENGTH = 0.132e-6     # a_R = sqrt(hbar / m omega_R)
SODIUM_SCATTERING_LENGTH = 2.75e-9
THREE_BODY_DENSITY = 1e21           # 1e15 cm^-3


def sample_thermal(mean_n, N, nmax, rng):
    """Draw N atoms from p_n ~ q^n, q = mean_n / (1 + mean_n), n <= nmax.

    The same geometric law is used for 1D levels and for 3D shells.
    Returns the occupation vector (int64, length nmax + 1).
    """
    if not mean_n > 0:
        raise ValueError(f"mean_n must be > 0, got {mean_n}")
    if N < 0 or nmax < 0:
        raise ValueError("N and nmax must be non-negative")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    q = mean_n / (1.0 + mean_n)
    logp = np.arange(nmax + 1) * np.log(q)
    p = np.exp(logp - logp.max())
    p /= p.sum()
    return rng.multinomial(N, p).astype(np.int64)


class EquilibrationError(RuntimeError):
    def __init__(self, msg, drifts, state):
        super().__init__(msg)
        self.drifts = drifts
        self.state = state


@dataclass
class EquilibrationInfo:
    events: int
    windows: int
    drifts: list
    window_means: np.ndarray


def _window_mean(N, channels, rng, window):
    N, res = simulate_pulse(N, None, channels, rng, duration=np.inf, max_events=window,
                            result=True)
    if not 0 < res.elapsed < np.inf:
        # no collision possible (e.g. r = 0): the state is trivially stationary
        return N, N.astype(float), res.n_events
    return N, res.occupation_integral / res.elapsed, res.n_events


def equilibrate_collisions(initial, channels: Channels, rng, *, window=100_000, tol=0.01,
                           patience=3, max_events=50_000_000, return_info=False):
    """Run collision-only dynamics until the per-level means stop drifting.

    Means are time-weighted over windows of ``window`` events. The drift
    between consecutive windows is max_n |mean_k - mean_{k-1}| / N; the run
    stops once it stays below ``tol`` for ``patience`` consecutive windows.
    """
    gen = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    N = np.asarray(initial, dtype=np.int64).copy()
    total = max(int(N.sum()), 1)
    drifts, means = [], []
    events, calm = 0, 0
    prev = None
    while events < max_events:
        N, m, n_ev = _window_mean(N, channels, gen, window)
        events += max(n_ev, 1)
        means.append(m)
        if prev is not None:
            d = float(np.max(np.abs(m - prev)) / total)
            drifts.append(d)
            calm = calm + 1 if d < tol else 0
            if calm >= patience:
                info = EquilibrationInfo(events, len(means), drifts, np.array(means))
                return (N, info) if return_info else N
        if n_ev == 0:
            info = EquilibrationInfo(events, len(means), drifts, np.array(means))
            return (N, info) if return_info else N
        prev = m
    raise EquilibrationError(
        f"no stationarity after {events} events (last drifts {drifts[-patience:]})",
        drifts, N)


@dataclass
class StationaryAverage:
    mean: np.ndarray
    stderr: np.ndarray
    batch_means: np.ndarray
    state: np.ndarray


def stationary_average(state, channels: Channels, rng, *, n_batches=40, batch_events=100_000):
    """Time-weighted per-level means over ``n_batches`` consecutive batches
    of collision-only dynamics, with batch-means standard errors."""
    gen = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    N = np.asarray(state, dtype=np.int64).copy()
    batches = []
    for _ in range(n_batches):
        N, m, _ = _window_mean(N, channels, gen, batch_events)
        batches.append(m)
    b = np.array(batches)
    se = b.std(axis=0, ddof=1) / np.sqrt(n_batches)
    return StationaryAverage(b.mean(axis=0), se, b, N)


@dataclass
class DistributionStats:
    level_mean: np.ndarray
    level_var: np.ndarray
    mean_n: float
    target: int
    condensate_fraction: float
    peaks: list
    n_snapshots: int


def find_level_peaks(mean, prominence=PEAK_PROMINENCE):
    """Levels whose mean exceeds both neighbours by a prominence of at least
    ``prominence`` atoms. Levels outside the truncation count as empty, so
    the edges can be peaks too."""
    padded = np.concatenate([[0.0], np.asarray(mean, dtype=float), [0.0]])
    idx, _ = find_peaks(padded, prominence=prominence)
    return [int(i - 1) for i in idx]


def window_average(traj: Trajectory, from_cycle, to_cycle, target=0,
                   prominence=PEAK_PROMINENCE):
    """Statistics over the snapshots taken after cycles from_cycle+1 .. to_cycle."""
    if not 0 <= from_cycle < to_cycle <= traj.n_cycles:
        raise ValueError(f"empty or invalid window ({from_cycle}, {to_cycle}] "
                         f"for {traj.n_cycles} cycles")
    w = traj.snapshots[from_cycle + 1:to_cycle + 1].astype(float)
    mean = w.mean(axis=0)
    var = w.var(axis=0)
    total = traj.total
    n = np.arange(len(mean))
    return DistributionStats(
        level_mean=mean, level_var=var,
        mean_n=float(n @ mean / total) if total else 0.0,
        target=int(target),
        condensate_fraction=float(mean[target] / total) if total else 0.0,
        peaks=find_level_peaks(mean, prominence), n_snapshots=len(w))


def level_correlation(traj: Trajectory, n_a, n_b, from_cycle, to_cycle):
    """Pearson correlation of the per-cycle series N_a, N_b over the window.

    Depends on snapshot order only through which snapshots fall in the window.
    """
    w = traj.snapshots[from_cycle + 1:to_cycle + 1]
    return float(np.corrcoef(w[:, n_a], w[:, n_b])[0, 1])


def write_stats_csv(path, stats: DistributionStats, header_lines=()):
    """``n,mean,variance`` rows, then ``mean_n,condensate_fraction`` and its values."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["n", "mean", "variance"])
        for n, (m, v) in enumerate(zip(stats.level_mean, stats.level_var)):
            out.writerow([n, repr(float(m)), repr(float(v))])
        out.writerow(["mean_n", "condensate_fraction"])
        out.writerow([repr(stats.mean_n), repr(stats.condensate_fraction)])


def ideal_density(N, a_ho):
    """Central density of N ideal bosons in the trap ground state."""
    if not (N > 0 and a_ho > 0):
        raise ValueError("N and a_ho must be positive")
    return N / (np.pi ** 1.5 * a_ho ** 3)


def tf_density_ratio(N, a, a_ho):
    """Thomas-Fermi over ideal-gas central density,
    (15^(2/5) sqrt(pi) / 8) (N a / a_ho)^(-3/5)."""
    x = N * a / a_ho
    if not x > 0:
        raise ValueError(f"N * a / a_ho must be positive, got {x}")
    return 15 ** 0.4 * np.sqrt(np.pi) / 8 * x ** -0.6


def three_body_threshold_ideal(eta, a_r=SODIUM_RECOIL_LENGTH, n_crit=THREE_BODY_DENSITY):
    """Atom number at which the ideal-gas central density reaches n_crit
    (a_HO = eta * a_R)."""
    return n_crit * np.pi ** 1.5 * (eta * a_r) ** 3


def three_body_threshold_interacting(eta, a_r=SODIUM_RECOIL_LENGTH,
                                     a=SODIUM_SCATTERING_LENGTH, n_crit=THREE_BODY_DENSITY):
    """Atom number at which the Thomas-Fermi central density reaches n_crit.

    n_TF = n_ideal * ratio scales as N^(2/5), so the threshold is closed form.
    """
    a_ho = eta * a_r
    c = 15 ** 0.4 * np.sqrt(np.pi) / 8 * (a / a_ho) ** -0.6 / (np.pi ** 1.5 * a_ho ** 3)
    return (n_crit / c) ** 2.5
