"""Event-driven simulation of occupation dynamics under laser pulses.

A :class:`Channels` object bundles the collision and laser rate providers of
one trap model (1D levels or 3D shells). :func:`simulate_pulse` runs one pulse
of exact continuous-time stochastic dynamics; :func:`run_cycles` repeats a
:class:`CoolingCycle` and records one snapshot per cycle.

Randomness: every pulse draws a 32-bit seed from a ``numpy.random.Generator``
and hands it to the compiled loop. Independent trajectories should use
generators spawned from one ``SeedSequence``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _engine
from .rates1d import (Collision1DParams, CoolingParams, RateTables, TrapModel,
                      build_rate_tables)
from .rates3d import ShellModel, shell_collision_table, shell_cooling_table

ROLES = ("confinement", "dark_state", "auxiliary", "pseudo_confining", "interference_dark")

COUNTER_NAMES = ("collisions", "laser", "collision_overflow", "laser_overflow",
                 "laser_refresh", "laser_rejected", "bound_violations")


@dataclass(frozen=True)
class PulseSpec:
    """One laser pulse. ``duration=None`` means the default T = 2 gamma / Omega^2."""
    s: int
    duration: Optional[float] = None
    axis_amplitudes: tuple = (1.0, 1.0, 1.0)
    role: str = "confinement"

    def __post_init__(self):
        if self.duration is not None and not self.duration > 0:
            raise ValueError(f"pulse duration must be > 0, got {self.duration}")
        if self.role not in ROLES:
            raise ValueError(f"unknown pulse role {self.role!r}")
        if len(self.axis_amplitudes) != 3:
            raise ValueError("axis_amplitudes needs three entries (A_x, A_y, A_z)")

    def length(self, gamma, Omega):
        if self.duration is not None:
            return float(self.duration)
        return 2.0 * gamma / Omega ** 2


@dataclass(frozen=True)
class CoolingCycle:
    pulses: tuple

    def __post_init__(self):
        if len(self.pulses) == 0:
            raise ValueError("a cooling cycle needs at least one pulse")
        object.__setattr__(self, "pulses", tuple(self.pulses))

    def cycle_time(self, gamma, Omega):
        return sum(p.length(gamma, Omega) for p in self.pulses)


def standard_cycles(name):
    """Pulse sequences used in the reference experiments."""
    if name == "fig2_1d":
        return CoolingCycle((
            PulseSpec(-9, role="confinement"),
            PulseSpec(8, role="dark_state"),
            PulseSpec(-10, role="confinement"),
            PulseSpec(-3, role="auxiliary"),
        ))
    if name == "fig5a_3d":
        return CoolingCycle((
            PulseSpec(-4, axis_amplitudes=(1.0, 1.0, 1.0), role="pseudo_confining"),
            PulseSpec(0, axis_amplitudes=(1.0, 1.0, -2.0), role="interference_dark"),
        ))
    if name == "fig5b_3d":
        return CoolingCycle((
            PulseSpec(-4, axis_amplitudes=(1.0, 1.0, 1.0), role="pseudo_confining"),
        ))
    raise ValueError(f"unknown cycle preset {name!r}; known: fig2_1d, fig5a_3d, fig5b_3d")


_EMPTY_I = np.zeros(1, dtype=np.int64)
_EMPTY_F = np.zeros(1)
_EMPTY_C2 = np.zeros((1, 1), dtype=complex)
_EMPTY_F2 = np.zeros((1, 1))


class Channels:
    """Collision and laser rate providers for one trap model.

    Use :meth:`one_d` or :meth:`shells` to build. ``collisions`` and ``laser``
    switch the two channels independently.
    """

    def __init__(self, mode, n_levels, g, table, collision_scale, laser_base,
                 collisions=True, laser=True, eta=None, rate_tables=None, shell_model=None):
        self.mode = mode
        self.n_levels = n_levels
        self.g = np.ascontiguousarray(g, dtype=np.float64)
        self.table = table
        self.collision_scale = float(collision_scale)
        self.laser_base = laser_base
        self.collisions = bool(collisions) and collision_scale > 0
        self.laser = bool(laser) and laser_base.Omega > 0
        self.eta = eta
        self.rate_tables = rate_tables
        self.shell_model = shell_model
        self._pulse_cache = {}

    @classmethod
    def one_d(cls, trap: TrapModel, collision: Collision1DParams, cooling: CoolingParams,
              collisions=True, laser=True, tables: RateTables | None = None):
        tables = tables if tables is not None else build_rate_tables(trap, cooling)
        table = tables.collisions
        return cls("one_d", trap.n_levels, table.g, table,
                   collision.xi * collision.omega, cooling, collisions, laser,
                   eta=trap.eta, rate_tables=tables)

    @classmethod
    def shells(cls, model: ShellModel, eta: float, cooling: CoolingParams,
               collisions=True, laser=True):
        table = shell_collision_table(model)
        return cls("three_d_ergodic", model.n_levels, table.g, table,
                   model.Delta, cooling, collisions, laser, eta=eta, shell_model=model)

    def pulse_params(self, pulse: PulseSpec) -> CoolingParams:
        b = self.laser_base
        return CoolingParams(gamma=b.gamma, Omega=b.Omega, s=pulse.s,
                             axis_amplitudes=tuple(pulse.axis_amplitudes),
                             dipole_pattern=b.dipole_pattern, omega=b.omega)

    def _laser_args(self, pulse):
        key = (pulse.s, tuple(pulse.axis_amplitudes))
        if key in self._pulse_cache:
            return self._pulse_cache[key]
        p = self.pulse_params(pulse)
        if not self.laser:
            args = (_engine.LASER_OFF, 0.0, 0.0, 1.0, 1.0, _EMPTY_C2, _EMPTY_F2,
                    _EMPTY_C2, _EMPTY_F2, _EMPTY_F, _EMPTY_F, _EMPTY_F2, _EMPTY_F)
        elif self.mode == "one_d":
            t = self.rate_tables
            A = complex(p.axis_amplitudes[0])
            fc_abs = np.ascontiguousarray(t.fc_abs * A)
            L, nl = fc_abs.shape
            Q = len(t.weights)
            fc_emit_h = np.ascontiguousarray(
                np.conj(t.fc_emit).transpose(1, 0, 2).reshape(L, Q * nl))
            tail = np.maximum(0.0, 1.0 - t.emit_avg.sum(axis=1))
            args = (_engine.LASER_DYNAMIC, p.prefactor, p.delta, p.omega, p.gamma,
                    fc_abs, np.abs(fc_abs), fc_emit_h, np.ascontiguousarray(t.emit_avg),
                    tail, np.ascontiguousarray(t.weights), _EMPTY_F2, _EMPTY_F)
        else:
            tab = shell_cooling_table(self.shell_model, p, self.eta)
            args = (_engine.LASER_STATIC, p.prefactor, p.delta, p.omega, p.gamma,
                    _EMPTY_C2, _EMPTY_F2, _EMPTY_C2, _EMPTY_F2, _EMPTY_F, _EMPTY_F,
                    np.ascontiguousarray(tab.D), np.ascontiguousarray(tab.over))
        self._pulse_cache[key] = args
        return args

    def engine_args(self, pulse: PulseSpec | None):
        """Argument tuple for the compiled loop, after (N, duration,
        max_events, seed, t0). ``pulse=None`` switches the laser off."""
        t = self.table
        coll = (self.g, self.collisions, self.collision_scale, t.src_off, t.src_i, t.src_j,
                t.dst_off, t.dst_k, t.dst_l, t.kern_off, t.kern)
        if pulse is None:
            laser = (_engine.LASER_OFF, 0.0, 0.0, 1.0, 1.0, _EMPTY_C2, _EMPTY_F2,
                     _EMPTY_C2, _EMPTY_F2, _EMPTY_F, _EMPTY_F, _EMPTY_F2, _EMPTY_F)
        else:
            laser = self._laser_args(pulse)
        return coll + laser

    def histogram_args(self, pulse):
        """Argument tuple for ``_engine.event_histogram`` after (N, n_draws, seed)."""
        a = self.engine_args(pulse)
        # drop fc_abs_mag and tail, which only the thinning bound needs
        return a[:16] + (a[16], a[18], a[19], a[21]) + a[22:24]


@dataclass
class PulseResult:
    n_events: int
    elapsed: float
    occupation_integral: np.ndarray
    counters: np.ndarray
    log_t: np.ndarray
    log_kind: np.ndarray
    log_levels: np.ndarray


def _check_state(N, n_levels):
    N = np.asarray(N)
    if N.ndim != 1 or len(N) != n_levels:
        raise ValueError(f"occupation must have {n_levels} entries, got shape {N.shape}")
    if np.any(N < 0):
        raise ValueError("negative occupation")
    return np.ascontiguousarray(N, dtype=np.int64).copy()


def _seed_from(rng):
    return int(rng.integers(0, 2 ** 32))


def simulate_pulse(state, pulse, channels: Channels, rng, *, duration=None,
                   max_events=None, log_events=False, t0=0.0, result=False):
    """Evolve ``state`` for one pulse (or, with ``pulse=None``, collisions only).

    Returns the new occupation vector; with ``result=True`` also a
    :class:`PulseResult` carrying counters, the occupation time integral
    and the optional event log.
    """
    N = _check_state(state, channels.n_levels)
    if duration is None:
        if pulse is None:
            raise ValueError("collision-only evolution needs an explicit duration")
        duration = pulse.length(channels.laser_base.gamma, channels.laser_base.Omega)
    if max_events is None:
        max_events = np.iinfo(np.int64).max
    occ_int = np.zeros(channels.n_levels)
    counters = np.zeros(_engine.N_COUNTERS, dtype=np.int64)
    out = _engine.run_pulse(N, float(duration), int(max_events), _seed_from(rng), float(t0),
                            *channels.engine_args(pulse), bool(log_events), occ_int, counters)
    n_events, elapsed, log_t, log_kind, log_lv = out
    if counters[_engine.C_BOUND_VIOLATION]:
        raise AssertionError("laser rate exceeded its thinning bound")
    if np.any(N < 0):
        raise AssertionError("negative occupation after event")
    if not result:
        return N
    return N, PulseResult(int(n_events), float(elapsed), occ_int, counters,
                          log_t, log_kind, log_lv)


@dataclass
class Trajectory:
    """Per-cycle snapshots (row 0 is the initial state) plus run metadata."""
    snapshots: np.ndarray
    cycle_time: float
    seed: object = None
    counters: dict = field(default_factory=dict)
    event_log: Optional[dict] = None

    @property
    def n_cycles(self):
        return len(self.snapshots) - 1

    @property
    def total(self):
        return int(self.snapshots[0].sum())


def _as_generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def run_cycles(initial, cycle: CoolingCycle, n_cycles: int, channels: Channels, rng, *,
               log_events=False, seed=None, progress=None):
    """Apply ``cycle`` ``n_cycles`` times; snapshot after each cycle.

    ``rng`` is a Generator or anything ``numpy.random.default_rng`` accepts.
    ``seed`` is only recorded in the returned trajectory.
    """
    if int(n_cycles) != n_cycles or n_cycles < 1:
        raise ValueError(f"n_cycles must be a positive integer, got {n_cycles!r}")
    gen = _as_generator(rng)
    N = _check_state(initial, channels.n_levels)
    snaps = np.empty((n_cycles + 1, channels.n_levels), dtype=np.int64)
    snaps[0] = N
    totals = np.zeros(_engine.N_COUNTERS, dtype=np.int64)
    gamma, Omega = channels.laser_base.gamma, channels.laser_base.Omega
    logs = [] if log_events else None
    t = 0.0
    for c in range(n_cycles):
        for pulse in cycle.pulses:
            N, res = simulate_pulse(N, pulse, channels, gen, log_events=log_events, t0=t,
                                    result=True)
            totals += res.counters
            t += pulse.length(gamma, Omega)
            if log_events and len(res.log_t):
                logs.append((res.log_t, res.log_kind, res.log_levels))
        snaps[c + 1] = N
        if progress is not None:
            progress(c + 1, N)
    event_log = None
    if log_events:
        if logs:
            event_log = {"t": np.concatenate([x[0] for x in logs]),
                         "kind": np.concatenate([x[1] for x in logs]),
                         "levels": np.concatenate([x[2] for x in logs])}
        else:
            event_log = {"t": np.zeros(0), "kind": np.zeros(0, dtype=np.int64),
                         "levels": np.zeros((0, 4), dtype=np.int64)}
    return Trajectory(snapshots=snaps, cycle_time=cycle.cycle_time(gamma, Omega),
                      seed=seed, counters=dict(zip(COUNTER_NAMES, totals.tolist())),
                      event_log=event_log)


def write_trajectory_csv(path, traj: Trajectory, header_lines=()):
    """One row per snapshot: ``cycle,N_0,...,N_nmax``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["cycle"] + [f"N_{n}" for n in range(traj.snapshots.shape[1])])
        for c, row in enumerate(traj.snapshots):
            out.writerow([c] + row.tolist())


def write_event_log_csv(path, traj: Trajectory, header_lines=()):
    """Event log rows ``t,kind,n1,n2,n3,n4``; laser events leave n3, n4 empty."""
    if traj.event_log is None:
        raise ValueError("trajectory was run without an event log")
    log = traj.event_log
    kinds = {_engine.KIND_COLLISION: "collision", _engine.KIND_LASER: "laser"}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["t", "kind", "n1", "n2", "n3", "n4"])
        for t, k, lv in zip(log["t"], log["kind"], log["levels"]):
            lv = [int(v) if v >= 0 else "" for v in lv]
            out.writerow([repr(float(t)), kinds[int(k)]] + lv)
