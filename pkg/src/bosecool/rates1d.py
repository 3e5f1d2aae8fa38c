"""Event rates for bosons in a one-dimensional harmonic trap.

All rates are in units of the trap frequency unless ``omega`` is set.
The module keeps a plain-numpy reference path (``collision_rate_1d``,
``r_factor``, ``cooling_rate_1d``, ``cooling_rate_matrix``); the
stochastic engine in :mod:`bosecool._engine` evaluates the same
expressions from the precomputed :class:`RateTables`.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .oscillator import delta_c_block, fc_matrix

XI_PER_R2 = 5e-6
GUARD_LEVELS = 10
ANGULAR_NODES = 48


@dataclass(frozen=True)
class Collision1DParams:
    """Collision strength r = lambda * a / a0 (r = 0 is the ideal gas)."""
    r: float = 0.0
    omega: float = 1.0

    def __post_init__(self):
        if self.r < 0:
            raise ValueError(f"r must be >= 0, got {self.r}")

    @property
    def xi(self):
        return XI_PER_R2 * self.r ** 2


@dataclass(frozen=True)
class CoolingParams:
    """Laser parameters, in the same time unit as ``omega``.

    ``s`` is the integer detuning index (delta = s * omega). In 1D only
    ``axis_amplitudes[0]`` is used.
    """
    gamma: float = 0.04
    Omega: float = 0.03
    s: int = 0
    axis_amplitudes: tuple = (1.0, 1.0, 1.0)
    dipole_pattern: str = "isotropic"
    omega: float = 1.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.Omega < 0:
            raise ValueError(f"Omega must be >= 0, got {self.Omega}")
        if self.dipole_pattern not in ("isotropic", "dipole"):
            raise ValueError(f"unknown dipole pattern {self.dipole_pattern!r}")
        if self.gamma >= self.omega:
            warnings.warn("gamma >= omega: outside the Festina Lente regime", stacklevel=3)

    @property
    def delta(self):
        return self.s * self.omega

    @property
    def prefactor(self):
        """Omega^2 / (2 gamma)."""
        return self.Omega ** 2 / (2.0 * self.gamma)


@dataclass(frozen=True)
class TrapModel:
    eta: float
    nmax: int
    guard: int = GUARD_LEVELS
    angular_nodes: int = ANGULAR_NODES
    dipole_pattern: str = "isotropic"

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError(f"eta must be > 0, got {self.eta}")
        if self.nmax < 0 or self.guard < 0:
            raise ValueError("nmax and guard must be non-negative")

    @property
    def n_levels(self):
        return self.nmax + 1

    @property
    def n_intermediate(self):
        return self.nmax + 1 + self.guard


def emission_quadrature(n_nodes, pattern="isotropic"):
    """Nodes kappa = cos(theta) and weights for the emission-direction average.

    Weights sum to one, so a constant integrand averages to itself. The
    classical dipole is taken with its axis along the trap axis.
    """
    x, w = leggauss(n_nodes)
    if pattern == "isotropic":
        w = w / 2.0
    elif pattern == "dipole":
        w = 0.75 * (1.0 - x * x) * w
    else:
        raise ValueError(f"unknown dipole pattern {pattern!r}")
    return x, w


@dataclass(frozen=True, eq=False)
class CollisionTable:
    """Energy-conserving pair -> pair kernels, grouped by pair energy E.

    For each E the source pairs (i, j) satisfy i <= j <= nmax and the
    destination pairs (k, l) satisfy k <= l, k + l = E; destinations with
    l > nmax are overflow. ``kern`` holds the occupation-free kernel for every
    (source, destination) combination, zero where the pairs coincide.
    ``g`` holds the level degeneracies up to 2*nmax.
    """
    nmax: int
    g: np.ndarray
    src_off: np.ndarray
    src_i: np.ndarray
    src_j: np.ndarray
    dst_off: np.ndarray
    dst_k: np.ndarray
    dst_l: np.ndarray
    kern_off: np.ndarray
    kern: np.ndarray

    def kernel(self, n1, n2, n3):
        """Occupation-free kernel for {n1, n2} -> {n3, n1+n2-n3}."""
        i, j = sorted((n1, n2))
        E = i + j
        k, l = sorted((n3, E - n3))
        p = np.flatnonzero((self.src_i[self.src_off[E]:self.src_off[E + 1]] == i))[0]
        q = np.flatnonzero((self.dst_k[self.dst_off[E]:self.dst_off[E + 1]] == k))[0]
        n_dst = self.dst_off[E + 1] - self.dst_off[E]
        return float(self.kern[self.kern_off[E] + p * n_dst + q])


def build_collision_table(nmax, kernel_fn, g):
    """Lay out pair kernels by energy. ``kernel_fn(E, i, k)`` returns an array
    over (source pair first index i, destination first index k)."""
    n_E = 2 * nmax + 1
    src_off = np.zeros(n_E + 1, dtype=np.int64)
    dst_off = np.zeros(n_E + 1, dtype=np.int64)
    kern_off = np.zeros(n_E + 1, dtype=np.int64)
    src_i, src_j, dst_k, dst_l, kern = [], [], [], [], []
    for E in range(n_E):
        i = np.arange(max(0, E - nmax), E // 2 + 1)
        k = np.arange(0, E // 2 + 1)
        K = np.array(kernel_fn(E, i[:, None], k[None, :]), dtype=np.float64)
        K = np.broadcast_to(K, (len(i), len(k))).copy()
        K[i[:, None] == k[None, :]] = 0.0
        src_i.append(i)
        src_j.append(E - i)
        dst_k.append(k)
        dst_l.append(E - k)
        kern.append(K.ravel())
        src_off[E + 1] = src_off[E] + len(i)
        dst_off[E + 1] = dst_off[E] + len(k)
        kern_off[E + 1] = kern_off[E] + K.size
    cat = lambda parts, dt: np.ascontiguousarray(np.concatenate(parts), dtype=dt)
    return CollisionTable(
        nmax=nmax, g=np.ascontiguousarray(g, dtype=np.float64),
        src_off=src_off, src_i=cat(src_i, np.int64), src_j=cat(src_j, np.int64),
        dst_off=dst_off, dst_k=cat(dst_k, np.int64), dst_l=cat(dst_l, np.int64),
        kern_off=kern_off, kern=cat(kern, np.float64))


def collision_table_1d(nmax):
    """Pair kernels delta_c(i, E-i, k); multiply by xi*omega for rates."""
    def kern(E, i, k):
        return delta_c_block(E)[i, k]
    return build_collision_table(nmax, kern, np.ones(2 * nmax + 1))


@dataclass(frozen=True, eq=False)
class RateTables:
    """Occupation-independent pieces of the 1D rates.

    ``fc_abs[l, m]`` is the absorption amplitude along the laser axis,
    ``fc_emit[q, l, n]`` the emission amplitude at projection ``kappa[q]``,
    ``emit_avg[l, n]`` its direction-averaged squared modulus.
    """
    trap: TrapModel
    kappa: np.ndarray
    weights: np.ndarray
    fc_abs: np.ndarray
    fc_emit: np.ndarray
    emit_avg: np.ndarray
    collisions: CollisionTable = field(repr=False)

    @property
    def nmax(self):
        return self.trap.nmax

    def delta_c(self, n1, n2, n3):
        return float(delta_c_block(n1 + n2)[n1, n3])


def build_rate_tables(trap, params=None):
    """Precompute Franck-Condon products, delta_c kernels and quadrature.

    ``params`` may override the dipole pattern of ``trap``; nothing else in
    the tables depends on the laser settings.
    """
    pattern = params.dipole_pattern if params is not None else trap.dipole_pattern
    nl, L = trap.n_levels, trap.n_intermediate
    kappa, w = emission_quadrature(trap.angular_nodes, pattern)
    fc_abs = fc_matrix(L, nl, trap.eta)
    fc_emit = np.stack([fc_matrix(L, nl, trap.eta * k) for k in kappa])
    emit_avg = np.einsum("q,qln->ln", w, np.abs(fc_emit) ** 2)
    return RateTables(trap=trap, kappa=kappa, weights=w, fc_abs=fc_abs,
                      fc_emit=fc_emit, emit_avg=emit_avg,
                      collisions=collision_table_1d(trap.nmax))


def _occ(occ, nmax):
    occ = np.asarray(occ)
    if occ.ndim != 1 or len(occ) != nmax + 1:
        raise ValueError(f"occupation must have {nmax + 1} entries")
    if np.any(occ < 0):
        raise ValueError("negative occupation")
    return occ.astype(np.int64)


def _check_indices(nmax, *levels):
    for n in levels:
        if n < 0 or n > nmax:
            raise ValueError(f"level {n} outside truncation 0..{nmax}")


def collision_rate_1d(n1, n2, n3, n4, occ, params, tables):
    """Rate of the pair collision {n1, n2} -> {n3, n4}."""
    nmax = tables.nmax
    _check_indices(nmax, n1, n2, n3, n4)
    N = _occ(occ, nmax)
    if n1 + n2 != n3 + n4 or params.xi == 0.0:
        return 0.0
    bose = (N[n1] * (N[n2] - (n1 == n2))
            * (N[n3] + 1) * (N[n4] + 1 + (n3 == n4)))
    rate = params.xi * params.omega * tables.delta_c(n1, n2, n3) * bose
    return max(float(rate), 0.0)


def r_factor(n1, l, occ, params, tables):
    """Stimulated-emission linewidth factor R for excited level l, source n1."""
    nmax = tables.nmax
    _check_indices(nmax, n1)
    if l < 0 or l >= tables.trap.n_intermediate:
        raise ValueError(f"intermediate level {l} outside table")
    N = _occ(occ, nmax)
    weight = N + 1.0
    weight[n1] -= 1.0
    return float(tables.emit_avg[l] @ weight)


def _source_amplitudes(n1, N, params, tables):
    # gamma * eta_{l n1}(k_L) / ([delta - omega (l - n1)] + i gamma R_{n1 l})
    L = tables.trap.n_intermediate
    l = np.arange(L)
    weight = N + 1.0
    weight[n1] -= 1.0
    R = tables.emit_avg @ weight
    A = complex(params.axis_amplitudes[0])
    denom = (params.delta - params.omega * (l - n1)) + 1j * params.gamma * R
    return params.gamma * A * tables.fc_abs[:, n1] / denom


def cooling_kernel_1d(n1, occ, params, tables):
    """Dimensionless Delta_l(n1, n2) for all n2 in the truncation, plus the
    part of the closure sum that leaves the truncation."""
    nmax = tables.nmax
    _check_indices(nmax, n1)
    N = _occ(occ, nmax)
    c = _source_amplitudes(n1, N, params, tables)
    amp = np.einsum("qln,l->qn", tables.fc_emit.conj(), c)
    kernel = tables.weights @ np.abs(amp) ** 2
    beyond = max(float(np.sum(np.abs(c) ** 2) - kernel.sum()), 0.0)
    return kernel, beyond


def cooling_rate_1d(n1, n2, occ, params, tables):
    """Laser-induced rate n1 -> n2 for the pulse described by ``params``."""
    _check_indices(tables.nmax, n1, n2)
    N = _occ(occ, tables.nmax)
    if params.Omega == 0.0 or N[n1] == 0:
        return 0.0
    kernel, _ = cooling_kernel_1d(n1, N, params, tables)
    return float(params.prefactor * kernel[n2] * N[n1] * (N[n2] + 1))


def cooling_rate_matrix(occ, params, tables):
    """All laser rates for one occupation state.

    Returns ``(rates, overflow)``: ``rates[n1, n2]`` with a zero diagonal
    (elastic scattering leaves the state unchanged) and ``overflow[n1]`` the
    rate of transitions out of the truncation.
    """
    N = _occ(occ, tables.nmax)
    nl = tables.trap.n_levels
    rates = np.zeros((nl, nl))
    overflow = np.zeros(nl)
    if params.Omega == 0.0:
        return rates, overflow
    for n1 in np.flatnonzero(N):
        kernel, beyond = cooling_kernel_1d(n1, N, params, tables)
        rates[n1] = params.prefactor * N[n1] * (N + 1) * kernel
        rates[n1, n1] = 0.0
        overflow[n1] = params.prefactor * N[n1] * beyond
    return rates, overflow


def collision_rate_list(occ, xi_omega, table):
    """All non-trivial collision events for one state.

    Returns a list of ``((n1, n2, n3, n4), rate)`` with n1 <= n2, n3 <= n4;
    destinations beyond the truncation are included (they are overflow).
    Works for any :class:`CollisionTable` (1D or shell model).
    """
    N = np.asarray(occ, dtype=np.int64)
    nmax = table.nmax
    g = table.g
    Next = np.zeros(len(g))
    Next[:nmax + 1] = N
    events = []
    for E in range(2 * nmax + 1):
        s0, s1 = table.src_off[E], table.src_off[E + 1]
        d0, d1 = table.dst_off[E], table.dst_off[E + 1]
        n_dst = d1 - d0
        for p in range(s1 - s0):
            i, j = table.src_i[s0 + p], table.src_j[s0 + p]
            a = Next[i] * (Next[j] - (i == j))
            if a <= 0:
                continue
            for q in range(n_dst):
                k, l = table.dst_k[d0 + q], table.dst_l[d0 + q]
                kern = table.kern[table.kern_off[E] + p * n_dst + q]
                if kern == 0.0:
                    continue
                b = (Next[k] + g[k]) * (Next[l] + g[l] + (k == l))
                events.append(((int(i), int(j), int(k), int(l)), xi_omega * kern * a * b))
    return events
