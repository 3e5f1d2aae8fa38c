"""Ergodic shell model for an isotropic 3D harmonic trap.

All Cartesian states (m_x, m_y, m_z) of one energy shell n = m_x + m_y + m_z
are assumed equally populated, so the state is the vector of shell
occupations N_n. Collisions follow Holland-type shell rates; laser rates are
built from Cartesian transition rates of three orthogonal beams, averaged
over the g_n source states and summed over destination states.

Laser tables depend on the pulse only (the stimulated-emission linewidth
factor is held at its empty-trap value R = 1), so they are computed once per
pulse and composed with occupation factors at event time.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit
from numpy.polynomial.legendre import leggauss

from .oscillator import ZERO_CUTOFF, fc_matrix
from .rates1d import GUARD_LEVELS, CoolingParams, CollisionTable, build_collision_table

DELTA_DEFAULT = 1.5e-5
THETA_NODES = 16
PHI_NODES = 32


def shell_degeneracy(n):
    """(n+1)(n+2)/2 Cartesian states in shell n."""
    if int(n) != n or n < 0:
        raise ValueError(f"shell index must be a non-negative integer, got {n!r}")
    n = int(n)
    return (n + 1) * (n + 2) // 2


@dataclass(frozen=True)
class ShellModel:
    nmax: int = 14
    Delta: float = DELTA_DEFAULT

    def __post_init__(self):
        if self.nmax < 0:
            raise ValueError(f"nmax must be >= 0, got {self.nmax}")
        if self.Delta < 0:
            raise ValueError(f"Delta must be >= 0, got {self.Delta}")

    @property
    def n_levels(self):
        return self.nmax + 1

    @property
    def degeneracies(self):
        n = np.arange(self.nmax + 1)
        return (n + 1) * (n + 2) // 2


def shell_collision_table(model):
    """Pair kernels (n_j+1)(n_j+2)/(g1 g2 g3 g4); multiply by Delta for rates."""
    n = np.arange(2 * model.nmax + 1)
    g = (n + 1) * (n + 2) / 2.0

    def kern(E, i, k):
        nj = np.minimum(i, k)
        return (nj + 1) * (nj + 2) / (g[i] * g[E - i] * g[k] * g[E - k])
    return build_collision_table(model.nmax, kern, g)


def shell_collision_rate(n1, n2, n3, n4, occ, model):
    """Rate of {n1, n2} -> {n3, n4} between energy shells.

    Energy-violating and identity collisions have rate 0.
    """
    for n in (n1, n2, n3, n4):
        if n < 0 or n > model.nmax:
            raise ValueError(f"shell {n} outside truncation 0..{model.nmax}")
    N = np.asarray(occ, dtype=np.int64)
    if len(N) != model.n_levels:
        raise ValueError(f"occupation must have {model.n_levels} entries")
    if n1 + n2 != n3 + n4 or sorted((n1, n2)) == sorted((n3, n4)):
        return 0.0
    g = [shell_degeneracy(n) for n in (n1, n2, n3, n4)]
    nj = min(n1, n2, n3, n4)
    bose = (N[n1] * (N[n2] - (n1 == n2))
            * (N[n3] + g[2]) * (N[n4] + g[3] + (n3 == n4)))
    rate = model.Delta * (nj + 1) * (nj + 2) * bose / (g[0] * g[1] * g[2] * g[3])
    return max(float(rate), 0.0)


def interference_dark_amplitude(target, eta):
    """A_z that cancels the elastic excitation of a Cartesian state.

    With Omega_x = Omega_y = Omega and Omega_z = A_z Omega the elastic amplitude
    is proportional to F_xx + F_yy + A_z F_zz, F_aa = <m_a|exp(i eta x_a)|m_a>.
    """
    mx, my, mz = target
    fx, fy, fz = (fc_matrix(m + 1, m + 1, eta)[m, m].real for m in (mx, my, mz))
    for name, f in (("x", fx), ("y", fy), ("z", fz)):
        if f == 0.0:
            raise ValueError(f"elastic {name} Franck-Condon element of {tuple(target)} "
                             f"vanishes at eta={eta}; no interference dark amplitude")
    return complex(-(fx + fy) / fz)


def interference_dark_amplitude_2d(mx, my, eta):
    """Two-beam version: A = -<mx|e^{ikx}|mx> / <my|e^{iky}|my>."""
    fx = fc_matrix(mx + 1, mx + 1, eta)[mx, mx].real
    fy = fc_matrix(my + 1, my + 1, eta)[my, my].real
    if fx == 0.0 or fy == 0.0:
        raise ValueError(f"elastic Franck-Condon element of ({mx}, {my}) vanishes at eta={eta}")
    return complex(-fx / fy)


def cartesian_states(nmax):
    """All (m_x, m_y, m_z) with shell <= nmax, ordered by shell; returns
    (states[n_states, 3], shell offsets)."""
    states, off = [], [0]
    for n in range(nmax + 1):
        for mx in range(n, -1, -1):
            for my in range(n - mx, -1, -1):
                states.append((mx, my, n - mx - my))
        off.append(len(states))
    return np.array(states, dtype=np.int64), np.array(off, dtype=np.int64)


def direction_quadrature(n_theta=THETA_NODES, n_phi=PHI_NODES, pattern="isotropic"):
    """Unit vectors and weights (summing to one) for emission directions.

    Gauss-Legendre in cos(theta), uniform in phi. The dipole pattern has its
    axis along z.
    """
    x, w = leggauss(n_theta)
    if pattern == "isotropic":
        w = w / 2.0
    elif pattern == "dipole":
        w = 0.75 * (1.0 - x * x) * w
    else:
        raise ValueError(f"unknown dipole pattern {pattern!r}")
    phi = 2 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    st = np.sqrt(1.0 - x * x)
    k = np.stack([np.outer(st, np.cos(phi)).ravel(),
                  np.outer(st, np.sin(phi)).ravel(),
                  np.repeat(x, n_phi)], axis=1)
    return k, np.repeat(w, n_phi) / n_phi


def _axis_amplitudes(m, params, eta, L):
    """Excitation amplitudes of source m (3-vector).

    Returns c[a, l]: the coefficient of intermediate state m + (l - m_a) e_a.
    The elastic intermediate (l = m_a on every axis) is shared by all three
    beams; its amplitude is split equally over the axes so that each axis
    row can be propagated independently.
    """
    A = np.asarray(params.axis_amplitudes, dtype=complex)
    F = fc_matrix(L, int(max(m)) + 1, eta)
    l = np.arange(L)
    c = np.zeros((3, L), dtype=complex)
    elastic = 0.0j
    for a in range(3):
        denom = (params.delta - params.omega * (l - m[a])) + 1j * params.gamma
        c[a] = params.gamma * A[a] * F[:, m[a]] / denom
        elastic += A[a] * F[m[a], m[a]]
    c0 = params.gamma * elastic / (params.delta + 1j * params.gamma)
    if abs(c0) < ZERO_CUTOFF * params.gamma * np.abs(A).max():
        c0 = 0.0j
    for a in range(3):
        c[a, m[a]] = c0 / 3.0
    closure = float(np.sum(np.abs(c) ** 2) - 3 * abs(c0 / 3.0) ** 2 + abs(c0) ** 2)
    return c, closure


@njit(cache=True)
def _shell_accumulate(states, shell_of, c, H_idx, Fd, wd, acc):
    # acc[shell] += sum_d wd |sum_a G_a[n_a] prod_{b != a} H_b[n_b]|^2
    n_dir = Fd.shape[0]
    L = Fd.shape[2]
    nl = Fd.shape[3]
    G = np.empty((3, nl), np.complex128)
    H = np.empty((3, nl), np.complex128)
    for d in range(n_dir):
        for a in range(3):
            for n in range(nl):
                s = 0.0j
                for l in range(L):
                    cl = c[a, l]
                    if cl != 0.0:
                        f = Fd[d, a, l, n]
                        s += cl * complex(f.real, -f.imag)
                G[a, n] = s
                f = Fd[d, a, H_idx[a], n]
                H[a, n] = complex(f.real, -f.imag)
        w = wd[d]
        for j in range(states.shape[0]):
            x = states[j, 0]
            y = states[j, 1]
            z = states[j, 2]
            amp = (G[0, x] * H[1, y] * H[2, z] + H[0, x] * G[1, y] * H[2, z]
                   + H[0, x] * H[1, y] * G[2, z])
            acc[shell_of[j]] += w * (amp.real * amp.real + amp.imag * amp.imag)


@dataclass(frozen=True, eq=False)
class ShellCoolingTable:
    """Per-pulse shell-to-shell laser kernels.

    ``D[n1, n2]`` is the sum over source states in n1 and destination states
    in n2 of the Cartesian single-atom rates; ``over[n1]`` the same sum for
    destinations beyond the truncation. Shell rates follow as
    D[n1, n2] * N1 (N2 + g2) / (g1 g2) and over[n1] * N1 / g1.
    """
    D: np.ndarray
    over: np.ndarray
    degeneracies: np.ndarray


def _emission_tables(eta, L, nl, n_theta, n_phi, pattern):
    k, wd = direction_quadrature(n_theta, n_phi, pattern)
    Fd = np.empty((len(wd), 3, L, nl), dtype=complex)
    for d in range(len(wd)):
        for a in range(3):
            Fd[d, a] = fc_matrix(L, nl, eta * k[d, a])
    return Fd, wd


@lru_cache(maxsize=32)
def _shell_cooling_cached(nmax, gamma, Omega, s, amplitudes, pattern, omega, eta, guard,
                          n_theta, n_phi):
    params = CoolingParams(gamma=gamma, Omega=Omega, s=s, axis_amplitudes=amplitudes,
                           dipole_pattern=pattern, omega=omega)
    nl = nmax + 1
    L = nl + guard
    states, off = cartesian_states(nmax)
    shell_of = np.repeat(np.arange(nl), np.diff(off))
    Fd, wd = _emission_tables(eta, L, nl, n_theta, n_phi, pattern)
    D = np.zeros((nl, nl))
    over = np.zeros(nl)
    K = params.prefactor
    for idx, m in enumerate(states):
        c, closure = _axis_amplitudes(m, params, eta, L)
        if closure == 0.0:
            continue
        acc = np.zeros(nl)
        _shell_accumulate(states, shell_of, c, m.copy(), Fd, wd, acc)
        n1 = shell_of[idx]
        D[n1] += K * acc
        over[n1] += K * max(closure - acc.sum(), 0.0)
    D.setflags(write=False)
    over.setflags(write=False)
    g = (np.arange(nl) + 1) * (np.arange(nl) + 2) // 2
    return ShellCoolingTable(D=D, over=over, degeneracies=g)


def shell_cooling_table(model, params, eta, guard=GUARD_LEVELS,
                        n_theta=THETA_NODES, n_phi=PHI_NODES):
    """Laser kernels for one pulse (cached on all arguments)."""
    amps = tuple(complex(a) for a in params.axis_amplitudes)
    return _shell_cooling_cached(model.nmax, float(params.gamma), float(params.Omega),
                                 int(params.s), amps, params.dipole_pattern,
                                 float(params.omega), float(eta), int(guard),
                                 int(n_theta), int(n_phi))


def cartesian_cooling_rates(m, params, eta, nmax, guard=GUARD_LEVELS,
                            n_theta=THETA_NODES, n_phi=PHI_NODES):
    """Single-atom rates from Cartesian state ``m`` to every state of shell
    <= nmax (plain numpy reference). Returns (states, rates, overflow)."""
    nl = nmax + 1
    L = nl + guard
    states, _ = cartesian_states(nmax)
    Fd, wd = _emission_tables(eta, L, nl, n_theta, n_phi, params.dipole_pattern)
    c, closure = _axis_amplitudes(np.asarray(m), params, eta, L)
    Fc = Fd.conj()
    G = np.einsum("al,daln->dan", c, Fc)
    H = np.stack([Fc[:, a, m[a], :] for a in range(3)], axis=1)
    x, y, z = states.T
    amp = (G[:, 0, x] * H[:, 1, y] * H[:, 2, z] + H[:, 0, x] * G[:, 1, y] * H[:, 2, z]
           + H[:, 0, x] * H[:, 1, y] * G[:, 2, z])
    rates = params.prefactor * (wd @ np.abs(amp) ** 2)
    overflow = params.prefactor * max(closure - rates.sum() / params.prefactor, 0.0)
    return states, rates, overflow


def shell_cooling_rate(n1, n2, occ, params, eta, model, **table_kw):
    """Ergodic laser rate from shell n1 to shell n2.

    For n2 == n1 this is the rate of scattering within the shell, which
    leaves shell occupations unchanged; the simulation ignores it.
    """
    for n in (n1, n2):
        if n < 0 or n > model.nmax:
            raise ValueError(f"shell {n} outside truncation 0..{model.nmax}")
    N = np.asarray(occ, dtype=np.int64)
    if params.Omega == 0.0 or N[n1] == 0:
        return 0.0
    tab = shell_cooling_table(model, params, eta, **table_kw)
    g1, g2 = shell_degeneracy(n1), shell_degeneracy(n2)
    return float(tab.D[n1, n2] * N[n1] * (N[n2] + g2) / (g1 * g2))
