"""Monte Carlo ensembles against the configuration-space master equation."""
from itertools import combinations_with_replacement

import numpy as np

from bosecool.kinetics import simulate_pulse
from bosecool.rates1d import collision_rate_1d, cooling_rate_matrix
from bosecool.rates3d import shell_collision_rate, shell_cooling_rate

from _oracles import configurations, evolve, generator, level_marginals


def _quadruples(nmax):
    for n1, n2 in combinations_with_replacement(range(nmax + 1), 2):
        for n3, n4 in combinations_with_replacement(range(nmax + 1), 2):
            if n1 + n2 == n3 + n4 and (n1, n2) != (n3, n4):
                yield n1, n2, n3, n4


def _collide(N, n1, n2, n3, n4):
    new = N.copy()
    new[n1] -= 1
    new[n2] -= 1
    new[n3] += 1
    new[n4] += 1
    return new


def _hop(N, n1, n2):
    new = N.copy()
    new[n1] -= 1
    new[n2] += 1
    return new


def transitions_1d(tables, collision=None, cooling=None):
    """Pointwise 1D rates, only events that stay inside the truncation."""
    nmax = tables.nmax

    def moves(N):
        if collision is not None:
            for q in _quadruples(nmax):
                r = collision_rate_1d(*q, N, collision, tables)
                if r > 0:
                    yield _collide(N, *q), r
        if cooling is not None:
            rates, _ = cooling_rate_matrix(N, cooling, tables)
            for n1, n2 in zip(*np.nonzero(rates)):
                yield _hop(N, n1, n2), rates[n1, n2]
    return moves


def transitions_shells(model, eta, collisions=True, cooling=None):
    def moves(N):
        if collisions:
            for q in _quadruples(model.nmax):
                r = shell_collision_rate(*q, N, model)
                if r > 0:
                    yield _collide(N, *q), r
        if cooling is not None:
            for n1 in range(model.n_levels):
                for n2 in range(model.n_levels):
                    if n1 != n2:
                        r = shell_cooling_rate(n1, n2, N, cooling, eta, model)
                        if r > 0:
                            yield _hop(N, n1, n2), r
    return moves


def start_distribution(configs, starts):
    """Equal-weight mixture of the given configurations.

    Collision-only dynamics with symmetric kernels keeps the uniform
    distribution over an energy sector stationary, so the oracle checks
    start far from it."""
    p0 = np.zeros(len(configs))
    for s in starts:
        p0[configs.index(tuple(s))] = 1.0 / len(starts)
    return p0


def oracle_marginals(n_levels, n_atoms, moves, p0, times):
    configs = configurations(n_levels, n_atoms)
    Q = generator(configs, moves)
    P = evolve(Q, p0, times)
    return configs, Q, level_marginals(configs, P, n_levels, n_atoms)


def mc_marginals(configs, p0, channels, pulse, times, n_traj, seed):
    """Level marginals P(N_n = k) at each checkpoint from ``n_traj`` runs.

    Each trajectory starts from a configuration drawn from ``p0`` and is
    advanced checkpoint to checkpoint (the dynamics is Markov)."""
    rng = np.random.default_rng(seed)
    C = np.array(configs)
    n_levels = C.shape[1]
    n_atoms = int(C[0].sum())
    counts = np.zeros((len(times), n_levels, n_atoms + 1), dtype=np.int64)
    starts = rng.choice(len(configs), size=n_traj, p=p0)
    lv = np.arange(n_levels)
    for s in starts:
        N = C[s]
        t_prev = 0.0
        for c, t in enumerate(times):
            N = simulate_pulse(N, pulse, channels, rng, duration=t - t_prev)
            t_prev = t
            counts[c, lv, N] += 1
    return counts / n_traj


def binomial_z(emp, exact, n_traj):
    """Largest |emp - exact| in units of the binomial standard error.

    Entries with exact probability 0 or 1 must match exactly (returns inf
    otherwise)."""
    p = np.clip(exact, 0.0, 1.0)
    sigma = np.sqrt(p * (1 - p) / n_traj)
    diff = np.abs(emp - p)
    certain = sigma < 1e-9
    if np.any(diff[certain] > 1e-9):
        return np.inf
    return float(np.max(diff[~certain] / sigma[~certain]))
