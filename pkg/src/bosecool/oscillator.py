"""Harmonic-trap special functions.

Franck-Condon factors ``<l| exp(i x (a + a^dag)) |m>`` from the associated
Laguerre closed form, and the four-Hermite overlap ``delta_c`` that sets the
strength of energy-conserving two-body collisions in a 1D trap.

Both are evaluated with log-gamma prefactors so that level indices of a few
dozen do not overflow.
"""
from __future__ import annotations

import csv
from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.special import eval_genlaguerre, gammaln

# Amplitudes below this magnitude are snapped to exact zero. Columns of the
# Franck-Condon matrix have unit norm, so this is relative to the column norm.
ZERO_CUTOFF = 1e-12

# extra Gauss-Hermite nodes beyond the n1+n2 needed for polynomial exactness
DELTA_C_NODE_MARGIN = 8


def _check_level(*levels):
    for n in levels:
        if int(n) != n or n < 0:
            raise ValueError(f"trap level index must be a non-negative integer, got {n!r}")


def franck_condon(l, m, eta_eff):
    """Single Franck-Condon amplitude <l|exp(i*eta_eff*(a+a^dag))|m>.

    ``eta_eff`` is the Lamb-Dicke parameter times the projection of the photon
    wavevector on the trap axis; negative values are allowed.
    """
    _check_level(l, m)
    return complex(fc_matrix(int(l) + 1, int(m) + 1, eta_eff)[int(l), int(m)])


def fc_matrix(n_rows, n_cols, eta_eff):
    """Franck-Condon block F[l, m] for l < n_rows, m < n_cols.

    Returns a complex128 array. Entries with magnitude below ``ZERO_CUTOFF``
    are exact zeros.
    """
    x = float(eta_eff)
    l = np.arange(n_rows)[:, None]
    m = np.arange(n_cols)[None, :]
    if x == 0.0:
        return (l == m).astype(np.complex128)

    lo = np.minimum(l, m)
    hi = np.maximum(l, m)
    d = hi - lo
    x2 = x * x
    log_mag = -0.5 * x2 + d * np.log(abs(x)) + 0.5 * (gammaln(lo + 1) - gammaln(hi + 1))
    lag = eval_genlaguerre(lo, d, x2)
    # (i*x)^d = i^d * sign(x)^d * |x|^d
    phase = (1j) ** (d % 4) * np.where((d % 2 == 1) & (x < 0), -1.0, 1.0)
    out = phase * np.exp(log_mag) * lag
    out[np.abs(out) < ZERO_CUTOFF] = 0.0
    return out.astype(np.complex128)


def hermite_functions(n_max, z):
    """Normalised Hermite functions psi_n(z), n = 0..n_max, shape (n_max+1, len(z))."""
    z = np.asarray(z, dtype=float)
    psi = np.empty((n_max + 1,) + z.shape)
    psi[0] = np.pi ** -0.25 * np.exp(-0.5 * z * z)
    if n_max >= 1:
        psi[1] = np.sqrt(2.0) * z * psi[0]
    for n in range(1, n_max):
        psi[n + 1] = np.sqrt(2.0 / (n + 1)) * z * psi[n] - np.sqrt(n / (n + 1)) * psi[n - 1]
    return psi


def _gauss_hermite_extended(n_nodes):
    """Gauss-Hermite nodes refined in extended precision.

    Returns nodes t_k and scaled weights w_k * exp(t_k^2) * pi^(-1/2), both as
    longdouble. The float64 nodes are polished by Newton steps on the
    orthonormal Hermite polynomial of degree n_nodes.
    """
    t0, _ = hermgauss(n_nodes)
    t = t0.astype(np.longdouble)
    for _ in range(3):
        p_prev = np.zeros_like(t)
        p = np.ones_like(t)
        for k in range(n_nodes):
            p_prev, p = p, (np.sqrt(np.longdouble(2) / (k + 1)) * t * p
                            - np.sqrt(np.longdouble(k) / (k + 1)) * p_prev)
        t = t - p / (np.sqrt(np.longdouble(2 * n_nodes)) * p_prev)
    # Christoffel numbers with the Gaussian folded in: 1 / sum_j psi_j(t)^2,
    # psi_j without the pi^(-1/4) factor.
    psi = _hermite_functions_unscaled(n_nodes - 1, t)
    return t, 1.0 / (psi * psi).sum(axis=0)


def _hermite_functions_unscaled(n_max, z):
    # pi^(1/4) * psi_n(z), in the dtype of z
    psi = np.empty((n_max + 1,) + z.shape, dtype=z.dtype)
    psi[0] = np.exp(-z * z / 2)
    if n_max >= 1:
        psi[1] = np.sqrt(z.dtype.type(2)) * z * psi[0]
    for n in range(1, n_max):
        psi[n + 1] = (np.sqrt(z.dtype.type(2) / (n + 1)) * z * psi[n]
                      - np.sqrt(z.dtype.type(n) / (n + 1)) * psi[n - 1])
    return psi


@lru_cache(maxsize=None)
def _delta_c_block(energy):
    """delta_c(n1, E-n1, n3) for all n1, n3 in 0..E as an (E+1, E+1) array.

    With psi_n the normalised Hermite functions,
    delta_c(n1, n2, n3) = pi^2 * (int psi_n1 psi_n2 psi_n3 psi_n4 dz)^2.
    The integrand is a polynomial times exp(-2 z^2); after z = t/sqrt(2) the
    quadrature is exact, and the pi factors collect into a single pi/2.
    Sums run in extended precision because small overlaps come from heavy
    cancellation.
    """
    t, w = _gauss_hermite_extended(energy + DELTA_C_NODE_MARGIN)
    z = t / np.sqrt(np.longdouble(2))
    psi = _hermite_functions_unscaled(energy, z)
    pair = psi * psi[::-1]          # pair[n] = psi_n * psi_{E-n}
    overlap = (pair * w) @ pair.T
    block = (np.pi / 2) * (overlap ** 2).astype(np.float64)
    block.setflags(write=False)
    return block


def delta_c(n1, n2, n3):
    """Collision overlap for n1 + n2 -> n3 + (n1 + n2 - n3)."""
    _check_level(n1, n2, n3)
    energy = int(n1) + int(n2)
    if n3 > energy:
        raise ValueError(
            f"n3={n3} exceeds n1+n2={energy}: energy conservation leaves n4 negative")
    return float(_delta_c_block(energy)[int(n1), int(n3)])


def delta_c_block(energy):
    """Read-only (E+1, E+1) table of delta_c(n1, E-n1, n3)."""
    return _delta_c_block(int(energy))


def write_fc_table(path, eta, n_levels, kappas):
    """Dump Franck-Condon amplitudes for several wavevector projections.

    CSV columns: ``l,m,kappa,re,im``.
    """
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["l", "m", "kappa", "re", "im"])
        for kappa in kappas:
            F = fc_matrix(n_levels, n_levels, eta * kappa)
            for l in range(n_levels):
                for m in range(n_levels):
                    v = F[l, m]
                    out.writerow([l, m, repr(float(kappa)), repr(v.real), repr(v.imag)])


def write_delta_c_table(path, nmax):
    """Dump delta_c for all n1 <= n2 <= nmax and 0 <= n3 <= n1+n2.

    CSV columns: ``n1,n2,n3,value``.
    """
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["n1", "n2", "n3", "value"])
        for n1 in range(nmax + 1):
            for n2 in range(n1, nmax + 1):
                block = _delta_c_block(n1 + n2)
                for n3 in range(n1 + n2 + 1):
                    out.writerow([n1, n2, n3, repr(float(block[n1, n3]))])
