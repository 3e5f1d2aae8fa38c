"""
Franck-Condon factors and dark states at eta = 3
================================================

Beyond the Lamb-Dicke limit a photon kick connects many trap levels. The
one-atom rate for the sideband n -> n + s is |<n+s|e^{ikx}|n>|^2, and some
of these vanish exactly at Laguerre roots: those levels are dark for that
sideband and only collect population.

    python demos/01_rates_and_dark_states.py
"""
import numpy as np

from bosecool.cli import rate_table_fig1
from bosecool.oscillator import delta_c, fc_matrix, franck_condon
from bosecool.rates3d import interference_dark_amplitude, shell_degeneracy

eta = 3.0

# one-atom sideband strengths for s = +8 (heating) and s = -3 (cooling)
rows = rate_table_fig1(eta)
print(" n   |<n+8|e^ikx|n>|^2   |<n-3|e^ikx|n>|^2")
table = {(s, n): v for s, n, v in rows}
for n in range(10):
    print(f"{n:2d}   {table[(8, n)]:16.3e}   {table[(-3, n)]:16.3e}")

# n = 1 is dark for s = 8 because L_1^(8)(eta^2) = 9 - eta^2 = 0
print("\n|<9|e^ikx|1>| at eta = 3:", abs(franck_condon(9, 1, eta)))

# the table of columns is unitary once enough rows are kept
F = fc_matrix(50, 10, eta)
print("column norms (50 rows):", np.round((np.abs(F) ** 2).sum(axis=0), 8))

# collision overlaps: pi/2 for four ground-state atoms, pi/64 for (1,1)->(0,2)
print("\ndelta_c(0,0,0) =", delta_c(0, 0, 0), " pi/2 =", np.pi / 2)
print("delta_c(1,1,0) =", delta_c(1, 1, 0), " pi/64 =", np.pi / 64)

# 3D: shells are degenerate, and a third beam with amplitude A_z can cancel
# the elastic amplitude of the ground state (interference dark state)
print("\nshell degeneracies:", [shell_degeneracy(n) for n in range(6)])
print("A_z making (0,0,0) dark with A_x = A_y = 1:",
      interference_dark_amplitude((0, 0, 0), 2.0))
