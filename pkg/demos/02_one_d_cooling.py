"""
Excited-state cooling of 133 bosons in a 1D trap
================================================

Four pulses per cycle, s = (-9, 8, -10, -3) at eta = 3. Pulse 2 (s = 8) is
dark for n = 1, so without collisions the gas piles up in n = 1. With
r = 0.4 a second quasi-dark level, n = 7, competes with it; with r = 5
collisions refill n = 0 faster than the laser empties it.

The full runs use 15000 cycles; the default here is shorter so the script
finishes in a minute or two. Pass a cycle count to change it:

    python demos/02_one_d_cooling.py 3000
"""
import sys

import numpy as np

from bosecool.analysis import level_correlation, sample_thermal, window_average
from bosecool.cli import build_channels, build_cycle, preset_config
from bosecool.kinetics import run_cycles

n_cycles = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
warmup = n_cycles // 2

for name in ("fig2a", "fig2b", "fig2e"):
    cfg = preset_config(name)
    rng = np.random.default_rng(1)
    # thermal start with <n> = 6 over 40 levels
    init = sample_thermal(cfg.mean_n, cfg.N, cfg.nmax, rng)
    traj = run_cycles(init, build_cycle(cfg), n_cycles, build_channels(cfg), rng)
    stats = window_average(traj, warmup, n_cycles, target=1)

    print(f"\n{name}: r = {cfg.r}, cycles {warmup}..{n_cycles}")
    print("  mean occupations n = 0..12:", np.round(stats.level_mean[:13], 1))
    print(f"  N_1 / N = {stats.condensate_fraction:.3f}   <n> = {stats.mean_n:.2f}"
          f"   peaks {stats.peaks}")
    if name == "fig2b":
        # the n = 1 and n = 7 populations trade atoms from cycle to cycle
        print(f"  corr(N_1, N_7) = {level_correlation(traj, 1, 7, warmup, n_cycles):.2f}")
    print("  counters:", traj.counters)
