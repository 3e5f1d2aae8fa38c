"""Stochastic simulation of laser cooling of trapped bosons with collisions."""
from .oscillator import delta_c, franck_condon, fc_matrix
from .rates1d import (Collision1DParams, CoolingParams, TrapModel, build_rate_tables,
                      collision_rate_1d, cooling_rate_1d, r_factor)
from .rates3d import (ShellModel, interference_dark_amplitude, shell_collision_rate,
                      shell_cooling_rate, shell_degeneracy)
from .kinetics import (Channels, CoolingCycle, PulseSpec, Trajectory, run_cycles,
                       simulate_pulse, standard_cycles)
from .analysis import (equilibrate_collisions, sample_thermal, tf_density_ratio,
                       window_average)

__all__ = [
    "delta_c", "franck_condon", "fc_matrix",
    "Collision1DParams", "CoolingParams", "TrapModel", "build_rate_tables",
    "collision_rate_1d", "cooling_rate_1d", "r_factor",
    "ShellModel", "interference_dark_amplitude", "shell_collision_rate",
    "shell_cooling_rate", "shell_degeneracy",
    "Channels", "CoolingCycle", "PulseSpec", "Trajectory", "run_cycles",
    "simulate_pulse", "standard_cycles",
    "equilibrate_collisions", "sample_thermal", "tf_density_ratio", "window_average",
]
