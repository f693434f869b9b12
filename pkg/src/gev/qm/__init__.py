"""Wave-packet experiments for the quantum-mechanical Ehrenfest relations."""
from .dirac import (DiracGrid, MomentumAmplitudes, ScalarPotential, dirac_force_check,
                    dirac_wavepacket_check, evolve_dirac, positive_energy_packet, spinors)
from .schrodinger import (Grid, Potential, Trajectory, coherent_state, ehrenfest_residuals,
                          evolve_schrodinger, gaussian_packet, run_experiment)

__all__ = ["DiracGrid", "MomentumAmplitudes", "ScalarPotential", "dirac_force_check",
           "dirac_wavepacket_check", "evolve_dirac", "positive_energy_packet", "spinors",
           "Grid", "Potential", "Trajectory", "coherent_state", "ehrenfest_residuals",
           "evolve_schrodinger", "gaussian_packet", "run_experiment"]
