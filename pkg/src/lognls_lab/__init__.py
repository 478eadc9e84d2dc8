"""Numerical laboratory for the focusing logarithmic Schroedinger equation

    i u_t + 1/2 lap u + lam u ln|u|^2 = 0,   lam > 0.

Modules
-------
breather       width ODE of Gaussian breathers, energy levels, turning points
period         breather period by quadrature, ODE oracle and asymptotics
gaussian       Gausson, breathers and moving Gaussian packets in closed form
spectral       split-step Fourier solver and conserved quantities
inequalities   elementary inequalities for z ln|z|^2 and randomized sweeps
superposition  multi-packet superposition experiments, gap norms, tail bounds
config, cli    JSON experiment configs and the ``lognls-lab`` command
"""

from .breather import (BreatherParam, BreatherTrajectory, EnergyLevel, IntegrationError,
                       energy_of, integrate, physical_state, turning_points)
from .gaussian import (BreatherND, GaussianPacket, ShapeError, ShapeMatrix, breather_field_1d,
                       gausson, sum_field)
from .inequalities import (almost_lipschitz_gap, log_inequality_gap, run_all_sweeps,
                           y_ln_y_gap)
from .period import (SMALL_OSCILLATION_PERIOD, PeriodError, continuity_scan, period_alpha,
                     period_asymptotic, period_ode_oracle, period_quadrature)
from .spectral import (Field, Grid, SolverControls, SolverError, energy, evolve,
                       linf_lower_bound, mass, step_strang)
from .superposition import (SuperpositionReport, epsilon_zero, gap_norm, gaussian_tail_bounds,
                            run_superposition, separation, t_delta, theorem_bound, two_gaussons)

__version__ = "0.1.0"

__all__ = [
    "almost_lipschitz_gap", "breather_field_1d", "BreatherND", "BreatherParam",
    "BreatherTrajectory", "continuity_scan", "energy", "energy_of", "EnergyLevel",
    "epsilon_zero", "evolve", "Field", "gap_norm", "gaussian_tail_bounds", "GaussianPacket",
    "gausson", "Grid", "integrate", "IntegrationError", "linf_lower_bound",
    "log_inequality_gap", "mass", "period_alpha", "period_asymptotic", "period_ode_oracle",
    "period_quadrature", "PeriodError", "physical_state", "run_all_sweeps",
    "run_superposition", "separation", "ShapeError", "ShapeMatrix", "SMALL_OSCILLATION_PERIOD",
    "SolverControls", "SolverError", "step_strang", "sum_field", "SuperpositionReport",
    "t_delta", "theorem_bound", "turning_points", "two_gaussons", "y_ln_y_gap",
]
