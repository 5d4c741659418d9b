"""Schroedinger dynamics with a point-concentrated nonlinearity on the line.

Two independent solvers are provided: a Volterra solver for the boundary
trace ``g(t) = psi(0, t)`` with Duhamel reconstruction off the origin, and a
split-step solver for the mollified mean-field equation. ``diagnostics``
checks conservation laws, a priori bounds and the epsilon -> 0 limit.
"""

__version__ = "0.1.0"

from .diagnostics import (
    ConvergenceRow,
    ConvergenceTable,
    DiagnosticsRecord,
    HolderEstimate,
    charge,
    convergence_study,
    energy_mollified,
    energy_point,
    h1_norm,
    holder_exponent,
    lambda_bound,
    record,
    sobolev_check,
    uniform_distance,
)
from .model import (
    CATALOGUE,
    Grid,
    Mollifier,
    Nonlinearity,
    TraceSeries,
    Wavefunction,
    eval_F,
    eval_U,
    gauge_rotate,
    get_nonlinearity,
    make_mollifier,
    mean_field,
    polynomial,
    truncate_nonlinearity,
)
from .mollified import MollifiedRun, nonlinear_flow_exact, solve_mollified, step_strang, tau_epsilon
from .propagator import FreePropagator, free_evolve, free_kernel_at, free_trace
from .trace_solver import (
    AbelWeights,
    TraceSolverError,
    abel_weights,
    contraction_time,
    picard_iterate,
    reconstruct,
    reconstruct_grid,
    solve_trace,
)
