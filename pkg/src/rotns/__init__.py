"""Pseudo-spectral laboratory for the rotating Navier-Stokes equations on the
periodic box, with ledgers for chi-space (Lei-Lin type) estimates."""

__version__ = "0.1.0"

from .spectral import (  # noqa: E402
    Grid,
    NormReport,
    SpectralField,
    chi_norm,
    dealias,
    grad_inf,
    lemma1_check,
    norm_report,
    project_leray,
    sobolev_norms,
)
from .dynamics import (  # noqa: E402
    BlowUpError,
    RhsTerms,
    coriolis_neutrality_residual,
    coriolis_rhs,
    full_rhs,
    nonlinear_rhs,
    recover_pressure,
)
from .timestepper import SolverConfig, Trajectory, cfl_suggest, integrate, step  # noqa: E402
from .mild import contraction_horizon, empirical_horizon, heat_propagate, picard_solve  # noqa: E402
from .initial_data import (  # noqa: E402
    choose_R0,
    random_solenoidal,
    scale_to_chi,
    smallness_threshold,
    split_lowhigh,
    taylor_green,
    truncate_R,
)
from .diagnostics import (  # noqa: E402
    apriori_ledger,
    decay_report,
    energy_balance,
    heat_l1_identity,
    hs_gronwall,
    stability_gap,
)
