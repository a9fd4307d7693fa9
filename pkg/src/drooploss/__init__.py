"""Transient power losses in droop-controlled inverter microgrids as H2 norms."""

__version__ = "0.1.0"

from .coupled import (  # noqa: E402
    GammaCurve,
    coupled_coefficient_complete,
    fit_alpha_exponent,
    gamma,
    gamma_curve,
    gamma_series_complete,
)
from .dynamics import (  # noqa: E402
    InverterParams,
    StateSpaceModel,
    assemble_coupled,
    assemble_decoupled,
    assemble_full,
    instantaneous_loss,
)
from .h2 import (  # noqa: E402
    BoundsReport,
    H2Report,
    complete_graph_asymptote,
    complete_graph_bounds,
    h2_norm_analytic,
    h2_norm_gramian,
    h2_norm_modal,
    modal_gramian,
    path_graph_bound,
    solve_lyapunov,
)
from .network import (  # noqa: E402
    NetworkGraph,
    build_laplacian,
    complete_graph,
    is_connected,
    kron_reduce,
    laplacian_eigenvalues,
    linearized_injections,
    path_graph,
    power_injections,
    random_connected_graph,
)
from .sim import SimConfig, Trajectory, empirical_h2, impulse_energy, simulate  # noqa: E402
from .spectral import SpectrumReport, analytic_spectrum, certify_stability, numeric_spectrum  # noqa: E402
