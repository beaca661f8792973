"""Variational solver and verification suite for the Dirichlet N-Laplacian
with critical exponential nonlinearity on bounded domains."""
from .mesh import DomainSpec, Mesh, MeshError, generate_mesh, graded_disc_mesh, mesh_volume
from .functional import (
    ExponentialRangeError,
    FeFunction,
    FunctionalParams,
    energy_Phi,
    grad_Phi,
    nonlinearity_f,
    primitive_F,
    psi,
    radial_project,
    tm_functional,
)
from .eigen import EigenEstimate, eigen_sequence, first_eigenpair, gap_threshold
from .moser import MoserSpec, cutoff_asymptotics_report, cutoff_eta, moser_function, moser_level_certificate
from .solver import (
    LinkingError,
    bifurcation_sweep,
    build_linking_sets,
    minimax_mountain_pass,
    newton_refine,
    ps_threshold,
)
from .checks import (
    InequalityReport,
    check_energy_bound_X,
    check_F_lower_bounds,
    check_F_upper_bounds,
    check_lemma33,
)

__version__ = "0.1.0"
