"""Ground states of Kirchhoff problems -(a + b|u|^2) Delta u = f(x, u) via the Nehari manifold."""
from .energy import EnergyContext, phi, phi_dir, phi_grad
from .errors import (DegenerateDirectionError, DomainError, FiberingFailureError,
                     InvalidConfigurationError, KirchhoffError, MeshMismatchError,
                     SolverFailureError)
from .mesh import Mesh, build_mesh, h1_inner, h1_norm, integrate, lp_norm, poisson_solve, stiffness_apply
from .nehari import FiberingResult, fibering_deriv, project_to_nehari, sphere_inverse
from .nonlinearity import (HypothesisReport, NonlinearitySpec, ar_ratio, builtin_log_power,
                           builtin_pure_power, check_hypotheses, from_name)
from .oracle import OracleResult, closed_form_tu_check, jacobian_apply, newton_solve, pde_residual
from .solver import (IterationTrace, SolveConfig, SolveResult, multistart_pairs, ps_diagnostic,
                     psi, psi_tangent_grad, solve_ground_state)

__version__ = "0.1.0"
