"""Fractional calculus on time scales and a Kirchhoff fractional p-Laplacian solver."""

from .delta import GridFunction, QuadraturePolicy, delta_derivative, delta_integral, lp_norm, sup_norm
from .errors import (
    DomainError,
    EndpointNotFound,
    LineSearchFailure,
    NotANodeError,
    NotInScaleError,
    OverlapError,
    ResolutionError,
    SchemaError,
    SingularKernelError,
    SolverError,
    TsfracError,
)
from .fractional import KernelPolicy, OpSide, caputo_derivative, frac_integral, operator_matrix, rl_derivative
from .sobolev import SobolevParams, embedding_bounds, sobolev_norm, verify_embeddings
from .solver import BvpProblem, Power, SolverConfig, WeightedPower, assemble, energy, gradient, minimize, mountain_pass, multistart
from .timescale import Mesh, TimeScale, build_mesh, build_time_scale, classify, graininess, preset, rho, sigma

__version__ = "0.1.0"
