"""Joint learning of sparse graphs and precision matrices from stationary signals."""

from .graph_domain import ContractError, Gso, PglConfig, SampleCovariance, commutator_residual, validate_gso
from .solver import SolveResult, graphical_lasso, gsr_solve, learn_graph, pgl_solve

__all__ = [
    "ContractError",
    "Gso",
    "PglConfig",
    "SampleCovariance",
    "SolveResult",
    "commutator_residual",
    "graphical_lasso",
    "gsr_solve",
    "learn_graph",
    "pgl_solve",
    "validate_gso",
]
__version__ = "0.1.0"
