"""Branch-and-bound MIP solver with conflict-graph and dual-ray learning."""
__version__ = "0.1.0"

from .config import INF, TOL, Tolerances
from .model import (
    LinearRow, LocalBounds, MipModel, MpsParseError, build_model, check_solution,
    parse_mps, read_mps, write_mps,
)
from .lp import FarkasRay, LpResult, solve_lp, validate_farkas
from .confgraph import ConflictConstraint, analyze_conflict
from .dualproof import ProofConstraint, build_proof_constraint, relax_local_bounds
from .pool import ConflictPool, pool_capacity
from .search import Settings, SolveResult, solve
from .bench import generate_instance, shifted_geomean, summarize

__all__ = [
    "INF", "TOL", "Tolerances", "LinearRow", "LocalBounds", "MipModel", "MpsParseError",
    "build_model", "check_solution", "parse_mps", "read_mps", "write_mps", "FarkasRay",
    "LpResult", "solve_lp", "validate_farkas", "ConflictConstraint", "analyze_conflict",
    "ProofConstraint", "build_proof_constraint", "relax_local_bounds", "ConflictPool",
    "pool_capacity", "Settings", "SolveResult", "solve", "generate_instance",
    "shifted_geomean", "summarize",
]
