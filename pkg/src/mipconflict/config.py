"""Numerical tolerances shared by every module."""
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    feasibility: float = 1e-6
    zero: float = 1e-9
    integrality: float = 1e-6
    # minimal improvement for a propagated bound to be recorded
    deduction: float = 1e-7
    pivot: float = 1e-9
    optimality: float = 1e-9


TOL = Tolerances()

INF = float("inf")
