"""Exact solver in the permutation-symmetric Liouville space."""
from .basis import CountsBasis, basis_size, enumerate_basis
from .det import (DetSolver, SymmetricStateDet, evolve_det, linewidth_regression,
                  steady_state_det)
from .mc import JumpChannel, MCResult, SymmetricStateMC, run_mc

__all__ = [
    "CountsBasis", "basis_size", "enumerate_basis", "DetSolver", "SymmetricStateDet",
    "evolve_det", "steady_state_det", "linewidth_regression", "JumpChannel", "MCResult",
    "SymmetricStateMC", "run_mc",
]
