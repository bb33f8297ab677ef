"""Bounds on Hardy and Cabello nonlocal success probabilities under IC, ML and LO."""

from .boxes import JointBox, NSParams, cabello_box, check_box, hardy_box
from .optimizer import ConstrainedProblem, SolverConfig, maximize
from .scenarios import CASES, Argument, LRSelection, Principle, build_problem, run_suite, solve_case

__all__ = [
    "JointBox", "NSParams", "hardy_box", "cabello_box", "check_box",
    "ConstrainedProblem", "SolverConfig", "maximize",
    "CASES", "Argument", "Principle", "LRSelection", "build_problem", "solve_case", "run_suite",
]
__version__ = "0.1.0"
