"""RLS and the (1+1) EA for the chance-constrained knapsack problem with
correlated uniform weights."""

from cckp.model import FitnessValue, ProblemInstance, Solution, fitness, fitness_compare

__version__ = "0.1.0"

__all__ = ["FitnessValue", "ProblemInstance", "Solution", "fitness", "fitness_compare"]
