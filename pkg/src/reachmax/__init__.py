"""Choose which states of an absorbing Markov chain should link to a target.

The objective is the probability that a walk started from ``pi`` is
absorbed at the target; it is monotone and submodular in the selection, so
greedy selection is near optimal.
"""

from .chain import ChainSpec, ValidationReport, assemble, validate_chain
from .errors import (ChainValidationError, CombinatorialLimit, DuplicateEdge, InvalidGraph,
                     LazyBoundViolation, NonConvergence, ParseError, ReachmaxError, SingularMatrix)
from .greedy import GreedyTrace, lazy_greedy, simple_greedy
from .objective import ReachResult, ReachSolver, eval_reach, marginal_gain, one_step_value
from .tags import FoldedChain, TagGraph, build_bipartite, fold, fold_equivalence_check

__version__ = "0.1.0"

__all__ = [
    "ChainSpec", "ValidationReport", "assemble", "validate_chain",
    "ChainValidationError", "CombinatorialLimit", "DuplicateEdge", "InvalidGraph",
    "LazyBoundViolation", "NonConvergence", "ParseError", "ReachmaxError", "SingularMatrix",
    "GreedyTrace", "lazy_greedy", "simple_greedy",
    "ReachResult", "ReachSolver", "eval_reach", "marginal_gain", "one_step_value",
    "FoldedChain", "TagGraph", "build_bipartite", "fold", "fold_equivalence_check",
]
