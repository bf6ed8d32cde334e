"""Exact and Monte Carlo tools for positively associated 1-independent percolation.

The lower-bound chain on diagonal boxes (``chain``), its transfer-matrix
solution (``transfer``), the renormalisation map (``renorm``), couplings
and stochastic domination (``couplings``), exhaustive checks on tiny
instances (``oracle``) and the experiment runners behind the command line
(``experiments``, ``cli``).
"""

__version__ = "0.1.0"

from .chain import TransitionRow, run_chain, sample_next, transition_prob
from .couplings import (FiniteDistribution, LevelKernel, check_domination, coupled_step_eta_vs_x,
                        coupled_step_x_vs_kernel, kernel_step, truncated_square_sample)
from .experiments import (McEstimate, TreeMomentReport, branching_experiment, mc_survival,
                          reproduce_tables, tree_moments)
from .geometry import BoxGeometry, GuardError, LevelSubset, box_levels, interval_decompose, successors
from .latent import LatentBits
from .oracle import (JointTable, SmallGraph, branching_bound_formula, brute_force_survival,
                     check_k_independence, check_lemma1_condition_ii, check_positive_association,
                     domination_bound)
from .renorm import RenormTrajectory, iterate, renorm_map
from .transfer import LevelDistribution, dp_column_step, exact_survival

__all__ = [
    "BoxGeometry", "FiniteDistribution", "GuardError", "JointTable", "LatentBits", "LevelDistribution",
    "LevelKernel", "LevelSubset", "McEstimate", "RenormTrajectory", "SmallGraph", "TransitionRow",
    "TreeMomentReport", "box_levels", "branching_bound_formula", "branching_experiment",
    "brute_force_survival", "check_domination", "check_k_independence", "check_lemma1_condition_ii",
    "check_positive_association", "coupled_step_eta_vs_x", "coupled_step_x_vs_kernel",
    "domination_bound", "dp_column_step", "exact_survival", "interval_decompose", "iterate",
    "kernel_step", "mc_survival", "renorm_map", "reproduce_tables", "run_chain", "sample_next",
    "successors", "transition_prob", "tree_moments", "truncated_square_sample",
]
