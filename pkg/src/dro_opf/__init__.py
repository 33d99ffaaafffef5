"""Contextual distributionally robust chance-constrained DC-OPF toolkit."""

from .lp import Aff, LpModel, LpSolution, SolverConfig, export, solve
from .grid import (Bus, Generator, GridError, Line, NetworkModel, WindFarm,
                   build_network, compute_ptdf, deterministic_rows, load_grid,
                   save_grid)
from .uncertainty import (BudgetBelowMinimum, Context, JointSampleSet,
                          alpha_schedule, budget_from_distances, is_trimming,
                          min_transport_budget, min_transport_budget_aggregate)
from .cvar_block import ChanceRow, emit_cvar_block, extract_chance_rows
from .cost_block import OmegaContext, emit_worstcase_cost_block
from .methods import (DispatchSolution, MethodConfig, solve_drotrimm, solve_drow,
                      solve_method, solve_scena)
from .evaluate import EvaluationReport, RedispatchOutcome, evaluate, redispatch
from .datagen import (BetaParams, fit_beta, generate_joint_samples,
                      generate_test_set, sigma_of_forecast)
from .experiment import ExperimentConfig, run_experiment, summarize

__version__ = "0.1.0"
