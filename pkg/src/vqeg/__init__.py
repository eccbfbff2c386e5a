"""Variational quantum extragradient for zero-sum matrix games, simulated classically."""
from .errors import (ConfigError, DegenerateStrategyError, InvalidArgumentError, SolverError,
                     UnsupportedSizeError, VQEGError)
from .exact_solver import ExactSolution, solve_lp, solve_support_enum
from .extragradient import EGConfig, RunResult, RunTrace, eg_step, project_box, projected_residual, run
from .game_core import (EmbeddedGame, GameInstance, GameKind, MixedStrategy, PayoffMatrix, deviation_gains,
                        embed_dominated, extend_strategy, gen_dominant_row, gen_matching_pennies, gen_random,
                        generate, nash_gap, payoff, restrict_strategy)
from .oracle import (EXACT, GradientEstimate, JointParams, Oracle, estimated_payoff, expected_payoff, grad_col,
                     grad_row, saddle_operator)
from .qstate import (AnsatzSpec, StateVector, apply_cz, apply_ry, apply_rz, born_distribution, prepare_ansatz,
                     sample_counts, zero_state)

__version__ = "0.1.0"
