"""Saddle-point optimization under delayed gradient oracles.

Gradient descent-ascent (DGDA) and extra-gradient (DEG) driven by stale
gradients, analytically tractable test problems, bounded delay schedules,
executable convergence-bound checks, and a deterministic experiment harness.
"""

from .algorithms import (AlgorithmState, StepRecord, Trajectory,
                         averaged_iterates, deg_step, dgda_step, eg_reference,
                         ergodic_average, gda_reference, run_deg, run_dgda,
                         stepsize_deg_cc, stepsize_dgda_cc, stepsize_dgda_scsc)
from .delays import DelaySchedule, IterateHistory, next_delay, stale_lookup
from .harness import (ConfigError, RunConfig, RunRecord, canned_config,
                      emit_csv, emit_json, parse_config, reproduce_fig1, run,
                      sweep)
from .metrics import (BoundReport, bound_B, check_deg_delay_errors,
                      check_deg_gap, check_delayed_recursion, check_dgda_delay_errors,
                      check_dgda_gap, check_iterate_bound, check_linear_rate,
                      check_scsc_delay_errors, check_scsc_recursion,
                      distance_to_saddle, restriction_for_run)
from .plotting import emit_svg, save_png
from .problems import (BilinearProblem, DomainSet, QuadraticCC, QuadraticSCSC,
                       RestrictionBall, SaddleProblem, duality_gap,
                       gap_oracle_bruteforce, largest_singular_value, phi,
                       project)

__version__ = "0.1.0"
