"""Multi-robot trajectory planning from Büchi automaton specifications.

The pipeline: a partitioned environment becomes a robot-motion Petri net,
which is quotiented by the observation map; the quotient is composed with a
Petri-net encoding of the automaton; integer programs over the composed net
find an accepting run, which is refined back to collision-free cell-level
trajectories.
"""

from .buchi import (BuchiAutomaton, BuchiPn, Clause, Formula, build_buchi_pn,
                    eval_formula, parse_automaton, parse_formula, to_dnf)
from .compose import ComposedPn, active_observations, compose
from .environment import (Environment, Rmpn, build_rmpn, observation_of,
                          parse_environment)
from .errors import (ContractViolation, InfeasibleFiring, InternalInconsistency,
                     OracleOverflow, ParseError, PnplanError)
from .milp import (MilpModel, MilpSolution, build_projection_milp,
                   build_reachability_milp, decode_projection,
                   decode_reachability, export_lp, import_solution, solve)
from .petri import (PetriNet, bfs_reachability, fire, firing_count, is_enabled,
                    marking, reachable_markings, replay_path, token_flow,
                    unit_firing)
from .planner import (InfeasibleReport, Plan, Verdict, closure_states,
                      consume_word, plan, step_states, verify_plan)
from .quotient import Quotient, build_quotient
from .render import render_svg

__version__ = "0.1.0"

__all__ = [
    "BuchiAutomaton", "BuchiPn", "Clause", "ComposedPn", "ContractViolation",
    "Environment", "Formula", "InfeasibleFiring", "InfeasibleReport",
    "InternalInconsistency", "MilpModel", "MilpSolution", "OracleOverflow",
    "ParseError", "PetriNet", "Plan", "PnplanError", "Quotient", "Rmpn",
    "Verdict", "active_observations", "bfs_reachability", "build_buchi_pn",
    "build_projection_milp", "build_quotient", "build_reachability_milp",
    "build_rmpn", "closure_states", "compose", "consume_word",
    "decode_projection", "decode_reachability", "eval_formula", "export_lp",
    "fire", "firing_count", "import_solution", "is_enabled", "marking",
    "observation_of", "parse_automaton", "parse_environment", "parse_formula",
    "plan", "reachable_markings", "render_svg", "replay_path", "solve",
    "step_states", "to_dnf", "token_flow", "unit_firing", "verify_plan",
]
