"""Relational proof checking and exact indistinguishability games for plWhile.

plWhile is a small probabilistic imperative language whose map entries can
carry a confidentiality label and the distribution they were drawn from. The
package parses ``.plw`` files, interprets programs exactly over rationals,
checks relational proof scripts by exhaustive enumeration at small sizes and
computes optimal distinguishing advantages between oracle modules.
"""

from .dist import Dist, bind, dirac, dist_eq, mass, support, uniform
from .game import experiment_value, init_system, optimal_advantage, transcript_dist
from .parser import ParseError, parse
from .relational import RelGoal, apply_tactic, discharge
from .script import check_script
from .syntax import Context

__version__ = "0.1.0"

__all__ = [
    "Context",
    "Dist",
    "ParseError",
    "RelGoal",
    "apply_tactic",
    "bind",
    "check_script",
    "dirac",
    "discharge",
    "dist_eq",
    "experiment_value",
    "init_system",
    "load",
    "mass",
    "optimal_advantage",
    "parse",
    "support",
    "transcript_dist",
    "uniform",
]


def load(path: str) -> Context:
    """Parse a ``.plw`` file and resolve its declarations."""
    with open(path, encoding="utf-8") as fh:
        return Context(parse(fh.read()))
