"""Verifier for forall-exists Hoare tuples over a small imperative language."""

from .engine import Engine, EngineConfig, genpp, genpp_first
from .formula import ParametricAssertion, Param, ParamPool
from .lang import Feht, Hints, make_feht
from .parser import ParseError, parse_file, parse_spec, print_spec
from .smt import Solver, SolverConfig
from .verifier import Config, Report, run_suite, verify

__version__ = "0.1.0"

__all__ = [
    "Engine", "EngineConfig", "genpp", "genpp_first", "ParametricAssertion", "Param",
    "ParamPool", "Feht", "Hints", "make_feht", "ParseError", "parse_file", "parse_spec",
    "print_spec", "Solver", "SolverConfig", "Config", "Report", "run_suite", "verify",
]
