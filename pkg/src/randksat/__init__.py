"""Sampling satisfying assignments of random k-CNF formulas: block Glauber
dynamics on marked variables with exact component counting."""
from .classifier import ClassifierParams, Classification, classify
from .components import count_formula, decompose, sample_marginals, simplify
from .formula import Formula, generate_random, read_dimacs, write_dimacs
from .glauber import GlauberChain, GlauberConfig, RunReport
from .marking import Marking, MarkingParams, compute_marking, verify_marking

__version__ = "0.1.0"
