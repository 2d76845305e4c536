"""Truthful budget-feasible procurement mechanisms for submodular valuations."""

from .indep import Cardinality, Family, Matching, NoConstraint, Partition, is_independent, rank_quotient
from .mechanisms import (
    MECHANISMS,
    gensm_constrained,
    gensm_main,
    gensm_online,
    monsm_constrained,
    payments_by_bid_search,
    run_mechanism,
    sample_then_greedy,
    simultaneous_greedy,
    sks_run,
)
from .model import Instance, MechanismOutcome, RandomTape, draw_tape, load_instance, preprocess, save_instance
from .valuation import Additive, Coverage, Cut, ValueOracle, Xos, check_submodular, generate_xos_hard_pair

__version__ = "0.1.0"
