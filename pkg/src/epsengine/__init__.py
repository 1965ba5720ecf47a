"""Symbolic engine for witness substitutions over arithmetic with an
inductively defined set.

The package represents a quantifier-free Skolemized language, evaluates
terms and formulas under finite substitutions, repairs unsatisfied
critical formulas by the least-rank rule until all are satisfied, and
extracts numeric witnesses for existential goals.
"""

from .language import (
    CanonForm,
    CanonTerm,
    Expr,
    InductiveContext,
    OMEGA,
    Rank,
    SkolemSymbol,
    Var,
    abstract_closed_terms,
    expand_exists,
    expand_forall,
    num,
    rank_of,
    rank_of_symbol,
    simple_rank,
    to_sexpr,
)
from .substitution import (
    Substitution,
    TOP_VAL,
    UNKNOWN,
    Value,
    correctness_formula,
    decides,
    is_cc,
    is_ci,
    is_computing,
    is_correct,
    models,
    num_val,
    reduce_formula,
    reduce_term,
    serialize,
)
from .history import HistoricalSubstitution, is_admissible, validate
from .process import (
    Goal,
    HStep,
    Outcome,
    ProcessInvariantError,
    analyze,
    choose,
    extract_witness,
    h_step,
    is_solving,
    make_closure,
    make_epsilon,
    make_goal,
    make_induction,
    make_inductive_def,
    make_pred,
    run,
)
from .problems import ParseError, Problem, parse_problem, serialize_problem, shape_check
from .sequents import MeasureValue, Sequent, classify_axiom, h_step_applies, nu

__version__ = "0.1.0"
