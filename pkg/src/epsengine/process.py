"""The repair process over a fixed list of critical formulas.

Each critical formula, when unsatisfied, names a canonical expression and a
value whose addition repairs it.  The step keeps everything of lower rank,
discards what sits above, and at rank Omega maintains the membership
history: adding a member records the displaced negative entries, adding a
witness against a member rolls the history back to the state before that
member entered.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .language import (
    Canon,
    CanonForm,
    CanonTerm,
    Expr,
    InductiveContext,
    Numeral,
    OMEGA,
    Rank,
    SkolemSymbol,
    Var,
    and_,
    canon_sexpr,
    eq,
    expand_forall,
    implies,
    in_set,
    instantiate_index,
    is_closed,
    not_,
    num,
    or_,
    rank_of,
    skolem,
    skolemize_exists,
    substitute,
    succ,
    to_sexpr,
)
from .history import HistoricalSubstitution, validate
from .substitution import (
    Substitution,
    TOP_VAL,
    Value,
    digest,
    is_ci,
    is_correct,
    models,
    num_val,
    reduce_term,
    serialize,
)


class ProcessInvariantError(Exception):
    """A property the process is supposed to maintain failed at runtime."""


# ---------------------------------------------------------------------------
# Critical formulas.  Construction expands the quantifier abbreviations once
# and keeps the witness symbols alongside the closed formula; analysis only
# ever reduces the stored argument templates.

@dataclass(frozen=True)
class PredCF:
    s: Expr
    sym: SkolemSymbol
    args: tuple[Expr, ...]
    formula: Expr
    kind: str = "pred"


@dataclass(frozen=True)
class EpsilonCF:
    t: Expr
    phi: Expr  # one-hole template of the matrix
    sym: SkolemSymbol
    args: tuple[Expr, ...]
    formula: Expr
    kind: str = "epsilon"


@dataclass(frozen=True)
class InductionCF:
    t: Expr
    phi: Expr
    sym: SkolemSymbol
    args: tuple[Expr, ...]
    formula: Expr
    kind: str = "induction"


@dataclass(frozen=True)
class InductiveDefCF:
    t: Expr
    formula: Expr
    kind: str = "inddef"


@dataclass(frozen=True)
class ClosureCF:
    phi: Expr  # one-hole template of the target formula
    premise_sym: SkolemSymbol
    premise_args: tuple[Expr, ...]
    a_phi: Expr  # one-hole template: clause condition with phi for the set
    wit_sym: SkolemSymbol
    wit_args: tuple[Expr, ...]  # one-hole templates for the witness arguments
    formula: Expr
    kind: str = "closure"


CriticalFormula = PredCF | EpsilonCF | InductionCF | InductiveDefCF | ClosureCF


def make_pred(s: Expr) -> PredCF:
    if not is_closed(s):
        raise ProcessInvariantError("predecessor axiom needs a closed term")
    matrix = eq(s, succ(Var(0)))
    sym, args = skolemize_exists(matrix)
    conclusion = substitute(matrix, {0: skolem(sym, args)})
    formula = implies(not_(eq(s, num(0))), conclusion)
    return PredCF(s=s, sym=sym, args=args, formula=formula)


def make_epsilon(t: Expr, phi: Expr) -> EpsilonCF:
    sym, args = skolemize_exists(phi)
    conclusion = substitute(phi, {0: skolem(sym, args)})
    premise = substitute(phi, {0: t})
    formula = implies(premise, conclusion)
    if not is_closed(formula):
        raise ProcessInvariantError("epsilon axiom is not closed")
    return EpsilonCF(t=t, phi=phi, sym=sym, args=args, formula=formula)


def make_induction(t: Expr, phi: Expr) -> InductionCF:
    matrix = and_(phi, not_(substitute(phi, {0: succ(Var(0))})))
    sym, args = skolemize_exists(matrix)
    conclusion = substitute(matrix, {0: skolem(sym, args)})
    premise = and_(substitute(phi, {0: num(0)}), not_(substitute(phi, {0: t})))
    formula = implies(premise, conclusion)
    if not is_closed(formula):
        raise ProcessInvariantError("induction axiom is not closed")
    return InductionCF(t=t, phi=phi, sym=sym, args=args, formula=formula)


def make_inductive_def(t: Expr, ctx: InductiveContext) -> InductiveDefCF:
    if not is_closed(t):
        raise ProcessInvariantError(
            "inductive definition axiom needs a closed term"
        )
    formula = implies(substitute(ctx.a_template, {0: t}), in_set(t))
    return InductiveDefCF(t=t, formula=formula)


def make_closure(phi: Expr, ctx: InductiveContext) -> ClosureCF:
    b_phi = ctx.with_phi(phi)  # clause with phi for the set; Var(0)=y, Var(1)=x
    wit_sym, wit_raw = skolemize_exists(not_(b_phi))
    a_phi_raw = substitute(b_phi, {0: skolem(wit_sym, wit_raw)})
    a_phi = substitute(a_phi_raw, {1: Var(0)})
    wit_args = tuple(substitute(a, {1: Var(0)}) for a in wit_raw)
    psi = or_(not_(a_phi), phi)  # membership condition implies the target
    premise_sym, premise_args = skolemize_exists(not_(psi))
    premise = substitute(psi, {0: skolem(premise_sym, premise_args)})
    conclusion = expand_forall(or_(not_(in_set(Var(0))), phi))
    formula = implies(premise, conclusion)
    if not is_closed(formula):
        raise ProcessInvariantError("closure axiom is not closed")
    return ClosureCF(
        phi=phi,
        premise_sym=premise_sym,
        premise_args=premise_args,
        a_phi=a_phi,
        wit_sym=wit_sym,
        wit_args=wit_args,
        formula=formula,
    )


# ---------------------------------------------------------------------------
# Step analysis

CASE_LOW = "low"
CASE_HIGH = "high"
CASE_OMEGA_POS = "omega-pos"
CASE_OMEGA_NEG = "omega-neg"


@dataclass(frozen=True)
class StepPlan:
    cr_index: int
    e: Canon
    v: Value
    rank: Rank
    case: str


def _reduce_numeral(t: Expr, ext) -> int:
    r = reduce_term(t, ext)
    if not isinstance(r, Numeral):
        raise ProcessInvariantError(
            f"term did not reduce to a numeral: {to_sexpr(r)}"
        )
    return r.value


def _reduce_args(args: Sequence[Expr], ext) -> tuple[int, ...]:
    return tuple(_reduce_numeral(a, ext) for a in args)


def _least_witness(
    sym: SkolemSymbol, args: tuple[int, ...], upper: int, ext
) -> int:
    """Least value up to upper whose index instance holds.

    The upper bound itself is guaranteed to qualify when the critical
    formula is unsatisfied; picking the least qualifying value keeps the
    minimality half of the correctness condition true after the step.
    """
    for w in range(upper + 1):
        if models(ext, instantiate_index(sym, w, args)):
            return w
    raise ProcessInvariantError(
        "no witness up to the reduced bound; evaluation is inconsistent"
    )


def _guard_term_value(v: int, what: str) -> Value:
    if v <= 0:
        raise ProcessInvariantError(
            f"{what} produced the value {v}; a repair value for a term "
            "must be a positive numeral"
        )
    return num_val(v)


def analyze(
    cf: CriticalFormula,
    hs: HistoricalSubstitution,
    ctx: InductiveContext | None,
    ext=None,
) -> tuple[Canon, Value] | None:
    """Repair pair for an unsatisfied critical formula, None when satisfied."""
    if ext is None:
        ext = hs.sub.extended()
    if models(ext, cf.formula):
        return None

    if isinstance(cf, PredCF):
        sv = _reduce_numeral(cf.s, ext)
        if sv == 0:
            raise ProcessInvariantError(
                "predecessor axiom unsatisfied with a zero scrutinee"
            )
        e = CanonTerm(cf.sym, _reduce_args(cf.args, ext))
        return e, _guard_term_value(sv - 1, "predecessor analysis")

    if isinstance(cf, EpsilonCF):
        tv = _reduce_numeral(cf.t, ext)
        nargs = _reduce_args(cf.args, ext)
        w = _least_witness(cf.sym, nargs, tv, ext)
        return CanonTerm(cf.sym, nargs), _guard_term_value(w, "epsilon analysis")

    if isinstance(cf, InductionCF):
        tv = _reduce_numeral(cf.t, ext)
        for m in range(tv):
            if models(ext, substitute(cf.phi, {0: num(m)})) and models(
                ext, not_(substitute(cf.phi, {0: num(m + 1)}))
            ):
                e = CanonTerm(cf.sym, _reduce_args(cf.args, ext))
                return e, _guard_term_value(m, "induction analysis")
        raise ProcessInvariantError(
            "induction axiom unsatisfied but no descent point exists"
        )

    if isinstance(cf, InductiveDefCF):
        tv = _reduce_numeral(cf.t, ext)
        return CanonForm(tv), TOP_VAL

    if isinstance(cf, ClosureCF):
        if ctx is None:
            raise ProcessInvariantError("closure axiom without inductive clause")
        target = None
        for n in hs.p:
            if models(ext, not_(substitute(cf.phi, {0: num(n)}))):
                target = n
                break
        if target is None:
            raise ProcessInvariantError(
                "closure axiom unsatisfied but every recorded member "
                "satisfies the target formula"
            )
        if models(ext, not_(substitute(cf.a_phi, {0: num(target)}))):
            # the membership condition itself fails at target: repair the
            # rank-Omega witness term with the value its condition consulted
            wit = CanonTerm(
                cf.wit_sym,
                _reduce_args(
                    [substitute(a, {0: num(target)}) for a in cf.wit_args], ext
                ),
            )
            u = ext.get(wit)
            return ctx.c_n(target), u
        nargs = _reduce_args(cf.premise_args, ext)
        w = _least_witness(cf.premise_sym, nargs, target, ext)
        e = CanonTerm(cf.premise_sym, nargs)
        return e, _guard_term_value(w, "closure analysis")

    raise ProcessInvariantError(f"unknown critical formula {cf!r}")


def is_solving(sub: Substitution, crs: Sequence[CriticalFormula]) -> bool:
    ext = sub.extended()
    return all(models(ext, cf.formula) for cf in crs)


def compute_plan(
    hs: HistoricalSubstitution,
    crs: Sequence[CriticalFormula],
    ctx: InductiveContext | None,
    ext=None,
) -> StepPlan | None:
    """The pending step: least-rank unsatisfied formula, ties by index."""
    if ext is None:
        ext = hs.sub.extended()
    omega = hs.sub.omega_sym
    best: tuple[Rank, int, Canon, Value] | None = None
    for i, cf in enumerate(crs):
        pair = analyze(cf, hs, ctx, ext)
        if pair is None:
            continue
        e, v = pair
        r = rank_of(e, omega)
        if best is None or (r, i) < (best[0], best[1]):
            best = (r, i, e, v)
    if best is None:
        return None
    r, i, e, v = best
    if r.is_omega:
        case = CASE_OMEGA_POS if isinstance(e, CanonForm) else CASE_OMEGA_NEG
    else:
        case = CASE_LOW if r < OMEGA else CASE_HIGH
    return StepPlan(cr_index=i, e=e, v=v, rank=r, case=case)


def choose(
    hs: HistoricalSubstitution,
    crs: Sequence[CriticalFormula],
    ctx: InductiveContext | None,
) -> int:
    plan = compute_plan(hs, crs, ctx)
    if plan is None:
        raise ProcessInvariantError("no unsatisfied critical formula to choose")
    return plan.cr_index


# ---------------------------------------------------------------------------
# The four step cases

def _take_replace(sub: Substitution, keep: str, r: Rank, e: Canon, v: Value):
    kept = sub.filter_rank(keep, r)
    old = kept.raw(e)
    if old is not None and old.kind != "unknown":
        raise ProcessInvariantError(
            f"step would overwrite a committed value at {canon_sexpr(e)}"
        )
    return kept.without(e).with_entry(e, v)


def apply_low(
    hs: HistoricalSubstitution, e: Canon, v: Value, r: Rank
) -> HistoricalSubstitution:
    """Finite rank: keep at most rank r, install the pair, clear the history."""
    return HistoricalSubstitution(_take_replace(hs.sub, "<=", r, e, v))


def apply_high(
    hs: HistoricalSubstitution, e: Canon, v: Value, r: Rank
) -> HistoricalSubstitution:
    """Above Omega: keep at most rank r; the membership history survives."""
    return HistoricalSubstitution(
        _take_replace(hs.sub, "<=", r, e, v), hs.p, dict(hs.v)
    )


def apply_omega_pos(
    hs: HistoricalSubstitution, e: CanonForm
) -> HistoricalSubstitution:
    """Add a membership fact; displaced negative entries go on record."""
    if e.n in hs.p:
        raise ProcessInvariantError(
            f"member {e.n} is already recorded in the history"
        )
    displaced = hs.sub.negative_omega()
    entries = dict(hs.sub.filter_rank("<", OMEGA).items())
    entries.update(hs.sub.positive_omega().items())
    entries[e] = TOP_VAL
    v_map = dict(hs.v)
    v_map[e.n] = Substitution(dict(displaced.items()), omega_sym=hs.sub.omega_sym)
    sub = Substitution(entries, omega_sym=hs.sub.omega_sym)
    return HistoricalSubstitution(sub, hs.p + (e.n,), v_map)


def apply_omega_neg(
    hs: HistoricalSubstitution,
    e: CanonTerm,
    v: Value,
    ctx: InductiveContext,
) -> HistoricalSubstitution:
    """Value a rank-Omega witness term, rolling the history back.

    The history keeps its longest prefix not containing the contested
    member; membership facts and indeterminate witness entries of that
    prefix survive, the negative entries displaced when the member was
    added are restored, and the new pair lands last so it wins any
    collision with a restored entry.
    """
    n = ctx.member_of(e)
    if n is not None and n in hs.p:
        cut = hs.p.index(n)
        p_new = hs.p[:cut]
        restored = hs.v[n]
    else:
        p_new = hs.p
        restored = hs.sub.negative_omega()
    keep = set(p_new)

    entries = dict(hs.sub.filter_rank("<", OMEGA).items())
    for d, u in hs.sub.items():
        if not hs.sub.rank_of(d).is_omega:
            continue
        if isinstance(d, CanonForm):
            if u.kind == "top" and d.n in keep:
                entries[d] = u
        elif u.kind == "unknown":
            m = ctx.member_of(d)
            if m is not None and m in keep:
                entries[d] = u
    entries.update(restored.items())
    entries[e] = v
    sub = Substitution(entries, omega_sym=hs.sub.omega_sym)
    return HistoricalSubstitution(sub, p_new, {m: hs.v[m] for m in p_new})


def apply_plan(
    hs: HistoricalSubstitution, plan: StepPlan, ctx: InductiveContext | None
) -> HistoricalSubstitution:
    if plan.case == CASE_LOW:
        return apply_low(hs, plan.e, plan.v, plan.rank)
    if plan.case == CASE_HIGH:
        return apply_high(hs, plan.e, plan.v, plan.rank)
    if plan.case == CASE_OMEGA_POS:
        assert isinstance(plan.e, CanonForm)
        return apply_omega_pos(hs, plan.e)
    if ctx is None:
        raise ProcessInvariantError("rank-Omega step without inductive clause")
    assert isinstance(plan.e, CanonTerm)
    return apply_omega_neg(hs, plan.e, plan.v, ctx)


# ---------------------------------------------------------------------------
# Step records and the driver

@dataclass(frozen=True)
class HStep:
    index: int
    cr_index: int
    case: str
    e: str
    v: str
    rank: str
    before: str
    after: str
    added: tuple[str, ...]
    removed: tuple[str, ...]
    p_after: tuple[int, ...]
    v_added: dict[int, str]
    v_removed: tuple[int, ...]
    solving: bool


def _entry_strs(sub: Substitution) -> dict[str, str]:
    return {canon_sexpr(e): str(u) for e, u in sub.items()}


def _diff(before: Substitution, after: Substitution):
    b = _entry_strs(before)
    a = _entry_strs(after)
    added = sorted(f"({k} {v})" for k, v in a.items() if b.get(k) != v)
    removed = sorted(f"({k} {v})" for k, v in b.items() if a.get(k) != v)
    return tuple(added), tuple(removed)


def h_step(
    hs: HistoricalSubstitution,
    crs: Sequence[CriticalFormula],
    ctx: InductiveContext | None,
    step_index: int = 0,
) -> tuple[HistoricalSubstitution, HStep]:
    """One step of the process; refuses computationally inconsistent input."""
    if is_ci(hs.sub, ctx):
        raise ProcessInvariantError(
            "refusing to step a computationally inconsistent substitution"
        )
    plan = compute_plan(hs, crs, ctx)
    if plan is None:
        raise ProcessInvariantError("substitution is already solving")
    hs2 = apply_plan(hs, plan, ctx)
    added, removed = _diff(hs.sub, hs2.sub)
    v_added = {
        m: serialize(hs2.v[m])
        for m in hs2.v
        if m not in hs.v or serialize(hs.v[m]) != serialize(hs2.v[m])
    }
    v_removed = tuple(sorted(m for m in hs.v if m not in hs2.v))
    record = HStep(
        index=step_index,
        cr_index=plan.cr_index,
        case=plan.case,
        e=canon_sexpr(plan.e),
        v=str(plan.v),
        rank=str(plan.rank),
        before=digest(hs.sub),
        after=digest(hs2.sub),
        added=added,
        removed=removed,
        p_after=hs2.p,
        v_added=v_added,
        v_removed=v_removed,
        solving=is_solving(hs2.sub, crs),
    )
    return hs2, record


@dataclass
class Outcome:
    status: str  # 'solved' | 'step-limit' | 'internal-error'
    hs: HistoricalSubstitution
    steps: list[HStep]
    diagnostics: str | None = None

    @property
    def solved(self) -> bool:
        return self.status == "solved"


def run(
    crs: Sequence[CriticalFormula],
    ctx: InductiveContext | None,
    max_steps: int = 10**6,
    check: bool = False,
) -> Outcome:
    """Iterate the step from the empty substitution until solving.

    With check set, every produced state is verified against the invariants
    the process is supposed to preserve: correctness of each entry and
    validity (including admissibility) of the history.
    """
    omega = ctx.omega_sym if ctx is not None else None
    hs = HistoricalSubstitution.initial(omega)
    steps: list[HStep] = []
    while True:
        if is_solving(hs.sub, crs):
            return Outcome("solved", hs, steps)
        if len(steps) >= max_steps:
            return Outcome(
                "step-limit", hs, steps, f"no solution within {max_steps} steps"
            )
        try:
            hs, record = h_step(hs, crs, ctx, step_index=len(steps))
        except ProcessInvariantError as err:
            return Outcome("internal-error", hs, steps, str(err))
        except RecursionError:
            return Outcome(
                "internal-error", hs, steps, "formula nesting too deep"
            )
        steps.append(record)
        if check:
            if not is_correct(hs.sub, ctx):
                return Outcome(
                    "internal-error",
                    hs,
                    steps,
                    f"step {record.index}: substitution is not correct",
                )
            issues = validate(hs, ctx)
            if issues:
                return Outcome(
                    "internal-error",
                    hs,
                    steps,
                    f"step {record.index}: {'; '.join(issues)}",
                )


# ---------------------------------------------------------------------------
# Witness extraction

@dataclass(frozen=True)
class Goal:
    phi: Expr  # one-hole template
    sym: SkolemSymbol
    args: tuple[Expr, ...]
    text: str


def make_goal(phi: Expr, text: str = "") -> Goal:
    sym, args = skolemize_exists(phi)
    return Goal(phi=phi, sym=sym, args=args, text=text)


def extract_witness(sub: Substitution, goal: Goal) -> int:
    """Numeral witnessing a solved existential goal."""
    ext = sub.extended()
    expanded = substitute(goal.phi, {0: skolem(goal.sym, goal.args)})
    if not models(ext, expanded):
        raise ProcessInvariantError(
            "goal is not satisfied by the final substitution"
        )
    return _reduce_numeral(skolem(goal.sym, goal.args), ext)
