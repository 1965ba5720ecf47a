import pytest

from epsengine.history import HistoricalSubstitution
from epsengine.language import (
    CanonForm,
    CanonTerm,
    Rank,
    SkolemSymbol,
    Var,
    eq,
    in_set,
    lt,
    not_,
    num,
    or_,
    rank_of,
    succ,
)
from epsengine.process import (
    ProcessInvariantError,
    analyze,
    apply_omega_neg,
    choose,
    compute_plan,
    extract_witness,
    h_step,
    is_solving,
    make_epsilon,
    make_goal,
    make_induction,
    make_inductive_def,
    make_pred,
    run,
)
from epsengine.substitution import (
    Substitution,
    TOP_VAL,
    UNKNOWN,
    num_val,
    serialize,
)
from genexpr import SYM_R1C

HS0 = HistoricalSubstitution.initial()


def hs_of(ctx, entries, p=(), v=None):
    sub = Substitution(entries, omega_sym=ctx.omega_sym if ctx else None)
    return HistoricalSubstitution(sub, p, v or {})


# ---------------------------------------------------------------------------
# analysis of the five shapes

def test_analyze_pred():
    cf = make_pred(num(2))
    pair = analyze(cf, HS0, None)
    assert pair is not None
    e, v = pair
    assert e == CanonTerm(SkolemSymbol(eq(Var(1), succ(Var(0))), 1), (2,))
    assert v == num_val(1)


def test_analyze_pred_satisfied_when_scrutinee_is_one():
    # the default witness 0 already satisfies 1 = S x
    cf = make_pred(num(1))
    assert analyze(cf, HS0, None) is None


def test_analyze_epsilon():
    cf = make_epsilon(num(1), eq(Var(0), num(1)))
    pair = analyze(cf, HS0, None)
    assert pair == (CanonTerm(cf.sym, (1,)), num_val(1))


def test_analyze_epsilon_takes_least_witness():
    # matrix true at 2 and 4; the premise instance is 4, the repair is 2
    phi = or_(eq(Var(0), num(2)), eq(Var(0), num(4)))
    cf = make_epsilon(num(4), phi)
    pair = analyze(cf, HS0, None)
    assert pair == (CanonTerm(cf.sym, (2, 4)), num_val(2))


def test_analyze_induction_least_descent():
    cf = make_induction(num(5), lt(Var(0), num(3)))
    pair = analyze(cf, HS0, None)
    assert pair is not None
    e, v = pair
    assert v == num_val(2)
    assert e.sym == cf.sym


def test_analyze_inductive_def(ctx):
    cf = make_inductive_def(num(0), ctx)
    hs = HistoricalSubstitution.initial(ctx.omega_sym)
    pair = analyze(cf, hs, ctx)
    assert pair == (CanonForm(0), TOP_VAL)


def test_analyze_satisfied_returns_none():
    cf = make_epsilon(num(0), eq(Var(0), num(0)))
    assert analyze(cf, HS0, None) is None


def test_analyze_rejects_zero_value():
    # a contrived state: the conclusion witness already carries a wrong value,
    # making the axiom unsatisfied with scrutinee 1
    cf = make_pred(num(1))
    e = CanonTerm(cf.sym, (1,))
    hs = HistoricalSubstitution(Substitution({e: num_val(2)}))
    with pytest.raises(ProcessInvariantError):
        analyze(cf, hs, None)


# ---------------------------------------------------------------------------
# choice

def test_choose_prefers_least_rank(ctx):
    eps = make_epsilon(num(1), eq(Var(0), num(1)))
    idf = make_inductive_def(num(0), ctx)
    hs = HistoricalSubstitution.initial(ctx.omega_sym)
    assert choose(hs, [idf, eps], ctx) == 1
    plan = compute_plan(hs, [idf, eps], ctx)
    assert plan.rank == Rank.fin(1) and plan.case == "low"


def test_choose_breaks_ties_by_index():
    a = make_epsilon(num(1), eq(Var(0), num(1)))
    b = make_epsilon(num(2), eq(Var(0), num(2)))
    assert choose(HS0, [a, b], None) == 0
    assert choose(HS0, [b, a], None) == 0


def test_is_solving_examples():
    assert is_solving(Substitution.empty(), [])
    cf = make_epsilon(num(1), eq(Var(0), num(1)))
    assert not is_solving(Substitution.empty(), [cf])
    solved = Substitution({CanonTerm(cf.sym, (1,)): num_val(1)})
    assert is_solving(solved, [cf])


# ---------------------------------------------------------------------------
# the four cases

def test_low_case_resets_history(ctx):
    eps = make_epsilon(num(1), eq(Var(0), num(1)))
    hs = hs_of(
        ctx,
        {CanonForm(0): TOP_VAL, ctx.c_n(1): num_val(2)},
        p=(0,),
        v={0: Substitution.empty(ctx.omega_sym)},
    )
    hs2, rec = h_step(hs, [eps], ctx)
    assert rec.case == "low"
    assert hs2.p == () and not hs2.v
    # everything above the step rank is gone
    assert hs2.sub.domain() == {CanonTerm(eps.sym, (1,))}


def test_high_case_keeps_history(ctx):
    # a matrix mentioning the set sits above Omega
    phi = not_(or_(not_(in_set(Var(0))), lt(Var(0), num(1))))
    eps = make_epsilon(num(2), phi)
    assert rank_of(CanonTerm(eps.sym, (1, 2)), ctx.omega_sym).kind == 2
    hs = hs_of(
        ctx,
        {CanonForm(2): TOP_VAL},
        p=(2,),
        v={2: Substitution.empty(ctx.omega_sym)},
    )
    hs2, rec = h_step(hs, [eps], ctx)
    assert rec.case == "high"
    assert hs2.p == (2,) and set(hs2.v) == {2}
    assert CanonForm(2) in hs2.sub


def test_omega_pos_records_displaced_negatives(ctx):
    idf = make_inductive_def(num(0), ctx)
    neg = {ctx.c_n(3): num_val(2)}
    hs = hs_of(ctx, neg)
    hs2, rec = h_step(hs, [idf], ctx)
    assert rec.case == "omega-pos"
    assert hs2.p == (0,)
    assert CanonForm(0) in hs2.sub and ctx.c_n(3) not in hs2.sub
    assert dict(hs2.v[0].items()) == neg


def test_omega_pos_keeps_positive_omega_and_lower(ctx):
    idf = make_inductive_def(num(1), ctx)
    fin = CanonTerm(SYM_R1C, (0,))
    hs = hs_of(
        ctx,
        {
            CanonForm(0): TOP_VAL,
            ctx.c_n(2): UNKNOWN,
            fin: num_val(1),
        },
        p=(0,),
        v={0: Substitution.empty(ctx.omega_sym)},
    )
    hs2, rec = h_step(hs, [idf], ctx)
    assert rec.case == "omega-pos"
    assert hs2.sub.domain() == {CanonForm(0), CanonForm(1), ctx.c_n(2), fin}
    assert hs2.p == (0, 1)


def test_omega_neg_three_member_rollback(ctx):
    empty = Substitution.empty(ctx.omega_sym)
    snap2 = Substitution({ctx.c_n(1): num_val(1)}, omega_sym=ctx.omega_sym)
    snap3 = Substitution({ctx.c_n(4): num_val(2)}, omega_sym=ctx.omega_sym)
    fin = CanonTerm(SYM_R1C, (0,))
    hs = hs_of(
        ctx,
        {
            CanonForm(0): TOP_VAL,
            CanonForm(2): TOP_VAL,
            CanonForm(3): TOP_VAL,
            ctx.c_n(0): UNKNOWN,  # witness entry of a surviving member
            ctx.c_n(3): UNKNOWN,  # witness entry of a dropped member
            fin: num_val(1),
        },
        p=(0, 2, 3),
        v={0: empty, 2: snap2, 3: snap3},
    )
    hs2 = apply_omega_neg(hs, ctx.c_n(2), num_val(1), ctx)
    # longest prefix without member 2, its facts and witnesses, the snapshot
    # recorded when 2 entered, and the new pair
    assert hs2.p == (0,)
    assert set(hs2.v) == {0}
    assert hs2.sub.domain() == {
        fin,
        CanonForm(0),
        ctx.c_n(0),
        ctx.c_n(1),
        ctx.c_n(2),
    }
    assert hs2.sub.raw(ctx.c_n(1)) == num_val(1)  # restored from the record
    assert hs2.sub.raw(ctx.c_n(2)) == num_val(1)  # the new pair


def test_omega_neg_fresh_member_restores_current_negatives(ctx):
    hs = hs_of(
        ctx,
        {
            CanonForm(0): TOP_VAL,
            ctx.c_n(3): num_val(2),
        },
        p=(0,),
        v={0: Substitution.empty(ctx.omega_sym)},
    )
    hs2 = apply_omega_neg(hs, ctx.c_n(9), num_val(1), ctx)
    assert hs2.p == (0,)
    assert hs2.sub.raw(ctx.c_n(3)) == num_val(2)  # negative part survives
    assert hs2.sub.raw(ctx.c_n(9)) == num_val(1)


def test_omega_neg_new_pair_wins_collision(ctx):
    snap = Substitution({ctx.c_n(2): num_val(4)}, omega_sym=ctx.omega_sym)
    hs = hs_of(
        ctx,
        {CanonForm(2): TOP_VAL},
        p=(2,),
        v={2: snap},
    )
    hs2 = apply_omega_neg(hs, ctx.c_n(2), num_val(1), ctx)
    assert hs2.sub.raw(ctx.c_n(2)) == num_val(1)


def test_h_step_refuses_inconsistent_input(ctx):
    eps = make_epsilon(num(1), eq(Var(0), num(1)))
    bad = hs_of(ctx, {ctx.c_n(1): num_val(1), CanonForm(1): TOP_VAL}, p=(1,),
                v={1: Substitution.empty(ctx.omega_sym)})
    with pytest.raises(ProcessInvariantError):
        h_step(bad, [eps], ctx)


def test_h_step_refuses_solving_input():
    with pytest.raises(ProcessInvariantError):
        h_step(HS0, [], None)


# ---------------------------------------------------------------------------
# runs

def test_run_empty_problem():
    out = run([], None)
    assert out.solved and out.steps == []
    assert serialize(out.hs.sub) == "{}"


def test_run_epsilon_one_step():
    cf = make_epsilon(num(1), eq(Var(0), num(1)))
    out = run([cf], None, check=True)
    assert out.solved and len(out.steps) == 1
    goal = make_goal(eq(Var(0), num(1)))
    assert extract_witness(out.hs.sub, goal) == 1


def test_run_two_members(ctx):
    out = run(
        [make_inductive_def(num(0), ctx), make_inductive_def(num(1), ctx)],
        ctx,
        check=True,
    )
    assert out.solved and len(out.steps) == 2
    assert out.hs.p == (0, 1)
    assert dict(out.hs.sub.items()) == {
        CanonForm(0): TOP_VAL,
        CanonForm(1): TOP_VAL,
    }


def test_run_step_limit():
    a = make_epsilon(num(1), eq(Var(0), num(1)))
    b = make_epsilon(num(2), eq(Var(0), num(2)))
    out = run([a, b], None, max_steps=1)
    assert out.status == "step-limit"
    assert len(out.steps) == 1


def test_extract_witness_default_zero():
    goal = make_goal(eq(Var(0), Var(0)))
    assert extract_witness(Substitution.empty(), goal) == 0


def test_extract_witness_two():
    cf = make_epsilon(num(2), eq(Var(0), num(2)))
    out = run([cf], None)
    goal = make_goal(eq(Var(0), num(2)))
    assert extract_witness(out.hs.sub, goal) == 2


def test_extract_witness_requires_satisfaction():
    goal = make_goal(eq(Var(0), num(2)))
    with pytest.raises(ProcessInvariantError):
        extract_witness(Substitution.empty(), goal)


def test_run_is_deterministic(ctx):
    crs = [
        make_inductive_def(num(0), ctx),
        make_epsilon(num(2), eq(Var(0), num(2))),
        make_inductive_def(num(1), ctx),
    ]
    a = run(crs, ctx, check=True)
    b = run(crs, ctx, check=True)
    assert [s.__dict__ for s in a.steps] == [s.__dict__ for s in b.steps]
    assert serialize(a.hs.sub) == serialize(b.hs.sub)


def test_solving_state_is_a_fixpoint(ctx):
    crs = [make_inductive_def(num(0), ctx)]
    out = run(crs, ctx)
    assert out.solved
    again = run(crs, ctx, max_steps=10**6)
    assert len(again.steps) == len(out.steps)
    assert is_solving(out.hs.sub, crs)


def test_deep_minimality_conjunction_stays_tractable():
    # a large predecessor value excludes thousands of smaller witnesses; the
    # balanced conjunction keeps both construction and evaluation in reach
    cf = make_pred(num(3000))
    out = run([cf], None, check=True)
    assert out.solved and len(out.steps) == 1
    e = CanonTerm(cf.sym, (3000,))
    assert out.hs.sub.raw(e) == num_val(2999)
