"""Problem files: the s-expression grammar and its validation.

A problem file is a sequence of top-level forms:

    (clause (y x X) BODY)          inductive clause B(y, x, X), at most one
    (option NAME VALUE)            run settings, e.g. (option max-steps 100)
    (crit pred TERM)               not TERM=0 -> exists x TERM=Sx
    (crit eps TERM (exists (x) F)) F[x:=TERM] -> exists x F
    (crit ind (x) F TERM)          F[0] and not F[TERM] -> exists x (F and not F[Sx])
    (crit inddef TERM)             A(TERM, I) -> TERM in I
    (crit closure (x) F)           forall x (A(x,F) -> F) -> forall x (x in I -> F)
    (crit formula F)               untagged; recognized against the five shapes
    (goal (exists (x) F) (candidates TERM*)?)

Terms are numerals, bound variables, (s t), (+ t t), (* t t); formulas are
(= t t), (< t t), (in t I), true, false, (not f), (and f f ...),
(or f f ...), (-> f f), (exists (x) f), (forall (x) f).  Inside the clause
body the declared set name replaces I and quantifiers are not allowed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .language import (
    BOTTOM,
    Expr,
    InductiveContext,
    InSet,
    And,
    LanguageError,
    Not,
    Or,
    TOP,
    Var,
    eq,
    fn,
    free_vars,
    in_set,
    is_closed,
    lt,
    not_,
    num,
    or_,
    and_,
    substitute,
    to_sexpr,
)
from .process import (
    ClosureCF,
    CriticalFormula,
    EpsilonCF,
    Goal,
    InductionCF,
    InductiveDefCF,
    PredCF,
    ProcessInvariantError,
    make_closure,
    make_epsilon,
    make_goal,
    make_induction,
    make_inductive_def,
    make_pred,
)

RESERVED = {
    "s", "+", "*", "=", "<", "in", "not", "and", "or", "->",
    "exists", "forall", "true", "false", "I",
    "clause", "crit", "goal", "option", "candidates",
    "pred", "eps", "ind", "inddef", "closure", "formula",
}


class ParseError(Exception):
    def __init__(self, message: str, pos: tuple[int, int] | None = None):
        if pos is not None:
            message = f"{pos[0]}:{pos[1]}: {message}"
        super().__init__(message)


# ---------------------------------------------------------------------------
# Reader

class _Tok:
    __slots__ = ("text", "line", "col")

    def __init__(self, text: str, line: int, col: int):
        self.text = text
        self.line = line
        self.col = col


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
        elif ch in " \t\r":
            col += 1
            i += 1
        elif ch == ";":
            while i < len(text) and text[i] != "\n":
                i += 1
        elif ch in "()":
            toks.append(_Tok(ch, line, col))
            col += 1
            i += 1
        else:
            j = i
            while j < len(text) and text[j] not in " \t\r\n();":
                j += 1
            toks.append(_Tok(text[i:j], line, col))
            col += j - i
            i = j
    return toks


def _read(toks: list[_Tok], at: int):
    if at >= len(toks):
        raise ParseError("unexpected end of input")
    tok = toks[at]
    if tok.text == "(":
        items = []
        at += 1
        while True:
            if at >= len(toks):
                raise ParseError("unclosed parenthesis", (tok.line, tok.col))
            if toks[at].text == ")":
                return items, at + 1
            item, at = _read(toks, at)
            items.append(item)
    if tok.text == ")":
        raise ParseError("unexpected ')'", (tok.line, tok.col))
    text = tok.text
    if text.lstrip("-").isdigit():
        value = int(text)
        if value < 0:
            raise ParseError("negative numeral", (tok.line, tok.col))
        return value, at + 1
    return _Sym(text, tok.line, tok.col), at + 1


class _Sym(str):
    def __new__(cls, text: str, line: int, col: int):
        obj = super().__new__(cls, text)
        obj.line = line
        obj.col = col
        return obj


def read_forms(text: str) -> list:
    toks = _tokenize(text)
    forms = []
    at = 0
    while at < len(toks):
        form, at = _read(toks, at)
        forms.append(form)
    return forms


def _pos(sx) -> tuple[int, int] | None:
    if isinstance(sx, _Sym):
        return (sx.line, sx.col)
    if isinstance(sx, list):
        for item in sx:
            p = _pos(item)
            if p:
                return p
    return None


# ---------------------------------------------------------------------------
# Core parsing

class _Parser:
    def __init__(self, set_names: Sequence[str] = ("I",), quantifiers: bool = True):
        self.set_names = set(set_names)
        self.quantifiers = quantifiers
        self._counter = 0

    def fresh(self) -> int:
        self._counter += 1
        return self._counter

    def term(self, sx, env: dict[str, int]) -> Expr:
        if isinstance(sx, int):
            return num(sx)
        if isinstance(sx, str):
            if sx in env:
                return Var(env[sx])
            raise ParseError(f"unbound variable {sx!r}", _pos(sx))
        if isinstance(sx, list) and sx and sx[0] in ("s", "+", "*"):
            want = 1 if sx[0] == "s" else 2
            if len(sx) != want + 1:
                raise ParseError(f"{sx[0]} takes {want} arguments", _pos(sx))
            return fn(str(sx[0]), *[self.term(a, env) for a in sx[1:]])
        raise ParseError(f"expected a term, got {sx!r}", _pos(sx))

    def formula(self, sx, env: dict[str, int]) -> Expr:
        if sx == "true":
            return TOP
        if sx == "false":
            return BOTTOM
        if not isinstance(sx, list) or not sx:
            raise ParseError(f"expected a formula, got {sx!r}", _pos(sx))
        head = sx[0]
        if head in ("=", "<"):
            if len(sx) != 3:
                raise ParseError(f"{head} takes 2 arguments", _pos(sx))
            a, b = self.term(sx[1], env), self.term(sx[2], env)
            return eq(a, b) if head == "=" else lt(a, b)
        if head == "in":
            if len(sx) != 3 or not isinstance(sx[2], str):
                raise ParseError("membership is (in TERM SET)", _pos(sx))
            if str(sx[2]) not in self.set_names:
                raise ParseError(
                    f"unknown set {str(sx[2])!r} here", _pos(sx)
                )
            return in_set(self.term(sx[1], env))
        if head == "not":
            if len(sx) != 2:
                raise ParseError("not takes 1 argument", _pos(sx))
            return not_(self.formula(sx[1], env))
        if head in ("and", "or"):
            if len(sx) < 3:
                raise ParseError(f"{head} takes at least 2 arguments", _pos(sx))
            parts = [self.formula(a, env) for a in sx[1:]]
            out = parts[-1]
            op = and_ if head == "and" else or_
            for p in reversed(parts[:-1]):
                out = op(p, out)
            return out
        if head == "->":
            if len(sx) != 3:
                raise ParseError("-> takes 2 arguments", _pos(sx))
            return or_(not_(self.formula(sx[1], env)), self.formula(sx[2], env))
        if head in ("exists", "forall"):
            if not self.quantifiers:
                raise ParseError("quantifiers are not allowed here", _pos(sx))
            matrix = self.binder_matrix(sx, env)
            from .language import expand_exists, expand_forall

            return (
                expand_exists(matrix) if head == "exists" else expand_forall(matrix)
            )
        raise ParseError(f"expected a formula, got {sx!r}", _pos(sx))

    def binder_matrix(self, sx, env: dict[str, int]) -> Expr:
        """Parse (Q (x) BODY); the bound variable becomes the hole Var(0)."""
        if len(sx) != 3 or not isinstance(sx[1], list) or len(sx[1]) != 1:
            raise ParseError("binders are ((Q (x) BODY))", _pos(sx))
        name = sx[1][0]
        if not isinstance(name, str) or name in RESERVED:
            raise ParseError(f"bad variable name {name!r}", _pos(sx))
        k = self.fresh()
        body = self.formula(sx[2], {**env, str(name): k})
        return substitute(body, {k: Var(0)})


def _check_positive(e: Expr, positive: bool = True) -> bool:
    if isinstance(e, InSet):
        return positive
    if isinstance(e, Not):
        return _check_positive(e.body, not positive)
    if isinstance(e, And):
        return _check_positive(e.left, positive) and _check_positive(
            e.right, positive
        )
    if isinstance(e, Or):
        return _check_positive(e.left, positive) and _check_positive(
            e.right, positive
        )
    return True


# ---------------------------------------------------------------------------
# Problems

@dataclass(frozen=True)
class GoalSpec:
    goal: Goal
    candidates: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class Problem:
    clause: Expr | None
    set_name: str
    crits: tuple[CriticalFormula, ...]
    goals: tuple[GoalSpec, ...]
    options: tuple[tuple[str, int], ...] = ()
    explicit_crits: int = 0  # prefix of crits written out; the rest came from goals
    ctx: InductiveContext | None = field(default=None, compare=False)

    @property
    def omega_sym(self):
        return self.ctx.omega_sym if self.ctx is not None else None

    def option(self, name: str, default: int) -> int:
        for k, v in self.options:
            if k == name:
                return v
        return default


def parse_problem(text: str) -> Problem:
    forms = read_forms(text)

    clause: Expr | None = None
    set_name = "X"
    ctx: InductiveContext | None = None
    options: list[tuple[str, int]] = []
    crit_forms = []
    goal_forms = []

    for form in forms:
        if not isinstance(form, list) or not form:
            raise ParseError(f"unexpected top-level form {form!r}", _pos(form))
        head = form[0]
        if head == "clause":
            if clause is not None:
                raise ParseError("only one inductive clause is allowed", _pos(form))
            if (
                len(form) != 3
                or not isinstance(form[1], list)
                or len(form[1]) != 3
                or not all(isinstance(v, str) for v in form[1])
            ):
                raise ParseError("clause is (clause (y x X) BODY)", _pos(form))
            yname, xname, sname = (str(v) for v in form[1])
            if len({yname, xname, sname}) != 3:
                raise ParseError("clause names must be distinct", _pos(form))
            if sname in RESERVED or yname in RESERVED or xname in RESERVED:
                raise ParseError("clause names must not be reserved", _pos(form))
            parser = _Parser(set_names=(sname,), quantifiers=False)
            ky, kx = parser.fresh(), parser.fresh()
            body = parser.formula(form[2], {yname: ky, xname: kx})
            clause = substitute(body, {ky: Var(0), kx: Var(1)})
            if not _check_positive(clause):
                raise ParseError(
                    "the set must occur only positively in the clause", _pos(form)
                )
            set_name = sname
            try:
                ctx = InductiveContext(clause)
            except LanguageError as err:
                raise ParseError(str(err), _pos(form)) from err
        elif head == "option":
            if len(form) != 3 or not isinstance(form[1], str):
                raise ParseError("option is (option NAME VALUE)", _pos(form))
            if form[1] != "max-steps" or not isinstance(form[2], int):
                raise ParseError(f"unknown option {form[1]!r}", _pos(form))
            options.append((str(form[1]), form[2]))
        elif head == "crit":
            crit_forms.append(form)
        elif head == "goal":
            goal_forms.append(form)
        else:
            raise ParseError(f"unknown form {head!r}", _pos(form))

    crits: list[CriticalFormula] = []
    for form in crit_forms:
        crits.append(_parse_crit(form, ctx))
    explicit = len(crits)
    goals: list[GoalSpec] = []
    for form in goal_forms:
        spec = _parse_goal(form)
        goals.append(spec)
        for cand in spec.candidates:
            crits.append(make_epsilon(cand, spec.goal.phi))

    return Problem(
        clause=clause,
        set_name=set_name,
        crits=tuple(crits),
        goals=tuple(goals),
        options=tuple(options),
        explicit_crits=explicit,
        ctx=ctx,
    )


def _need_ctx(ctx: InductiveContext | None, form) -> InductiveContext:
    if ctx is None:
        raise ParseError(
            "this critical formula needs an inductive clause", _pos(form)
        )
    return ctx


def _parse_crit(form, ctx: InductiveContext | None) -> CriticalFormula:
    if len(form) < 2 or not isinstance(form[1], str):
        raise ParseError("crit needs a kind tag", _pos(form))
    kind = str(form[1])
    parser = _Parser()
    try:
        if kind == "pred":
            if len(form) != 3:
                raise ParseError("(crit pred TERM)", _pos(form))
            return make_pred(parser.term(form[2], {}))
        if kind == "eps":
            if len(form) != 4:
                raise ParseError("(crit eps TERM (exists (x) F))", _pos(form))
            t = parser.term(form[2], {})
            ex = form[3]
            if not (isinstance(ex, list) and ex and ex[0] == "exists"):
                raise ParseError("third part must be (exists (x) F)", _pos(form))
            phi = parser.binder_matrix(ex, {})
            return make_epsilon(t, phi)
        if kind == "ind":
            if len(form) != 5:
                raise ParseError("(crit ind (x) F TERM)", _pos(form))
            phi = parser.binder_matrix(["ind", form[2], form[3]], {})
            t = parser.term(form[4], {})
            return make_induction(t, phi)
        if kind == "inddef":
            if len(form) != 3:
                raise ParseError("(crit inddef TERM)", _pos(form))
            return make_inductive_def(
                parser.term(form[2], {}), _need_ctx(ctx, form)
            )
        if kind == "closure":
            if len(form) != 4:
                raise ParseError("(crit closure (x) F)", _pos(form))
            phi = parser.binder_matrix(["closure", form[2], form[3]], {})
            return make_closure(phi, _need_ctx(ctx, form))
        if kind == "formula":
            if len(form) != 3:
                raise ParseError("(crit formula F)", _pos(form))
            return shape_check(form[2], ctx)
    except ProcessInvariantError as err:
        raise ParseError(str(err), _pos(form)) from err
    except LanguageError as err:
        raise ParseError(str(err), _pos(form)) from err
    raise ParseError(f"unknown critical formula kind {kind!r}", _pos(form))


def _parse_goal(form) -> GoalSpec:
    parser = _Parser(quantifiers=False)
    if len(form) not in (2, 3):
        raise ParseError("(goal (exists (x) F) (candidates TERM*)?)", _pos(form))
    ex = form[1]
    if not (isinstance(ex, list) and ex and ex[0] == "exists"):
        raise ParseError("goal needs (exists (x) F)", _pos(form))
    phi = parser.binder_matrix(ex, {})
    if _mentions_set(phi):
        raise ParseError("goals must be arithmetic (no membership atoms)", _pos(form))
    if not free_vars(phi) <= {0}:
        raise ParseError("goal matrix may only use its bound variable", _pos(form))
    candidates: tuple[Expr, ...] = ()
    if len(form) == 3:
        c = form[2]
        if not (isinstance(c, list) and c and c[0] == "candidates"):
            raise ParseError("second goal part is (candidates TERM*)", _pos(form))
        candidates = tuple(parser.term(t, {}) for t in c[1:])
        for t in candidates:
            if not is_closed(t):
                raise ParseError("candidates must be closed terms", _pos(form))
    text = f"(exists (v0) {to_sexpr(phi)})"
    return GoalSpec(goal=make_goal(phi, text), candidates=candidates)


def _mentions_set(e: Expr) -> bool:
    if isinstance(e, InSet):
        return True
    if isinstance(e, Not):
        return _mentions_set(e.body)
    if isinstance(e, (And, Or)):
        return _mentions_set(e.left) or _mentions_set(e.right)
    from .language import SkolemApp, FnApp, RelAtom

    if isinstance(e, (SkolemApp, FnApp, RelAtom)):
        return any(_mentions_set(a) for a in e.args)
    return False


# ---------------------------------------------------------------------------
# Shape recognition for untagged critical formulas

def _subst_sx(tree, name: str, repl):
    if isinstance(tree, str) and str(tree) == name:
        return repl
    if isinstance(tree, list):
        return [_subst_sx(a, name, repl) for a in tree]
    return tree


def _sx_eq(a, b) -> bool:
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(_sx_eq(x, y) for x, y in zip(a, b))
    if isinstance(a, list) or isinstance(b, list):
        return False
    if isinstance(a, str) and isinstance(b, str):
        return str(a) == str(b)
    return a == b


def _match_instance(pattern, name: str, instance):
    """The term substituted for name that turns pattern into instance."""
    hits: list = []

    def walk(p, i) -> bool:
        if isinstance(p, str) and str(p) == name:
            hits.append(i)
            return True
        if isinstance(p, list) and isinstance(i, list) and len(p) == len(i):
            return all(walk(a, b) for a, b in zip(p, i))
        return _sx_eq(p, i)

    if not walk(pattern, instance) or not hits:
        return None
    first = hits[0]
    if not all(_sx_eq(h, first) for h in hits[1:]):
        return None
    return first


def _is(sx, tag: str, size: int) -> bool:
    return isinstance(sx, list) and len(sx) == size and sx[0] == tag


def _binder_of(sx, tag: str):
    if (
        _is(sx, tag, 3)
        and isinstance(sx[1], list)
        and len(sx[1]) == 1
        and isinstance(sx[1][0], str)
    ):
        return str(sx[1][0]), sx[2]
    return None


def shape_check(sx, ctx: InductiveContext | None) -> CriticalFormula:
    """Recognize a surface formula as one of the five axiom shapes.

    A candidate reading is extracted from the surface tree, rebuilt through
    the corresponding constructor, and accepted only when the rebuilt axiom
    expands to exactly the given formula.  Shapes are tried in the order
    pred, induction, epsilon, inductive definition, closure.
    """
    parser = _Parser()
    target = parser.formula(sx, {})

    def accept(cf: CriticalFormula | None) -> CriticalFormula | None:
        if cf is not None and cf.formula == target:
            return cf
        return None

    if _is(sx, "->", 3):
        prem, concl = sx[1], sx[2]
        ex = _binder_of(concl, "exists")

        # pred: (-> (not (= S 0)) (exists (x) (= S (s x))))
        if ex is not None and _is(prem, "not", 2) and _is(prem[1], "=", 3):
            x, inner = ex
            if (
                prem[1][2] == 0
                and _is(inner, "=", 3)
                and _sx_eq(inner[2], ["s", x])
                and _sx_eq(inner[1], prem[1][1])
            ):
                try:
                    got = accept(make_pred(_Parser().term(prem[1][1], {})))
                    if got:
                        return got
                except (ParseError, ProcessInvariantError, LanguageError):
                    pass

        # induction: (-> (and F0 (not FT)) (exists (x) (and F (not F[Sx]))))
        if (
            ex is not None
            and _is(prem, "and", 3)
            and _is(prem[2], "not", 2)
        ):
            x, inner = ex
            if _is(inner, "and", 3) and _is(inner[2], "not", 2):
                fx, fsx = inner[1], inner[2][1]
                if _sx_eq(_subst_sx(fx, x, ["s", x]), fsx) and _sx_eq(
                    _subst_sx(fx, x, 0), prem[1]
                ):
                    t_sx = _match_instance(fx, x, prem[2][1])
                    if t_sx is not None:
                        try:
                            p = _Parser()
                            phi = p.binder_matrix(["q", [x], fx], {})
                            got = accept(
                                make_induction(p.term(t_sx, {}), phi)
                            )
                            if got:
                                return got
                        except (ParseError, ProcessInvariantError, LanguageError):
                            pass

        # epsilon: (-> F[t] (exists (x) F))
        if ex is not None:
            x, inner = ex
            t_sx = _match_instance(inner, x, prem)
            if t_sx is not None:
                try:
                    p = _Parser()
                    phi = p.binder_matrix(["q", [x], inner], {})
                    got = accept(make_epsilon(p.term(t_sx, {}), phi))
                    if got:
                        return got
                except (ParseError, ProcessInvariantError, LanguageError):
                    pass

        # inductive definition: (-> A (in T I))
        if _is(concl, "in", 3) and str(concl[2]) == "I" and ctx is not None:
            try:
                got = accept(
                    make_inductive_def(_Parser().term(concl[1], {}), ctx)
                )
                if got:
                    return got
            except (ParseError, ProcessInvariantError, LanguageError):
                pass

        # closure: (-> PREM (forall (x) (-> (in x I) F)))
        fa = _binder_of(concl, "forall")
        if fa is not None and ctx is not None:
            x, inner = fa
            if (
                _is(inner, "->", 3)
                and _is(inner[1], "in", 3)
                and _sx_eq(inner[1][1], x)
                and str(inner[1][2]) == "I"
            ):
                try:
                    p = _Parser()
                    phi = p.binder_matrix(["q", [x], inner[2]], {})
                    got = accept(make_closure(phi, ctx))
                    if got:
                        return got
                except (ParseError, ProcessInvariantError, LanguageError):
                    pass

    raise ParseError("not a critical formula", _pos(sx))


# ---------------------------------------------------------------------------
# Emission

def _emit_template(phi: Expr, set_name: str = "I") -> str:
    return f"(exists (v0) {to_sexpr(phi, set_name)})"


def serialize_problem(problem: Problem) -> str:
    lines: list[str] = []
    if problem.clause is not None:
        body = to_sexpr(problem.clause, problem.set_name)
        lines.append(f"(clause (v0 v1 {problem.set_name}) {body})")
    for k, v in problem.options:
        lines.append(f"(option {k} {v})")
    for cf in problem.crits[: problem.explicit_crits]:
        if isinstance(cf, PredCF):
            lines.append(f"(crit pred {to_sexpr(cf.s)})")
        elif isinstance(cf, EpsilonCF):
            lines.append(
                f"(crit eps {to_sexpr(cf.t)} {_emit_template(cf.phi)})"
            )
        elif isinstance(cf, InductionCF):
            lines.append(
                f"(crit ind (v0) {to_sexpr(cf.phi)} {to_sexpr(cf.t)})"
            )
        elif isinstance(cf, InductiveDefCF):
            lines.append(f"(crit inddef {to_sexpr(cf.t)})")
        elif isinstance(cf, ClosureCF):
            lines.append(f"(crit closure (v0) {to_sexpr(cf.phi)})")
    for spec in problem.goals:
        cands = ""
        if spec.candidates:
            cands = " (candidates " + " ".join(
                to_sexpr(t) for t in spec.candidates
            ) + ")"
        lines.append(f"(goal {_emit_template(spec.goal.phi)}{cands})")
    return "\n".join(lines) + "\n"
