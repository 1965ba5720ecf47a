"""Membership histories: insertion order and rollback records.

A historical substitution carries, besides the map itself, the order P in
which membership facts were added and, for each, the rank-Omega negative
entries V that were displaced when it entered.  The rollback step of the
process restores exactly those.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

from .language import CanonForm, InductiveContext, num
from .substitution import (
    Substitution,
    TOP_VAL,
    entry_is_positive,
    models,
    serialize,
)


@dataclass(frozen=True)
class HistoricalSubstitution:
    """A substitution together with its membership history (P, V).

    P lists the members n with (n in I, top) present, in insertion order; V
    maps each of them to the negative rank-Omega entries removed when it was
    added.
    """

    sub: Substitution
    p: tuple[int, ...] = ()
    v: Mapping[int, Substitution] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "v", MappingProxyType(dict(self.v)))

    @staticmethod
    def initial(omega_sym=None) -> "HistoricalSubstitution":
        return HistoricalSubstitution(Substitution.empty(omega_sym))


def is_admissible(
    p: tuple[int, ...], ctx: InductiveContext | None
) -> bool:
    """Each member of p is justified by the clause over its predecessors.

    The justification evaluates the clause at bound value 0 — the default a
    fresh witness term reduces to — under the standard extension of the
    membership facts added so far.
    """
    if ctx is None:
        return not p
    for i, n in enumerate(p):
        prefix = Substitution(
            {CanonForm(m): TOP_VAL for m in p[:i]},
            omega_sym=ctx.omega_sym,
        )
        if not models(prefix.extended(), ctx.b_formula(num(0), num(n))):
            return False
    return True


def validate(
    hs: HistoricalSubstitution, ctx: InductiveContext | None = None
) -> list[str]:
    """Invariant violations of a historical substitution; empty when valid."""
    problems: list[str] = []
    if len(set(hs.p)) != len(hs.p):
        problems.append("P contains duplicate members")
    members = set(hs.sub.positive_omega_forms())
    if set(hs.p) != members:
        problems.append(
            "P does not order the top-valued membership entries "
            f"(P={sorted(set(hs.p))}, entries={sorted(members)})"
        )
    if set(hs.v) != set(hs.p):
        problems.append("V is not keyed exactly by the members of P")
    for n, snap in hs.v.items():
        for e, u in snap.items():
            if not snap.rank_of(e).is_omega or entry_is_positive(e, u):
                problems.append(
                    f"V({n}) holds a non-negative-Omega entry {serialize(snap)}"
                )
                break
    if not is_admissible(hs.p, ctx):
        problems.append("P is not admissible for the inductive clause")
    return problems
