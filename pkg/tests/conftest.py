import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

import pytest

from epsengine.language import InductiveContext, Var, in_set, lt, not_, or_


@pytest.fixture(scope="session")
def bounded_clause():
    """B(y, x, X) = y < x -> y in X: membership below a bound."""
    return or_(not_(lt(Var(0), Var(1))), in_set(Var(0)))


@pytest.fixture(scope="session")
def ctx(bounded_clause):
    return InductiveContext(bounded_clause)
