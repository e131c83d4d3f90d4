"""Reference maps used throughout the tests and the README."""
from __future__ import annotations

from fractions import Fraction as F

from .map_core import PCIMDefinition, Branch, ClosedInterval, contracted_rotation

UNIT = ClosedInterval(F(0), F(1))


def e1() -> PCIMDefinition:
    """One piece, x -> x/2; the attractor is {0}."""
    return PCIMDefinition(UNIT, (), (Branch(F(1, 2), F(0)),), name="e1")


def e2() -> PCIMDefinition:
    """Two pieces with a single attracting 2-cycle {1/5, 3/5}."""
    return PCIMDefinition(UNIT, (F(1, 2),), (Branch(F(1, 2), F(1, 2)), Branch(F(1, 3), F(0))), name="e2")


def r1() -> PCIMDefinition:
    d = contracted_rotation(F(1, 2), F(7, 10))
    return PCIMDefinition(d.domain, d.cuts, d.branches, d.open_ends, "r1")


def r2() -> PCIMDefinition:
    d = contracted_rotation(F(9, 10), F(1, 5))
    return PCIMDefinition(d.domain, d.cuts, d.branches, d.open_ends, "r2")


def t3() -> PCIMDefinition:
    """Three pieces, one orientation-reversing; pieces {0} and {8/17, 40/51}."""
    return PCIMDefinition(
        UNIT,
        (F(1, 3), F(2, 3)),
        (Branch(F(1, 2), F(0)), Branch(F(1, 4), F(2, 3)), Branch(F(-1, 4), F(2, 3))),
        name="t3",
    )


def v() -> PCIMDefinition:
    """Image closures [1/2, 3/4] and [1/4, 1/2] share the point 1/2, so separation fails."""
    return PCIMDefinition(UNIT, (F(1, 2),), (Branch(F(1, 2), F(1, 2)), Branch(F(1, 2), F(0))), name="v")


CORPUS = {"e1": e1, "e2": e2, "r1": r1, "r2": r2, "t3": t3, "v": v}
SEPARATED = ("e1", "e2", "r1", "r2", "t3")
