"""Atoms: the intervals F_in o ... o F_i1(X) and the bookkeeping around them."""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .errors import DepthOverflow, NotInCover, SeparationRequired
from .map_core import ClosedInterval, ValidatedPCIM, as_rational

DEFAULT_MAX_DEPTH = 64
BRUTEFORCE_MAX_DEPTH = 12

Code = tuple[int, ...]


def max_depth_cap() -> int:
    """Depth cap, overridable through the PCIM_MAX_DEPTH environment variable."""
    raw = os.environ.get("PCIM_MAX_DEPTH")
    if raw is None:
        return DEFAULT_MAX_DEPTH
    try:
        cap = int(raw)
    except ValueError:
        raise DepthOverflow(f"PCIM_MAX_DEPTH={raw!r} is not an integer") from None
    if cap < 1:
        raise DepthOverflow(f"PCIM_MAX_DEPTH must be positive, got {cap}")
    return cap


@dataclass(frozen=True)
class Atom:
    carrier: ClosedInterval
    code: Code

    @property
    def generation(self) -> int:
        return len(self.code)

    def code_str(self) -> str:
        return code_to_str(self.code)


def code_to_str(code: Code) -> str:
    if all(i < 10 for i in code):
        return "".join(map(str, code))
    return ".".join(map(str, code))


@dataclass(frozen=True)
class AtomSet:
    generation: int
    atoms: tuple[Atom, ...]

    def __len__(self):
        return len(self.atoms)

    def __iter__(self) -> Iterator[Atom]:
        return iter(self.atoms)

    def by_code(self) -> dict[Code, ClosedInterval]:
        return {a.code: a.carrier for a in self.atoms}

    @property
    def max_diameter(self) -> Fraction:
        return max((a.carrier.diameter for a in self.atoms), default=Fraction(0))

    def containing(self, x) -> list[Atom]:
        return [a for a in self.atoms if x in a.carrier]


def atom_image(m: ValidatedPCIM, i: int, A: ClosedInterval) -> ClosedInterval | None:
    """F_i(A): closure of f(A intersected with X_i), or None when that set is empty."""
    piece = m.piece_closure(i)
    lo, hi = max(A.lo, piece.lo), min(A.hi, piece.hi)
    if lo > hi:
        return None
    if lo == hi and not m.piece_contains(i, lo):
        return None
    return m.branches[i - 1].image(ClosedInterval(lo, hi))


def _sort_key(a: Atom):
    return (a.carrier.lo, a.carrier.hi, a.code)


def _check_depth(n: int, cap: int | None):
    if n < 1:
        raise ValueError("generation must be >= 1")
    cap = max_depth_cap() if cap is None else cap
    if n > cap:
        raise DepthOverflow(f"generation {n} exceeds depth cap {cap}")


def _expand(m: ValidatedPCIM, atoms) -> list[Atom]:
    out = []
    for a in atoms:
        for i in range(1, m.n_pieces + 1):
            img = atom_image(m, i, a.carrier)
            if img is not None:
                assert img.lo < img.hi, "degenerate atom from a non-degenerate carrier"
                out.append(Atom(img, a.code + (i,)))
    out.sort(key=_sort_key)
    return out


def iter_generations(m: ValidatedPCIM) -> Iterator[AtomSet]:
    """Generations 1, 2, 3, ... built incrementally, without a depth cap."""
    current = [Atom(m.domain, ())]
    n = 0
    while True:
        n += 1
        current = _expand(m, current)
        yield AtomSet(n, tuple(current))


def atoms_generation(m: ValidatedPCIM, n: int, max_depth: int | None = None) -> AtomSet:
    _check_depth(n, max_depth)
    for gen in iter_generations(m):
        if gen.generation == n:
            return gen
    raise AssertionError("unreachable")


def generations(m: ValidatedPCIM, n_max: int, max_depth: int | None = None) -> list[AtomSet]:
    _check_depth(n_max, max_depth)
    return list(itertools.islice(iter_generations(m), n_max))


def atom_from_code(m: ValidatedPCIM, code: Code) -> ClosedInterval | None:
    """Compose F_{i1}, then F_{i2}, ... starting from X."""
    A = m.domain
    for i in code:
        A = atom_image(m, i, A)
        if A is None:
            return None
    return A


def atoms_bruteforce(m: ValidatedPCIM, n: int, max_depth: int = BRUTEFORCE_MAX_DEPTH) -> AtomSet:
    """Independent oracle: try all N**n codes directly."""
    _check_depth(n, max_depth)
    found = []
    for code in itertools.product(range(1, m.n_pieces + 1), repeat=n):
        A = atom_from_code(m, code)
        if A is not None:
            found.append(Atom(A, code))
    found.sort(key=_sort_key)
    return AtomSet(n, tuple(found))


def atom_counts(m: ValidatedPCIM, n_max: int, max_depth: int | None = None) -> list[int]:
    _check_depth(n_max, max_depth)
    return [len(g) for g in itertools.islice(iter_generations(m), n_max)]


def locate_point(m: ValidatedPCIM, x, n: int, max_depth: int | None = None) -> list[Atom]:
    """Nested chain B_1 ⊇ B_2 ⊇ ... ⊇ B_n of the atoms containing x."""
    sep = m.separation_certificate
    if not sep:
        raise SeparationRequired(
            f"atom chains are unique only under separation; pieces {sep.pair} overlap on {sep.overlap}",
            pair=sep.pair,
            overlap=sep.overlap,
        )
    x = as_rational(x)
    _check_depth(n, max_depth)
    chain: list[Atom] = []
    for gen in itertools.islice(iter_generations(m), n):
        hits = gen.containing(x)
        if not hits:
            raise NotInCover(x, gen.generation)
        assert len(hits) == 1, "atoms of one generation must be disjoint under separation"
        b = hits[0]
        if chain:
            assert chain[-1].carrier.contains_interval(b.carrier)
            assert b.code[1:] == chain[-1].code
        chain.append(b)
    return chain


def delta_preimages(m: ValidatedPCIM, n: int) -> list[set[Fraction]]:
    """Levels f^-k(Δ) for k = 0..n-1, each computed exactly through branch inverses."""
    levels = [set(m.delta)]
    for _ in range(n - 1):
        nxt = set()
        for y in levels[-1]:
            for i, br in enumerate(m.branches, start=1):
                z = br.inverse(y)
                if z in m.domain and m.piece_contains(i, z) and z not in m.delta:
                    nxt.add(z)
        levels.append(nxt)
    return levels


def cut_points(m: ValidatedPCIM, A: ClosedInterval, n: int) -> list[Fraction]:
    """Points of A that reach Δ in fewer than n steps."""
    if n < 1:
        raise ValueError("n must be >= 1")
    pts = set().union(*delta_preimages(m, n))
    return sorted(p for p in pts if p in A)


@dataclass(frozen=True)
class Component:
    """Connected component of A minus the cut points; open at cut ends."""

    lo: Fraction
    hi: Fraction
    lo_open: bool
    hi_open: bool

    @property
    def closure(self) -> ClosedInterval:
        return ClosedInterval(self.lo, self.hi)

    def __contains__(self, x) -> bool:
        if self.lo < x < self.hi:
            return True
        return (x == self.lo and not self.lo_open) or (x == self.hi and not self.hi_open)

    def intersection(self, other: ClosedInterval) -> "Component | None":
        lo, lo_open = self.lo, self.lo_open
        if other.lo > lo:
            lo, lo_open = other.lo, False
        hi, hi_open = self.hi, self.hi_open
        if other.hi < hi:
            hi, hi_open = other.hi, False
        if lo < hi or (lo == hi and not lo_open and not hi_open):
            return Component(lo, hi, lo_open, hi_open)
        return None


def components(m: ValidatedPCIM, A: ClosedInterval, n: int) -> list[Component]:
    cuts = cut_points(m, A, n)
    out = []
    lo, lo_open = A.lo, False
    for c in cuts:
        if c == lo:
            lo_open = True
            continue
        out.append(Component(lo, c, lo_open, True))
        lo, lo_open = c, True
    if lo < A.hi or (lo == A.hi and not lo_open):
        out.append(Component(lo, A.hi, lo_open, False))
    return out
