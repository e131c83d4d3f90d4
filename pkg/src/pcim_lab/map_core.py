"""Exact piecewise contracting interval maps with affine branches.

All quantities are :class:`fractions.Fraction`; nothing is ever rounded.
The map is left undefined on the cut set, so ``evaluate`` refuses cut points.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import (
    BadParameters,
    ImageEscapesDomain,
    NotAContraction,
    NotACutPoint,
    OnCutPoint,
    OutOfDomain,
    UnorderedCuts,
    ValidationError,
    ZeroSlope,
)

Rational = Fraction

DEFAULT_D_HORIZON = 10_000

_PQ = re.compile(r"\s*-?[0-9]+(/[0-9]+)?\s*")


def as_rational(value) -> Fraction:
    """Fraction from a Fraction, int or ``"p/q"`` string; floats and decimals are refused."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise TypeError("floats are not accepted; pass a Fraction, int or 'p/q' string")
    if isinstance(value, str) and not _PQ.fullmatch(value):
        raise ValueError(f"{value!r} is not a rational of the form p/q")
    return Fraction(value)


def format_rational(q: Fraction) -> str:
    return str(q)


@dataclass(frozen=True)
class ClosedInterval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", as_rational(self.lo))
        object.__setattr__(self, "hi", as_rational(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def diameter(self) -> Fraction:
        return self.hi - self.lo

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def contains_interval(self, other: "ClosedInterval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def intersects(self, other: "ClosedInterval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def intersection(self, other: "ClosedInterval") -> "ClosedInterval | None":
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return ClosedInterval(lo, hi) if lo <= hi else None

    def __str__(self):
        return f"[{self.lo}, {self.hi}]"


@dataclass(frozen=True)
class Branch:
    """Affine branch x -> a*x + b."""

    a: Fraction
    b: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a", as_rational(self.a))
        object.__setattr__(self, "b", as_rational(self.b))

    def __call__(self, x: Fraction) -> Fraction:
        return self.a * x + self.b

    def image(self, interval: ClosedInterval) -> ClosedInterval:
        u, v = self(interval.lo), self(interval.hi)
        return ClosedInterval(min(u, v), max(u, v))

    def inverse(self, y: Fraction) -> Fraction:
        return (y - self.b) / self.a


@dataclass(frozen=True)
class PCIMDefinition:
    domain: ClosedInterval
    cuts: tuple[Fraction, ...]
    branches: tuple[Branch, ...]
    open_ends: tuple[bool, bool] = (False, False)
    name: str | None = None

    def __post_init__(self):
        if not isinstance(self.domain, ClosedInterval):
            object.__setattr__(self, "domain", ClosedInterval(*self.domain))
        object.__setattr__(self, "cuts", tuple(as_rational(c) for c in self.cuts))
        object.__setattr__(
            self,
            "branches",
            tuple(b if isinstance(b, Branch) else Branch(*b) for b in self.branches),
        )
        object.__setattr__(self, "open_ends", tuple(bool(f) for f in self.open_ends))

    @property
    def n_pieces(self) -> int:
        return len(self.branches)

    @property
    def endpoints(self) -> tuple[Fraction, ...]:
        """c_0, c_1, ..., c_N."""
        return (self.domain.lo, *self.cuts, self.domain.hi)


@dataclass(frozen=True)
class ValidatedPCIM:
    definition: PCIMDefinition
    contraction_rate: Fraction
    one_sided_limit_set: tuple[Fraction, ...]
    # cut point -> (left limit | None, right limit | None)
    limits: dict = field(compare=False, repr=False)
    separation_certificate: "SeparationReport | None" = field(default=None, compare=False)

    @property
    def n_pieces(self) -> int:
        return self.definition.n_pieces

    @property
    def domain(self) -> ClosedInterval:
        return self.definition.domain

    @property
    def branches(self) -> tuple[Branch, ...]:
        return self.definition.branches

    @property
    def cuts(self) -> tuple[Fraction, ...]:
        return self.definition.cuts

    @property
    def delta(self) -> tuple[Fraction, ...]:
        """Sorted cut set, including any endpoints adjoined via ``open_ends``."""
        d = self.definition
        out = list(d.cuts)
        if d.open_ends[0]:
            out.insert(0, d.domain.lo)
        if d.open_ends[1]:
            out.append(d.domain.hi)
        return tuple(out)

    def piece_closure(self, i: int) -> ClosedInterval:
        ends = self.definition.endpoints
        return ClosedInterval(ends[i - 1], ends[i])

    def piece_contains(self, i: int, x: Fraction) -> bool:
        """Membership in the (half-)open piece X_i."""
        ends = self.definition.endpoints
        lo, hi = ends[i - 1], ends[i]
        if lo < x < hi:
            return True
        if x == lo:
            return i == 1 and not self.definition.open_ends[0]
        if x == hi:
            return i == self.n_pieces and not self.definition.open_ends[1]
        return False

    def branch_image(self, i: int) -> ClosedInterval:
        """Closure of f(X_i)."""
        return self.branches[i - 1].image(self.piece_closure(i))

    def __call__(self, x) -> Fraction:
        return evaluate(self, x)


def validate_pcim(defn: PCIMDefinition) -> ValidatedPCIM:
    dom = defn.domain
    if not dom.lo < dom.hi:
        raise ValidationError(f"domain {dom} is degenerate")
    ends = defn.endpoints
    for k in range(len(ends) - 1):
        if not ends[k] < ends[k + 1]:
            raise UnorderedCuts(
                f"need c0 < c1 < ... < cN, got {ends[k]} >= {ends[k + 1]} at position {k}"
            )
    if len(defn.branches) != len(defn.cuts) + 1:
        raise ValidationError(
            f"{len(defn.cuts)} cuts need {len(defn.cuts) + 1} branches, got {len(defn.branches)}"
        )
    for i, br in enumerate(defn.branches, start=1):
        if br.a == 0:
            raise ZeroSlope(f"branch {i} has slope 0")
        if abs(br.a) >= 1:
            raise NotAContraction(f"branch {i} has |slope| = {abs(br.a)} >= 1")
        img = br.image(ClosedInterval(ends[i - 1], ends[i]))
        if not dom.contains_interval(img):
            raise ImageEscapesDomain(f"branch {i} image {img} is not inside {dom}")

    limits: dict[Fraction, tuple[Fraction | None, Fraction | None]] = {}
    for k in range(1, len(ends) - 1):
        c = ends[k]
        limits[c] = (defn.branches[k - 1](c), defn.branches[k](c))
    if defn.open_ends[0]:
        limits[dom.lo] = (None, defn.branches[0](dom.lo))
    if defn.open_ends[1]:
        limits[dom.hi] = (defn.branches[-1](dom.hi), None)
    D: list[Fraction] = []
    for c in sorted(limits):
        for v in limits[c]:
            if v is not None and v not in D:
                D.append(v)
    lam = max(abs(br.a) for br in defn.branches)
    m = ValidatedPCIM(defn, lam, tuple(D), limits)
    object.__setattr__(m, "separation_certificate", check_separation(m))
    return m


def _check_in_domain(m: ValidatedPCIM, x: Fraction):
    if x not in m.domain:
        raise OutOfDomain(f"{x} is outside {m.domain}")


def piece_index(m: ValidatedPCIM, x) -> int:
    """Index (1-based) of the piece containing ``x``; raises OnCutPoint on the cut set."""
    x = as_rational(x)
    _check_in_domain(m, x)
    cuts = m.cuts
    lo, hi = 0, len(cuts)
    while lo < hi:
        mid = (lo + hi) // 2
        if cuts[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    if lo < len(cuts) and cuts[lo] == x:
        raise OnCutPoint(x)
    i = lo + 1
    if not m.piece_contains(i, x):
        raise OnCutPoint(x)
    return i


def evaluate(m: ValidatedPCIM, x) -> Fraction:
    x = as_rational(x)
    return m.branches[piece_index(m, x) - 1](x)


def one_sided_limits(m: ValidatedPCIM, c) -> tuple[Fraction | None, Fraction | None]:
    c = as_rational(c)
    try:
        return m.limits[c]
    except KeyError:
        raise NotACutPoint(f"{c} is not in the cut set") from None


@dataclass(frozen=True)
class SeparationReport:
    """Outcome of the separation test; truthy iff separated."""

    separated: bool
    images: tuple[ClosedInterval, ...]
    pair: tuple[int, int] | None = None
    overlap: ClosedInterval | None = None

    def __bool__(self):
        return self.separated


def check_separation(m: ValidatedPCIM) -> SeparationReport:
    images = tuple(m.branch_image(i) for i in range(1, m.n_pieces + 1))
    for i in range(len(images)):
        for j in range(i + 1, len(images)):
            ov = images[i].intersection(images[j])
            if ov is not None:
                return SeparationReport(False, images, (i + 1, j + 1), ov)
    return SeparationReport(True, images)


# --- exact orbits ---

_FP_PRIME = (1 << 61) - 1


class Orbit:
    """Exact forward orbit of a point.

    The current point is kept as an unreduced numerator/denominator pair so a
    step costs a few multiplications by small integers instead of a gcd on
    ever-growing integers. A residue modulo a Mersenne prime gives an O(1)
    fingerprint; equal points always share it, so exact comparison is only
    needed on fingerprint matches.
    """

    __slots__ = ("_m", "num", "den", "fp", "t", "_steps", "_cuts", "_delta")

    def __init__(self, m: ValidatedPCIM, x):
        x = as_rational(x)
        _check_in_domain(m, x)
        self._m = m
        self.num, self.den = x.numerator, x.denominator
        self.fp = self.num % _FP_PRIME * pow(self.den, -1, _FP_PRIME) % _FP_PRIME
        self.t = 0
        self._steps = _branch_steps(m)
        self._cuts = tuple((c.numerator, c.denominator) for c in m.cuts)
        self._delta = tuple((c.numerator, c.denominator) for c in m.delta)

    @property
    def point(self) -> Fraction:
        return Fraction(self.num, self.den)

    def snapshot(self):
        return (self.num, self.den, self.fp, self.t)

    def same_point(self, snap) -> bool:
        num, den, fp, _ = snap
        return fp == self.fp and num * self.den == self.num * den

    def piece(self) -> int | None:
        """Piece of the current point, or None if it lies on the cut set."""
        num, den = self.num, self.den
        for cn, cd in self._delta:
            if num * cd == cn * den:
                return None
        lo, hi = 0, len(self._cuts)
        while lo < hi:
            mid = (lo + hi) // 2
            cn, cd = self._cuts[mid]
            if cn * den < num * cd:
                lo = mid + 1
            else:
                hi = mid
        return lo + 1

    def step(self, i: int | None = None) -> int:
        """Advance one step; returns the piece index used."""
        if i is None:
            i = self.piece()
            if i is None:
                raise OnCutPoint(self.point, self.t)
        p, q, r, fa, fb = self._steps[i - 1]
        self.num, self.den = p * self.num + q * self.den, r * self.den
        self.fp = (fa * self.fp + fb) % _FP_PRIME
        self.t += 1
        return i


def _branch_steps(m: ValidatedPCIM):
    out = []
    for br in m.branches:
        a, b = br.a, br.b
        p = a.numerator * b.denominator
        q = b.numerator * a.denominator
        r = a.denominator * b.denominator
        g = math.gcd(math.gcd(p, q), r)
        p, q, r = p // g, q // g, r // g
        fa = a.numerator % _FP_PRIME * pow(a.denominator, -1, _FP_PRIME) % _FP_PRIME
        fb = b.numerator % _FP_PRIME * pow(b.denominator, -1, _FP_PRIME) % _FP_PRIME
        out.append((p, q, r, fa, fb))
    return tuple(out)


def iterate(m: ValidatedPCIM, x, steps: int) -> list[Fraction]:
    """Exact orbit x, f(x), ..., f^steps(x)."""
    pts = [as_rational(x)]
    for _ in range(steps):
        pts.append(evaluate(m, pts[-1]))
    return pts


def tail_period(symbols: bytes, tail: int | None = None, max_period: int | None = None) -> int | None:
    """Smallest P such that the last ``tail`` symbols are P-periodic, seen at least 3 times."""
    if tail is None or tail > len(symbols):
        tail = len(symbols)
    s = symbols[len(symbols) - tail:]
    limit = tail // 3 if max_period is None else min(max_period, tail // 3)
    for P in range(1, limit + 1):
        if s[P:] == s[:-P]:
            return P
    return None


def cycle_for_word(m: ValidatedPCIM, word) -> tuple[Fraction, ...] | None:
    """Exact periodic orbit whose itinerary is ``word`` repeated, if one exists.

    Solves the fixed point of the composed affine branches, then checks that
    each point lies in the piece the word prescribes and that the points are
    distinct.
    """
    A, B = Fraction(1), Fraction(0)
    for i in word:
        br = m.branches[i - 1]
        A, B = br.a * A, br.a * B + br.b
    y = B / (1 - A)  # |A| < 1
    pts = []
    z = y
    for i in word:
        if z not in m.domain or not m.piece_contains(i, z):
            return None
        pts.append(z)
        z = m.branches[i - 1](z)
    if z != y or len(set(pts)) != len(pts):
        return None
    return tuple(pts)


def cut_margin(m: ValidatedPCIM, points) -> Fraction | None:
    """Distance from ``points`` to the cut set (None when the cut set is empty)."""
    delta = m.delta
    if not delta:
        return None
    return min(abs(p - c) for p in points for c in delta)


@dataclass(frozen=True)
class Capture:
    """Proof that an orbit follows a periodic cycle forever from step ``time`` on.

    ``cycle[0]`` is within ``margin`` of the orbit point at ``time``; each cycle
    point is at least ``margin`` away from the cut set, so by contraction the
    orbit stays in the same pieces as the cycle for ever after.
    """

    time: int
    cycle: tuple[Fraction, ...]
    word: bytes
    margin: Fraction | None


@dataclass(frozen=True)
class OrbitScan:
    symbols: bytes
    hit: tuple[int, Fraction] | None = None
    repeat: tuple[int, int, Fraction] | None = None  # (start, period, point at start)
    capture: Capture | None = None


def _try_capture(m: ValidatedPCIM, orb: Orbit, symbols: bytearray) -> Capture | None:
    t = len(symbols)
    L = t // 2
    P = tail_period(bytes(symbols[t - L:]))
    if P is None:
        return None
    word = bytes(symbols[t - L:t - L + P])
    pts = cycle_for_word(m, word)
    if pts is None:
        return None
    k = L % P
    pts = pts[k:] + pts[:k]
    word = word[k:] + word[:k]
    r = cut_margin(m, pts)
    if r is not None:
        y = pts[0]
        # |num/den - y| < r, in integers
        lhs = abs(orb.num * y.denominator - y.numerator * orb.den) * r.denominator
        if not lhs < r.numerator * orb.den * y.denominator:
            return None
    return Capture(t, pts, word, r)


def scan_orbit(m: ValidatedPCIM, x, T: int, *, capture: bool = True, first_check: int = 64) -> OrbitScan:
    """Symbols of the first T steps of the orbit of x, exactly.

    Stops at the first landing on the cut set. An exact repeat (Brent's cycle
    detection on fingerprints) or a :class:`Capture` settles the rest of the
    itinerary, which is then filled in without iterating further.
    """
    orb = Orbit(m, x)
    symbols = bytearray()
    tortoise = orb.snapshot()
    power = lam = 1
    next_check = first_check
    for t in range(T):
        i = orb.piece()
        if i is None:
            return OrbitScan(bytes(symbols), hit=(t, orb.point))
        if capture and t == next_check:
            cap = _try_capture(m, orb, symbols)
            if cap is not None:
                return OrbitScan(_fill(symbols, cap.word, T), capture=cap)
            next_check *= 2
        symbols.append(i)
        orb.step(i)
        if orb.same_point(tortoise):
            num, den, _, start = tortoise
            rep = (start, lam, Fraction(num, den))
            period_word = bytes(symbols[start:start + lam])
            out = bytes(symbols[:start]) + _fill(bytearray(), period_word, T - start)
            return OrbitScan(out, repeat=rep)
        if power == lam:
            tortoise = orb.snapshot()
            power *= 2
            lam = 0
        lam += 1
    return OrbitScan(bytes(symbols))


def _fill(symbols: bytearray, word: bytes, T: int) -> bytes:
    need = T - len(symbols)
    reps = -(-need // len(word)) if need > 0 else 0
    return bytes(symbols) + (word * reps)[:max(need, 0)]


@dataclass(frozen=True)
class DXtildeReport:
    """Finite-horizon certificate for D inside X-tilde; truthy iff no failure was found.

    ``proven`` lists the points of D whose whole orbit is known to avoid the
    cut set (exact repeat, or capture by a cycle kept away from the cuts).
    """

    ok: bool
    horizon: int
    point: Fraction | None = None
    step: int | None = None
    proven: tuple[Fraction, ...] = ()

    def __bool__(self):
        return self.ok


def check_D_in_Xtilde(m: ValidatedPCIM, horizon: int = DEFAULT_D_HORIZON) -> DXtildeReport:
    if horizon < 1:
        raise ValueError("horizon must be positive")
    proven = []
    for d in m.one_sided_limit_set:
        scan = scan_orbit(m, d, horizon + 1)
        if scan.hit is not None:
            return DXtildeReport(False, horizon, d, scan.hit[0])
        if scan.repeat is not None or scan.capture is not None:
            proven.append(d)
    return DXtildeReport(True, horizon, proven=tuple(proven))


def contracted_rotation(lam, delta) -> PCIMDefinition:
    """Contracted rotation x -> lam*x + delta (mod 1) encoded on [0, 1]."""
    lam, delta = as_rational(lam), as_rational(delta)
    if not (0 < lam < 1 and 0 < delta < 1):
        raise BadParameters(f"need 0 < lambda, delta < 1, got {lam}, {delta}")
    if lam + delta <= 1:
        raise BadParameters(f"lambda + delta = {lam + delta} <= 1 leaves a single piece")
    c = (1 - delta) / lam
    return PCIMDefinition(
        domain=ClosedInterval(Fraction(0), Fraction(1)),
        cuts=(c,),
        branches=(Branch(lam, delta), Branch(lam, delta - 1)),
        name=f"contracted_rotation({lam},{delta})",
    )


def make_map(domain: Sequence, cuts: Iterable, branches: Iterable, open_ends=(False, False), name=None) -> ValidatedPCIM:
    """Convenience constructor: build and validate in one call."""
    return validate_pcim(PCIMDefinition(ClosedInterval(*domain), tuple(cuts), tuple(branches), tuple(open_ends), name))
