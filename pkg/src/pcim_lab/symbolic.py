"""Itineraries, factor complexity and classification of omega-limit sets."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .errors import AlphaOutOfRange, ItineraryLeftXtilde, PrefixTooShort
from .map_core import (
    OrbitScan,
    ValidatedPCIM,
    as_rational,
    cycle_for_word,
    iterate,
    scan_orbit,
    tail_period,
)

DEFAULT_WINDOW = 3


def default_horizon(n_max: int) -> int:
    return 10 * n_max + 1000


@dataclass(frozen=True)
class Completed:
    length: int


@dataclass(frozen=True)
class HitDelta:
    step: int
    point: Fraction


@dataclass(frozen=True)
class Itinerary:
    symbols: tuple[int, ...]
    termination: Completed | HitDelta
    n_symbols: int

    @property
    def completed(self) -> bool:
        return isinstance(self.termination, Completed)

    def __len__(self):
        return len(self.symbols)

    def as_bytes(self) -> bytes:
        return bytes(self.symbols)


def _canonical_cycle(pts):
    pts = list(pts)
    k = pts.index(min(pts))
    return tuple(pts[k:] + pts[:k])


def itinerary(m: ValidatedPCIM, x, T: int) -> Itinerary:
    if T < 0:
        raise ValueError("T must be non-negative")
    return _itinerary_from_scan(scan_orbit(m, as_rational(x), T), T, m.n_pieces)


def _itinerary_from_scan(scan: OrbitScan, T: int, n_symbols: int) -> Itinerary:
    term = Completed(T) if scan.hit is None else HitDelta(*scan.hit)
    return Itinerary(tuple(scan.symbols), term, n_symbols)


def word_set(it: Itinerary, n: int) -> set[tuple[int, ...]]:
    return {tuple(w) for w in _word_set_bytes(it, n)}


def _word_set_bytes(it: Itinerary, n: int, data: bytes | None = None) -> set[bytes]:
    if not it.completed:
        raise ItineraryLeftXtilde(f"itinerary stops at {it.termination}")
    if n < 1:
        raise ValueError("word length must be >= 1")
    if n > len(it):
        raise PrefixTooShort(f"need at least {n} symbols, have {len(it)}")
    s = it.as_bytes() if data is None else data
    return {s[t:t + n] for t in range(len(s) - n + 1)}


class AffineFit(NamedTuple):
    m0: int
    alpha: int
    beta: int


@dataclass(frozen=True)
class ComplexityProfile:
    values: tuple[int, ...]  # values[k] = p(k + 1)
    affine_fit: AffineFit | None
    horizon_T: int
    n_symbols: int

    @property
    def n_max(self) -> int:
        return len(self.values)

    def p(self, n: int) -> int:
        return self.values[n - 1]


def complexity_profile(it: Itinerary, n_max: int, window: int = DEFAULT_WINDOW) -> ComplexityProfile:
    """Factor counts p(1..n_max) over the recorded prefix, with an affine fit when one is stable."""
    if not it.completed:
        raise ItineraryLeftXtilde(f"itinerary stops at {it.termination}")
    if len(it) < n_max + window + 1:
        raise PrefixTooShort(
            f"prefix of length {len(it)} too short for n_max={n_max} with window {window}"
        )
    data = it.as_bytes()
    values = tuple(len(_word_set_bytes(it, n, data)) for n in range(1, n_max + 1))
    profile = ComplexityProfile(values, None, len(it), it.n_symbols)
    fit = None
    if n_max >= window + 2:
        try:
            fit = detect_affine(profile, window)
        except AlphaOutOfRange:
            fit = None
    return ComplexityProfile(values, fit, len(it), it.n_symbols)


def detect_affine(profile: ComplexityProfile, window: int = DEFAULT_WINDOW, n_symbols: int | None = None) -> AffineFit | None:
    """Smallest m0 with p affine on [m0, n_max] and at least ``window`` + 1 constant differences.

    Returns None when no such tail exists or when the fitted intercept is < 1
    (insufficient data). Raises AlphaOutOfRange when the slope cannot come from
    a separated map on ``n_symbols`` pieces.
    """
    p = profile.values
    n_max = len(p)
    if n_max < window + 2:
        raise PrefixTooShort(f"profile of length {n_max} too short for window {window}")
    N = profile.n_symbols if n_symbols is None else n_symbols
    diffs = [p[k + 1] - p[k] for k in range(n_max - 1)]  # diffs[k] = p(k+2) - p(k+1)
    # walk back from the end while the difference stays constant
    k = len(diffs) - 1
    alpha = diffs[k]
    while k > 0 and diffs[k - 1] == alpha:
        k -= 1
    m0 = k + 1
    if len(diffs) - k < window + 1:
        return None
    if not 0 <= alpha <= N - 1:
        raise AlphaOutOfRange(alpha, N)
    beta = p[m0 - 1] - alpha * m0
    if beta < 1:
        return None
    return AffineFit(m0, alpha, beta)


# --- omega-limit classification ---

@dataclass(frozen=True)
class Periodic:
    orbit: tuple[Fraction, ...]
    period: int
    exact_repeat: bool = False

    def __str__(self):
        return f"Periodic({self.period})"


@dataclass(frozen=True)
class CantorLike:
    alpha: int

    def __str__(self):
        return f"CantorLike({self.alpha})"


@dataclass(frozen=True)
class Undetermined:
    reason: str

    def __str__(self):
        return "Undetermined"


OmegaClass = Periodic | CantorLike | Undetermined


@dataclass(frozen=True)
class OrbitAnalysis:
    omega: OmegaClass
    itinerary: Itinerary
    profile: ComplexityProfile | None
    tail_period: int | None


def analyze_orbit(m: ValidatedPCIM, x, T: int, n_max: int, window: int = DEFAULT_WINDOW) -> OrbitAnalysis:
    """Itinerary, complexity and omega-limit class of one orbit.

    A cycle is reported only when certified exactly: by an exact repeat of the
    orbit, by capture (the orbit provably follows the cycle forever), or by
    solving the cycle of a periodic itinerary tail. Otherwise a slope >= 1 in
    the complexity gives a Cantor-like candidate.
    """
    x = as_rational(x)
    scan = scan_orbit(m, x, T)
    it = _itinerary_from_scan(scan, T, m.n_pieces)
    if not it.completed:
        raise ItineraryLeftXtilde(
            f"orbit of {x} hits the cut point {it.termination.point} at step {it.termination.step}"
        )
    symbols = scan.symbols
    P = tail_period(symbols, max(len(symbols) // 2, 1))
    profile = None
    if len(it) >= n_max + window + 1:
        profile = complexity_profile(it, n_max, window)

    def done(omega):
        return OrbitAnalysis(omega, it, profile, P)

    if scan.repeat is not None:
        start, period, y = scan.repeat
        return done(Periodic(_canonical_cycle(iterate(m, y, period - 1)), period, True))
    if scan.capture is not None:
        cyc = scan.capture.cycle
        return done(Periodic(_canonical_cycle(cyc), len(cyc)))
    if P is not None:
        start = len(symbols) - max(len(symbols) // 2, 1)
        pts = cycle_for_word(m, symbols[start:start + P])
        if pts is not None:
            return done(Periodic(_canonical_cycle(pts), P))
    fit = None
    if profile is not None:
        try:
            fit = detect_affine(profile, window)
        except AlphaOutOfRange as exc:
            return done(Undetermined(str(exc)))
    if P is not None:
        return done(Undetermined(f"tail looks {P}-periodic but no exact cycle verifies"))
    if fit is not None and fit.alpha >= 1:
        return done(CantorLike(fit.alpha))
    if fit is None:
        return done(Undetermined("no stable affine complexity within budget"))
    return done(Undetermined("constant complexity but no periodic tail within budget"))


def classify_omega(m: ValidatedPCIM, x, T: int | None = None, n_max: int = 20) -> OmegaClass:
    if T is None:
        T = default_horizon(n_max)
    return analyze_orbit(m, x, T, n_max).omega
