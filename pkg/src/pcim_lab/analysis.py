"""Attractor covers, basic pieces, dimension and entropy estimates, sweeps."""
from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .atoms import (
    Atom,
    AtomSet,
    Component,
    atom_from_code,
    components,
    generations,
    iter_generations,
)
from .errors import (
    EpsilonTooLarge,
    HypothesisViolation,
    ItineraryLeftXtilde,
    LambdaDegenerate,
    PCIMError,
    RepresentativeOnDeltaPreimage,
    SeparationRequired,
    ValidationError,
)
from .map_core import (
    DEFAULT_D_HORIZON,
    ClosedInterval,
    Orbit,
    ValidatedPCIM,
    as_rational,
    check_D_in_Xtilde,
    contracted_rotation,
    evaluate,
    validate_pcim,
)
from .symbolic import (
    AffineFit,
    CantorLike,
    Completed,
    Itinerary,
    Periodic,
    analyze_orbit,
    complexity_profile,
    default_horizon,
    itinerary,
    _word_set_bytes,
)


def require_separation(m: ValidatedPCIM) -> None:
    sep = m.separation_certificate
    if not sep:
        i, j = sep.pair
        raise SeparationRequired(
            f"separation property fails: closures of f(X{i}) and f(X{j}) meet in {sep.overlap}",
            pair=sep.pair,
            overlap=sep.overlap,
        )


def require_D_in_Xtilde(m: ValidatedPCIM, horizon: int = DEFAULT_D_HORIZON) -> None:
    rep = check_D_in_Xtilde(m, horizon)
    if not rep:
        raise HypothesisViolation(
            f"one-sided limit {rep.point} reaches the cut set at step {rep.step}"
        )


def log_rational(q: Fraction) -> float:
    return math.log(q.numerator) - math.log(q.denominator)


# --- attractor covers ---

@dataclass(frozen=True)
class AttractorCover:
    generation: int
    intervals: tuple[ClosedInterval, ...]
    total_length: Fraction
    max_diam: Fraction


def cover_from_atoms(atoms: AtomSet) -> AttractorCover:
    ivs = tuple(a.carrier for a in atoms)
    return AttractorCover(
        atoms.generation,
        ivs,
        sum((iv.diameter for iv in ivs), Fraction(0)),
        max((iv.diameter for iv in ivs), default=Fraction(0)),
    )


def approximate_attractor(m: ValidatedPCIM, n: int, max_depth: int | None = None) -> AttractorCover:
    return cover_from_atoms(generations(m, n, max_depth)[-1])


# --- basic pieces ---

@dataclass(frozen=True)
class PeriodicPiece:
    orbit: tuple[Fraction, ...]
    period: int
    seed: Fraction
    fit: AffineFit | None = None


@dataclass(frozen=True)
class CantorCandidate:
    seed: Fraction
    alpha: int
    cover: tuple[Atom, ...]  # deep atoms visited by the seed's tail
    tail_symbols: bytes = field(repr=False, default=b"")
    fit: AffineFit | None = None

    @property
    def cover_depth(self) -> int:
        return self.cover[0].generation if self.cover else 0


BasicPiece = PeriodicPiece | CantorCandidate


@dataclass
class BasicPieceReport:
    periodic_orbits: list[PeriodicPiece]
    cantor_candidates: list[CantorCandidate]
    undetermined: list[tuple[Fraction, str]] = field(default_factory=list)
    skipped: list[tuple[Fraction, str]] = field(default_factory=list)

    @property
    def N1(self) -> int:
        return len(self.periodic_orbits)

    @property
    def N2(self) -> int:
        return len(self.cantor_candidates)

    @property
    def pieces(self) -> list[BasicPiece]:
        return [*self.periodic_orbits, *self.cantor_candidates]

    @property
    def complete(self) -> bool:
        """True when every usable seed was classified."""
        return not self.undetermined and bool(self.pieces)


def default_seeds(m: ValidatedPCIM, depth: int = 8) -> list[Fraction]:
    gen = generations(m, depth, max_depth=max(depth, 1))[-1]
    return [a.carrier.midpoint for a in gen]


def find_basic_pieces(
    m: ValidatedPCIM,
    seeds: Sequence | None = None,
    T: int | None = None,
    n_max: int = 20,
    seed_depth: int = 8,
    cover_depth: int = 16,
) -> BasicPieceReport:
    require_separation(m)
    if seeds is None:
        seeds = default_seeds(m, seed_depth)
    if T is None:
        T = default_horizon(n_max)
    report = BasicPieceReport([], [])
    seen_orbits = set()
    seen_codes: list[set] = []
    for s in seeds:
        s = as_rational(s)
        try:
            res = analyze_orbit(m, s, T, n_max)
        except ItineraryLeftXtilde as exc:
            report.skipped.append((s, str(exc)))
            continue
        fit = res.profile.affine_fit if res.profile else None
        omega = res.omega
        if isinstance(omega, Periodic):
            key = frozenset(omega.orbit)
            if key not in seen_orbits:
                seen_orbits.add(key)
                report.periodic_orbits.append(PeriodicPiece(omega.orbit, omega.period, s, fit))
        elif isinstance(omega, CantorLike):
            symbols = res.itinerary.as_bytes()
            tail = symbols[len(symbols) // 2:]
            depth = min(cover_depth, len(tail))
            codes = {tuple(w) for w in _word_set_bytes(res.itinerary, depth, tail)}
            if any(codes & other for other in seen_codes):
                continue
            seen_codes.append(codes)
            cover = []
            for code in sorted(codes):
                A = atom_from_code(m, code)
                if A is not None:
                    cover.append(Atom(A, code))
            cover.sort(key=lambda a: a.carrier.lo)
            report.cantor_candidates.append(CantorCandidate(s, omega.alpha, tuple(cover), tail, fit))
        else:
            report.undetermined.append((s, omega.reason))
    return report


def atoms_on_piece(m: ValidatedPCIM, piece: BasicPiece, n: int, max_depth: int | None = None) -> int:
    """Number of generation-n atoms meeting the piece (its deep cover, for Cantor candidates)."""
    gen = generations(m, n, max_depth)[-1]
    return _atoms_meeting(gen, piece)


def _atoms_meeting(gen: AtomSet, piece: BasicPiece) -> int:
    if isinstance(piece, PeriodicPiece):
        return sum(1 for a in gen if any(x in a.carrier for x in piece.orbit))
    return sum(1 for a in gen if any(a.carrier.intersects(c.carrier) for c in piece.cover))


def representative_itinerary_bytes(m: ValidatedPCIM, piece: BasicPiece, length: int) -> bytes:
    if isinstance(piece, PeriodicPiece):
        return itinerary(m, piece.orbit[0], length).as_bytes()
    return piece.tail_symbols


@dataclass(frozen=True)
class SumFormulaRow:
    n: int
    atom_count: int
    complexity_sum: int
    per_piece: tuple[int, ...]


@dataclass(frozen=True)
class SumFormulaCheck:
    rows: tuple[SumFormulaRow, ...]
    stable_from: int

    @property
    def holds(self) -> bool:
        return all(r.atom_count == r.complexity_sum for r in self.rows if r.n >= self.stable_from)


def sum_formula(m: ValidatedPCIM, report: BasicPieceReport, n_max: int, margin: int = 10) -> SumFormulaCheck:
    """Compare #atoms(n) with the summed complexities of one itinerary per basic piece.

    The stable range starts once every generation-n atom still contains an atom
    ``margin`` generations deeper (transient atoms that miss the attractor are
    excluded that way), distinct pieces no longer share a length-n word (so they
    sit in distinct atoms) and every representative's complexity is affine.
    """
    gens = generations(m, n_max + margin, max_depth=n_max + margin)
    deepest = gens[-1]
    reps, words = [], []
    for piece in report.pieces:
        data = representative_itinerary_bytes(m, piece, 4 * (n_max + margin) + 200)
        it = Itinerary(tuple(data), Completed(len(data)), m.n_pieces)
        reps.append(complexity_profile(it, n_max))
        words.append((it, data))
    rows = []
    stable = 1
    for gen in gens[:n_max]:
        n = gen.generation
        per = tuple(p.p(n) for p in reps)
        rows.append(SumFormulaRow(n, len(gen), sum(per), per))
        survivors = {a.code[-n:] for a in deepest}
        shared = len(set().union(*(_word_set_bytes(it, n, d) for it, d in words))) != sum(per)
        if len(survivors) != len(gen) or shared:
            stable = n + 1
    for p in reps:
        if p.affine_fit is not None:
            stable = max(stable, p.affine_fit.m0)
    return SumFormulaCheck(tuple(rows), stable)


# --- dimension ---

@dataclass(frozen=True)
class DimensionRow:
    n: int
    epsilon: Fraction
    atom_count: int
    max_diam: Fraction
    d: float | None


@dataclass(frozen=True)
class DimensionEstimate:
    rows: tuple[DimensionRow, ...]
    contraction_rate: Fraction

    def row(self, n: int) -> DimensionRow:
        return self.rows[n - 1]


def box_dimension_estimate(m: ValidatedPCIM, n_max: int, max_depth: int | None = None) -> DimensionEstimate:
    require_separation(m)
    lam = m.contraction_rate
    if lam >= 1:
        raise LambdaDegenerate(f"contraction rate {lam} gives log(1/lambda) <= 0")
    diam = m.domain.diameter
    log_inv_lam = -log_rational(lam)
    log_inv_diam = -log_rational(diam)
    rows = []
    eps = diam
    for gen in generations(m, n_max, max_depth):
        n = gen.generation
        eps = eps * lam
        md = gen.max_diameter
        # the atoms themselves witness the cover bound ell(Lambda, eps_n) <= #A_n
        assert md <= eps, f"atom of diameter {md} exceeds eps_{n} = {eps}"
        denom = n * log_inv_lam + log_inv_diam
        d = math.log(len(gen)) / denom if denom > 0 else None
        rows.append(DimensionRow(n, eps, len(gen), md, d))
    return DimensionEstimate(tuple(rows), lam)


# --- entropy ---

def min_cut_gap(m: ValidatedPCIM) -> Fraction | None:
    d = m.delta
    if len(d) < 2:
        return None
    return min(b - a for a, b in zip(d, d[1:]))


def _check_epsilon(m: ValidatedPCIM, epsilon: Fraction) -> None:
    if epsilon <= 0:
        raise EpsilonTooLarge(f"epsilon must be positive, got {epsilon}")
    gap = min_cut_gap(m)
    if gap is not None and epsilon >= gap:
        raise EpsilonTooLarge(f"epsilon {epsilon} is not below the minimal cut gap {gap}")


def diameter_depth(m: ValidatedPCIM, epsilon: Fraction, at_least: int = 1) -> int:
    """Smallest n >= at_least with every generation-n atom of diameter < epsilon."""
    for gen in iter_generations(m):
        if gen.generation >= at_least and gen.max_diameter < epsilon:
            return gen.generation
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class EntropyRow:
    n: int
    r_upper: int
    rate: float
    affine_bound: int


@dataclass(frozen=True)
class EntropyEstimate:
    epsilon: Fraction
    n0: int
    atoms_n0: int
    rows: tuple[EntropyRow, ...]

    def row(self, n: int) -> EntropyRow:
        return self.rows[n - 1]


def entropy_estimate(m: ValidatedPCIM, epsilon, n_max: int) -> EntropyEstimate:
    """Upper bounds r_n <= #A_{n+n0} for the minimal spanning cardinality, with their growth rates."""
    require_separation(m)
    epsilon = as_rational(epsilon)
    _check_epsilon(m, epsilon)
    n0 = diameter_depth(m, epsilon)
    counts = [len(g) for g in itertools.islice(iter_generations(m), n0 + n_max)]
    a_n0 = counts[n0 - 1]
    N = m.n_pieces
    rows = []
    for n in range(1, n_max + 1):
        r = counts[n0 + n - 1]
        rows.append(EntropyRow(n, r, math.log(r) / n, n * (N - 1) + a_n0))
    return EntropyEstimate(epsilon, n0, a_n0, tuple(rows))


# --- spanning sets ---

@dataclass(frozen=True)
class SpanningSet:
    points: tuple[Fraction, ...]
    n: int
    epsilon: Fraction
    n0: int
    components_total: int
    components_kept: int

    def __len__(self):
        return len(self.points)


def _avoids_delta(m: ValidatedPCIM, x: Fraction, n: int) -> bool:
    orb = Orbit(m, x)
    for _ in range(n):
        if orb.piece() is None:
            return False
        orb.step()
    return True


def _representative(m: ValidatedPCIM, comp: Component, n: int, tries: int = 64) -> Fraction:
    mid = (comp.lo + comp.hi) / 2
    candidates = [mid]
    half = (comp.hi - comp.lo) / 2
    for k in range(1, tries):
        half /= 2
        candidates.extend((mid - half, mid + half))
    for x in candidates:
        if x in comp and _avoids_delta(m, x, n):
            return x
    raise RepresentativeOnDeltaPreimage(
        f"no point of the component ({comp.lo}, {comp.hi}) avoids the cut set for {n} steps"
    )


def spanning_set(m: ValidatedPCIM, n: int, epsilon, safety: int = 8, d_horizon: int = DEFAULT_D_HORIZON) -> SpanningSet:
    require_separation(m)
    require_D_in_Xtilde(m, d_horizon)
    epsilon = as_rational(epsilon)
    if epsilon <= 0:
        raise EpsilonTooLarge("epsilon must be positive")
    n0 = diameter_depth(m, epsilon, at_least=n)
    gens = generations(m, n0 + safety, max_depth=n0 + safety)
    base, deep = gens[n0 - 1], gens[-1]
    points = []
    total = kept = 0
    for A in base:
        inner = [d.carrier for d in deep if A.carrier.intersects(d.carrier)]
        for comp in components(m, A.carrier, n):
            total += 1
            for c in inner:
                piece = comp.intersection(c)
                if piece is not None:
                    kept += 1
                    points.append(_representative(m, piece, n))
                    break
    return SpanningSet(tuple(points), n, epsilon, n0, total, kept)


def orbit_prefix(m: ValidatedPCIM, x, n: int) -> list[Fraction]:
    pts = [as_rational(x)]
    for _ in range(n - 1):
        pts.append(evaluate(m, pts[-1]))
    return pts


def shadowing_witness(m: ValidatedPCIM, reps: Sequence[Fraction], y, n: int, epsilon) -> Fraction | None:
    """A representative whose first n iterates stay within epsilon of y's, if any."""
    epsilon = as_rational(epsilon)
    ys = orbit_prefix(m, y, n)
    for r in reps:
        try:
            rs = orbit_prefix(m, r, n)
        except PCIMError:
            continue
        if all(abs(a - b) < epsilon for a, b in zip(ys, rs)):
            return r
    return None


# --- pseudo-invariance ---

@dataclass(frozen=True)
class PseudoInvariance:
    ok: bool
    witness: tuple | None = None

    def __bool__(self):
        return self.ok


def check_pseudo_invariant(m: ValidatedPCIM, S) -> PseudoInvariance:
    S = {as_rational(x) for x in S}
    delta = set(m.delta)
    for x in sorted(S):
        if x in delta:
            limits = tuple(v for v in m.limits[x] if v is not None)
            if not any(v in S for v in limits):
                return PseudoInvariance(False, (x, limits))
        else:
            y = evaluate(m, x)
            if y not in S:
                return PseudoInvariance(False, (x, y))
    return PseudoInvariance(True)


# --- parameter sweeps ---

FAMILIES = {
    "contracted_rotation": (contracted_rotation, ("lam", "delta")),
}

_PARAM_ALIASES = {"lambda": "lam"}


@dataclass(frozen=True)
class GridAxis:
    name: str
    lo: Fraction
    hi: Fraction
    steps: int

    def values(self) -> list[Fraction]:
        if self.steps == 1:
            return [self.lo]
        h = (self.hi - self.lo) / (self.steps - 1)
        return [self.lo + k * h for k in range(self.steps)]


def parse_grid(text: str) -> GridAxis:
    """Parse ``name=lo:hi:steps`` (rationals as p/q, endpoints included)."""
    try:
        name, rng = text.split("=", 1)
        lo, hi, steps = rng.split(":")
        axis = GridAxis(_PARAM_ALIASES.get(name.strip(), name.strip()), as_rational(lo), as_rational(hi), int(steps))
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"bad grid {text!r}; expected name=lo:hi:steps") from None
    if axis.steps < 1:
        raise ValueError(f"grid {text!r} needs at least one step")
    return axis


def grid_cells(fixed: dict, axes: Sequence[GridAxis]) -> list[dict]:
    cells = []
    names = [a.name for a in axes]
    for combo in itertools.product(*(a.values() for a in axes)):
        cell = {k: as_rational(v) for k, v in fixed.items()}
        cell.update(zip(names, combo))
        cells.append(cell)
    return cells


@dataclass(frozen=True)
class SweepRow:
    params: dict
    classification: str
    period: int | None
    alpha: int | None
    orbit: tuple[Fraction, ...] | None
    fit: AffineFit | None
    atom_count: int | None
    runtime: float
    note: str = ""


def sweep_cell(family: str, params: dict, T: int, n_max: int, seed_depth: int = 4) -> SweepRow:
    start = time.perf_counter()
    builder, names = FAMILIES[family]

    def row(cls, **kw):
        return SweepRow(dict(params), cls, runtime=time.perf_counter() - start, **kw)

    try:
        m = validate_pcim(builder(*(params[k] for k in names)))
    except (ValidationError, KeyError) as exc:
        return row("Invalid", period=None, alpha=None, orbit=None, fit=None, atom_count=None, note=str(exc))
    if not m.separation_certificate:
        return row("Invalid", period=None, alpha=None, orbit=None, fit=None, atom_count=None,
                   note="separation property fails")
    try:
        rep = find_basic_pieces(m, T=T, n_max=n_max, seed_depth=seed_depth)
        count = len(generations(m, n_max, max_depth=n_max)[-1])
    except PCIMError as exc:
        return row("Undetermined", period=None, alpha=None, orbit=None, fit=None, atom_count=None, note=str(exc))
    pieces = rep.pieces
    fit = pieces[0].fit if pieces else None
    if rep.undetermined or not pieces:
        reason = rep.undetermined[0][1] if rep.undetermined else "every seed hit the cut set"
        return row("Undetermined", period=None, alpha=None, orbit=None, fit=fit, atom_count=count, note=reason)
    labels = [f"Periodic({p.period})" for p in rep.periodic_orbits]
    labels += [f"CantorLike({c.alpha})" for c in rep.cantor_candidates]
    first = pieces[0]
    if isinstance(first, PeriodicPiece) and len(pieces) == 1:
        return row(labels[0], period=first.period, alpha=0, orbit=first.orbit, fit=fit, atom_count=count)
    if len(pieces) == 1:
        return row(labels[0], period=None, alpha=first.alpha, orbit=None, fit=fit, atom_count=count)
    return row("+".join(labels), period=None, alpha=None, orbit=None, fit=fit, atom_count=count)


def _run_cell(args):
    return sweep_cell(*args)


def iter_sweep(family: str, fixed: dict, axes: Sequence[GridAxis], T: int, n_max: int,
               workers: int = 1, seed_depth: int = 4) -> Iterator[SweepRow]:
    """Rows in grid order; cells run in a process pool when ``workers`` > 1."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; known: {sorted(FAMILIES)}")
    jobs = [(family, cell, T, n_max, seed_depth) for cell in grid_cells(fixed, axes)]
    if workers <= 1:
        for job in jobs:
            yield _run_cell(job)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(_run_cell, jobs)


def parameter_sweep(family: str, fixed: dict, axes: Sequence[GridAxis], T: int, n_max: int,
                    workers: int = 1, seed_depth: int = 4) -> list[SweepRow]:
    return list(iter_sweep(family, fixed, axes, T, n_max, workers, seed_depth))
