"""``pcim-lab`` command line front end.

Exit status: 0 success, 1 when a standing hypothesis of the theory fails
(separation property, D inside X-tilde at the horizon), 2 on input errors.
"""
from __future__ import annotations

import argparse
import contextlib
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from . import analysis, atoms, symbolic
from .errors import HypothesisViolation, PCIMError
from .map_core import DEFAULT_D_HORIZON, ValidatedPCIM, as_rational, check_D_in_Xtilde, validate_pcim
from .mapfile import dump_map, parse_map_file, parse_map_text
from .reports import CsvReportWriter, Report, now_stamp, read_report

COMMANDS = ("validate", "itinerary", "complexity", "atoms", "classify", "dimension", "entropy", "spanning", "sweep")
MAX_HORIZON = 10**7

_DEFAULT_DEPTH = {
    "atoms": 10, "complexity": 20, "classify": 20, "dimension": 40,
    "entropy": 50, "spanning": 3, "sweep": 20, "itinerary": 20, "validate": 10,
}

EXIT_OK, EXIT_HYPOTHESIS, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    map: str | None = None
    depth: int | None = None
    horizon: int | None = None
    epsilon: str | None = None
    point: str | None = None
    grid: list[str] = field(default_factory=list)
    family: str = "contracted_rotation"
    output: str = "csv"
    workers: int = 1
    deterministic: bool = False
    out_file: str | None = None

    def resolve(self) -> "RunConfig":
        """Fill per-command defaults and enforce the hard caps."""
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if self.depth is None:
            self.depth = _DEFAULT_DEPTH[self.command]
        cap = atoms.max_depth_cap()
        if not 1 <= self.depth <= cap:
            raise InputError(f"--depth {self.depth} outside 1..{cap} (set PCIM_MAX_DEPTH to raise the cap)")
        if self.horizon is None:
            if self.command == "validate":
                self.horizon = DEFAULT_D_HORIZON
            elif self.command == "itinerary":
                self.horizon = 100
            else:
                self.horizon = symbolic.default_horizon(self.depth)
        if not 1 <= self.horizon <= MAX_HORIZON:
            raise InputError(f"--horizon {self.horizon} outside 1..{MAX_HORIZON}")
        if self.epsilon is None and self.command in ("entropy", "spanning"):
            self.epsilon = "1/10"
        if self.output not in ("csv", "json"):
            raise InputError(f"--output must be csv or json, got {self.output!r}")
        if self.workers < 1:
            raise InputError("--workers must be >= 1")
        if self.command == "sweep":
            if not self.grid:
                raise InputError("sweep needs at least one --grid")
        elif self.map is None:
            raise InputError(f"{self.command} needs --map")
        if self.command in ("itinerary", "complexity") and self.point is None:
            raise InputError(f"{self.command} needs --point")
        return self

    def embedded(self) -> dict:
        d = asdict(self)
        d.pop("out_file")
        return d


def _rational(text: str, flag: str) -> Fraction:
    try:
        return as_rational(text)
    except (ValueError, ZeroDivisionError):
        raise InputError(f"{flag} expects a rational p/q, got {text!r}") from None


def _require_hypotheses(m: ValidatedPCIM, d_check: bool, horizon: int = DEFAULT_D_HORIZON):
    analysis.require_separation(m)
    if d_check:
        analysis.require_D_in_Xtilde(m, horizon)


# --- subcommands: each fills the report and returns an exit status ---

def _validate(m, cfg, rep):
    sep = m.separation_certificate
    dx = check_D_in_Xtilde(m, cfg.horizon)
    rep.summary = {
        "pieces": m.n_pieces,
        "contraction_rate": m.contraction_rate,
        "cut_set": list(m.delta),
        "one_sided_limits": list(m.one_sided_limit_set),
        "separated": sep.separated,
        "violating_pair": list(sep.pair) if sep.pair else None,
        "overlap": [sep.overlap.lo, sep.overlap.hi] if sep.overlap else None,
        "D_in_Xtilde": "VerifiedUpTo" if dx else "FailsAt",
        "D_horizon": cfg.horizon,
        "D_failure": [dx.point, dx.step] if not dx else None,
        "D_proven": list(dx.proven),
    }
    rep.columns = ["piece", "lo", "hi", "a", "b", "image_lo", "image_hi"]
    for i, br in enumerate(m.branches, start=1):
        pc, img = m.piece_closure(i), m.branch_image(i)
        rep.rows.append([i, pc.lo, pc.hi, br.a, br.b, img.lo, img.hi])
    if not sep:
        print(f"separation property fails for pieces {sep.pair}: overlap [{sep.overlap.lo}, {sep.overlap.hi}]",
              file=sys.stderr)
    if not dx:
        print(f"D not inside X-tilde: {dx.point} reaches the cut set at step {dx.step}", file=sys.stderr)
    return EXIT_OK if sep and dx else EXIT_HYPOTHESIS


def _itinerary(m, cfg, rep):
    it = symbolic.itinerary(m, _rational(cfg.point, "--point"), cfg.horizon)
    term = it.termination
    rep.summary = {"length": len(it), "termination": type(term).__name__}
    if isinstance(term, symbolic.HitDelta):
        rep.summary.update(hit_step=term.step, hit_point=term.point)
    rep.columns = ["t", "symbol"]
    rep.rows = [[t, s] for t, s in enumerate(it.symbols)]
    return EXIT_OK


def _complexity(m, cfg, rep):
    it = symbolic.itinerary(m, _rational(cfg.point, "--point"), cfg.horizon)
    prof = symbolic.complexity_profile(it, cfg.depth)
    fit = prof.affine_fit
    rep.summary = {"horizon_T": prof.horizon_T, "affine_fit": fit._asdict() if fit else None}
    rep.columns = ["n", "p"]
    rep.rows = [[n, v] for n, v in enumerate(prof.values, start=1)]
    return EXIT_OK


def _atoms(m, cfg, rep):
    rep.columns = ["generation", "code", "lo", "hi"]
    for gen in atoms.generations(m, cfg.depth, max_depth=cfg.depth):
        for a in gen:
            rep.rows.append([gen.generation, a.code_str(), a.carrier.lo, a.carrier.hi])
    rep.summary = {"counts": atoms.atom_counts(m, cfg.depth, max_depth=cfg.depth)}
    return EXIT_OK


def _omega_row(omega, seed):
    if isinstance(omega, symbolic.Periodic):
        return ["Periodic", omega.period, 0, list(omega.orbit), seed, ""]
    if isinstance(omega, symbolic.CantorLike):
        return ["CantorLike", None, omega.alpha, None, seed, ""]
    return ["Undetermined", None, None, None, seed, omega.reason]


def _classify(m, cfg, rep):
    _require_hypotheses(m, d_check=True)
    rep.columns = ["kind", "period", "alpha", "orbit", "seed", "note"]
    if cfg.point is not None:
        x = _rational(cfg.point, "--point")
        res = symbolic.analyze_orbit(m, x, cfg.horizon, cfg.depth)
        rep.rows.append(_omega_row(res.omega, x))
        fit = res.profile.affine_fit if res.profile else None
        rep.summary = {"affine_fit": fit._asdict() if fit else None}
        return EXIT_OK
    found = analysis.find_basic_pieces(m, T=cfg.horizon, n_max=cfg.depth)
    for p in found.periodic_orbits:
        rep.rows.append(["Periodic", p.period, 0, list(p.orbit), p.seed, ""])
    for c in found.cantor_candidates:
        rep.rows.append(["CantorLike", None, c.alpha, None, c.seed, f"cover depth {c.cover_depth}"])
    for s, why in found.undetermined:
        rep.rows.append(["Undetermined", None, None, None, s, why])
    rep.summary = {"N1": found.N1, "N2": found.N2, "skipped_seeds": len(found.skipped)}
    return EXIT_OK


def _dimension(m, cfg, rep):
    _require_hypotheses(m, d_check=False)
    est = analysis.box_dimension_estimate(m, cfg.depth, max_depth=cfg.depth)
    rep.columns = ["n", "epsilon", "atom_count", "max_diam", "d"]
    rep.rows = [[r.n, r.epsilon, r.atom_count, r.max_diam, r.d] for r in est.rows]
    rep.summary = {"contraction_rate": est.contraction_rate}
    return EXIT_OK


def _entropy(m, cfg, rep):
    _require_hypotheses(m, d_check=False)
    est = analysis.entropy_estimate(m, _rational(cfg.epsilon, "--epsilon"), cfg.depth)
    rep.columns = ["n", "r_upper", "rate", "affine_bound"]
    rep.rows = [[r.n, r.r_upper, r.rate, r.affine_bound] for r in est.rows]
    rep.summary = {"epsilon": est.epsilon, "n0": est.n0, "atoms_n0": est.atoms_n0}
    return EXIT_OK


def _spanning(m, cfg, rep):
    _require_hypotheses(m, d_check=True)
    sp = analysis.spanning_set(m, cfg.depth, _rational(cfg.epsilon, "--epsilon"))
    rep.columns = ["representative"]
    rep.rows = [[x] for x in sp.points]
    rep.summary = {
        "n": sp.n, "epsilon": sp.epsilon, "n0": sp.n0,
        "components_total": sp.components_total, "components_kept": sp.components_kept,
    }
    return EXIT_OK


HANDLERS = {
    "validate": _validate, "itinerary": _itinerary, "complexity": _complexity, "atoms": _atoms,
    "classify": _classify, "dimension": _dimension, "entropy": _entropy, "spanning": _spanning,
}


def _sweep_row(row: analysis.SweepRow, names, deterministic):
    fit = row.fit
    return [
        *(row.params.get(k) for k in names),
        row.classification, row.period, row.alpha,
        list(row.orbit) if row.orbit else None,
        fit.m0 if fit else None, fit.alpha if fit else None, fit.beta if fit else None,
        row.atom_count, None if deterministic else round(row.runtime, 6), row.note,
    ]


def _sweep(cfg: RunConfig, rep: Report, sink):
    axes = [analysis.parse_grid(g) for g in cfg.grid]
    names = [a.name for a in axes]
    rep.columns = [*names, "classification", "period", "alpha", "orbit", "m0", "fit_alpha", "beta",
                   "atom_count", "runtime", "note"]
    rows = analysis.iter_sweep(cfg.family, {}, axes, cfg.horizon, cfg.depth, workers=cfg.workers)
    counts: dict[str, int] = {}
    if cfg.output == "csv":
        writer = CsvReportWriter(sink, rep)
        for row in rows:
            counts[row.classification] = counts.get(row.classification, 0) + 1
            writer.write_row(_sweep_row(row, names, cfg.deterministic))
        rep.summary = {"cells": sum(counts.values()), "classes": dict(sorted(counts.items()))}
        writer.finish()
    else:
        for row in rows:
            counts[row.classification] = counts.get(row.classification, 0) + 1
            rep.rows.append(_sweep_row(row, names, cfg.deterministic))
        rep.summary = {"cells": sum(counts.values()), "classes": dict(sorted(counts.items()))}
        sink.write(rep.to_json())
    return EXIT_OK


@contextlib.contextmanager
def _open_sink(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def run(cfg: RunConfig, map_text: str | None = None) -> int:
    """Execute one run; ``map_text`` overrides reading ``cfg.map`` (used by replay)."""
    try:
        cfg.resolve()
        m = None
        canonical = None
        if cfg.command != "sweep":
            if map_text is not None:
                defn = parse_map_text(map_text)
            else:
                defn = parse_map_file(cfg.map)
            canonical = dump_map(defn)
            m = validate_pcim(defn)
        rep = Report(cfg.command, cfg.embedded(), canonical,
                     timestamp=None if cfg.deterministic else now_stamp())
        if cfg.command == "sweep":
            with _open_sink(cfg.out_file) as sink:
                return _sweep(cfg, rep, sink)
        status = HANDLERS[cfg.command](m, cfg, rep)
        text = rep.to_json() if cfg.output == "json" else rep.to_csv()
        with _open_sink(cfg.out_file) as sink:
            sink.write(text)
        return status
    except HypothesisViolation as exc:
        print(f"pcim-lab: hypothesis not met: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (InputError, PCIMError, ValueError, OSError) as exc:
        print(f"pcim-lab: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pcim-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--replay", metavar="FILE", help="re-run the configuration recorded in a report")
    parser.add_argument("--out-file", help="write the report here instead of stdout")
    sub = parser.add_subparsers(dest="command")
    for name in COMMANDS:
        p = sub.add_parser(name)
        if name != "sweep":
            p.add_argument("--map", required=True, help="map definition file")
        p.add_argument("--depth", type=int, help="generation / word length / n_max")
        p.add_argument("--horizon", type=int, help="orbit length T (D-check horizon for validate)")
        p.add_argument("--epsilon", help="scale p/q for entropy and spanning")
        p.add_argument("--point", help="starting point p/q")
        p.add_argument("--grid", action="append", default=[], help="name=lo:hi:steps (repeatable)")
        if name == "sweep":
            p.add_argument("--family", default="contracted_rotation", choices=sorted(analysis.FAMILIES))
        p.add_argument("--output", choices=("csv", "json"), default="csv")
        p.add_argument("--out-file", dest="sub_out_file", help=argparse.SUPPRESS)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--deterministic", action="store_true", help="omit timestamps and runtimes")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out_file = getattr(args, "sub_out_file", None) or args.out_file
    if args.replay:
        try:
            command, config, map_text = read_report(args.replay)
            config = dict(config, command=command)
            cfg = RunConfig(**config, out_file=out_file)
        except (OSError, ValueError, TypeError) as exc:
            print(f"pcim-lab: error: cannot replay {args.replay}: {exc}", file=sys.stderr)
            return EXIT_INPUT
        return run(cfg, map_text=map_text)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_INPUT
    cfg = RunConfig(
        command=args.command,
        map=getattr(args, "map", None),
        depth=args.depth,
        horizon=args.horizon,
        epsilon=args.epsilon,
        point=args.point,
        grid=list(args.grid),
        family=getattr(args, "family", "contracted_rotation"),
        output=args.output,
        workers=args.workers,
        deterministic=args.deterministic,
        out_file=out_file,
    )
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
