"""Reading and writing map definition files (a small TOML subset).

Example::

    name = "e2"
    domain = ["0", "1"]
    cuts = ["1/2"]
    branches = [
      {a = "1/2", b = "1/2"},
      {a = "1/3", b = "0"},
    ]
    open_ends = [false, false]

Rationals are strings in lowest terms, ``"p/q"`` or ``"p"``, with an optional
leading minus. Anything else (decimals, ``"2/4"``, ``"+1"``, ``"3/1"``) is rejected.
"""
from __future__ import annotations

import json
import re
from fractions import Fraction
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import MapSyntaxError, NonCanonicalRational
from .map_core import Branch, ClosedInterval, PCIMDefinition, ValidatedPCIM, validate_pcim

_RATIONAL = re.compile(r"-?(0|[1-9][0-9]*)(/[1-9][0-9]*)?")
_KEYS = {"name", "domain", "cuts", "branches", "open_ends"}


def _line_of(text: str, key: str, literal: str | None = None) -> int | None:
    lines = text.splitlines()
    start = None
    for k, line in enumerate(lines):
        if re.match(rf"\s*{re.escape(key)}\s*=", line):
            start = k
            break
    if start is None:
        return None
    if literal is None:
        return start + 1
    needle = json.dumps(literal)
    for k in range(start, len(lines)):
        if needle in lines[k]:
            return k + 1
    return start + 1


def parse_rational(value, field: str, text: str = "", key: str | None = None) -> Fraction:
    key = key or field.split("[")[0].split(".")[0]
    if not isinstance(value, str):
        raise NonCanonicalRational(
            f"expected a quoted rational like \"p/q\", got {value!r}",
            line=_line_of(text, key),
            field=field,
        )
    if not _RATIONAL.fullmatch(value):
        raise NonCanonicalRational(
            f"{value!r} is not of the form \"p/q\" or \"p\"", line=_line_of(text, key, value), field=field
        )
    q = Fraction(value)
    if str(q) != value or value == "-0":
        raise NonCanonicalRational(
            f"{value!r} is not canonical; write {str(q)!r}", line=_line_of(text, key, value), field=field
        )
    return q


def _array(doc, key, text, required=True):
    if key not in doc:
        if required:
            raise MapSyntaxError("missing required key", field=key)
        return None
    value = doc[key]
    if not isinstance(value, list):
        raise MapSyntaxError("expected an array", line=_line_of(text, key), field=key)
    return value


def parse_map_text(text: str, validate: bool = True) -> PCIMDefinition:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise MapSyntaxError(str(exc), line=int(m.group(1)) if m else None) from None
    unknown = set(doc) - _KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise MapSyntaxError("unknown key", line=_line_of(text, key), field=key)

    domain = _array(doc, "domain", text)
    if len(domain) != 2:
        raise MapSyntaxError("domain needs exactly two endpoints", line=_line_of(text, "domain"), field="domain")
    lo, hi = (parse_rational(v, f"domain[{k}]", text) for k, v in enumerate(domain))
    if lo >= hi:
        raise MapSyntaxError("domain must satisfy lo < hi", line=_line_of(text, "domain"), field="domain")

    cuts = tuple(parse_rational(v, f"cuts[{k}]", text) for k, v in enumerate(_array(doc, "cuts", text)))

    branches = []
    for k, entry in enumerate(_array(doc, "branches", text)):
        if not isinstance(entry, dict) or set(entry) != {"a", "b"}:
            raise MapSyntaxError(
                "each branch must be a table {a = \"p/q\", b = \"r/s\"}",
                line=_line_of(text, "branches"),
                field=f"branches[{k}]",
            )
        a = parse_rational(entry["a"], f"branches[{k}].a", text, "branches")
        b = parse_rational(entry["b"], f"branches[{k}].b", text, "branches")
        branches.append(Branch(a, b))

    open_ends = _array(doc, "open_ends", text, required=False)
    if open_ends is None:
        open_ends = [False, False]
    if len(open_ends) != 2 or not all(isinstance(f, bool) for f in open_ends):
        raise MapSyntaxError("open_ends must be two booleans", line=_line_of(text, "open_ends"), field="open_ends")

    name = doc.get("name")
    if name is not None and not isinstance(name, str):
        raise MapSyntaxError("name must be a string", line=_line_of(text, "name"), field="name")

    defn = PCIMDefinition(ClosedInterval(lo, hi), cuts, tuple(branches), tuple(open_ends), name)
    if validate:
        validate_pcim(defn)
    return defn


def parse_map_file(path) -> PCIMDefinition:
    return parse_map_text(Path(path).read_text(encoding="utf-8"))


def load_map(path) -> ValidatedPCIM:
    return validate_pcim(parse_map_file(path))


def _q(x: Fraction) -> str:
    return json.dumps(str(x))


def dump_map(defn: PCIMDefinition) -> str:
    """Canonical serialization; ``parse_map_text(dump_map(d)) == d``."""
    out = []
    if defn.name is not None:
        out.append(f"name = {json.dumps(defn.name, ensure_ascii=False)}")
    out.append(f"domain = [{_q(defn.domain.lo)}, {_q(defn.domain.hi)}]")
    out.append(f"cuts = [{', '.join(_q(c) for c in defn.cuts)}]")
    out.append("branches = [")
    for br in defn.branches:
        out.append(f"  {{a = {_q(br.a)}, b = {_q(br.b)}}},")
    out.append("]")
    out.append("open_ends = [{}, {}]".format(*("true" if f else "false" for f in defn.open_ends)))
    return "\n".join(out) + "\n"
