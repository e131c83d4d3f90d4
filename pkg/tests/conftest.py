from fractions import Fraction as F
from pathlib import Path

import pytest
from hypothesis import strategies as st

from pcim_lab.corpus import CORPUS, SEPARATED
from pcim_lab.map_core import Branch, ClosedInterval, PCIMDefinition, validate_pcim

MAPS_DIR = Path(__file__).resolve().parent.parent / "maps"


@pytest.fixture(scope="session")
def corpus():
    return {k: validate_pcim(f()) for k, f in CORPUS.items()}


@pytest.fixture(scope="session")
def separated(corpus):
    return {k: corpus[k] for k in SEPARATED}


@pytest.fixture
def maps_dir():
    return MAPS_DIR


def rationals(lo, hi, max_den=64):
    """Rationals in the open interval (lo, hi)."""
    return (
        st.integers(2, max_den)
        .flatmap(lambda q: st.tuples(st.just(q), st.integers(1, q - 1)))
        .map(lambda t: lo + (hi - lo) * F(t[1], t[0]))
    )


@st.composite
def separated_maps(draw, max_pieces=3):
    """Random separated contractions of [0, 1] with image intervals laid out in random order."""
    n = draw(st.integers(1, max_pieces))
    cuts = sorted(set(draw(st.lists(rationals(0, 1, 12), min_size=n - 1, max_size=n - 1))))
    n = len(cuts) + 1
    ends = [F(0), *cuts, F(1)]
    lengths = [ends[i + 1] - ends[i] for i in range(n)]
    slopes = [draw(rationals(0, 1, 6)) for _ in range(n)]
    img = [lengths[i] * slopes[i] for i in range(n)]
    slack = 1 - sum(img)
    weights = [draw(st.integers(1, 5)) for _ in range(n + 1)]
    gaps = [slack * w / sum(weights) for w in weights]
    order = draw(st.permutations(range(n)))
    signs = [draw(st.booleans()) for _ in range(n)]
    pos = gaps[0]
    branches = [None] * n
    for k, i in enumerate(order):
        lo, hi = pos, pos + img[i]
        a = slopes[i] if signs[i] else -slopes[i]
        # image of the piece's left endpoint is lo for increasing branches, hi otherwise
        b = lo - a * ends[i] if signs[i] else hi - a * ends[i]
        branches[i] = Branch(a, b)
        pos = hi + gaps[k + 1]
    defn = PCIMDefinition(ClosedInterval(F(0), F(1)), tuple(cuts), tuple(branches))
    return validate_pcim(defn)


@st.composite
def rotations(draw):
    lam = draw(rationals(0, 1, 12))
    delta = draw(rationals(1 - lam, 1, 12))
    return lam, delta


# acceptance verdicts, printed once at the end of the run
ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        verdict, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {verdict} - {detail}")
