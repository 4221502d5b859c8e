"""Shared builders for the test suite.

Subjects are specified as (entry_halves, exit_halves, status) integer
triples; times are halves so that floats and Fractions represent the same
rational exactly and tie configurations are easy to force.
"""

import numpy as np
from fractions import Fraction

from hypothesis import strategies as st

import cifboot as cb

import oracles


def build_panel(subs):
    """Compile a panel from (entry_halves, exit_halves, status) triples."""
    entry = np.array([a / 2 for a, _, _ in subs], dtype=float)
    exit_ = np.array([b / 2 for _, b, _ in subs], dtype=float)
    status = np.array([s for _, _, s in subs], dtype=np.int64)
    return cb.compile_panel_arrays(entry, exit_, status)


def brute_from_panel(panel):
    """Exact-rational estimator tables for a compiled panel's grid."""
    times = [Fraction(t) for t in panel.times.tolist()]
    return oracles.brute_tables(times, panel.at_risk.tolist(),
                                panel.d1.tolist(), panel.d2.tolist())


def jumps_from_subs(subs):
    """(time, cause) per subject for the brute Z-integral oracle."""
    return [(Fraction(b, 2), s) if s > 0 else (None, 0) for _, b, s in subs]


@st.composite
def subjects(draw, n_min=2, n_max=8, truncated=False, max_halves=12):
    """Random subject triples on the half-integer time grid."""
    n = draw(st.integers(n_min, n_max))
    out = []
    for _ in range(n):
        b = draw(st.integers(1, max_halves))
        s = draw(st.sampled_from([0, 1, 2]))
        a = draw(st.integers(0, b - 1)) if truncated else 0
        out.append((a, b, s))
    return out


@st.composite
def event_subjects(draw, **kwargs):
    """Subject triples guaranteed to contain at least one event."""
    subs = draw(subjects(**kwargs))
    if not any(s > 0 for _, _, s in subs):
        a, b, _ = subs[0]
        subs[0] = (a, b, draw(st.sampled_from([1, 2])))
    return subs
