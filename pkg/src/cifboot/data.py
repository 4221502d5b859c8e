"""Competing-risks samples and their counting-process representation.

A subject is observed from an entry time (0 unless left-truncated) until an
exit time, at which it either fails from cause 1, fails from cause 2, or is
censored.  Estimation works on a compiled panel: the sorted distinct exit
times together with at-risk counts and cause-specific jump counts.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np


class DataError(ValueError):
    """Invalid user input (malformed file, bad configuration, empty sample)."""


class Status(IntEnum):
    CENSORED = 0
    CAUSE1 = 1
    CAUSE2 = 2


@dataclass(frozen=True)
class Observation:
    """One subject: entry time, exit time and exit status.

    ``entry`` is the left-truncation time (0 if the subject was observed
    from time origin), ``exit`` the observed time min(event, censoring).
    """

    entry: float
    exit: float
    status: Status

    def __post_init__(self):
        object.__setattr__(self, "entry", float(self.entry))
        object.__setattr__(self, "exit", float(self.exit))
        object.__setattr__(self, "status", Status(self.status))
        if not self.entry >= 0.0:
            raise DataError(f"entry time must be >= 0, got {self.entry}")
        if not self.exit > self.entry:
            raise DataError(
                f"exit must be strictly later than entry, got entry={self.entry}, exit={self.exit}"
            )


@dataclass(frozen=True)
class Sample:
    """An ordered collection of observations, optionally labeled."""

    observations: tuple[Observation, ...]
    group_label: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "observations", tuple(self.observations))

    def __len__(self) -> int:
        return len(self.observations)

    def __iter__(self):
        return iter(self.observations)


@dataclass(frozen=True, eq=False)
class CountingProcessPanel:
    """Compiled counting-process view of a sample.

    ``times`` holds the strictly increasing distinct exit times.  At each
    grid time t, ``at_risk`` is Y(t) = #{i : entry_i < t <= exit_i} and
    ``d1``/``d2``/``d0`` count the cause-1 failures, cause-2 failures and
    censorings at exactly t.  ``subject_jumps`` maps each observation to its
    event jump as a (time index, cause) pair, with (-1, 0) for censored
    subjects.  ``entries`` keeps the sorted entry times so that the at-risk
    process can be reconstructed between grid times.
    """

    times: np.ndarray = field(repr=False)
    at_risk: np.ndarray = field(repr=False)
    d1: np.ndarray = field(repr=False)
    d2: np.ndarray = field(repr=False)
    d0: np.ndarray = field(repr=False)
    subject_jumps: np.ndarray = field(repr=False)  # shape (n, 2): time index, cause
    entries: np.ndarray = field(repr=False)
    n: int = 0

    def __post_init__(self):
        for arr in (self.times, self.at_risk, self.d1, self.d2, self.d0,
                    self.subject_jumps, self.entries):
            arr.setflags(write=False)

    @property
    def last_time(self) -> float:
        return float(self.times[-1])

    @property
    def n_events(self) -> int:
        return int(self.d1.sum() + self.d2.sum())


def compile_panel(sample: Sample) -> CountingProcessPanel:
    """Compile a sample into its counting-process panel.

    Tied exits share the same at-risk count (events at a timestamp do not
    deplete Y for concurrent censorings); Y uses the entry-strict,
    exit-inclusive convention.  Exact float equality defines a tie.
    """
    if len(sample) == 0:
        raise DataError("cannot compile an empty sample")
    entry = np.fromiter((o.entry for o in sample), dtype=float, count=len(sample))
    exit_ = np.fromiter((o.exit for o in sample), dtype=float, count=len(sample))
    status = np.fromiter((int(o.status) for o in sample), dtype=np.int64, count=len(sample))
    return compile_panel_arrays(entry, exit_, status)


def compile_panel_arrays(entry: np.ndarray, exit_: np.ndarray,
                         status: np.ndarray) -> CountingProcessPanel:
    """Array-level panel compilation (entry, exit, status code 0/1/2)."""
    entry = np.asarray(entry, dtype=float)
    exit_ = np.asarray(exit_, dtype=float)
    status = np.asarray(status, dtype=np.int64)
    n = exit_.shape[0]
    if n == 0:
        raise DataError("cannot compile an empty sample")

    times, inverse = np.unique(exit_, return_inverse=True)
    m = times.shape[0]
    d1 = np.bincount(inverse[status == Status.CAUSE1], minlength=m)
    d2 = np.bincount(inverse[status == Status.CAUSE2], minlength=m)
    d0 = np.bincount(inverse[status == Status.CENSORED], minlength=m)

    entries_sorted = np.sort(entry)
    exits_sorted = np.sort(exit_)
    # Y(t) = #{entry < t} - #{exit < t}; exits after entries, so the
    # difference counts exactly the subjects with entry < t <= exit.
    at_risk = (np.searchsorted(entries_sorted, times, side="left")
               - np.searchsorted(exits_sorted, times, side="left"))

    jumps = np.full((n, 2), -1, dtype=np.int64)
    is_event = status > 0
    jumps[is_event, 0] = inverse[is_event]
    jumps[:, 1] = np.where(is_event, status, 0)

    return CountingProcessPanel(
        times=times,
        at_risk=at_risk.astype(np.int64),
        d1=d1.astype(np.int64),
        d2=d2.astype(np.int64),
        d0=d0.astype(np.int64),
        subject_jumps=jumps,
        entries=entries_sorted,
        n=n,
    )


@dataclass(frozen=True)
class PositiveRiskReport:
    """Diagnostic for the positive-risk requirement on (0, horizon].

    ``min_fraction`` is the minimum of Y/n over the panel's grid times up to
    the horizon (the values the estimators actually divide by), attained at
    ``min_time``.  ``zero_after`` is the left endpoint of the first interval
    within (0, horizon] on which the at-risk process vanishes (Y drops to 0
    immediately after that time), or None if Y stays positive.
    """

    n: int
    horizon: float
    min_fraction: float
    min_time: float
    zero_after: float | None

    @property
    def ok(self) -> bool:
        return self.zero_after is None


def check_positive_risk(panel: CountingProcessPanel, horizon: float) -> PositiveRiskReport:
    """Report where the at-risk process gets small or vanishes before ``horizon``.

    Purely diagnostic; never raises for a risk-set failure.
    """
    if not horizon > 0:
        raise DataError(f"horizon must be positive, got {horizon}")

    within = panel.times <= horizon
    if within.any():
        frac = panel.at_risk[within] / panel.n
        k = int(np.argmin(frac))
        min_fraction = float(frac[k])
        min_time = float(panel.times[within][k])
    else:
        # no exits by the horizon: report the at-risk level at the horizon
        y_h = _at_risk_between(panel, np.array([horizon]))[0]
        min_fraction = float(y_h / panel.n)
        min_time = float(horizon)

    # Y is constant on each interval (b[k], b[k+1]] between consecutive
    # entry/exit breakpoints, and identically 0 past the last exit.
    breaks = np.unique(np.concatenate((panel.entries, panel.times, [0.0])))
    rights = breaks[1:]
    y_right = _at_risk_between(panel, rights)
    zero_after = None
    for left, y in zip(breaks[:-1], y_right):
        if y == 0 and left < horizon:
            zero_after = float(left)
            break
    if zero_after is None and panel.last_time < horizon:
        zero_after = panel.last_time

    return PositiveRiskReport(
        n=panel.n,
        horizon=float(horizon),
        min_fraction=min_fraction,
        min_time=min_time,
        zero_after=zero_after,
    )


def _at_risk_between(panel: CountingProcessPanel, t: np.ndarray) -> np.ndarray:
    exits = np.repeat(panel.times, panel.d0 + panel.d1 + panel.d2)
    return (np.searchsorted(panel.entries, t, side="left")
            - np.searchsorted(exits, t, side="left"))


def ingest_csv(path, *, entry_col: str = "entry", exit_col: str = "exit",
               status_col: str = "status", censored_code: str = "0",
               cause1_code: str = "1", cause2_code: str = "2",
               group_label: str | None = None) -> Sample:
    """Read a sample from a headed CSV file.

    The exit and status columns are required; the entry column is used when
    present and defaults to 0 otherwise.  Status codes are compared as
    stripped strings against the three configured codes.
    """
    code_map = {censored_code: Status.CENSORED,
                cause1_code: Status.CAUSE1,
                cause2_code: Status.CAUSE2}
    if len(code_map) != 3:
        raise DataError("status codes must be three distinct values")

    observations = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in (exit_col, status_col):
            if col not in header:
                raise DataError(f"missing required column {col!r} in {path}")
        has_entry = entry_col in header
        for lineno, row in enumerate(reader, start=2):
            try:
                exit_ = float(row[exit_col])
                entry = float(row[entry_col]) if has_entry else 0.0
            except (TypeError, ValueError) as exc:
                raise DataError(f"malformed row at line {lineno}: {exc}") from None
            raw = (row[status_col] or "").strip()
            if raw not in code_map:
                raise DataError(f"unknown status code {raw} at line {lineno}")
            try:
                observations.append(Observation(entry, exit_, code_map[raw]))
            except DataError as exc:
                raise DataError(f"line {lineno}: {exc}") from None
    return Sample(tuple(observations), group_label=group_label)
