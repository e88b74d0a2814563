"""Event-log ingestion and rate estimation for the HC regime.

Each event counts once toward the rate of its (side, direction) class,
whatever its size in ticks.  Logs from regimes with multi-tick moves
therefore yield model-mismatched HC estimates; ``max_delta`` in the
result makes that visible.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, TextIO

import numpy as np

from .model import ASK, BID, DOWN, UP, BookState, ModelError
from .simulate import CSV_HEADER, PathSample

REQUIRED_COLUMNS = CSV_HEADER[:4]
_KEYS = {(ASK, UP): "alpha_plus", (ASK, DOWN): "alpha_minus", (BID, UP): "beta_plus", (BID, DOWN): "beta_minus"}


class EventLogError(ValueError):
    """Malformed event log; ``line`` is the 1-based line in the source."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass
class EventLog:
    times: np.ndarray
    sides: list[str]
    directions: list[str]
    deltas: np.ndarray
    T_obs: float
    bids: np.ndarray | None = None
    asks: np.ndarray | None = None
    tick_size: float | None = None

    def __len__(self) -> int:
        return len(self.times)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventLog):
            return NotImplemented
        same_opt = all(
            (a is None and b is None) or (a is not None and b is not None and np.array_equal(a, b))
            for a, b in ((self.bids, other.bids), (self.asks, other.asks))
        )
        return (
            np.array_equal(self.times, other.times)
            and self.sides == other.sides
            and self.directions == other.directions
            and np.array_equal(self.deltas, other.deltas)
            and self.T_obs == other.T_obs
            and same_opt
        )

    @classmethod
    def from_path(cls, path: PathSample) -> EventLog:
        evs = path.iter_events()
        sides, dirs = [], []
        for e in evs:
            sides.append(e.side)
            dirs.append(e.direction)
        return cls(
            np.asarray(path.times, dtype=float),
            sides,
            dirs,
            np.asarray(path.deltas, dtype=np.int64),
            float(path.horizon),
            np.asarray(path.bids, dtype=np.int64),
            np.asarray(path.asks, dtype=np.int64),
        )


def parse_event_log(source: TextIO | Iterable[str], T_obs: float | None = None, tick_size: float | None = None) -> EventLog:
    """Parse a ``t,side,direction,delta[,bid,ask]`` CSV.

    ``T_obs`` defaults to the last timestamp.  Any row with a decreasing
    timestamp, a nonpositive delta, an unknown side/direction or
    unparsable fields raises :class:`EventLogError` with its line number.
    """
    reader = csv.reader(source)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise EventLogError("empty event log") from None
    if tuple(header[:4]) != REQUIRED_COLUMNS or header[4:] not in ([], ["bid", "ask"]):
        raise EventLogError(f"bad header {header!r}; expected {','.join(CSV_HEADER)}", 1)
    with_book = len(header) == 6
    times: list[float] = []
    sides: list[str] = []
    dirs: list[str] = []
    deltas: list[int] = []
    bids: list[int] = []
    asks: list[int] = []
    last = -math.inf
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise EventLogError(f"expected {len(header)} fields, got {len(row)}", line_no)
        try:
            t = float(row[0])
            d = int(row[3])
        except ValueError as exc:
            raise EventLogError(str(exc), line_no) from None
        side, direction = row[1].strip(), row[2].strip()
        if side not in (ASK, BID) or direction not in (UP, DOWN):
            raise EventLogError(f"unknown move {side!r}/{direction!r}", line_no)
        if not math.isfinite(t) or t < 0:
            raise EventLogError(f"bad timestamp {row[0]!r}", line_no)
        if t < last:
            raise EventLogError(f"timestamp {t} precedes {last}", line_no)
        if d < 1:
            raise EventLogError(f"delta must be >= 1, got {d}", line_no)
        if with_book:
            try:
                b, a = int(row[4]), int(row[5])
                BookState(b, a)
            except (ValueError, ModelError) as exc:
                raise EventLogError(f"bad book state: {exc}", line_no) from None
            bids.append(b)
            asks.append(a)
        last = t
        times.append(t)
        sides.append(side)
        dirs.append(direction)
        deltas.append(d)
    if not times:
        raise EventLogError("event log has no events")
    if T_obs is None:
        T_obs = times[-1]
    if T_obs < times[-1]:
        raise EventLogError(f"T_obs={T_obs} precedes the last event at {times[-1]}")
    return EventLog(
        np.asarray(times),
        sides,
        dirs,
        np.asarray(deltas, dtype=np.int64),
        float(T_obs),
        np.asarray(bids, dtype=np.int64) if with_book else None,
        np.asarray(asks, dtype=np.int64) if with_book else None,
        tick_size,
    )


@dataclass(frozen=True)
class RateEstimate:
    alpha_plus_hat: float
    alpha_minus_hat: float
    beta_plus_hat: float
    beta_minus_hat: float
    counts: dict[str, int]
    T_obs: float
    std_errors: dict[str, float] = field(default_factory=dict)
    max_delta: int = 1

    @property
    def rates(self) -> tuple[float, float, float, float]:
        return (self.alpha_plus_hat, self.alpha_minus_hat, self.beta_plus_hat, self.beta_minus_hat)

    @property
    def model_mismatch(self) -> bool:
        """True when the log holds multi-tick moves the HC regime cannot produce."""
        return self.max_delta > 1

    def to_dict(self) -> dict:
        out = asdict(self)
        out["rates"] = dict(zip(("alpha_plus", "alpha_minus", "beta_plus", "beta_minus"), self.rates))
        out["model_mismatch"] = self.model_mismatch
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def estimate_from_counts(counts: dict[str, int], T_obs: float, max_delta: int = 1) -> RateEstimate:
    T_obs = float(T_obs)
    if not T_obs > 0:
        raise EventLogError("observation length must be positive")
    counts = {k: int(counts.get(k, 0)) for k in _KEYS.values()}
    hats = {k: n / T_obs for k, n in counts.items()}
    ses = {k: math.sqrt(n) / T_obs for k, n in counts.items()}
    return RateEstimate(
        hats["alpha_plus"], hats["alpha_minus"], hats["beta_plus"], hats["beta_minus"],
        counts, T_obs, ses, max_delta,
    )


def estimate_rates(log: EventLog) -> RateEstimate:
    """``N / T`` per move class with Poisson standard errors ``sqrt(N) / T``."""
    counts = {k: 0 for k in _KEYS.values()}
    for side, direction in zip(log.sides, log.directions):
        counts[_KEYS[(side, direction)]] += 1
    max_delta = int(log.deltas.max()) if len(log) else 1
    return estimate_from_counts(counts, log.T_obs, max_delta)
