"""Exact event-driven simulation of the book, the spread and the
embedded (jump) chains.

Randomness
----------
A single path seeded with ``seed`` uses
``Generator(PCG64(SeedSequence(seed)))``.  Replica ``i`` of an ensemble
uses ``SeedSequence(seed, spawn_key=(i,))``, so every replica is fixed by
``(seed, i)`` whatever the number of worker processes.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterator, Sequence, TextIO

import numpy as np

from . import _kernels as K
from . import reference
from .model import (
    MOVE_CLASSES,
    BookState,
    CatastropheDist,
    HcParams,
    LlgParams,
    ModelError,
    NcParams,
    RegimeSpec,
)

CSV_HEADER = ("t", "side", "direction", "delta", "bid", "ask")
DEFAULT_MAX_EVENTS = 200_000_000
OCCUPANCY_KMAX = 512

JUMP = "jump"
UNIFORMIZED = "uniformized"


class SimulationError(RuntimeError):
    """Raised when a path cannot be completed (e.g. event ceiling hit)."""


def make_rng(seed: int, replica: int | None = None) -> np.random.Generator:
    if replica is None:
        ss = np.random.SeedSequence(int(seed))
    else:
        ss = np.random.SeedSequence(int(seed), spawn_key=(int(replica),))
    return np.random.Generator(np.random.PCG64(ss))


@lru_cache(maxsize=32)
def _power_prefix(mu_exp: float) -> np.ndarray:
    return K.power_prefix(4096, mu_exp)


_DUMMY = np.zeros(1)


def kernel_args(regime: RegimeSpec) -> tuple:
    """Flatten a regime into the ``(code, rp, cat, cp, wcum)`` kernel tuple."""
    p = regime.params
    rp = np.zeros(7)
    rp[:4] = (p.alpha_plus, p.alpha_minus, p.beta_plus, p.beta_minus)
    wcum = _DUMMY
    if isinstance(p, HcParams):
        code = K.HC
    elif isinstance(p, NcParams):
        code = K.NC
        rp[4] = p.mu_exp
        wcum = _power_prefix(p.mu_exp)
    else:
        code = K.LLG
        rp[4:7] = (p.kappa_a, p.kappa_b, p.theta)
    cat = regime.catastrophe
    cp = np.array([cat.split, cat.weight])
    cat_code = K.CAT_TWO_PART if cat.kind == "two_part" else K.CAT_UNIFORM
    return code, rp, cat_code, cp, wcum


def _check_horizon(horizon: float) -> float:
    horizon = float(horizon)
    if not horizon > 0 or not math.isfinite(horizon):
        raise ModelError(f"horizon must be a positive number of seconds, got {horizon!r}")
    return horizon


# --------------------------------------------------------------------------- #
# Book paths
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class EventRecord:
    t: float
    side: str
    direction: str
    delta: int
    state_after: BookState


@dataclass
class PathSample:
    """Piecewise-constant trajectory of the book.

    Stored column-wise; ``events`` materializes :class:`EventRecord`
    objects on demand.
    """

    initial: BookState
    horizon: float
    seed: int | None
    times: np.ndarray
    classes: np.ndarray
    deltas: np.ndarray
    bids: np.ndarray
    asks: np.ndarray
    regime: RegimeSpec | None = field(default=None, compare=False)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final_state(self) -> BookState:
        if len(self.times) == 0:
            return self.initial
        return BookState(int(self.bids[-1]), int(self.asks[-1]))

    @property
    def spreads(self) -> np.ndarray:
        return self.asks - self.bids

    @property
    def events(self) -> list[EventRecord]:
        return list(self.iter_events())

    def iter_events(self) -> Iterator[EventRecord]:
        for t, c, d, b, a in zip(self.times, self.classes, self.deltas, self.bids, self.asks):
            side, direction = MOVE_CLASSES[int(c)]
            yield EventRecord(float(t), side, direction, int(d), BookState(int(b), int(a)))

    def state_at(self, t: float) -> BookState:
        i = int(np.searchsorted(self.times, t, side="right"))
        if i == 0:
            return self.initial
        return BookState(int(self.bids[i - 1]), int(self.asks[i - 1]))

    def bid_returns(self) -> np.ndarray:
        """Nonzero per-event bid price changes."""
        bids = np.concatenate(([self.initial.bid], self.bids))
        r = np.diff(bids)
        return r[r != 0]

    def mid_returns(self) -> np.ndarray:
        """Nonzero per-event mid price changes, in half ticks."""
        mids = np.concatenate(([self.initial.bid + self.initial.ask], self.bids + self.asks))
        r = np.diff(mids)
        return r[r != 0]

    def write_csv(self, stream: TextIO) -> None:
        write_events_csv(stream, self.times, self.classes, self.deltas, self.bids, self.asks)

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def write_events_csv(stream: TextIO, times, classes, deltas, bids, asks) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for t, c, d, b, a in zip(times.tolist(), classes.tolist(), deltas.tolist(), bids.tolist(), asks.tolist()):
        side, direction = MOVE_CLASSES[c]
        w.writerow((repr(t), side, direction, d, b, a))


def _book_columns(initial: BookState, classes: np.ndarray, deltas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    classes = np.asarray(classes, dtype=np.int64)
    deltas = np.asarray(deltas, dtype=np.int64)
    ask_step = np.where(classes == 0, deltas, np.where(classes == 1, -deltas, 0))
    bid_step = np.where(classes == 2, deltas, np.where(classes == 3, -deltas, 0))
    return initial.bid + np.cumsum(bid_step), initial.ask + np.cumsum(ask_step)


def simulate_book(
    regime: RegimeSpec,
    initial: BookState,
    horizon: float,
    seed: int,
    max_events: int = DEFAULT_MAX_EVENTS,
    rng: np.random.Generator | None = None,
) -> PathSample:
    """Exact CTMC path of (bid, ask) on ``[0, horizon]``."""
    horizon = _check_horizon(horizon)
    rng = rng if rng is not None else make_rng(seed)
    if regime.catastrophe.kernel_supported:
        status, n, *_rest = out = K.book_path(
            rng, *kernel_args(regime), initial.bid, initial.ask, horizon, max_events, True, 1
        )
        times, classes, deltas = out[4], out[5], out[6]
        hit = status == K.STATUS_EVENT_CEILING
    else:
        hit, times, classes, deltas, _, _ = reference.book_path(
            regime, rng, initial.bid, initial.ask, horizon, max_events
        )
        times = np.asarray(times, dtype=float)
        classes = np.asarray(classes, dtype=np.int8)
        deltas = np.asarray(deltas, dtype=np.int64)
    if hit:
        raise SimulationError(f"event ceiling {max_events} reached before t={horizon}")
    bids, asks = _book_columns(initial, classes, deltas)
    return PathSample(initial, horizon, seed, times, classes, deltas, bids, asks, regime)


@dataclass(frozen=True)
class BookSummary:
    """Terminal state and spread occupancy of an unrecorded book run."""

    bid: int
    ask: int
    n_events: int
    occupancy: np.ndarray  # seconds spent at spread k (last bin pools k >= kmax)
    visits: np.ndarray  # jumps into spread k


def summarize_book(
    regime: RegimeSpec,
    initial: BookState,
    horizon: float,
    rng: np.random.Generator,
    kmax: int = OCCUPANCY_KMAX,
    max_events: int = DEFAULT_MAX_EVENTS,
) -> BookSummary:
    horizon = _check_horizon(horizon)
    if not regime.catastrophe.kernel_supported:
        path = simulate_book(regime, initial, horizon, 0, max_events, rng=rng)
        occ, vis = _occupancy(path.spreads, path.times, initial.spread, horizon, kmax)
        fin = path.final_state
        return BookSummary(fin.bid, fin.ask, len(path), occ, vis)
    status, n, b, a, _, _, _, occ, vis = K.book_path(
        rng, *kernel_args(regime), initial.bid, initial.ask, horizon, max_events, False, kmax
    )
    if status == K.STATUS_EVENT_CEILING:
        raise SimulationError(f"event ceiling {max_events} reached before t={horizon}")
    return BookSummary(int(b), int(a), int(n), occ, vis)


def _occupancy(spreads, times, k0, horizon, kmax):
    ks = np.minimum(np.concatenate(([k0], spreads)), kmax)
    edges = np.concatenate(([0.0], times, [horizon]))
    occ = np.bincount(ks, weights=np.diff(edges), minlength=kmax + 1)
    vis = np.bincount(ks[1:], minlength=kmax + 1)
    return occ, vis


# --------------------------------------------------------------------------- #
# Spread paths
# --------------------------------------------------------------------------- #


@dataclass
class SpreadPath:
    k0: int
    horizon: float
    seed: int | None
    times: np.ndarray
    spreads: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final(self) -> int:
        return int(self.spreads[-1]) if len(self.spreads) else self.k0

    def at(self, t) -> np.ndarray:
        """Spread at the given time(s) (right-continuous)."""
        t = np.asarray(t, dtype=float)
        i = np.searchsorted(self.times, t, side="right")
        vals = np.concatenate(([self.k0], self.spreads))
        return vals[i]

    def occupancy(self, kmax: int = OCCUPANCY_KMAX) -> tuple[np.ndarray, np.ndarray]:
        return _occupancy(self.spreads, self.times, self.k0, self.horizon, kmax)


def simulate_spread(
    regime: RegimeSpec,
    k0: int,
    horizon: float,
    seed: int,
    max_events: int = DEFAULT_MAX_EVENTS,
    rng: np.random.Generator | None = None,
) -> SpreadPath:
    horizon = _check_horizon(horizon)
    if int(k0) < 1:
        raise ModelError("initial spread must be >= 1")
    rng = rng if rng is not None else make_rng(seed)
    if regime.catastrophe.kernel_supported:
        status, n, _, _, times, spreads, _, _ = K.spread_path(
            rng, *kernel_args(regime), int(k0), horizon, max_events, True, 1
        )
        hit = status == K.STATUS_EVENT_CEILING
    else:
        hit, times, spreads = reference.spread_path(regime, rng, int(k0), horizon, max_events)
        times, spreads = np.asarray(times, dtype=float), np.asarray(spreads, dtype=np.int64)
    if hit:
        raise SimulationError(f"event ceiling {max_events} reached before t={horizon}")
    return SpreadPath(int(k0), horizon, seed, times, spreads)


@dataclass(frozen=True)
class SpreadSummary:
    final: int
    running_max: int
    n_events: int
    occupancy: np.ndarray
    visits: np.ndarray


def summarize_spread(
    regime: RegimeSpec,
    k0: int,
    horizon: float,
    rng: np.random.Generator,
    kmax: int = OCCUPANCY_KMAX,
    max_events: int = DEFAULT_MAX_EVENTS,
) -> SpreadSummary:
    horizon = _check_horizon(horizon)
    if not regime.catastrophe.kernel_supported:
        path = simulate_spread(regime, k0, horizon, 0, max_events, rng=rng)
        occ, vis = path.occupancy(kmax)
        top = int(max(path.spreads.max(initial=k0), k0))
        return SpreadSummary(path.final, top, len(path), occ, vis)
    status, n, k, top, _, _, occ, vis = K.spread_path(
        rng, *kernel_args(regime), int(k0), horizon, max_events, False, kmax
    )
    if status == K.STATUS_EVENT_CEILING:
        raise SimulationError(f"event ceiling {max_events} reached before t={horizon}")
    return SpreadSummary(int(k), int(top), int(n), occ, vis)


@dataclass
class ScaledSpread:
    """``S(tT)/T`` on [0, 1]: a regular grid plus the exact jump points."""

    T: float
    grid_t: np.ndarray
    grid_y: np.ndarray
    jump_t: np.ndarray
    jump_y: np.ndarray

    @property
    def terminal(self) -> float:
        return float(self.grid_y[-1])

    def sup(self) -> float:
        return float(max(self.grid_y.max(), self.jump_y.max(initial=0.0)))


def scale_spread_path(path: SpreadPath, n_grid: int) -> ScaledSpread:
    T = path.horizon
    grid_t = np.linspace(0.0, 1.0, int(n_grid))
    grid_y = path.at(grid_t * T) / T
    return ScaledSpread(T, grid_t, grid_y.astype(float), path.times / T, path.spreads / T)


def scaled_spread(regime: RegimeSpec, T: float, n_grid: int, seed: int, rng: np.random.Generator | None = None) -> ScaledSpread:
    """Scaled spread started from spread 1, sampled on ``n_grid`` points."""
    if int(n_grid) < 2:
        raise ModelError("n_grid must be >= 2")
    return scale_spread_path(simulate_spread(regime, 1, T, seed, rng=rng), n_grid)


# --------------------------------------------------------------------------- #
# Embedded chains
# --------------------------------------------------------------------------- #


def _embedded_args(params: HcParams, cat: CatastropheDist | None):
    if params.gamma <= 0:
        raise ModelError("embedded chain needs gamma > 0")
    cat = cat or CatastropheDist.uniform()
    p_up = params.gamma_plus / params.gamma
    thr_up = params.beta_minus / params.gamma_plus if params.gamma_plus > 0 else 0.0
    thr_down = params.beta_plus / params.gamma_minus if params.gamma_minus > 0 else 0.0
    cat_code = K.CAT_TWO_PART if cat.kind == "two_part" else K.CAT_UNIFORM
    return cat, p_up, thr_up, thr_down, cat_code, np.array([cat.split, cat.weight])


def _check_embedding(embedding: str) -> bool:
    if embedding not in (JUMP, UNIFORMIZED):
        raise ModelError(f"embedding must be {JUMP!r} or {UNIFORMIZED!r}")
    return embedding == UNIFORMIZED


@dataclass
class EmbeddedPath:
    spreads: np.ndarray  # s_0..s_n
    prices: np.ndarray  # p_0..p_n
    seed: int | None

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.prices)


def simulate_embedded(
    params: HcParams,
    n_steps: int,
    seed: int,
    s0: int = 1,
    embedding: str = JUMP,
    catastrophe: CatastropheDist | None = None,
    rng: np.random.Generator | None = None,
) -> EmbeddedPath:
    """Spread jump chain ``s_n`` together with the bid chain ``p_n``."""
    if int(n_steps) < 1:
        raise ModelError("n_steps must be >= 1")
    uniformized = _check_embedding(embedding)
    cat, p_up, thr_up, thr_down, cat_code, cp = _embedded_args(params, catastrophe)
    rng = rng if rng is not None else make_rng(seed)
    if cat.kernel_supported:
        _, _, spreads, prices, _ = K.embedded_path(
            rng, p_up, thr_up, thr_down, cat_code, cp, int(s0), int(n_steps), uniformized, True
        )
    else:
        spreads, prices = reference.embedded_path(params, cat, rng, int(s0), int(n_steps), uniformized)
        spreads, prices = np.asarray(spreads, dtype=np.int64), np.asarray(prices, dtype=np.int64)
    return EmbeddedPath(spreads, prices, seed)


def embedded_spread_chain(params: HcParams, n_steps: int, seed: int, **kw) -> np.ndarray:
    """``s_0, ..., s_n`` of the spread jump chain (``s_0 = 1`` by default)."""
    return simulate_embedded(params, n_steps, seed, **kw).spreads


def simulate_embedded_price(params: HcParams, n_steps: int, seed: int, **kw) -> np.ndarray:
    """``p_0, ..., p_n``: cumulative bid increments along the jump chain."""
    return simulate_embedded(params, n_steps, seed, **kw).prices


def price_increment_F(s_prev: int, s_next: int, u: float, params: HcParams, embedding: str = JUMP) -> int:
    """Bid move attached to one jump ``s_prev -> s_next`` of the spread.

    An opening moves the bid down one tick with probability
    ``beta_minus / gamma_plus``; a closing by ``d`` ticks moves the bid up
    by ``d`` with probability ``beta_plus / gamma_minus``.
    """
    s_prev, s_next = int(s_prev), int(s_next)
    if not 0.0 <= u < 1.0:
        raise ModelError("u must lie in [0, 1)")
    legal = s_prev >= 1 and (s_next == s_prev + 1 or 1 <= s_next < s_prev)
    if s_prev == 1 and s_next == 1 and _check_embedding(embedding):
        legal = True
    if not legal:
        raise ModelError(f"illegal embedded transition {s_prev} -> {s_next}")
    if s_next == s_prev + 1:
        return -1 if u < params.beta_minus / params.gamma_plus else 0
    if s_next < s_prev:
        return s_prev - s_next if u < params.beta_plus / params.gamma_minus else 0
    return 0


# --------------------------------------------------------------------------- #
# Replica ensembles
# --------------------------------------------------------------------------- #


def _run_chunk(args) -> list:
    fn, seed, lo, hi = args
    return [fn(make_rng(seed, i)) for i in range(lo, hi)]


def run_replicas(fn: Callable[[np.random.Generator], object], seed: int, replicas: int, jobs: int = 1) -> list:
    """Evaluate ``fn`` on replicas ``0..replicas-1``; results are in
    replica order regardless of ``jobs``.  With ``jobs > 1``, ``fn`` must
    be picklable."""
    replicas = int(replicas)
    if jobs <= 1 or replicas < 2 * jobs:
        return _run_chunk((fn, seed, 0, replicas))
    bounds = np.linspace(0, replicas, jobs * 4 + 1).astype(int)
    tasks = [(fn, seed, int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    out: list = []
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for chunk in pool.map(_run_chunk, tasks):
            out.extend(chunk)
    return out


@dataclass(frozen=True)
class BookTerminal:
    """Picklable replica function: terminal (bid, ask, n_events)."""

    regime: RegimeSpec
    initial: BookState
    horizon: float

    def __call__(self, rng: np.random.Generator) -> tuple[int, int, int]:
        status, n, b, a, *_ = K.book_path(
            rng, *kernel_args(self.regime), self.initial.bid, self.initial.ask, self.horizon,
            DEFAULT_MAX_EVENTS, False, 1,
        )
        if status != K.STATUS_OK:
            raise SimulationError("event ceiling reached")
        return int(b), int(a), int(n)


@dataclass(frozen=True)
class SpreadTerminal:
    """Picklable replica function: terminal spread and running maximum."""

    regime: RegimeSpec
    k0: int
    horizon: float

    def __call__(self, rng: np.random.Generator) -> tuple[int, int]:
        status, n, k, top, *_ = K.spread_path(
            rng, *kernel_args(self.regime), self.k0, self.horizon, DEFAULT_MAX_EVENTS, False, 1
        )
        if status != K.STATUS_OK:
            raise SimulationError("event ceiling reached")
        return int(k), int(top)


@dataclass(frozen=True)
class EmbeddedTerminal:
    """Picklable replica function: terminal bid ``p_n`` of the jump chain."""

    params: HcParams
    n_steps: int
    s0: int = 1
    embedding: str = JUMP

    def __call__(self, rng: np.random.Generator) -> int:
        _, p_up, thr_up, thr_down, cat_code, cp = _embedded_args(self.params, None)
        _, p, _, _, _ = K.embedded_path(
            rng, p_up, thr_up, thr_down, cat_code, cp, self.s0, self.n_steps, self.embedding == UNIFORMIZED, False
        )
        return int(p)


def ensemble(fn: Callable[[np.random.Generator], object], seed: int, replicas: int, jobs: int = 1) -> np.ndarray:
    return np.asarray(run_replicas(fn, seed, replicas, jobs))


def spread_terminal_fast(regime: RegimeSpec, k0: int, horizon: float, seed: int, replicas: int) -> tuple[np.ndarray, np.ndarray]:
    """Terminal and maximal spread for many replicas without process
    fan-out; kernel arguments are built once."""
    args = kernel_args(regime)
    horizon = _check_horizon(horizon)
    fin = np.empty(int(replicas), dtype=np.int64)
    top = np.empty(int(replicas), dtype=np.int64)
    for i in range(int(replicas)):
        status, _, k, m, *_ = K.spread_path(make_rng(seed, i), *args, int(k0), horizon, DEFAULT_MAX_EVENTS, False, 1)
        if status != K.STATUS_OK:
            raise SimulationError("event ceiling reached")
        fin[i], top[i] = k, m
    return fin, top


def replica_spread_path(regime: RegimeSpec, k0: int, horizon: float, seed: int, replica: int) -> SpreadPath:
    """Re-generate the recorded path of one ensemble replica."""
    return simulate_spread(regime, k0, horizon, seed, rng=make_rng(seed, replica))


def as_regime(obj: RegimeSpec | HcParams | NcParams | LlgParams) -> RegimeSpec:
    return obj if isinstance(obj, RegimeSpec) else RegimeSpec(obj)


__all__: Sequence[str] = [
    "EventRecord",
    "PathSample",
    "SpreadPath",
    "ScaledSpread",
    "EmbeddedPath",
    "simulate_book",
    "simulate_spread",
    "scaled_spread",
    "embedded_spread_chain",
    "simulate_embedded",
    "simulate_embedded_price",
    "price_increment_F",
    "make_rng",
    "run_replicas",
]
