"""Regime parameterizations and exact transition rates.

Prices live on the integer tick lattice.  A book state is ``(bid, ask)``
with ``bid < ask``; the spread ``k = ask - bid`` alone drives every rate,
so each regime is described by four move classes whose totals depend on
``k`` plus an increment distribution per class:

======  =========  ===================================================
class   move       HC / NC / LLG increment
======  =========  ===================================================
0       ask up     1 / 1 / geometric(theta) on {1, 2, ...}
1       ask down   catastrophe on I_k / power law on I_k / trunc. geom.
2       bid up     same law as class 1
3       bid down   same law as class 0
======  =========  ===================================================

``I_k = {1, ..., k-1}`` is empty at ``k = 1`` so no closing move exists
there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Union

import numpy as np

ASK, BID = "ask", "bid"
UP, DOWN = "up", "down"

# (side, direction) of each move class, in kernel order.
MOVE_CLASSES: tuple[tuple[str, str], ...] = ((ASK, UP), (ASK, DOWN), (BID, UP), (BID, DOWN))
CLASS_INDEX = {sd: i for i, sd in enumerate(MOVE_CLASSES)}

# Up-increment tables for unbounded laws are listed up to this many ticks.
DEFAULT_MAX_LISTED_DELTA = 64


class ModelError(ValueError):
    """Invalid parameters, state or regime configuration."""


def _check_rate(name: str, value: float, strict: bool = False) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0 or (strict and value == 0):
        bound = "> 0" if strict else ">= 0"
        raise ModelError(f"{name} must be finite and {bound}, got {value!r}")
    return value


# --------------------------------------------------------------------------- #
# Parameters
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class HcParams:
    """Highly competitive regime: unit openings, uniform (or almost
    uniform) closings.

    Rates are events per second.  Zero rates are accepted so degenerate
    corner cases can be simulated; quantities that need positive
    recurrence raise when ``gamma_minus`` or ``gamma_plus`` vanishes.
    """

    alpha_plus: float
    alpha_minus: float
    beta_plus: float
    beta_minus: float

    def __post_init__(self) -> None:
        for name in ("alpha_plus", "alpha_minus", "beta_plus", "beta_minus"):
            object.__setattr__(self, name, _check_rate(name, getattr(self, name)))

    @property
    def gamma_plus(self) -> float:
        return self.beta_minus + self.alpha_plus

    @property
    def gamma_minus(self) -> float:
        return self.beta_plus + self.alpha_minus

    @property
    def gamma(self) -> float:
        return self.gamma_plus + self.gamma_minus

    @property
    def p(self) -> float:
        return self.gamma_plus / self.gamma

    @property
    def q(self) -> float:
        return self.gamma_minus / self.gamma

    @property
    def is_ergodic(self) -> bool:
        return self.gamma_plus > 0 and self.gamma_minus > 0

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.alpha_plus, self.alpha_minus, self.beta_plus, self.beta_minus)


@dataclass(frozen=True)
class NcParams:
    """Non-competitive regime: unit openings, closings with rate
    proportional to ``delta ** -mu_exp``."""

    alpha_plus: float
    alpha_minus: float
    beta_plus: float
    beta_minus: float
    mu_exp: float

    def __post_init__(self) -> None:
        for name in ("alpha_plus", "alpha_minus", "beta_plus", "beta_minus"):
            object.__setattr__(self, name, _check_rate(name, getattr(self, name)))
        # mu_exp = 0 is kept legal: it is the unnormalized-uniform limit.
        object.__setattr__(self, "mu_exp", _check_rate("mu_exp", self.mu_exp))

    @property
    def gamma_plus(self) -> float:
        return self.beta_minus + self.alpha_plus

    @property
    def gamma_minus(self) -> float:
        return self.beta_plus + self.alpha_minus


@dataclass(frozen=True)
class LlgParams:
    """Low liquidity with gaps: geometric multi-tick openings, truncated
    geometric closings, class rates damped by ``k ** kappa``."""

    alpha_plus: float
    alpha_minus: float
    beta_plus: float
    beta_minus: float
    kappa_a: float
    kappa_b: float
    theta: float

    def __post_init__(self) -> None:
        for name in ("alpha_plus", "alpha_minus", "beta_plus", "beta_minus", "kappa_a", "kappa_b"):
            object.__setattr__(self, name, _check_rate(name, getattr(self, name)))
        theta = float(self.theta)
        if not 0.0 < theta < 1.0:
            raise ModelError(f"theta must lie in (0, 1), got {theta!r}")
        object.__setattr__(self, "theta", theta)


# --------------------------------------------------------------------------- #
# Catastrophes
# --------------------------------------------------------------------------- #


def _two_part_cut(m: int, split: float) -> int:
    # size of the first block of I_k (m = k - 1 >= 2); both blocks nonempty
    return min(max(int(math.ceil(split * m)), 1), m - 1)


@dataclass(frozen=True)
class CatastropheDist:
    """Distribution ``Q_i(k)`` of the closing increment ``i`` in ``I_k``.

    ``uniform``
        ``Q_i(k) = 1 / (k - 1)``.
    ``two_part``
        ``I_k`` is cut into ``{1..j}`` and ``{j+1..k-1}`` with
        ``j = ceil(split * (k - 1))``; the first block is chosen with
        probability ``weight``, then a point uniformly inside the block.
    ``custom``
        ``weights(k)`` returns ``k - 1`` nonnegative weights (normalized
        here).  Not serializable and only handled by the reference
        simulator.

    ``c`` is the almost-uniform constant: every ``Q_i(k)`` must satisfy
    ``1/(c(k-1)) <= Q_i(k) <= c/(k-1)``.  It is checked for
    ``k <= check_upto`` at construction.
    """

    kind: str = "uniform"
    split: float = 0.5
    weight: float = 0.5
    c: float = 1.0 + 1e-9
    weights: Callable[[int], np.ndarray] | None = field(default=None, compare=False, repr=False)
    check_upto: int = 512

    def __post_init__(self) -> None:
        if self.kind not in ("uniform", "two_part", "custom"):
            raise ModelError(f"unknown catastrophe kind {self.kind!r}")
        if not self.c > 1.0:
            raise ModelError(f"almost-uniform constant c must exceed 1, got {self.c!r}")
        if self.kind == "two_part":
            if not (0.0 < self.split < 1.0 and 0.0 < self.weight < 1.0):
                raise ModelError("two_part needs split and weight in (0, 1)")
        if self.kind == "custom" and self.weights is None:
            raise ModelError("custom catastrophes need a weights(k) generator")
        bad = None if self.kind == "uniform" else self.first_violation(self.check_upto)
        if bad is not None:
            raise ModelError(f"almost-uniform bound with c={self.c} fails at k={bad}")

    @classmethod
    def uniform(cls) -> CatastropheDist:
        return cls()

    @classmethod
    def two_part(cls, split: float = 0.5, weight: float = 0.7, c: float | None = None) -> CatastropheDist:
        if c is None:
            c = _two_part_constant(split, weight)
        return cls(kind="two_part", split=split, weight=weight, c=c)

    @classmethod
    def almost_uniform(cls, weights: Callable[[int], np.ndarray], c: float) -> CatastropheDist:
        return cls(kind="custom", weights=weights, c=c)

    @property
    def kernel_supported(self) -> bool:
        return self.kind != "custom"

    def probs(self, k: int) -> np.ndarray:
        """``Q_1(k), ..., Q_{k-1}(k)`` as an array (empty for ``k = 1``)."""
        m = int(k) - 1
        if m <= 0:
            return np.empty(0)
        if self.kind == "uniform" or m == 1:
            return np.full(m, 1.0 / m)
        if self.kind == "two_part":
            j = _two_part_cut(m, self.split)
            out = np.empty(m)
            out[:j] = self.weight / j
            out[j:] = (1.0 - self.weight) / (m - j)
            return out
        w = np.asarray(self.weights(k), dtype=float)
        if w.shape != (m,) or np.any(w < 0) or not w.sum() > 0:
            raise ModelError(f"weights({k}) must return {m} nonnegative weights")
        return w / w.sum()

    def sample(self, k: int, u: float) -> int:
        """Inverse-CDF draw of the closing increment from one uniform."""
        m = int(k) - 1
        if m <= 0:
            raise ModelError("no closing move at spread 1")
        if self.kind == "uniform" or m == 1:
            return min(int(u * m), m - 1) + 1
        if self.kind == "two_part":
            j = _two_part_cut(m, self.split)
            if u < self.weight:
                return min(int(u / self.weight * j), j - 1) + 1
            return j + min(int((u - self.weight) / (1.0 - self.weight) * (m - j)), m - j - 1) + 1
        cdf = np.cumsum(self.probs(k))
        return min(int(np.searchsorted(cdf, u, side="right")), m - 1) + 1

    def bound_holds(self, k: int) -> bool:
        m = int(k) - 1
        if m <= 0:
            return True
        scaled = self.probs(k) * m
        return bool(np.all(scaled >= 1.0 / self.c - 1e-12) and np.all(scaled <= self.c + 1e-12))

    def first_violation(self, upto: int) -> int | None:
        for k in range(2, int(upto) + 1):
            if not self.bound_holds(k):
                return k
        return None

    def to_dict(self) -> dict:
        if self.kind == "custom":
            raise ModelError("custom catastrophe generators cannot be serialized")
        if self.kind == "uniform":
            return {"kind": "uniform"}
        return {"kind": "two_part", "split": self.split, "weight": self.weight, "c": self.c}

    @classmethod
    def from_dict(cls, data: dict) -> CatastropheDist:
        kind = data.get("kind", "uniform")
        if kind == "uniform":
            return cls.uniform()
        if kind == "two_part":
            return cls.two_part(data.get("split", 0.5), data.get("weight", 0.7), data.get("c"))
        raise ModelError(f"cannot build catastrophe kind {kind!r} from config")


def _two_part_constant(split: float, weight: float, scan: int = 4096) -> float:
    # Scan small spreads exactly; beyond the scan the block ratios only
    # approach their limits, which are included below.
    limits = [weight / split, (1 - weight) / (1 - split)]
    worst = max(max(r, 1 / r) for r in limits)
    for m in range(2, scan + 1):
        j = _two_part_cut(m, split)
        for r in (weight * m / j, (1 - weight) * m / (m - j)):
            worst = max(worst, r, 1 / r)
    return worst * (1 + 1e-9) if worst > 1 else 1 + 1e-9


# --------------------------------------------------------------------------- #
# States and laws
# --------------------------------------------------------------------------- #


@dataclass(frozen=True, order=True)
class BookState:
    """Best bid and ask in ticks.  The bid may reach zero or below: no
    boundary is imposed on price levels, only ``bid < ask``."""

    bid: int
    ask: int

    def __post_init__(self) -> None:
        if int(self.bid) != self.bid or int(self.ask) != self.ask:
            raise ModelError("prices must be integer ticks")
        object.__setattr__(self, "bid", int(self.bid))
        object.__setattr__(self, "ask", int(self.ask))
        if not self.bid < self.ask:
            raise ModelError(f"need bid < ask, got ({self.bid}, {self.ask})")

    @property
    def spread(self) -> int:
        return self.ask - self.bid


@dataclass(frozen=True)
class Move:
    side: str  # "ask", "bid" or "spread"
    direction: str
    delta: int

    def apply(self, state: BookState) -> BookState:
        step = self.delta if self.direction == UP else -self.delta
        if self.side == ASK:
            return BookState(state.bid, state.ask + step)
        if self.side == BID:
            return BookState(state.bid + step, state.ask)
        raise ModelError("spread moves do not act on book states")

    @property
    def spread_change(self) -> int:
        if self.side == "spread":
            return self.delta if self.direction == UP else -self.delta
        opens = (self.side, self.direction) in ((ASK, UP), (BID, DOWN))
        return self.delta if opens else -self.delta


@dataclass(frozen=True)
class TransitionLaw:
    """Outgoing moves with their rates at one state.

    ``total_rate`` is exact.  For unbounded increment laws the listed
    moves stop at ``max_listed_delta`` and ``unlisted_rate`` carries the
    remainder, so ``sum(rates) + unlisted_rate == total_rate``.
    """

    moves: tuple[tuple[Move, float], ...]
    total_rate: float
    unlisted_rate: float = 0.0

    def __iter__(self) -> Iterator[tuple[Move, float]]:
        return iter(self.moves)

    def __len__(self) -> int:
        return len(self.moves)

    def rate(self, side: str, direction: str, delta: int) -> float:
        return sum(r for m, r in self.moves if (m.side, m.direction, m.delta) == (side, direction, delta))

    def class_rate(self, side: str, direction: str) -> float:
        return sum(r for m, r in self.moves if (m.side, m.direction) == (side, direction))

    @property
    def listed_rate(self) -> float:
        return math.fsum(r for _, r in self.moves)

    def spread_marginal(self) -> dict[int, float]:
        """Rates aggregated by spread change."""
        out: dict[int, float] = {}
        for m, r in self.moves:
            out[m.spread_change] = out.get(m.spread_change, 0.0) + r
        return out


def _spread_of(state: BookState | int) -> int:
    return state.spread if isinstance(state, BookState) else int(state)


def hc_rates(state: BookState, params: HcParams, cat: CatastropheDist | None = None) -> TransitionLaw:
    cat = cat or CatastropheDist.uniform()
    k = state.spread
    moves: list[tuple[Move, float]] = [
        (Move(ASK, UP, 1), params.alpha_plus),
        (Move(BID, DOWN, 1), params.beta_minus),
    ]
    total = params.gamma_plus
    if k >= 2:
        q = cat.probs(k)
        for d in range(1, k):
            moves.append((Move(ASK, DOWN, d), params.alpha_minus * q[d - 1]))
        for d in range(1, k):
            moves.append((Move(BID, UP, d), params.beta_plus * q[d - 1]))
        total = params.gamma
    return TransitionLaw(tuple(moves), total)


def power_weights(m: int, mu_exp: float) -> np.ndarray:
    """``delta ** -mu_exp`` for delta = 1..m."""
    return np.arange(1, m + 1, dtype=float) ** (-mu_exp)


def nc_rates(state: BookState, params: NcParams) -> TransitionLaw:
    k = state.spread
    moves: list[tuple[Move, float]] = [
        (Move(ASK, UP, 1), params.alpha_plus),
        (Move(BID, DOWN, 1), params.beta_minus),
    ]
    if k >= 2:
        w = power_weights(k - 1, params.mu_exp)
        moves += [(Move(ASK, DOWN, d), params.alpha_minus * w[d - 1]) for d in range(1, k)]
        moves += [(Move(BID, UP, d), params.beta_plus * w[d - 1]) for d in range(1, k)]
    total = math.fsum(r for _, r in moves)
    return TransitionLaw(tuple(moves), total)


def geometric_pmf(theta: float, deltas: np.ndarray) -> np.ndarray:
    return theta * (1.0 - theta) ** (np.asarray(deltas, dtype=float) - 1.0)


def truncated_geometric_pmf(theta: float, k: int) -> np.ndarray:
    """Geometric(theta) conditioned on ``I_k``."""
    d = np.arange(1, k, dtype=float)
    norm = -math.expm1((k - 1) * math.log1p(-theta))
    return geometric_pmf(theta, d) / norm


def llg_class_rates(k: int, params: LlgParams) -> tuple[float, float, float, float]:
    ka, kb = float(k) ** params.kappa_a, float(k) ** params.kappa_b
    closing = k >= 2
    return (
        params.alpha_plus / ka,
        params.alpha_minus / ka if closing else 0.0,
        params.beta_plus / kb if closing else 0.0,
        params.beta_minus / kb,
    )


def llg_rates(state: BookState, params: LlgParams, max_listed_delta: int = DEFAULT_MAX_LISTED_DELTA) -> TransitionLaw:
    k = state.spread
    a_up, a_dn, b_up, b_dn = llg_class_rates(k, params)
    up_pmf = geometric_pmf(params.theta, np.arange(1, max_listed_delta + 1))
    moves: list[tuple[Move, float]] = []
    moves += [(Move(ASK, UP, d), a_up * up_pmf[d - 1]) for d in range(1, max_listed_delta + 1)]
    moves += [(Move(BID, DOWN, d), b_dn * up_pmf[d - 1]) for d in range(1, max_listed_delta + 1)]
    if k >= 2:
        dn_pmf = truncated_geometric_pmf(params.theta, k)
        moves += [(Move(ASK, DOWN, d), a_dn * dn_pmf[d - 1]) for d in range(1, k)]
        moves += [(Move(BID, UP, d), b_up * dn_pmf[d - 1]) for d in range(1, k)]
    total = a_up + a_dn + b_up + b_dn
    tail = (a_up + b_dn) * (1.0 - params.theta) ** max_listed_delta
    return TransitionLaw(tuple(moves), total, unlisted_rate=tail)


# --------------------------------------------------------------------------- #
# Regime
# --------------------------------------------------------------------------- #

Params = Union[HcParams, NcParams, LlgParams]
_REGIME_NAMES = {HcParams: "hc", NcParams: "nc", LlgParams: "llg"}
_PARAM_TYPES = {v: k for k, v in _REGIME_NAMES.items()}


@dataclass(frozen=True)
class RegimeSpec:
    """One regime: its parameters plus, for HC, the catastrophe law.
    Every rate used anywhere in the package comes from here."""

    params: Params
    catastrophe: CatastropheDist = field(default_factory=CatastropheDist.uniform)

    def __post_init__(self) -> None:
        if type(self.params) not in _REGIME_NAMES:
            raise ModelError(f"unsupported parameter type {type(self.params).__name__}")
        if not isinstance(self.params, HcParams) and self.catastrophe.kind != "uniform":
            raise ModelError("catastrophe distributions only apply to the hc regime")

    @classmethod
    def hc(cls, alpha_plus, alpha_minus, beta_plus, beta_minus, catastrophe=None) -> RegimeSpec:
        return cls(HcParams(alpha_plus, alpha_minus, beta_plus, beta_minus), catastrophe or CatastropheDist.uniform())

    @property
    def name(self) -> str:
        return _REGIME_NAMES[type(self.params)]

    def book_law(self, state: BookState, max_listed_delta: int = DEFAULT_MAX_LISTED_DELTA) -> TransitionLaw:
        if isinstance(self.params, HcParams):
            return hc_rates(state, self.params, self.catastrophe)
        if isinstance(self.params, NcParams):
            return nc_rates(state, self.params)
        return llg_rates(state, self.params, max_listed_delta)

    def class_rates(self, k: int) -> tuple[float, float, float, float]:
        """Total rate of each move class at spread ``k`` (kernel order)."""
        p = self.params
        if isinstance(p, LlgParams):
            return llg_class_rates(k, p)
        closing = k >= 2
        scale = 1.0
        if isinstance(p, NcParams) and closing:
            scale = float(power_weights(k - 1, p.mu_exp).sum())
        return (
            p.alpha_plus,
            p.alpha_minus * scale if closing else 0.0,
            p.beta_plus * scale if closing else 0.0,
            p.beta_minus,
        )

    def exit_rate(self, k: int) -> float:
        return math.fsum(self.class_rates(k))

    def down_probs(self, k: int) -> np.ndarray:
        """Law of the closing increment on ``I_k`` (shared by both closing classes)."""
        p = self.params
        if isinstance(p, HcParams):
            return self.catastrophe.probs(k)
        if isinstance(p, NcParams):
            w = power_weights(k - 1, p.mu_exp)
            return w / w.sum() if k >= 2 else w
        return truncated_geometric_pmf(p.theta, k) if k >= 2 else np.empty(0)

    def to_dict(self) -> dict:
        out = {"regime": self.name}
        out.update({k: v for k, v in vars(self.params).items()})
        if self.name == "hc":
            out["catastrophe"] = self.catastrophe.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> RegimeSpec:
        data = dict(data)
        try:
            ptype = _PARAM_TYPES[data.pop("regime")]
        except KeyError as exc:
            raise ModelError(f"regime must be one of {sorted(_PARAM_TYPES)}") from exc
        cat = CatastropheDist.from_dict(data.pop("catastrophe", {"kind": "uniform"}))
        names = list(ptype.__dataclass_fields__)
        unknown = set(data) - set(names)
        if unknown:
            raise ModelError(f"unknown {ptype.__name__} fields: {sorted(unknown)}")
        try:
            params = ptype(**{n: data[n] for n in names})
        except KeyError as exc:
            raise ModelError(f"missing regime field {exc.args[0]!r}") from exc
        return cls(params, cat)


def spread_law(k: int, regime: RegimeSpec, max_listed_delta: int = DEFAULT_MAX_LISTED_DELTA) -> TransitionLaw:
    """Marginal transition law of the spread chain at spread ``k``."""
    k = int(k)
    if k < 1:
        raise ModelError("spread must be >= 1")
    a_up, a_dn, b_up, b_dn = regime.class_rates(k)
    up_total, down_total = a_up + b_dn, a_dn + b_up
    moves: list[tuple[Move, float]] = []
    unlisted = 0.0
    if isinstance(regime.params, LlgParams):
        theta = regime.params.theta
        pmf = geometric_pmf(theta, np.arange(1, max_listed_delta + 1))
        moves += [(Move("spread", UP, d), up_total * pmf[d - 1]) for d in range(1, max_listed_delta + 1)]
        unlisted = up_total * (1.0 - theta) ** max_listed_delta
    else:
        moves.append((Move("spread", UP, 1), up_total))
    if k >= 2:
        q = regime.down_probs(k)
        moves += [(Move("spread", DOWN, d), down_total * q[d - 1]) for d in range(1, k)]
    return TransitionLaw(tuple(moves), up_total + down_total, unlisted_rate=unlisted)
