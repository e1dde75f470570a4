"""Transaction-level pricing from interaction rates.

For a payer/receiver pair at timestep ``t`` the interaction rate pins the
inner product of demands and prices::

    <D(t), P(t)> = H(t) = beta * F(payer, t) * F(receiver, t) / M

so the admissible price vectors form a hyperplane. This module estimates
``beta`` from ledgers, builds that hyperplane, picks points on it and
computes the stability taxes that move quoted prices onto it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dynamics import WealthState
from .errors import ConfigError, ZeroDemandError, ZeroWealthProductError
from .forward import circulation
from .taxonomy import EconomyConfig, Pair


@dataclass(frozen=True)
class LedgerRecord:
    t: float
    interaction: str
    demand: int
    price: float

    @property
    def quantity(self) -> float:
        return self.demand * self.price


@dataclass(frozen=True)
class TransactionLedger:
    records: tuple[LedgerRecord, ...] = ()

    def window(self, t: float, delta_t: float) -> "TransactionLedger":
        """Records in ``(t - delta_t, t]``."""
        return TransactionLedger(tuple(r for r in self.records if t - delta_t < r.t <= t))


@dataclass(frozen=True)
class PriceHyperplane:
    t: int
    pair: Pair
    interactions: tuple[str, ...]
    demands: np.ndarray
    constant: float
    circulation_bound: float

    def __post_init__(self):
        d = np.array(self.demands, dtype=float)
        if d.ndim != 1 or d.size != len(self.interactions):
            raise ValueError("one demand per interaction required")
        if not np.any(d != 0):
            raise ZeroDemandError("demand vector must be non-zero")
        d.setflags(write=False)
        object.__setattr__(self, "demands", d)

    def value(self, prices) -> float:
        return float(np.dot(self.demands, np.asarray(prices, dtype=float)))


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    circulation: float
    violations: tuple[int, ...] = ()


def parse_ledger(text: str, config: EconomyConfig | None = None) -> TransactionLedger:
    """Read a JSON array of ``{t, interaction, demand, price}`` records."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, list):
        raise ConfigError("ledger must be a JSON array")
    known = {i.name for i in config.interactions} if config is not None else None
    records = []
    for k, raw in enumerate(doc):
        if not isinstance(raw, dict):
            raise ConfigError(f"ledger[{k}] must be an object")
        extra = set(raw) - {"t", "interaction", "demand", "price"}
        if extra:
            raise ConfigError(f"unknown field {sorted(extra)[0]!r} in ledger[{k}]")
        for f in ("t", "interaction", "demand", "price"):
            if f not in raw:
                raise ConfigError(f"missing required field {f!r} in ledger[{k}]")
        demand = raw["demand"]
        if isinstance(demand, bool) or not isinstance(demand, int) or demand < 0:
            raise ConfigError(f"ledger[{k}].demand must be a non-negative integer")
        if known is not None and raw["interaction"] not in known:
            raise ConfigError(f"ledger[{k}] names unknown interaction {raw['interaction']!r}")
        records.append(LedgerRecord(float(raw["t"]), raw["interaction"], demand, float(raw["price"])))
    return TransactionLedger(tuple(records))


def _signed_quantities(records, pair: Pair, config: EconomyConfig, weight=None) -> float:
    payer, receiver = pair
    total = []
    for rec in records:
        it = config.interaction(rec.interaction)
        if (it.payer, it.receiver) == (payer, receiver):
            sign = 1.0
        elif (it.payer, it.receiver) == (receiver, payer):
            sign = -1.0
        else:
            continue
        w = 1.0 if weight is None else weight(rec)
        total.append(sign * w * rec.demand * rec.price)
    return math.fsum(total)


def _wealth_product(state: WealthState, pair: Pair, config: EconomyConfig) -> float:
    fa = float(state.wealth[config.index(pair[0])])
    fb = float(state.wealth[config.index(pair[1])])
    if fa == 0.0 or fb == 0.0:
        raise ZeroWealthProductError(f"category {pair[0] if fa == 0.0 else pair[1]!r} has zero wealth")
    return fa * fb


def beta_from_ledger(
    ledger: TransactionLedger,
    pair: Pair,
    state: WealthState,
    config: EconomyConfig,
    delta_t: float | None = None,
) -> float:
    """Interaction rate implied by one window of transactions.

    ``pair`` is ``(payer, receiver)``; payments in that direction count
    positive, payments the other way negative. Only records in
    ``(state.t - delta_t, state.t]`` contribute.
    """
    dt = config.delta_t if delta_t is None else delta_t
    product = _wealth_product(state, pair, config)
    window = ledger.window(state.t, dt).records
    return config.max_supply / dt * _signed_quantities(window, pair, config) / product


def hyperplane_for_pair(
    beta: float,
    state: WealthState,
    pair: Pair,
    demands: Mapping[str, float] | Sequence[float],
    config: EconomyConfig,
    interactions: Sequence[str] | None = None,
) -> PriceHyperplane:
    """Price hyperplane for ``pair`` at ``state.t``.

    ``demands`` is either a mapping interaction -> count or a sequence
    aligned with ``interactions`` (default: the pair's interactions in
    taxonomy order).
    """
    if isinstance(demands, Mapping):
        names = tuple(demands)
        d = [float(demands[n]) for n in names]
    else:
        if interactions is None:
            interactions = [i.name for i in config.interactions if (i.payer, i.receiver) == tuple(pair)]
        names = tuple(interactions)
        d = [float(v) for v in demands]
    fa = float(state.wealth[config.index(pair[0])])
    fb = float(state.wealth[config.index(pair[1])])
    return PriceHyperplane(
        t=state.t,
        pair=tuple(pair),
        interactions=names,
        demands=np.array(d),
        constant=beta * fa * fb / config.max_supply,
        circulation_bound=circulation(state, config),
    )


def min_norm_prices(plane: PriceHyperplane) -> np.ndarray:
    """Orthogonal projection of the origin onto the hyperplane."""
    d = plane.demands
    return plane.constant / float(d @ d) * d


def solve_free_price(plane: PriceHyperplane, fixed: Mapping[str, float], free: str) -> float:
    """Price of ``free`` that lands on the hyperplane given all other prices."""
    if free not in plane.interactions:
        raise KeyError(f"{free!r} is not priced by this hyperplane")
    missing = [n for n in plane.interactions if n != free and n not in fixed]
    if missing:
        raise ValueError(f"prices for {', '.join(missing)} must be fixed")
    k = plane.interactions.index(free)
    d_free = plane.demands[k]
    if d_free == 0:
        raise ZeroDemandError(f"interaction {free!r} has zero demand")
    rest = math.fsum(plane.demands[i] * fixed[n] for i, n in enumerate(plane.interactions) if n != free)
    return (plane.constant - rest) / d_free


def stability_taxes(plane: PriceHyperplane, quoted) -> np.ndarray:
    """Uniform per-unit tax that moves the quoted prices onto the hyperplane.

    Any ``tau`` with ``<D, tau> = H - <D, quoted>`` works; the uniform
    choice spreads the gap evenly over every unit demanded. Negative
    values are reimbursements.
    """
    if isinstance(quoted, Mapping):
        quoted = [quoted[n] for n in plane.interactions]
    q = np.asarray(quoted, dtype=float)
    total = float(plane.demands.sum())
    if total == 0:
        raise ZeroDemandError("total demand is zero")
    gap = plane.constant - plane.value(q)
    return np.full(q.shape, gap / total)


def check_price_feasibility(prices, circulation_size: float) -> FeasibilityReport:
    """Prices must lie strictly inside ``(-S, S)``."""
    p = np.asarray(prices, dtype=float).ravel()
    bad = tuple(int(i) for i in np.nonzero(~(np.abs(p) < circulation_size))[0])
    return FeasibilityReport(not bad, float(circulation_size), bad)
