"""Probabilistic interaction rates and kinetic wealth-exchange models.

At the level of individual agents the bilinear system collapses to a
pairwise trading rule: agent ``a`` gains ``dF`` and agent ``b`` loses it.
The three exchange rules below (no saving, a global saving propensity,
individual saving propensities) relax to Boltzmann, Gamma and
Pareto-tailed wealth distributions respectively.

Randomness comes from numpy's PCG64 generator seeded with a 64-bit
integer; all draws are made up front in fixed-size chunks so the numba
and numpy kernels consume identical streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import WealthState
from .forward import wealth_metrics
from .kernels import kinetic_exchanges_kernel
from .pricing import _signed_quantities, _wealth_product
from .taxonomy import EconomyConfig, Pair

RULES = ("no-saving", "global-saving", "individual-saving")
CHUNK = 1 << 18


@dataclass(frozen=True)
class ProbabilisticRecord:
    interaction: str
    demand: int
    price: float
    success_probability: float

    def __post_init__(self):
        if not 0.0 <= self.success_probability <= 1.0:
            raise ValueError(f"success probability {self.success_probability} outside [0,1]")


@dataclass(frozen=True)
class ProbabilisticLedger:
    records: tuple[ProbabilisticRecord, ...] = ()


def expected_beta(
    ledger: ProbabilisticLedger,
    pair: Pair,
    state: WealthState,
    config: EconomyConfig,
    delta_t: float | None = None,
) -> float:
    """Interaction rate from the expected transaction sum (binomial mean ``p * D``)."""
    dt = config.delta_t if delta_t is None else delta_t
    product = _wealth_product(state, pair, config)
    total = _signed_quantities(ledger.records, pair, config, weight=lambda r: r.success_probability)
    return config.max_supply / dt * total / product


@dataclass(frozen=True)
class KineticPopulation:
    wealths: np.ndarray
    rule: str = "no-saving"
    saving: float | np.ndarray | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"unknown exchange rule {self.rule!r}; expected one of {RULES}")
        w = np.array(self.wealths, dtype=float)
        if np.any(w < 0):
            raise ValueError("agent wealths must be non-negative")
        object.__setattr__(self, "wealths", w)
        if self.rule == "global-saving":
            lam = 0.0 if self.saving is None else float(self.saving)
            if not 0.0 <= lam <= 1.0:
                raise ValueError("saving propensity must lie in [0,1]")
            object.__setattr__(self, "saving", lam)
        elif self.rule == "individual-saving" and self.saving is not None:
            lam = np.array(self.saving, dtype=float)
            if lam.shape != w.shape or np.any((lam < 0) | (lam > 1)):
                raise ValueError("individual saving propensities must be one per agent in [0,1]")
            object.__setattr__(self, "saving", lam)

    @property
    def size(self) -> int:
        return self.wealths.size

    def unsaved(self) -> np.ndarray:
        """Per-agent fraction ``1 - lambda`` put into each exchange."""
        if self.rule == "no-saving":
            return np.ones(self.size)
        if self.rule == "global-saving":
            return np.full(self.size, 1.0 - self.saving)
        if self.saving is None:
            raise ValueError("individual-saving population has no propensities; use run_kinetic to draw them")
        return 1.0 - self.saving


@dataclass(frozen=True)
class KineticSummary:
    model: str
    agents: int
    exchanges: int
    seed: int
    mean: float
    gini: float
    top_1pct_share: float

    def to_document(self) -> dict:
        return {
            "model": self.model,
            "agents": self.agents,
            "exchanges": self.exchanges,
            "seed": self.seed,
            "mean": self.mean,
            "gini": self.gini,
            "top_1pct_share": self.top_1pct_share,
        }


def trade_delta(f_a: float, f_b: float, epsilon: float, keep_a: float = 1.0, keep_b: float = 1.0) -> float:
    """Wealth gained by ``a`` from ``b``; ``keep_*`` is ``1 - lambda``."""
    return (1.0 - epsilon) * keep_b * f_b - epsilon * keep_a * f_a


def kinetic_step(population: KineticPopulation, pair: tuple[int, int], epsilon: float) -> tuple[float, float]:
    a, b = pair
    if a == b:
        raise ValueError("an exchange needs two distinct agents")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0,1]")
    keep = population.unsaved()
    f_a, f_b = float(population.wealths[a]), float(population.wealths[b])
    delta = trade_delta(f_a, f_b, epsilon, keep[a], keep[b])
    return f_a + delta, f_b - delta


def top_share(wealths: np.ndarray, fraction: float = 0.01) -> float:
    w = np.sort(np.asarray(wealths, dtype=float))[::-1]
    k = max(1, math.ceil(fraction * w.size))
    return float(w[:k].sum() / w.sum())


def summarize(population: KineticPopulation, exchanges: int) -> KineticSummary:
    w = population.wealths
    return KineticSummary(
        model=population.rule,
        agents=population.size,
        exchanges=exchanges,
        seed=population.rng_seed,
        mean=float(w.mean()),
        gini=wealth_metrics(w).gini,
        top_1pct_share=top_share(w),
    )


def run_kinetic(population: KineticPopulation, num_exchanges: int) -> tuple[KineticPopulation, KineticSummary]:
    """Random pairwise exchanges with uniform pair choice and ``epsilon ~ U(0,1)``.

    Individual-saving populations without propensities get i.i.d.
    ``U(0,1)`` draws, taken from the same seeded stream before any exchange.
    """
    n = population.size
    if n < 2:
        raise ValueError("need at least two agents")
    rng = np.random.default_rng(population.rng_seed)
    if population.rule == "individual-saving" and population.saving is None:
        population = KineticPopulation(population.wealths, population.rule, rng.random(n), population.rng_seed)
    keep = population.unsaved()
    wealth = population.wealths.copy()
    done = 0
    while done < num_exchanges:
        size = min(CHUNK, num_exchanges - done)
        first = rng.integers(0, n, size=size)
        second = rng.integers(0, n - 1, size=size)
        second += second >= first
        eps = rng.random(size)
        kinetic_exchanges_kernel(wealth, first, second, eps, keep)
        done += size
    final = KineticPopulation(wealth, population.rule, population.saving, population.rng_seed)
    return final, summarize(final, num_exchanges)


def wealth_histogram(wealths: np.ndarray, bins: int = 50) -> list[tuple[float, float, int]]:
    counts, edges = np.histogram(np.asarray(wealths, dtype=float), bins=bins)
    return [(float(edges[i]), float(edges[i + 1]), int(c)) for i, c in enumerate(counts)]


def equal_population(agents: int, rule: str, saving=None, seed: int = 0, wealth: float = 1.0) -> KineticPopulation:
    return KineticPopulation(np.full(agents, wealth), rule, saving, seed)
