"""Rate matrices and the bilinear wealth dynamics.

The rate of change of the wealth vector ``F`` is::

    dF/dt = (1/M) * F * (B @ F) + Gamma @ F

with ``B`` antisymmetric (interactions) and ``Gamma`` column-sum-zero
(rotations). Both terms sum to zero across categories, so the total
supply ``M`` is conserved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NegativeWealthError, RateConflictError
from .taxonomy import EconomyConfig, format_pair


@dataclass(frozen=True)
class RateMatrices:
    B: np.ndarray
    Gamma: np.ndarray

    def __post_init__(self):
        for m in (self.B, self.Gamma):
            m.setflags(write=False)

    @property
    def n(self) -> int:
        return self.B.shape[0]


@dataclass(frozen=True)
class WealthState:
    t: int
    wealth: np.ndarray

    def __post_init__(self):
        w = np.array(self.wealth, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "wealth", w)


def build_rate_matrices(config: EconomyConfig) -> RateMatrices:
    """Place the config's directional rates into ``B`` and ``Gamma``.

    A beta key ``payer->receiver`` with value ``v`` sets ``B[receiver, payer] = v``
    and ``B[payer, receiver] = -v``. A gamma key ``src->dst`` sets
    ``Gamma[dst, src]``; each diagonal entry is minus its column's outflows.
    """
    n = len(config.categories)
    b = np.zeros((n, n))
    seen: dict[tuple[int, int], float] = {}
    for (payer, receiver), value in config.rates.beta.items():
        i, j = config.index(receiver), config.index(payer)
        if (i, j) in seen and seen[(i, j)] != value:
            raise RateConflictError(
                f"interaction rate {format_pair((payer, receiver))} conflicts with its reverse direction"
            )
        seen[(i, j)] = value
        seen[(j, i)] = -value
        b[i, j] = value
        b[j, i] = -value

    gamma = np.zeros((n, n))
    for (src, dst), value in config.rates.gamma.items():
        gamma[config.index(dst), config.index(src)] += value
    for k in range(n):
        gamma[k, k] = 0.0
        gamma[k, k] = -gamma[:, k].sum()

    rates = RateMatrices(b, gamma)
    check_rate_matrices(rates)
    return rates


def check_rate_matrices(rates: RateMatrices, atol: float = 1e-12) -> None:
    """Assert the structural invariants; raises ``ValueError`` on failure."""
    b, g = rates.B, rates.Gamma
    if b.shape != g.shape or b.shape[0] != b.shape[1]:
        raise ValueError("rate matrices must be square and of equal shape")
    if not np.allclose(b, -b.T, rtol=0.0, atol=atol):
        raise ValueError("interaction matrix is not antisymmetric")
    if not np.allclose(g.sum(axis=0), 0.0, rtol=0.0, atol=atol):
        raise ValueError("rotation matrix columns do not sum to zero")
    off = g[~np.eye(g.shape[0], dtype=bool)]
    if np.any(off < 0) or np.any(off > 1):
        raise ValueError("off-diagonal rotation rates must lie in [0,1]")


def derivative(state: WealthState | np.ndarray, rates: RateMatrices, max_supply: float) -> np.ndarray:
    f = state.wealth if isinstance(state, WealthState) else np.asarray(state, dtype=float)
    return f * (rates.B @ f) / max_supply + rates.Gamma @ f


def euler_step(state: WealthState, rates: RateMatrices, max_supply: float, delta_t: float) -> WealthState:
    """One forward-Euler step. Overdraft beyond ``1e-9 * M`` raises :class:`NegativeWealthError`."""
    nxt = state.wealth + delta_t * derivative(state, rates, max_supply)
    if np.any(nxt < -1e-9 * max_supply):
        raise NegativeWealthError(state.t + 1, nxt)
    return WealthState(state.t + 1, nxt)

