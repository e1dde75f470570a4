"""Forward propagation, attractor detection and inequality metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import RateMatrices, WealthState, build_rate_matrices
from .errors import NegativeWealthError
from .kernels import euler_trajectory_kernel
from .taxonomy import EconomyConfig

DEFAULT_TOLERANCE = 1.0
DEFAULT_WINDOW = 50
NAKAMOTO_THRESHOLD = 0.51


@dataclass(frozen=True)
class Trajectory:
    """Wealth per category (rows: timesteps ``t0 .. t0+len-1``)."""

    wealth: np.ndarray
    config: EconomyConfig
    t0: int = 0

    def __post_init__(self):
        self.wealth.setflags(write=False)

    def __len__(self) -> int:
        return self.wealth.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.t0, self.t0 + len(self))

    @property
    def states(self) -> list[WealthState]:
        return [WealthState(self.t0 + k, row) for k, row in enumerate(self.wealth)]

    def at(self, t: int) -> WealthState:
        k = t - self.t0
        if not 0 <= k < len(self):
            raise IndexError(f"timestep {t} outside trajectory [{self.t0}, {self.t0 + len(self) - 1}]")
        return WealthState(t, self.wealth[k])

    @property
    def final(self) -> WealthState:
        return self.at(self.t0 + len(self) - 1)


@dataclass(frozen=True)
class ConvergenceReport:
    converged: bool
    attractor_time: int | None
    attractor_state: np.ndarray | None
    max_late_delta: float


@dataclass(frozen=True)
class WealthMetrics:
    gini: float
    shannon_entropy: float
    nakamoto_index: int


def propagate(f0: np.ndarray, rates: RateMatrices, max_supply: float, delta_t: float, steps: int):
    """Raw kernel call: returns ``(wealth_array, failed_at)`` without raising."""
    return euler_trajectory_kernel(
        np.ascontiguousarray(f0, dtype=float),
        np.ascontiguousarray(rates.B),
        np.ascontiguousarray(rates.Gamma),
        float(max_supply),
        float(delta_t),
        int(steps),
        1e-9 * max_supply,
    )


def simulate(config: EconomyConfig, rates: RateMatrices | None = None) -> Trajectory:
    """Run ``config.steps`` states from the initial wealths.

    ``rates`` overrides the matrices built from ``config.rates``.
    """
    if rates is None:
        rates = build_rate_matrices(config)
    wealth, failed = propagate(config.initial_wealth, rates, config.max_supply, config.delta_t, config.steps)
    if failed >= 0:
        raise NegativeWealthError(failed)
    return Trajectory(wealth, config)


def step_deltas(trajectory: Trajectory) -> np.ndarray:
    """Largest absolute per-component change for each step ``t -> t+1``."""
    if len(trajectory) < 2:
        return np.zeros(0)
    return np.abs(np.diff(trajectory.wealth, axis=0)).max(axis=1)


def detect_convergence(
    trajectory: Trajectory, tolerance: float = DEFAULT_TOLERANCE, window: int = DEFAULT_WINDOW
) -> ConvergenceReport:
    """Earliest timestep after which every step changes each component by at most ``tolerance``.

    The quiet stretch must run through the end of the trajectory and cover
    at least ``window`` steps.
    """
    if len(trajectory) == 0:
        raise ValueError("empty trajectory")
    if tolerance <= 0 or window < 1:
        raise ValueError("tolerance must be positive and window at least 1")
    d = step_deltas(trajectory)
    late = d[-window:]
    max_late = float(late.max()) if late.size else 0.0

    loud = np.nonzero(d > tolerance)[0]
    first_quiet = int(loud[-1]) + 1 if loud.size else 0
    if d.size - first_quiet < window:
        return ConvergenceReport(False, None, None, max_late)
    t = trajectory.t0 + first_quiet
    return ConvergenceReport(True, t, trajectory.wealth[first_quiet].copy(), max_late)


def wealth_metrics(state: WealthState | np.ndarray, nakamoto_threshold: float = NAKAMOTO_THRESHOLD) -> WealthMetrics:
    w = np.asarray(state.wealth if isinstance(state, WealthState) else state, dtype=float)
    total = w.sum()
    if not total > 0:
        raise ValueError("wealth metrics need a positive total")
    n = w.size
    asc = np.sort(w)
    rank = np.arange(1, n + 1)
    gini = float(np.sum((2 * rank - n - 1) * asc) / (n * total))

    p = w / total
    p = p[p > 0]
    entropy = float(-np.sum(p * np.log(p)))

    # a holder of exactly the threshold share counts as a majority
    cum = np.cumsum(asc[::-1])
    nakamoto = int(np.argmax(cum >= nakamoto_threshold * total * (1 - 1e-12))) + 1
    return WealthMetrics(max(gini, 0.0), max(entropy, 0.0), nakamoto)


def circulation(state: WealthState | np.ndarray, config: EconomyConfig) -> float:
    """Maximum supply minus the control mechanism's holding, clipped to ``[0, M]``."""
    w = state.wealth if isinstance(state, WealthState) else np.asarray(state, dtype=float)
    cm = config.control_mechanism
    if cm is None:
        raise ValueError("economy has no unique control mechanism")
    s = config.max_supply - float(w[config.index(cm)])
    return min(max(s, 0.0), config.max_supply)
