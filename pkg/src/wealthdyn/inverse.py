"""Inverse propagation: constant rates that drive the economy to a desired state.

Each candidate rate vector is propagated forward over the full horizon and
the final state is compared with the target. A projected
Levenberg-Marquardt iteration with a forward-difference Jacobian minimises
the squared residual inside box bounds, restarted from seeded uniform
random points.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import RateMatrices, build_rate_matrices, derivative
from .errors import ConfigError, InfeasibleDesiredError, NoConvergenceError
from .forward import ConvergenceReport, detect_convergence, propagate, simulate
from .taxonomy import EconomyConfig, Pair, RateParams, format_pair, interaction_pairs, parse_pair

PENALTY_SCALE = 10.0
FD_REL_STEP = 1e-6


@dataclass(frozen=True)
class FreeParameter:
    kind: str  # "beta" or "gamma"
    pair: Pair
    lower: float = 0.0
    upper: float = 1.0

    @property
    def ident(self) -> str:
        return f"{self.kind}:{format_pair(self.pair)}"


def parse_parameter_id(ident: str) -> tuple[str, Pair]:
    kind, sep, rest = ident.partition(":")
    if not sep or kind not in ("beta", "gamma"):
        raise ConfigError(f"parameter id {ident!r} is not 'beta:X->Y' or 'gamma:X->Y'")
    return kind, parse_pair(rest)


@dataclass(frozen=True)
class InverseProblem:
    config: EconomyConfig
    desired: np.ndarray
    free_parameters: tuple[FreeParameter, ...]

    def __post_init__(self):
        m = self.config.max_supply
        d = np.array(self.desired, dtype=float)
        if d.shape != (len(self.config.categories),):
            raise InfeasibleDesiredError("desired vector length does not match category count")
        if abs(math.fsum(d) - m) > 1e-9 * m:
            raise InfeasibleDesiredError(f"desired wealths sum to {math.fsum(d)}, not max_supply {m}")
        if np.any(d < 0):
            raise InfeasibleDesiredError("desired wealths must be non-negative")
        for p in self.free_parameters:
            if not (math.isfinite(p.lower) and math.isfinite(p.upper) and p.lower <= p.upper):
                raise ValueError(f"bad bounds for {p.ident}")
            if p.kind == "gamma" and (p.lower < 0 or p.upper > 1):
                raise ValueError(f"rotation rate bounds for {p.ident} must lie within [0,1]")
        d.setflags(write=False)
        object.__setattr__(self, "desired", d)
        object.__setattr__(self, "_layout", _Layout(self))

    @classmethod
    def from_config(
        cls,
        config: EconomyConfig,
        desired=None,
        beta_bounds: tuple[float, float] = (0.0, 1.0),
        gamma_bounds: tuple[float, float] = (0.0, 1.0),
    ) -> "InverseProblem":
        """Every interaction pair and rotation edge becomes a free parameter."""
        if desired is None:
            desired = config.desired_vector
            if desired is None:
                raise ConfigError("economy has no desired_wealth and none was given")
        elif isinstance(desired, dict):
            desired = [desired[n] for n in config.names]
        params = [FreeParameter("beta", (p, r), *beta_bounds) for p, r, _ in interaction_pairs(config)]
        params += [FreeParameter("gamma", e, *gamma_bounds) for e in config.rotation_edges()]
        return cls(config, np.asarray(desired, dtype=float), tuple(params))

    @property
    def lower(self) -> np.ndarray:
        return np.array([p.lower for p in self.free_parameters])

    @property
    def upper(self) -> np.ndarray:
        return np.array([p.upper for p in self.free_parameters])

    @property
    def ids(self) -> list[str]:
        return [p.ident for p in self.free_parameters]

    def vector(self, parameters) -> np.ndarray:
        """Accept a mapping id->value or a sequence in free-parameter order."""
        if isinstance(parameters, dict):
            return np.array([float(parameters[i]) for i in self.ids])
        return np.asarray(parameters, dtype=float)

    def rate_matrices(self, parameters) -> RateMatrices:
        return self._layout.matrices(self.vector(parameters))

    def rate_params(self, parameters) -> RateParams:
        x = self.vector(parameters)
        beta = dict(self._layout.fixed.beta)
        gamma = dict(self._layout.fixed.gamma)
        for p, v in zip(self.free_parameters, x):
            (beta if p.kind == "beta" else gamma)[p.pair] = float(v)
        return RateParams(beta, gamma)


class _Layout:
    """Precomputed placement of free parameters into the rate matrices."""

    def __init__(self, problem: InverseProblem):
        cfg = problem.config
        free_beta = {p.pair for p in problem.free_parameters if p.kind == "beta"}
        free_beta |= {(r, p) for p, r in free_beta}
        free_gamma = {p.pair for p in problem.free_parameters if p.kind == "gamma"}
        self.fixed = RateParams(
            {k: v for k, v in cfg.rates.beta.items() if k not in free_beta},
            {k: v for k, v in cfg.rates.gamma.items() if k not in free_gamma},
        )
        base = build_rate_matrices(cfg.with_rates(self.fixed))
        self.base_b = np.array(base.B)
        self.base_g = np.array(base.Gamma)
        self.slots = []
        for p in problem.free_parameters:
            a, b = cfg.index(p.pair[0]), cfg.index(p.pair[1])
            self.slots.append((p.kind == "beta", a, b))

    def matrices(self, x: np.ndarray) -> RateMatrices:
        b = self.base_b.copy()
        g = self.base_g.copy()
        for (is_beta, src, dst), v in zip(self.slots, x):
            if is_beta:
                b[dst, src] += v
                b[src, dst] -= v
            else:
                g[dst, src] += v
                g[src, src] -= v
        return RateMatrices(b, g)


@dataclass(frozen=True)
class SolveOptions:
    tolerance: float = 0.01
    max_iterations: int = 200
    num_starts: int = 16
    seed: int = 42


@dataclass(frozen=True)
class SolveResult:
    parameters: dict[str, float]
    final_state: np.ndarray
    residual_norm: float
    iterations: int
    starts_used: int
    seed: int
    success: bool = False
    start_index: int = 0

    def to_document(self, config: EconomyConfig) -> dict:
        return {
            "parameters": {k: round(v, 12) for k, v in self.parameters.items()},
            "residual_norm": self.residual_norm,
            "final_state": {n: float(v) for n, v in zip(config.names, self.final_state)},
            "seed": self.seed,
            "iterations": self.iterations,
            "starts_used": self.starts_used,
        }


def rates_from_parameters(parameters: dict[str, float], base: RateParams | None = None) -> RateParams:
    """Overlay ``beta:X->Y`` / ``gamma:X->Y`` entries on ``base`` rates."""
    beta = dict(base.beta) if base else {}
    gamma = dict(base.gamma) if base else {}
    for ident, value in parameters.items():
        kind, pair = parse_parameter_id(ident)
        target = beta if kind == "beta" else gamma
        if kind == "beta":
            target.pop((pair[1], pair[0]), None)
        target[pair] = float(value)
    return RateParams(beta, gamma)


def load_parameters_document(text: str, base: RateParams | None = None) -> RateParams:
    """Rates from either a solution document or a bare ``{"beta":…, "gamma":…}`` map."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError("parameters document must be a JSON object")
    if "parameters" in doc:
        if not isinstance(doc["parameters"], dict):
            raise ConfigError("'parameters' must be an object")
        return rates_from_parameters(doc["parameters"], base)
    unknown = set(doc) - {"beta", "gamma"}
    if unknown:
        raise ConfigError(f"unknown field {sorted(unknown)[0]!r} in parameters document")
    flat = {f"beta:{k}": v for k, v in doc.get("beta", {}).items()}
    flat.update({f"gamma:{k}": v for k, v in doc.get("gamma", {}).items()})
    return rates_from_parameters(flat, base)


# --------------------------------------------------------------------------
# residuals


def final_state_residual(parameters, problem: InverseProblem) -> np.ndarray:
    """Simulated final state minus the desired state.

    An overdraft anywhere along the trajectory yields a flat penalty of
    ``10 * M`` per component.
    """
    cfg = problem.config
    rates = problem.rate_matrices(parameters)
    wealth, failed = propagate(cfg.initial_wealth, rates, cfg.max_supply, cfg.delta_t, cfg.steps)
    if failed >= 0:
        return np.full(problem.desired.shape, PENALTY_SCALE * cfg.max_supply)
    return wealth[-1] - problem.desired


def attractor_residual(rates: RateMatrices, desired, max_supply: float) -> np.ndarray:
    """Rate of change at ``desired``; zero exactly when it is a fixed point."""
    return derivative(np.asarray(desired, dtype=float), rates, max_supply)


# --------------------------------------------------------------------------
# solver


def _fd_jacobian(fun, x, r, lo, hi):
    jac = np.empty((r.size, x.size))
    for j in range(x.size):
        h = FD_REL_STEP * max(abs(x[j]), 1.0)
        xs = x.copy()
        if x[j] + h > hi[j]:
            h = -h
        xs[j] = x[j] + h
        jac[:, j] = (fun(xs) - r) / h
    return jac


def projected_lm(fun, x0, lo, hi, max_iterations=200, rtol=1e-10):
    """Box-constrained Levenberg-Marquardt on ``0.5 * ||fun(x)||**2``.

    Variables pinned at a bound whose gradient points outward are held
    fixed for that step; trial points are projected back onto the box.
    Returns ``(x, residual, iterations)``.
    """
    x = np.clip(np.asarray(x0, dtype=float), lo, hi)
    r = fun(x)
    cost = float(r @ r)
    mu = 1e-3
    it = 0
    while it < max_iterations and cost > 0.0:
        it += 1
        jac = _fd_jacobian(fun, x, r, lo, hi)
        grad = jac.T @ r
        at_lo = (x <= lo) & (grad > 0)
        at_hi = (x >= hi) & (grad < 0)
        free = ~(at_lo | at_hi)
        if not free.any():
            break
        jf = jac[:, free]
        a = jf.T @ jf
        diag = np.maximum(np.diag(a), 1e-12 * max(np.max(np.diag(a)), 1e-300))
        accepted = False
        while mu < 1e16:
            try:
                step = np.linalg.solve(a + mu * np.diag(diag), -grad[free])
            except np.linalg.LinAlgError:
                mu *= 4.0
                continue
            trial = x.copy()
            trial[free] += step
            trial = np.clip(trial, lo, hi)
            if np.array_equal(trial, x):
                break
            r_trial = fun(trial)
            c_trial = float(r_trial @ r_trial)
            if c_trial < cost:
                accepted = True
                break
            mu *= 4.0
        if not accepted:
            break
        old = math.sqrt(cost)
        x, r, cost = trial, r_trial, c_trial
        mu = max(mu / 3.0, 1e-12)
        if abs(old - math.sqrt(cost)) <= rtol * old:
            break
    return x, r, it


def _retreat_start(problem: InverseProblem, x0: np.ndarray, tries: int = 40) -> np.ndarray:
    """Halve the distance to the lower bound until the start no longer overdraws.

    The overdraft penalty is flat, so a start inside that region gives the
    optimizer no gradient to follow.
    """
    lo = problem.lower
    x = x0
    for _ in range(tries):
        cfg = problem.config
        _, failed = propagate(cfg.initial_wealth, problem.rate_matrices(x), cfg.max_supply, cfg.delta_t, cfg.steps)
        if failed < 0:
            return x
        x = lo + 0.5 * (x - lo)
    return x0


def solve_inverse(problem: InverseProblem, options: SolveOptions | None = None) -> SolveResult:
    """Multi-start least squares on the final-state residual.

    Raises :class:`NoConvergenceError` (carrying the best result) when no
    start gets the residual norm within ``tolerance * M``.
    """
    opts = options or SolveOptions()
    if opts.num_starts < 1:
        raise ValueError("num_starts must be at least 1")
    m = problem.config.max_supply
    lo, hi = problem.lower, problem.upper
    rng = np.random.default_rng(opts.seed)
    starts = rng.uniform(lo, hi, size=(opts.num_starts, lo.size))

    def scaled(x):
        return final_state_residual(x, problem) / m

    best = None
    for k, x0 in enumerate(starts):
        x0 = _retreat_start(problem, x0)
        x, r, its = projected_lm(scaled, x0, lo, hi, opts.max_iterations)
        norm = float(np.linalg.norm(r)) * m
        if best is None or norm < best[1]:
            best = (x, norm, its, k)

    x, norm, its, k = best
    final = final_state_residual(x, problem) + problem.desired
    result = SolveResult(
        parameters={i: float(v) for i, v in zip(problem.ids, x)},
        final_state=final,
        residual_norm=float(np.linalg.norm(final - problem.desired)),
        iterations=its,
        starts_used=opts.num_starts,
        seed=opts.seed,
        success=norm <= opts.tolerance * m,
        start_index=k,
    )
    if not result.success:
        raise NoConvergenceError(result, opts.tolerance)
    return result


@dataclass(frozen=True)
class VerificationReport:
    final_state: np.ndarray
    deviation: np.ndarray
    relative_deviation: np.ndarray
    convergence: ConvergenceReport
    attractor_residual: np.ndarray
    converged_before_end: bool = field(default=False)


def verify_solution(result: SolveResult, problem: InverseProblem, tolerance: float = 1.0, window: int = 50) -> VerificationReport:
    """Re-simulate with the found parameters and compare with the target."""
    rates = problem.rate_matrices(result.parameters)
    traj = simulate(problem.config, rates)
    final = traj.final.wealth
    dev = final - problem.desired
    scale = np.where(problem.desired > 0, problem.desired, problem.config.max_supply)
    conv = detect_convergence(traj, tolerance, window)
    last = traj.t0 + len(traj) - 1
    return VerificationReport(
        final_state=np.array(final),
        deviation=dev,
        relative_deviation=np.abs(dev) / scale,
        convergence=conv,
        attractor_residual=attractor_residual(rates, problem.desired, problem.config.max_supply),
        converged_before_end=conv.converged and conv.attractor_time < last,
    )
