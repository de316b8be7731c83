"""Particle swarm optimization over long-only portfolio weights.

Global-best (star) topology with inertia-weighted velocity updates. Every
particle position is kept on the weight simplex intersected with the
per-asset bounds by :func:`repair_to_feasible`, so all fitness evaluations are
of valid portfolios. Fitness is maximized.

Reproducibility: all randomness comes from one ``numpy.random.Generator``
seeded from :attr:`PsoParams.seed`, and fitness values are reduced in particle
index order, so results are identical with or without parallel evaluation.
"""

from __future__ import annotations

import copy
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .backtest import BacktestConfig, Backtester, Weights
from .errors import InfeasibleBounds, OptimizationError
from .marketdata import PriceMatrix
from .metrics import (
    DAYS_PER_YEAR,
    drawdowns,
    mar_ratio,
    sharpe,
    simple_returns,
    sortino,
)
from .universe import WeightBounds, feasibility_check

__all__ = [
    "OBJECTIVES",
    "IMPROVEMENT_TOL",
    "PsoParams",
    "SwarmState",
    "Objective",
    "OptimizeResult",
    "make_objective",
    "repair_to_feasible",
    "init_swarm",
    "step",
    "run_swarm",
    "optimize",
    "sparsify",
]

OBJECTIVES = ("mar", "cagr", "neg_mdd", "sharpe", "sortino")
IMPROVEMENT_TOL = 1e-10
_FEAS_TOL = 1e-12


@dataclass(frozen=True)
class PsoParams:
    n_particles: int = 64
    max_iters: int = 500
    inertia: float = 0.7298
    cognitive: float = 1.49618
    social: float = 1.49618
    stagnation_iters: int = 50
    seed: int = 0
    v_max: float = 0.25
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_particles < 2:
            raise ValueError("n_particles must be >= 2")
        if self.max_iters < 1 or self.stagnation_iters < 1:
            raise ValueError("max_iters and stagnation_iters must be positive")
        if not 0 <= self.inertia < 1:
            raise ValueError("inertia must be in [0, 1)")
        if not (self.cognitive > 0 and self.social > 0):
            raise ValueError("cognitive and social coefficients must be positive")
        if not self.v_max > 0:
            raise ValueError("v_max must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.n_jobs < 1:
            raise ValueError("n_jobs must be >= 1")


@dataclass
class SwarmState:
    positions: np.ndarray
    velocities: np.ndarray
    fitness: np.ndarray
    pbest_positions: np.ndarray
    pbest_fitness: np.ndarray
    gbest_position: np.ndarray
    gbest_fitness: float
    iteration: int
    rng: np.random.Generator = field(repr=False)

    def copy(self) -> "SwarmState":
        return copy.deepcopy(self)


class Objective:
    """A named fitness function to be maximized.

    Parameters
    ----------
    name : str
    func : callable
        Maps a 2-D array of weight rows to a 1-D array of fitness values.
        Use :meth:`from_scalar` to wrap a function of a single weight vector.
    """

    def __init__(self, name: str, func: Callable[[np.ndarray], np.ndarray]):
        self.name = name
        self._func = func

    @classmethod
    def from_scalar(cls, name: str, func: Callable[[np.ndarray], float]) -> "Objective":
        return cls(name, lambda W: np.array([func(w) for w in W], dtype=float))

    def evaluate(self, W: np.ndarray, n_jobs: int = 1) -> np.ndarray:
        """Fitness of each row of ``W``; NaN is mapped to ``-inf``."""
        W = np.atleast_2d(W)
        if n_jobs > 1 and len(W) > 1:
            chunks = np.array_split(np.arange(len(W)), min(n_jobs, len(W)))
            with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
                parts = list(pool.map(lambda idx: self._func(W[idx]), chunks))
            out = np.concatenate(parts)
        else:
            out = np.asarray(self._func(W), dtype=float)
        return np.where(np.isnan(out), -np.inf, out)

    def __call__(self, w) -> float:
        return float(self.evaluate(np.asarray(w, dtype=float)[None, :])[0])

    def __repr__(self) -> str:
        return f"Objective({self.name!r})"


def make_objective(
    name: str,
    prices: PriceMatrix,
    config: BacktestConfig | None = None,
) -> Objective:
    """Built-in fitness from an in-sample backtest over ``prices``.

    ``mar`` is CAGR over maximum drawdown, ``neg_mdd`` is minus the maximum
    drawdown; the others are the metric of the same name.
    """
    if name not in OBJECTIVES:
        raise ValueError(f"unknown objective {name!r}; choose from {OBJECTIVES}")
    bt = Backtester(prices, config)
    ppy = bt.config.periods_per_year
    days = float((prices.dates[-1] - prices.dates[0]) / np.timedelta64(1, "D"))

    def growth(values):
        return (values[:, -1] / values[:, 0]) ** (DAYS_PER_YEAR / days) - 1.0

    def fitness(W: np.ndarray) -> np.ndarray:
        values = bt.values(W)
        if name == "cagr":
            return growth(values)
        if name == "neg_mdd":
            return -drawdowns(values).max(axis=1)
        if name == "mar":
            return mar_ratio(growth(values), drawdowns(values).max(axis=1))
        r = simple_returns(values)
        return sharpe(r, ppy) if name == "sharpe" else sortino(r, ppy)

    return Objective(name, fitness)


def _bounds_arrays(bounds: WeightBounds | None, n: int) -> tuple[np.ndarray, np.ndarray]:
    if bounds is None:
        return np.zeros(n), np.ones(n)
    if len(bounds) != n:
        raise InfeasibleBounds(f"bounds cover {len(bounds)} assets, expected {n}")
    return bounds.lower, bounds.upper


def _is_feasible(x, lo, hi) -> bool:
    return (
        abs(x.sum() - 1.0) <= _FEAS_TOL
        and bool(np.all(x >= lo))
        and bool(np.all(x <= hi))
    )


def _repair(x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    n = len(x)
    x = np.clip(np.maximum(np.nan_to_num(x, nan=0.0), 0.0), lo, hi)
    if _is_feasible(x, lo, hi):
        return x
    if not x.any():
        x = np.clip(np.full(n, 1.0 / n), lo, hi)
    y = x.copy()
    free = np.ones(n, dtype=bool)
    for _ in range(n + 1):
        residual = 1.0 - y[~free].sum()
        mass = x[free].sum()
        # a subnormal mass overflows the scale factor; treat it as empty
        with np.errstate(over="ignore", divide="ignore"):
            scale = residual / mass if mass > 0 else np.inf
        if np.isfinite(scale):
            y[free] = x[free] * scale
        elif free.any():
            y[free] = residual / free.sum()
        if not free.any():
            break
        over = free & (y > hi)
        under = free & (y < lo)
        if not (over.any() or under.any()):
            break
        # scaling moves every free coordinate the same way, so only one side
        # can be violated in a pass
        y[over] = hi[over]
        y[under] = lo[under]
        free &= ~(over | under)
    if abs(y.sum() - 1.0) > 1e-9:
        raise InfeasibleBounds(
            f"cannot satisfy bounds: sum(min)={lo.sum():g}, sum(max)={hi.sum():g}"
        )
    return y


def repair_to_feasible(raw, bounds: WeightBounds | None = None) -> np.ndarray:
    """Map an arbitrary vector onto the bounded weight simplex.

    Negative entries are floored at zero, each coordinate is clipped to its
    bounds, and the vector is rescaled to sum to one. Coordinates pushed past a
    bound by the rescaling are frozen at that bound and the remainder is
    redistributed over the rest, repeating until nothing moves. An all-zero
    input becomes the uniform portfolio (clipped and repaired likewise).
    Already-feasible input is returned unchanged.
    """
    raw = np.asarray(raw, dtype=float).ravel()
    lo, hi = _bounds_arrays(bounds, len(raw))
    if hi.sum() < 1 - _FEAS_TOL or lo.sum() > 1 + _FEAS_TOL:
        raise InfeasibleBounds(
            f"infeasible bounds: sum(min)={lo.sum():g}, sum(max)={hi.sum():g}"
        )
    return _repair(raw, lo, hi)


def _repair_rows(X: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    return np.array([_repair(x, lo, hi) for x in X])


def _check_bounds(bounds: WeightBounds | None, n_assets: int):
    lo, hi = _bounds_arrays(bounds, n_assets)
    if bounds is not None:
        rep = feasibility_check(bounds)
        if not rep.ok:
            raise InfeasibleBounds(rep.message)
    return lo, hi


def init_swarm(
    n_assets: int,
    bounds: WeightBounds | None,
    params: PsoParams,
    objective: Objective,
) -> SwarmState:
    """Sample particles uniformly on the simplex and evaluate them.

    Uniform simplex samples are normalized i.i.d. exponentials; each sample is
    then repaired to the bounds. Velocities start at zero.
    """
    if n_assets < 1:
        raise ValueError("n_assets must be positive")
    lo, hi = _check_bounds(bounds, n_assets)
    rng = np.random.Generator(np.random.PCG64(params.seed))
    spacings = rng.exponential(size=(params.n_particles, n_assets))
    raw = spacings / spacings.sum(axis=1, keepdims=True)
    positions = _repair_rows(raw, lo, hi)
    fitness = objective.evaluate(positions, params.n_jobs)
    best = int(np.argmax(fitness))
    return SwarmState(
        positions=positions,
        velocities=np.zeros_like(positions),
        fitness=fitness,
        pbest_positions=positions.copy(),
        pbest_fitness=fitness.copy(),
        gbest_position=positions[best].copy(),
        gbest_fitness=float(fitness[best]),
        iteration=0,
        rng=rng,
    )


def step(
    state: SwarmState,
    objective: Objective,
    bounds: WeightBounds | None,
    params: PsoParams,
) -> SwarmState:
    """One synchronous swarm update; returns a new state and leaves ``state`` intact."""
    s = state.copy()
    n, d = s.positions.shape
    lo, hi = _bounds_arrays(bounds, d)
    r1 = s.rng.random((n, d))
    r2 = s.rng.random((n, d))
    x = s.positions
    v = (
        params.inertia * s.velocities
        + params.cognitive * r1 * (s.pbest_positions - x)
        + params.social * r2 * (s.gbest_position[None, :] - x)
    )
    v = np.clip(v, -params.v_max, params.v_max)
    x = _repair_rows(x + v, lo, hi)
    f = objective.evaluate(x, params.n_jobs)

    improved = f > s.pbest_fitness
    s.pbest_positions[improved] = x[improved]
    s.pbest_fitness[improved] = f[improved]
    best = int(np.argmax(s.pbest_fitness))
    if s.pbest_fitness[best] > s.gbest_fitness:
        s.gbest_fitness = float(s.pbest_fitness[best])
        s.gbest_position = s.pbest_positions[best].copy()
    s.positions, s.velocities, s.fitness = x, v, f
    s.iteration += 1
    return s


def run_swarm(
    objective: Objective,
    n_assets: int,
    bounds: WeightBounds | None = None,
    params: PsoParams | None = None,
    callback: Callable[[SwarmState], None] | None = None,
) -> tuple[SwarmState, list[float]]:
    """Iterate until ``max_iters`` or ``stagnation_iters`` steps without a
    global-best gain above ``IMPROVEMENT_TOL``.

    Returns the final state and the global-best fitness after initialization
    and after every step.
    """
    params = params or PsoParams()
    state = init_swarm(n_assets, bounds, params, objective)
    history = [state.gbest_fitness]
    if callback is not None:
        callback(state)
    stale = 0
    for _ in range(params.max_iters):
        prev = state.gbest_fitness
        state = step(state, objective, bounds, params)
        history.append(state.gbest_fitness)
        if callback is not None:
            callback(state)
        stale = 0 if state.gbest_fitness - prev > IMPROVEMENT_TOL else stale + 1
        if stale >= params.stagnation_iters:
            break
    return state, history


@dataclass(frozen=True, eq=False)
class OptimizeResult:
    weights: Weights
    fitness: float
    history: list
    iterations: int
    objective: str


def optimize(
    prices: PriceMatrix,
    objective: Objective | str = "mar",
    bounds: WeightBounds | None = None,
    backtest_config: BacktestConfig | None = None,
    params: PsoParams | None = None,
) -> OptimizeResult:
    """Search for the static weights maximizing ``objective`` over ``prices``."""
    if isinstance(objective, str):
        objective = make_objective(objective, prices, backtest_config)
    if bounds is not None and bounds.tickers is not None:
        bounds = bounds.restrict(prices.tickers)
    state, history = run_swarm(objective, len(prices.tickers), bounds, params)
    if not np.isfinite(state.gbest_fitness):
        raise OptimizationError(f"no finite fitness found (best = {state.gbest_fitness})")
    return OptimizeResult(
        weights=Weights(prices.tickers, state.gbest_position),
        fitness=state.gbest_fitness,
        history=history,
        iterations=state.iteration,
        objective=objective.name,
    )


def sparsify(weights, max_assets: int, bounds: WeightBounds | None = None):
    """Keep the ``max_assets`` largest weights, zero the rest and repair.

    Ties are broken by position. Accepts and returns either a
    :class:`~marswarm.backtest.Weights` or a plain array.
    """
    if max_assets < 1:
        raise ValueError("max_assets must be >= 1")
    vec = weights.values if isinstance(weights, Weights) else np.asarray(weights, dtype=float)
    if np.count_nonzero(vec) <= max_assets:
        out = vec.copy()
    else:
        keep = np.argsort(-vec, kind="stable")[:max_assets]
        raw = np.zeros_like(vec)
        raw[keep] = vec[keep]
        out = repair_to_feasible(raw, bounds)
    if isinstance(weights, Weights):
        return Weights(weights.tickers, out)
    return out
