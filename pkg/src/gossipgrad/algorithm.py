"""The multi-round-gossip gradient method and its baselines.

One iteration runs m rounds of gossip on the agent estimates, evaluates each
local gradient once at the mixed point, and applies a correction state y that
accumulates the pre/post-communication difference:

    v(i, 0) = x_i(k)
    v(i, l) = sum_j W(k, l)[i, j] * v(j, l - 1)        for l = 1..m
    u_i     = v(i, m) - alpha * grad f_i(v(i, m))
    y_i(k+1) = y_i(k) + x_i(k) - v(i, m)
    x_i(k+1) = u_i - sqrt(1 - rho^2) * y_i(k+1)

m is the least round count that pushes the m-round mixing gap sigma^m below
the threshold sigma0(rho) = (sqrt(1 + rho) - sqrt(1 - rho)) / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .gossip import GossipSchedule, matrix_at
from .objective import CountingObjective, Problem
from .trace import RunTrace

RHO_FLOOR = 1e-6


def sigma0(rho: float) -> float:
    """Consensus threshold (sqrt(1 + rho) - sqrt(1 - rho)) / 2, increasing in rho."""
    if not 0 < rho < 1:
        raise ValueError(f"rho must be in (0, 1), got {rho}")
    return (math.sqrt(1.0 + rho) - math.sqrt(1.0 - rho)) / 2.0


def comm_rounds(rho: float, sigma: float) -> int:
    """Least m >= 1 with sigma**m <= sigma0(rho).

    Computed from the log ratio and then adjusted by direct comparison so the
    result is exactly the least integer satisfying the float inequality
    (boundary equality accepted).
    """
    if not 0 < rho < 1:
        raise ValueError(f"rho must be in (0, 1), got {rho}")
    if not 0 < sigma < 1:
        raise ValueError(f"sigma must be in (0, 1), got {sigma}")
    threshold = sigma0(rho)
    m = max(1, math.ceil(math.log(threshold) / math.log(sigma)))
    while sigma**m > threshold:
        m += 1
    while m > 1 and sigma ** (m - 1) <= threshold:
        m -= 1
    return m


@dataclass(frozen=True)
class AlgorithmParams:
    """Validated parameter bundle: stepsize, contraction factor, gap bound,
    rounds per iteration m, and the correction gain lam = sqrt(1 - rho^2)."""

    alpha: float
    rho: float
    sigma: float
    m: int
    lam: float

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError(f"stepsize must be positive, got {self.alpha}")
        if not 0 < self.rho < 1:
            raise ValueError(f"rho must be in (0, 1), got {self.rho}")
        if not 0 < self.sigma < 1:
            raise ValueError(f"sigma must be in (0, 1), got {self.sigma}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        expected_lam = math.sqrt(1.0 - self.rho**2)
        if abs(self.lam - expected_lam) > 4.0 * np.finfo(float).eps:
            raise ValueError(f"lam={self.lam!r} inconsistent with rho={self.rho!r}")
        if self.sigma**self.m > sigma0(self.rho):
            raise ValueError(
                f"m={self.m} leaves sigma^m = {self.sigma**self.m:.6g} above the "
                f"consensus threshold {sigma0(self.rho):.6g}; need m >= "
                f"{comm_rounds(self.rho, self.sigma)}"
            )

    @classmethod
    def derive(cls, alpha: float, rho: float, sigma: float, m_override: int | None = None) -> "AlgorithmParams":
        """Build params from (alpha, rho, sigma), deriving m unless overridden.

        rho is clamped to at least 1e-6 so lam stays below 1 and the log in
        the round count is well defined at the rho = 0 boundary.
        """
        rho = max(float(rho), RHO_FLOOR)
        m = comm_rounds(rho, sigma) if m_override is None else int(m_override)
        return cls(alpha=float(alpha), rho=rho, sigma=float(sigma), m=m, lam=math.sqrt(1.0 - rho**2))


@dataclass
class IterationWorkspace:
    """Intermediate points of one iteration: post-communication v, post-gradient u."""

    v: np.ndarray  # (n, d)
    u: np.ndarray  # (n, d)


def algorithm_iteration(
    problem: Problem,
    schedule: GossipSchedule,
    params: AlgorithmParams,
    x: np.ndarray,
    y: np.ndarray,
    iteration: int,
):
    """One iteration on stacked states x, y of shape (n, d).

    Returns (x_next, y_next, workspace); evaluates each local gradient exactly
    once, at the post-communication point.
    """
    n, d = x.shape
    if problem.n != n:
        raise ConfigError(f"states have {n} agents but the problem has {problem.n}")
    if schedule.n != n:
        raise ConfigError(f"states have {n} agents but the schedule mixes {schedule.n}")
    v = x
    for round_index in range(1, params.m + 1):
        v = matrix_at(schedule, iteration, round_index).weights @ v
    gradients = np.stack([f.gradient(v[i]) for i, f in enumerate(problem.locals)])
    u = v - params.alpha * gradients
    y_next = y + x - v
    x_next = u - params.lam * y_next
    return x_next, y_next, IterationWorkspace(v=v, u=u)


def run_algorithm(
    problem: Problem,
    schedule: GossipSchedule,
    params: AlgorithmParams,
    x0: np.ndarray,
    iterations: int,
    y0: np.ndarray | None = None,
) -> RunTrace:
    """Vectorized reference execution for ``iterations`` iterations.

    x0 has shape (n, d); y0 defaults to zeros and must have blocks summing to
    zero. Gradient evaluations are counted per agent and asserted to be one
    per iteration.
    """
    x = np.array(x0, dtype=float)
    if x.ndim != 2:
        raise ConfigError(f"x0 must have shape (n, d), got {x.shape}")
    n, d = x.shape
    y = np.zeros_like(x) if y0 is None else np.array(y0, dtype=float)
    if y.shape != x.shape:
        raise ConfigError(f"y0 shape {y.shape} does not match x0 shape {x.shape}")
    if np.linalg.norm(y.sum(axis=0)) > 1e-12 * max(1.0, np.abs(y).max()):
        raise ConfigError("initial correction states must sum to zero across agents")

    # optimizer deliberately dropped: its construction-time gradient check
    # already ran on `problem` and would skew the evaluation counters here.
    counted = Problem([CountingObjective(f) for f in problem.locals])
    xs = np.empty((iterations + 1, n, d))
    ys = np.empty((iterations + 1, n, d))
    vs = np.empty((iterations, n, d))
    us = np.empty((iterations, n, d))
    xs[0], ys[0] = x, y
    for k in range(iterations):
        x, y, work = algorithm_iteration(counted, schedule, params, x, y, k)
        xs[k + 1], ys[k + 1] = x, y
        vs[k], us[k] = work.v, work.u

    for f in counted.locals:
        assert f.gradient_calls == iterations, (
            f"expected {iterations} gradient evaluations per agent, got {f.gradient_calls}"
        )
    return RunTrace(
        x=xs,
        y=ys,
        v=vs,
        u=us,
        params=params,
        gradient_evaluations=sum(f.gradient_calls for f in counted.locals),
        row_communications=n * params.m * iterations,
    )


def centralized_gd(problem: Problem, alpha: float, x0, iterations: int) -> np.ndarray:
    """Plain gradient descent on the average objective; returns (iterations + 1, d)."""
    x = np.array(x0, dtype=float)
    if x.shape != (problem.dimension,):
        raise ConfigError(f"x0 has shape {x.shape}, expected ({problem.dimension},)")
    trajectory = np.empty((iterations + 1, problem.dimension))
    trajectory[0] = x
    for k in range(iterations):
        x = x - alpha * problem.gradient(x)
        trajectory[k + 1] = x
    return trajectory


def dgd_baseline(problem: Problem, schedule: GossipSchedule, alpha: float, x0, iterations: int) -> np.ndarray:
    """Decentralized gradient descent: one round of gossip and one gradient per step.

    x(i, k+1) = sum_j W[i, j] x(j, k) - alpha * grad f_i(x(i, k)). Kept as a
    baseline only; it converges to a neighborhood, not to the optimizer.
    """
    x = np.array(x0, dtype=float)
    if x.ndim != 2 or x.shape[0] != problem.n:
        raise ConfigError(f"x0 must have shape ({problem.n}, d), got {x.shape}")
    if schedule.n != problem.n:
        raise ConfigError(f"schedule mixes {schedule.n} agents but the problem has {problem.n}")
    trajectory = np.empty((iterations + 1,) + x.shape)
    trajectory[0] = x
    for k in range(iterations):
        gradients = np.stack([f.gradient(x[i]) for i, f in enumerate(problem.locals)])
        x = matrix_at(schedule, k, 1).weights @ x - alpha * gradients
        trajectory[k + 1] = x
    return trajectory
