"""Distributed range-based target localization in the plane.

Each agent sits at a known position, measures its exact distance to an
unknown target, and carries the nonlinear least-squares residual

    f_i(p, q) = 0.5 * (dist((p, q), agent_i) - r_i)^2.

The problem is nonconvex but the target is the global minimizer with value
zero, and every local gradient vanishes there, so the noiseless setup keeps
the usual fixed-point analysis applicable.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConfigError, DegenerateCurvatureError, SingularPointError
from .gossip import GossipMatrix
from .objective import LocalObjective, Problem

ANCHOR_EXCLUSION = 1e-12


@dataclass(frozen=True)
class LocalizationConfig:
    """Agent positions, target, and the derived exact range measurements."""

    positions: np.ndarray  # (n, 2)
    target: np.ndarray  # (2,)
    ranges: np.ndarray  # (n,)

    @classmethod
    def from_positions(cls, positions, target) -> "LocalizationConfig":
        positions = np.asarray(positions, dtype=float)
        target = np.asarray(target, dtype=float)
        if positions.ndim != 2 or positions.shape[1] != 2:
            raise ConfigError(f"positions must have shape (n, 2), got {positions.shape}")
        if target.shape != (2,):
            raise ConfigError(f"target must have shape (2,), got {target.shape}")
        ranges = np.linalg.norm(positions - target, axis=1)
        if np.any(ranges <= 0):
            raise ConfigError("no agent may sit exactly at the target")
        return cls(positions=positions, target=target, ranges=ranges)

    @classmethod
    def sampled(cls, n: int, seed: int, target=(1.0, 1.0), box=(0.0, 2.0), exclusion: float = 0.1) -> "LocalizationConfig":
        """n agent positions drawn uniformly in the box, at least ``exclusion`` from the target."""
        target = np.asarray(target, dtype=float)
        rng = np.random.default_rng(seed)
        positions = []
        while len(positions) < n:
            candidate = rng.uniform(box[0], box[1], size=2)
            if np.linalg.norm(candidate - target) > exclusion:
                positions.append(candidate)
        return cls.from_positions(np.array(positions), target)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    def objective(self, i: int) -> "RangeResidualObjective":
        return localization_objective(self, i)

    def problem(self) -> Problem:
        return Problem([self.objective(i) for i in range(self.n)], optimizer=self.target)


class RangeResidualObjective(LocalObjective):
    """Squared residual between the distance to one anchor and its measured range.

    Derivatives are singular at the anchor itself; evaluating them there
    raises instead of silently patching the point.
    """

    dimension = 2

    def __init__(self, anchor, measured_range: float):
        self.anchor = np.asarray(anchor, dtype=float)
        self.measured_range = float(measured_range)

    def _distance(self, x) -> tuple[np.ndarray, float]:
        offset = np.asarray(x, dtype=float) - self.anchor
        return offset, float(np.linalg.norm(offset))

    def value(self, x) -> float:
        _, dist = self._distance(x)
        return 0.5 * (dist - self.measured_range) ** 2

    def gradient(self, x) -> np.ndarray:
        offset, dist = self._distance(x)
        if dist <= ANCHOR_EXCLUSION:
            raise SingularPointError(f"gradient undefined at the anchor {self.anchor}")
        return (1.0 - self.measured_range / dist) * offset

    def hessian_trace(self, x) -> float:
        _, dist = self._distance(x)
        if dist <= ANCHOR_EXCLUSION:
            raise SingularPointError(f"curvature undefined at the anchor {self.anchor}")
        return 2.0 - self.measured_range / dist

    def hessian(self, x) -> np.ndarray:
        offset, dist = self._distance(x)
        if dist <= ANCHOR_EXCLUSION:
            raise SingularPointError(f"curvature undefined at the anchor {self.anchor}")
        scale = self.measured_range / dist
        return (1.0 - scale) * np.eye(2) + scale / dist**2 * np.outer(offset, offset)


def localization_objective(cfg: LocalizationConfig, i: int) -> RangeResidualObjective:
    """Residual objective of agent ``i`` (0-based)."""
    if not 0 <= i < cfg.n:
        raise ConfigError(f"agent index {i} out of range for {cfg.n} agents")
    return RangeResidualObjective(cfg.positions[i], cfg.ranges[i])


def optimal_stepsize(problem: Problem, point) -> float:
    """Stepsize 2 / (sum of the two average-Hessian eigenvalues) at ``point``.

    In two dimensions that eigenvalue sum is the trace, which each agent can
    contribute to locally; at the target every residual contributes trace 1,
    so the stepsize there is exactly 2.
    """
    if problem.dimension != 2:
        raise ConfigError("the trace shortcut for the eigenvalue sum only holds in 2-d")
    point = np.asarray(point, dtype=float)
    trace_sum = sum(f.hessian_trace(point) for f in problem.locals) / problem.n
    if trace_sum <= 0:
        raise DegenerateCurvatureError(
            f"average curvature trace {trace_sum:.6g} is not positive; no stepsize can be derived"
        )
    return 2.0 / trace_sum


def target_hessian(cfg: LocalizationConfig) -> np.ndarray:
    """Average Hessian of the residuals at the target (a 2x2 matrix with trace 1)."""
    return np.mean([cfg.objective(i).hessian(cfg.target) for i in range(cfg.n)], axis=0)


def gd_contraction_factor(cfg: LocalizationConfig, alpha: float | None = None) -> float:
    """Contraction factor max |1 - alpha * eig| of centralized gradient descent,
    linearized at the target. With the default stepsize this equals the spread
    of the two average-Hessian eigenvalues."""
    if alpha is None:
        alpha = optimal_stepsize(cfg.problem(), cfg.target)
    eigs = np.linalg.eigvalsh(target_hessian(cfg))
    return float(np.max(np.abs(1.0 - alpha * eigs)))


def five_agent_gossip_pair() -> tuple[GossipMatrix, GossipMatrix]:
    """The two mixing matrices of the built-in five-agent demo network.

    Both are doubly stochastic with zero diagonal; they differ in the link
    into agent 1 from agent 3 (0-based), modeling a packet that is dropped at
    random rounds. All entries are dyadic fractions, so the float matrices
    are exact.
    """
    F = Fraction
    first = [
        [0, F(3, 8), F(1, 4), 0, F(3, 8)],
        [F(1, 8), 0, F(3, 4), F(1, 8), 0],
        [0, F(5, 8), 0, F(3, 8), 0],
        [F(3, 8), 0, 0, 0, F(5, 8)],
        [F(1, 2), 0, 0, F(1, 2), 0],
    ]
    second = [
        [0, F(1, 2), F(1, 4), 0, F(1, 4)],
        [F(1, 4), 0, F(3, 4), 0, 0],
        [0, F(1, 2), 0, F(1, 2), 0],
        [F(1, 4), 0, 0, 0, F(3, 4)],
        [F(1, 2), 0, 0, F(1, 2), 0],
    ]
    to_matrix = lambda rows: GossipMatrix([[float(entry) for entry in row] for row in rows])
    return to_matrix(first), to_matrix(second)
