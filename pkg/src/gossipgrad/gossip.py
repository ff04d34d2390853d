"""Gossip matrices, time-varying schedules, and spectral gaps.

A gossip matrix W holds one round of mixing weights: ``W[i, j]`` is the
weight agent i applies to the message received from agent j, and a zero
entry means no link from j to i exists in that round. Schedules supply the
per-round matrix for iteration k and round l, either as a constant matrix,
a cycling list, or a seeded random choice from a list.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

DOUBLY_STOCHASTIC_TOL = 1e-9

SPECTRAL_TOL = 1e-12
SPECTRAL_MAX_ITER = 10_000


class GossipMatrix:
    """One round of mixing weights over n agents.

    The matrix is stored dense and made read-only; negative weights are
    allowed (only the row/column sums are constrained by validation).
    """

    def __init__(self, weights):
        W = np.array(weights, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ConfigError(f"gossip matrix must be square, got shape {W.shape}")
        if W.shape[0] < 1:
            raise ConfigError("gossip matrix must have at least one agent")
        W.setflags(write=False)
        self.weights = W

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def row(self, i: int) -> np.ndarray:
        """Weights agent i applies to incoming messages (its own row)."""
        return self.weights[i]

    def __repr__(self):
        return f"GossipMatrix(n={self.n})"


def complete_matrix(n: int) -> GossipMatrix:
    """Uniform averaging over the complete graph: every entry 1/n."""
    return GossipMatrix(np.full((n, n), 1.0 / n))


def ring_matrix(n: int) -> GossipMatrix:
    """Symmetric ring with weight 1/3 on self and each of the two neighbors."""
    if n == 1:
        return GossipMatrix([[1.0]])
    if n == 2:
        return GossipMatrix([[0.5, 0.5], [0.5, 0.5]])
    W = np.zeros((n, n))
    for i in range(n):
        W[i, i] = 1.0 / 3.0
        W[i, (i - 1) % n] = 1.0 / 3.0
        W[i, (i + 1) % n] = 1.0 / 3.0
    return GossipMatrix(W)


@dataclass(frozen=True)
class StochasticityReport:
    """Per-row/column deviation of the sums from 1, and the verdict."""

    passed: bool
    tol: float
    row_deviations: np.ndarray = field(repr=False)
    col_deviations: np.ndarray = field(repr=False)
    max_row_deviation: float
    max_col_deviation: float
    min_entry: float
    nonnegative: bool


def validate_doubly_stochastic(
    matrix: GossipMatrix, tol: float = DOUBLY_STOCHASTIC_TOL, require_nonnegative: bool = False
) -> StochasticityReport:
    """Check that all row sums and column sums equal 1 within ``tol``.

    With ``require_nonnegative`` the report additionally fails when any
    entry is below ``-tol``.
    """
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    W = matrix.weights
    row_dev = np.abs(W.sum(axis=1) - 1.0)
    col_dev = np.abs(W.sum(axis=0) - 1.0)
    min_entry = float(W.min())
    nonnegative = min_entry >= -tol
    passed = bool(row_dev.max() <= tol and col_dev.max() <= tol)
    if require_nonnegative:
        passed = passed and nonnegative
    return StochasticityReport(
        passed=passed,
        tol=tol,
        row_deviations=row_dev,
        col_deviations=col_dev,
        max_row_deviation=float(row_dev.max()),
        max_col_deviation=float(col_dev.max()),
        min_entry=min_entry,
        nonnegative=nonnegative,
    )


def _largest_singular_value(D: np.ndarray, tol: float, max_iter: int) -> float:
    # Power iteration on D^T D with a fixed starting vector. The all-ones
    # start is in the null space whenever D is the deviation of a doubly
    # stochastic matrix, so a deterministic perturbed restart covers that.
    n = D.shape[0]
    M = D.T @ D
    if not np.any(M):
        return 0.0
    x = np.ones(n) / math.sqrt(n)
    y = M @ x
    if np.linalg.norm(y) <= 1e-30:
        x = 1.0 + 0.5 * np.sin(np.arange(1, n + 1, dtype=float))
        x /= np.linalg.norm(x)
        y = M @ x
        if np.linalg.norm(y) <= 1e-30:
            return 0.0
    estimate = 0.0
    for _ in range(max_iter):
        norm_y = np.linalg.norm(y)
        if norm_y == 0.0:
            return 0.0
        x = y / norm_y
        y = M @ x
        new_estimate = float(x @ y)
        if abs(new_estimate - estimate) <= tol * max(1.0, abs(new_estimate)):
            estimate = new_estimate
            break
        estimate = new_estimate
    return math.sqrt(max(estimate, 0.0))


def spectral_gap(matrix, tol: float = SPECTRAL_TOL, max_iter: int = SPECTRAL_MAX_ITER) -> float:
    """Induced 2-norm of W - (1/n) * ones, the per-round disagreement contraction.

    Accepts a GossipMatrix or a raw square array. Zero means one round
    reaches exact consensus; values below 1 mean disagreement shrinks.
    """
    W = matrix.weights if isinstance(matrix, GossipMatrix) else np.asarray(matrix, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ConfigError(f"spectral gap needs a square matrix, got shape {W.shape}")
    n = W.shape[0]
    deviation = W - np.full((n, n), 1.0 / n)
    return _largest_singular_value(deviation, tol, max_iter)


def _counter_draw(seed: int, iteration: int, round_index: int, count: int) -> int:
    # Counter-based draw: a keyed hash of (seed, k, l) so the choice at any
    # (k, l) is independent of query order.
    payload = f"{seed}:{iteration}:{round_index}".encode()
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return int.from_bytes(digest, "big") % count


class GossipSchedule:
    """Source of the mixing matrix used at (iteration k, round l).

    Kinds:
      - "constant": always the single matrix in the list.
      - "cyclic": matrices cycle with the global round counter
        ``k * rounds_per_iteration + (l - 1)``.
      - "random": uniform seeded choice from the list, keyed on (seed, k, l).

    All matrices are validated as doubly stochastic at construction.
    """

    KINDS = ("constant", "cyclic", "random")

    def __init__(self, kind, matrices, seed=0, rounds_per_iteration=None, require_nonnegative=False):
        if kind not in self.KINDS:
            raise ConfigError(f"unknown schedule kind {kind!r}, expected one of {self.KINDS}")
        matrices = tuple(matrices)
        if not matrices:
            raise ConfigError("schedule needs at least one gossip matrix")
        n = matrices[0].n
        for idx, W in enumerate(matrices):
            if W.n != n:
                raise ConfigError(f"schedule matrices disagree on size: {n} vs {W.n} at index {idx}")
            report = validate_doubly_stochastic(W, require_nonnegative=require_nonnegative)
            if not report.passed:
                raise ConfigError(
                    f"schedule matrix {idx} is not doubly stochastic "
                    f"(max row dev {report.max_row_deviation:.3e}, "
                    f"max col dev {report.max_col_deviation:.3e})"
                )
        if kind == "constant" and len(matrices) != 1:
            raise ConfigError("constant schedule takes exactly one matrix")
        if kind == "cyclic":
            if rounds_per_iteration is None or rounds_per_iteration < 1:
                raise ConfigError("cyclic schedule needs rounds_per_iteration >= 1")
        self.kind = kind
        self.matrices = matrices
        self.seed = int(seed)
        self.rounds_per_iteration = rounds_per_iteration

    @classmethod
    def constant(cls, matrix: GossipMatrix) -> "GossipSchedule":
        return cls("constant", (matrix,))

    @classmethod
    def cyclic(cls, matrices, rounds_per_iteration: int) -> "GossipSchedule":
        return cls("cyclic", matrices, rounds_per_iteration=rounds_per_iteration)

    @classmethod
    def random_choice(cls, matrices, seed: int) -> "GossipSchedule":
        return cls("random", matrices, seed=seed)

    @property
    def n(self) -> int:
        return self.matrices[0].n

    def max_spectral_gap(self) -> float:
        """Largest one-round spectral gap over the matrix list."""
        return max(spectral_gap(W) for W in self.matrices)


def matrix_at(schedule: GossipSchedule, iteration: int, round_index: int) -> GossipMatrix:
    """Mixing matrix for iteration ``iteration`` (k >= 0), round ``round_index`` (l >= 1)."""
    if iteration < 0:
        raise ValueError(f"iteration index must be >= 0, got {iteration}")
    if round_index < 1:
        raise ValueError(f"round index must be >= 1, got {round_index}")
    if schedule.kind == "constant":
        return schedule.matrices[0]
    if schedule.kind == "cyclic":
        global_round = iteration * schedule.rounds_per_iteration + (round_index - 1)
        return schedule.matrices[global_round % len(schedule.matrices)]
    idx = _counter_draw(schedule.seed, iteration, round_index, len(schedule.matrices))
    return schedule.matrices[idx]


def product_gap(schedule: GossipSchedule, iteration: int, rounds: int) -> float:
    """Spectral gap of the ordered product of the ``rounds`` matrices at one iteration.

    The product applies round 1 first, i.e. W(k, rounds) @ ... @ W(k, 1).
    """
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    product = np.eye(schedule.n)
    for round_index in range(1, rounds + 1):
        product = matrix_at(schedule, iteration, round_index).weights @ product
    return spectral_gap(product)
