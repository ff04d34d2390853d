"""Per-iteration record of a decentralized run.

Both execution paths (vectorized and message-passing) fill the same trace:
agent states x and y after every iteration, the post-communication points v
and post-gradient points u inside every iteration, and the resource counters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class RunTrace:
    x: np.ndarray  # (iterations + 1, n, d) agent estimates
    y: np.ndarray  # (iterations + 1, n, d) correction states
    v: np.ndarray  # (iterations, n, d) post-communication points per iteration
    u: np.ndarray  # (iterations, n, d) post-gradient points per iteration
    params: object
    gradient_evaluations: int
    row_communications: int
    deliveries: list | None = field(default=None, repr=False)

    @property
    def iterations(self) -> int:
        return self.x.shape[0] - 1

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def dimension(self) -> int:
        return self.x.shape[2]

    def errors(self, xstar) -> np.ndarray:
        """Per-agent distance to ``xstar``: shape (iterations + 1, n)."""
        xstar = np.asarray(xstar, dtype=float)
        return np.linalg.norm(self.x - xstar, axis=2)

    def max_errors(self, xstar) -> np.ndarray:
        """Worst-agent distance to ``xstar`` per iteration: shape (iterations + 1,)."""
        return self.errors(xstar).max(axis=1)
