"""Local objectives, the stepsize/contraction parameterization, and sampled checks.

The convergence theory needs each local gradient map x -> x - alpha * grad f_i(x)
to contract toward the global optimizer by a factor rho < 1. For quadratics that
factor is max |1 - alpha * eig|, which gives an exact oracle; for everything else
the contraction is checked on sampled points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CONTRACTION_SLACK = 1e-9
FD_STEP = 1e-6
GRADIENT_SUM_TOL = 1e-6


class LocalObjective:
    """Interface for one agent's objective: value, gradient, optional curvature trace."""

    dimension: int

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hessian_trace(self, x: np.ndarray) -> float:
        raise NotImplementedError


class CountingObjective(LocalObjective):
    """Wrapper that counts gradient evaluations of the wrapped objective."""

    def __init__(self, inner: LocalObjective):
        self.inner = inner
        self.dimension = inner.dimension
        self.gradient_calls = 0

    def value(self, x):
        return self.inner.value(x)

    def gradient(self, x):
        self.gradient_calls += 1
        return self.inner.gradient(x)

    def hessian_trace(self, x):
        return self.inner.hessian_trace(x)


@dataclass(frozen=True)
class ContractionParams:
    """Stepsize alpha and contraction factor rho of the local gradient maps.

    rho = 0 is allowed here (it arises at the mu = L boundary); consumers that
    need rho strictly inside (0, 1) clamp it when deriving the round count.
    """

    alpha: float
    rho: float

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError(f"stepsize must be positive, got {self.alpha}")
        if not 0 <= self.rho < 1:
            raise ValueError(f"contraction factor must be in [0, 1), got {self.rho}")


@dataclass(frozen=True)
class StrongSmoothParams:
    """One-point smoothness/strong-convexity bounds 0 < mu <= L."""

    mu: float
    L: float

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.L < self.mu:
            raise ValueError(f"L must be >= mu, got L={self.L} < mu={self.mu}")


def params_from_one_point_convexity(p: StrongSmoothParams) -> ContractionParams:
    """Stepsize 2/(L+mu) and contraction factor (L-mu)/(L+mu).

    At mu = L this returns rho = 0 (exact one-step convergence of the
    gradient map).
    """
    return ContractionParams(alpha=2.0 / (p.L + p.mu), rho=(p.L - p.mu) / (p.L + p.mu))


class QuadraticObjective(LocalObjective):
    """f(x) = 0.5 x'Ax - b'x with symmetric A; gradient Ax - b."""

    def __init__(self, A, b):
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got shape {A.shape}")
        if not np.allclose(A, A.T, rtol=0, atol=1e-12):
            raise ValueError("A must be symmetric")
        if b.shape != (A.shape[0],):
            raise ValueError(f"b has shape {b.shape}, expected ({A.shape[0]},)")
        self.A = A
        self.b = b
        self.dimension = A.shape[0]

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ (self.A @ x) - self.b @ x)

    def gradient(self, x):
        return self.A @ np.asarray(x, dtype=float) - self.b

    def hessian_trace(self, x):
        return float(np.trace(self.A))


def quadratic_objective(A, b) -> QuadraticObjective:
    """Build the quadratic 0.5 x'Ax - b'x; rejects non-symmetric A."""
    return QuadraticObjective(A, b)


class Problem:
    """A collection of local objectives sharing one dimension, plus the optional
    known optimizer of their average."""

    def __init__(self, locals, optimizer=None):
        locals = tuple(locals)
        if not locals:
            raise ValueError("problem needs at least one local objective")
        d = locals[0].dimension
        for idx, f in enumerate(locals):
            if f.dimension != d:
                raise ValueError(f"local {idx} has dimension {f.dimension}, expected {d}")
        self.locals = locals
        self.optimizer = None if optimizer is None else np.asarray(optimizer, dtype=float)
        if self.optimizer is not None:
            if self.optimizer.shape != (d,):
                raise ValueError(f"optimizer has shape {self.optimizer.shape}, expected ({d},)")
            total = np.sum([f.gradient(self.optimizer) for f in self.locals], axis=0)
            if np.linalg.norm(total) > GRADIENT_SUM_TOL * len(locals):
                raise ValueError(
                    "local gradients do not sum to zero at the declared optimizer "
                    f"(norm {np.linalg.norm(total):.3e})"
                )

    @property
    def n(self) -> int:
        return len(self.locals)

    @property
    def dimension(self) -> int:
        return self.locals[0].dimension

    def value(self, x) -> float:
        return sum(f.value(x) for f in self.locals) / self.n

    def gradient(self, x) -> np.ndarray:
        return np.sum([f.gradient(x) for f in self.locals], axis=0) / self.n


@dataclass(frozen=True)
class ContractionReport:
    """Worst contraction ratio observed over the sampled points."""

    passed: bool
    rho: float
    max_ratio: float
    worst_sample: np.ndarray = field(repr=False)
    samples_used: int


def check_contraction(objective: LocalObjective, xstar, params: ContractionParams, samples) -> ContractionReport:
    """Measure ||x - x* - alpha (grad f(x) - grad f(x*))|| / ||x - x*|| on samples.

    Passes when the worst ratio stays below rho + 1e-9. Samples exactly at x*
    are skipped (the ratio is 0/0 there).
    """
    xstar = np.asarray(xstar, dtype=float)
    grad_star = objective.gradient(xstar)
    max_ratio = 0.0
    worst = xstar
    used = 0
    for x in np.asarray(samples, dtype=float):
        dist = np.linalg.norm(x - xstar)
        if dist == 0.0:
            continue
        mapped = x - xstar - params.alpha * (objective.gradient(x) - grad_star)
        ratio = np.linalg.norm(mapped) / dist
        used += 1
        if ratio > max_ratio:
            max_ratio = ratio
            worst = x
    return ContractionReport(
        passed=max_ratio <= params.rho + CONTRACTION_SLACK,
        rho=params.rho,
        max_ratio=float(max_ratio),
        worst_sample=np.array(worst),
        samples_used=used,
    )


def sample_ball(center, radius: float, count: int, seed: int) -> np.ndarray:
    """Seeded points inside the ball of ``radius`` around ``center`` (count, d)."""
    center = np.asarray(center, dtype=float)
    d = center.shape[0]
    rng = np.random.default_rng(seed)
    directions = rng.standard_normal((count, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = radius * rng.random(count) ** (1.0 / d)
    return center + radii[:, None] * directions


def finite_difference_gradient(objective: LocalObjective, x, step: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient, the model-free oracle for gradient checks."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for j in range(x.shape[0]):
        e = np.zeros_like(x)
        e[j] = step
        grad[j] = (objective.value(x + e) - objective.value(x - e)) / (2.0 * step)
    return grad


def random_quadratic_objective(dimension: int, mu: float, L: float, seed: int) -> QuadraticObjective:
    """One quadratic with a random orthonormal eigenbasis and spectrum in [mu, L].

    The endpoints mu and L are always included in the spectrum (when d >= 2).
    """
    rng = np.random.default_rng(seed)
    eigs = np.concatenate([[mu, L], rng.uniform(mu, L, size=max(dimension - 2, 0))])[:dimension]
    Q, _ = np.linalg.qr(rng.standard_normal((dimension, dimension)))
    A = Q @ np.diag(eigs) @ Q.T
    A = 0.5 * (A + A.T)
    b = rng.standard_normal(dimension)
    return QuadraticObjective(A, b)


def random_quadratic_problem(
    n: int,
    dimension: int,
    mu: float,
    L: float,
    seed: int,
    shared_hessian: bool = True,
) -> Problem:
    """Seeded family of n quadratic locals with spectra inside [mu, L].

    With ``shared_hessian`` every agent gets the same curvature matrix (whose
    spectrum includes mu and L exactly) and heterogeneity enters through the
    linear terms; the average objective then has the same extreme curvature as
    each local one. Without it, each agent draws its own eigenbasis and
    spectrum strictly inside [mu, L].
    """
    rng = np.random.default_rng(seed)
    locals_ = []
    if shared_hessian:
        eigs = np.concatenate([[mu, L], rng.uniform(mu, L, size=max(dimension - 2, 0))])[:dimension]
        Q, _ = np.linalg.qr(rng.standard_normal((dimension, dimension)))
        A = Q @ np.diag(eigs) @ Q.T
        A = 0.5 * (A + A.T)
        for _ in range(n):
            locals_.append(QuadraticObjective(A, rng.standard_normal(dimension)))
    else:
        for _ in range(n):
            eigs = rng.uniform(mu, L, size=dimension)
            Q, _ = np.linalg.qr(rng.standard_normal((dimension, dimension)))
            A = Q @ np.diag(eigs) @ Q.T
            A = 0.5 * (A + A.T)
            locals_.append(QuadraticObjective(A, rng.standard_normal(dimension)))
    A_bar = np.mean([f.A for f in locals_], axis=0)
    b_bar = np.mean([f.b for f in locals_], axis=0)
    xstar = np.linalg.solve(A_bar, b_bar)
    return Problem(locals_, optimizer=xstar)
