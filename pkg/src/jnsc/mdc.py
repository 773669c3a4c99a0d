"""Multiple-description code design.

PET profile optimization for a fixed rainbow flow vector, and the balanced
two-description Gaussian (Ozarow) region with its separate-coding baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np


class ModelError(ValueError):
    pass


def gaussian_drf(R):
    """Unit-variance Gaussian under squared error: ``2^(-2R)``."""
    return np.exp2(-2.0 * np.asarray(R, dtype=float)) if np.ndim(R) else 2.0 ** (-2.0 * R)


def _gaussian_drf_prime(R):
    return -2.0 * math.log(2.0) * gaussian_drf(R)


@dataclass(frozen=True)
class DistortionRate:
    """A distortion-rate curve with an optional analytic derivative."""

    func: Callable[[float], float]
    derivative: Callable[[float], float] | None = None
    name: str = "custom"

    def __call__(self, R):
        return self.func(R)

    def prime(self, R):
        if self.derivative is not None:
            return self.derivative(R)
        h = 1e-6
        R = np.asarray(R, dtype=float)
        return (self.func(R + h) - self.func(np.maximum(R - h, 0.0))) / (R + h - np.maximum(R - h, 0.0))

    def check_convex(self, r_max: float, points: int = 201) -> None:
        grid = np.linspace(0.0, max(r_max, 1e-9), points)
        vals = np.array([float(self.func(R)) for R in grid])
        scale = max(1.0, float(np.max(np.abs(vals))))
        if np.any(np.diff(vals) > 1e-12 * scale):
            raise ModelError(f"{self.name}: distortion-rate function increases on [0, {r_max}]")
        if np.any(vals[:-2] - 2 * vals[1:-1] + vals[2:] < -1e-10 * scale):
            raise ModelError(f"{self.name}: distortion-rate function is not convex on [0, {r_max}]")


GAUSSIAN = DistortionRate(gaussian_drf, _gaussian_drf_prime, "gaussian")

DRFS = {"gaussian": GAUSSIAN}


@dataclass
class OptimizationProblem:
    """Weighted PET design problem for a fixed per-sink description count ``q``."""

    rfv: Sequence[int]
    weights: Sequence[float] | None = None
    rate: float = 1.0
    drf: DistortionRate = GAUSSIAN
    tolerance: float = 1e-12
    q: np.ndarray = field(init=False, repr=False)
    p: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if isinstance(self.rfv, Mapping):
            keys = sorted(self.rfv)
            q = [self.rfv[t] for t in keys]
            if isinstance(self.weights, Mapping):
                self.weights = [self.weights[t] for t in keys]
        else:
            q = list(self.rfv)
        self.q = np.asarray(q, dtype=int)
        self.p = (np.ones(len(self.q)) if self.weights is None
                  else np.asarray(self.weights, dtype=float))
        if self.p.shape != self.q.shape:
            raise ValueError("weights and rfv differ in length")
        if np.any(self.q < 0):
            raise ValueError("rfv entries must be non-negative")
        if np.any(self.p <= 0):
            raise ValueError("weights must be positive")
        if not self.rate > 0:
            raise ValueError("rate must be positive")
        if not callable(self.drf):
            raise ValueError("drf must be callable")
        if not isinstance(self.drf, DistortionRate):
            self.drf = DistortionRate(self.drf)


def _sink_rates(y: np.ndarray, problem: OptimizationProblem) -> np.ndarray:
    # cumulative r * sum_{l<=k} l*y_l for k = 0..K
    levels = np.concatenate([[0.0], np.cumsum(np.arange(1, len(y) + 1) * y)]) * problem.rate
    return levels[np.minimum(problem.q, len(y))]


def objective(y, problem: OptimizationProblem) -> float:
    y = np.asarray(y, dtype=float)
    if len(problem.q) == 0:
        return 0.0
    vals = problem.drf(_sink_rates(y, problem))
    return float(np.dot(problem.p, vals) / len(problem.q))


def objective_gradient(y, problem: OptimizationProblem) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    K = len(y)
    grad = np.zeros(K)
    if len(problem.q) == 0:
        return grad
    active = problem.q > 0
    q = np.minimum(problem.q[active], K)
    slopes = problem.p[active] * np.asarray(problem.drf.prime(_sink_rates(y, problem)[active]), dtype=float)
    # sink t contributes to every level l <= q_t
    per_level = np.bincount(q, weights=slopes, minlength=K + 1)
    tail = np.cumsum(per_level[::-1])[::-1][1:]
    grad = problem.rate * np.arange(1, K + 1) * tail / len(problem.q)
    return grad


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto ``{y >= 0, sum(y) = 1}``."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1), 0.0)


def kkt_residual(y, problem: OptimizationProblem, zero_tol: float = 1e-9) -> float:
    """Largest first-order optimality violation on the simplex.

    Support coordinates must share the minimal gradient value; off-support
    coordinates must not have a smaller one.
    """
    y = np.asarray(y, dtype=float)
    g = objective_gradient(y, problem)
    support = y > zero_tol
    lam = g[support].min()
    spread = g[support].max() - lam
    below = max(0.0, lam - g[~support].min()) if np.any(~support) else 0.0
    return float(max(spread, below))


def optimize_profile(problem: OptimizationProblem, K: int, max_iter: int = 20000,
                     kkt_tol: float = 1e-6) -> tuple[np.ndarray, float]:
    """Minimize the weighted PET distortion over the K-simplex.

    Projected gradient from the uniform point with Barzilai-Borwein steps and
    Armijo backtracking. Stops once an accepted step improves the objective
    by less than ``problem.tolerance``.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if len(problem.q) and problem.q.max() > K:
        raise ValueError(f"rfv needs {problem.q.max()} descriptions but K={K}")
    problem.drf.check_convex(problem.rate * K)
    y = np.full(K, 1.0 / K)
    if K == 1:
        return y, objective(y, problem)
    f = objective(y, problem)
    g = objective_gradient(y, problem)
    step = 1.0 / max(1e-12, np.abs(g).max())
    for _ in range(max_iter):
        while True:
            cand = project_simplex(y - step * g)
            d = cand - y
            fc = objective(cand, problem)
            if fc <= f + 1e-4 * np.dot(g, d) or step < 1e-16:
                break
            step *= 0.5
        gc = objective_gradient(cand, problem)
        s, t = cand - y, gc - g
        improvement = f - fc
        y, f, g = cand, fc, gc
        if improvement < problem.tolerance and kkt_residual(y, problem) < kkt_tol:
            break
        if not np.any(s):
            break
        st = np.dot(s, t)
        step = np.dot(s, s) / st if st > 1e-300 else step * 2.0
        step = min(max(step, 1e-10), 1e10)
    # sweep numerical dust off the simplex boundary
    y = np.where(y < 1e-14, 0.0, y)
    y = y / y.sum()
    return y, objective(y, problem)


# -- Ozarow balanced two-description region ----------------------------------

def separate_coding_baseline(C: float) -> float:
    if C < 0:
        raise ValueError("capacity must be non-negative")
    return 2.0 ** (-2.0 * C)


def ozarow_joint_bound(D: float, C: float) -> float:
    """Smallest achievable joint distortion given side distortion ``D`` at rate ``C``."""
    floor = 2.0 ** (-4.0 * C)
    if D < 2.0 ** (-2.0 * C) * (1 - 1e-15):
        raise ValueError(f"side distortion {D} below 2^(-2C) = {2.0 ** (-2.0 * C)}")
    s = math.sqrt(max(D * D - floor, 0.0))
    denom = (D + s) * (2.0 - D - s)
    if denom <= 0:
        return floor
    return max(floor, floor / denom)


@dataclass(frozen=True)
class OzarowPoint:
    side_distortion: float
    joint_distortion: float
    capacity: float

    def __post_init__(self):
        C = self.capacity
        if not 2.0 ** (-2 * C) * (1 - 1e-12) <= self.side_distortion <= 1.0:
            raise ValueError("side distortion outside [2^(-2C), 1]")
        if self.joint_distortion < 2.0 ** (-4 * C) * (1 - 1e-12):
            raise ValueError("joint distortion below 2^(-4C)")
        if self.joint_distortion > self.side_distortion * (1 + 1e-12):
            raise ValueError("joint distortion exceeds side distortion")

    @property
    def average(self) -> float:
        return (self.side_distortion + self.joint_distortion) / 2.0


def golden_section(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2.0


def ozarow_interval(C: float) -> tuple[float, float]:
    """Side-distortion range on which the joint bound is decreasing."""
    return 2.0 ** (-2.0 * C), (1.0 + 2.0 ** (-4.0 * C)) / 2.0


def ozarow_balanced_optimum(C: float, tol: float = 1e-10) -> tuple[float, float]:
    """Minimize ``(2*D12 + 2*D)/4`` over the balanced region; returns ``(D*, average*)``."""
    if not C > 0:
        raise ValueError("capacity must be positive")
    lo, hi = ozarow_interval(C)

    def avg(D):
        return (ozarow_joint_bound(D, C) + D) / 2.0

    D = golden_section(avg, lo, hi, tol)
    # the optimum may sit on an end point
    best = min((avg(x), x) for x in (lo, D, hi))
    return best[1], best[0]
