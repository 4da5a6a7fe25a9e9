"""1D fused Gromov-Wasserstein on projected point clouds.

A point cloud is an (n, d) float array with implied uniform weights 1/n
(``as_point_cloud`` validates). ``project`` pushes a cloud onto a direction,
attaching the stable sorting permutation; ``fgw_1d`` evaluates the fused cost

    (1-beta) * (1/n) * sum_i |x_(i) - y_(sigma(i))|^r
    + beta * (1/n^2) * sum_{ij} (|x_(i) - x_(j)|^r - |y_(sigma(i)) - y_(sigma(j))|^r)^2

minimized over the two monotone couplings sigma (sorted-ascending against
sorted-ascending, and against sorted-descending). ``fgw_1d_bruteforce`` is the
exhaustive-permutation oracle used to validate that closed form, and
``fgw_1d_grad`` differentiates the cost with the optimal coupling frozen
(envelope gradient; r=2 only).

The default evaluation is the O(n^2) double sum. ``method="moments"`` opts
into the O(n) centered-moment factorization of the quadratic term (r=2 only);
the Monte Carlo engines in ``discrepancies`` use that route after it is
validated against the reference in the test suite.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels


class MonotoneCoupling(Enum):
    """Which monotone coupling attained the minimum."""

    ASCENDING = "ascending"
    REVERSED = "reversed"


@dataclass(frozen=True)
class FgwConfig:
    """Fused-cost parameters: tradeoff beta in [0, 1] and integer exponent
    r >= 1 of the ground cost |x - y|^r."""

    beta: float = 0.1
    exponent: int = 2

    def __post_init__(self):
        beta = float(self.beta)
        if not np.isfinite(beta) or not 0.0 <= beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        r = self.exponent
        if not isinstance(r, (int, np.integer)) or isinstance(r, bool) or r < 1:
            raise ValueError("exponent must be an integer >= 1")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "exponent", int(r))


@dataclass(frozen=True)
class Projected1D:
    """Projected values theta^T x_i plus the stable permutation sorting them
    ascending (ties keep input order)."""

    values: np.ndarray
    sort_permutation: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        perm = np.asarray(self.sort_permutation, dtype=np.int64)
        if values.ndim != 1 or values.size < 1:
            raise ValueError("values must be a nonempty 1D vector")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        if perm.shape != values.shape:
            raise ValueError("sort_permutation length must match values")
        if not np.array_equal(np.sort(perm), np.arange(values.size)):
            raise ValueError("sort_permutation is not a permutation")
        sorted_values = values[perm]
        if np.any(np.diff(sorted_values) < 0.0):
            raise ValueError("sort_permutation does not sort values ascending")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "sort_permutation", perm)

    def __len__(self) -> int:
        return self.values.size

    def sorted_values(self) -> np.ndarray:
        return np.ascontiguousarray(self.values[self.sort_permutation])


def as_point_cloud(points) -> np.ndarray:
    """Validate and return an (n, d) float64 cloud: n >= 1, d >= 2, finite."""
    cloud = np.ascontiguousarray(points, dtype=np.float64)
    if cloud.ndim != 2:
        raise ValueError("point cloud must be a 2D (n, d) array")
    n, d = cloud.shape
    if n < 1:
        raise ValueError("point cloud needs at least one point")
    if d < 2:
        raise ValueError("point cloud dimension must be >= 2")
    if not np.all(np.isfinite(cloud)):
        raise ValueError("point cloud has non-finite entries")
    return cloud


def project(cloud, theta) -> Projected1D:
    """Push a cloud onto a direction: values[i] = theta^T x_i with the stable
    sort permutation attached."""
    pts = as_point_cloud(cloud)
    direction = np.asarray(theta, dtype=np.float64)
    if direction.shape != (pts.shape[1],):
        raise ValueError(
            f"direction dimension {direction.shape} does not match cloud "
            f"dimension {pts.shape[1]}"
        )
    values = pts @ direction
    order = np.argsort(values, kind="stable")
    return Projected1D(values, order)


def _paired_sorted(xs: Projected1D, ys: Projected1D):
    if len(xs) != len(ys):
        raise ValueError(
            f"projected clouds must have equal sizes, got {len(xs)} and {len(ys)}"
        )
    return xs.sorted_values()[None, :], ys.sorted_values()[None, :]


def _use_moments(cfg: FgwConfig, method: str) -> bool:
    if method == "reference":
        return False
    if method == "moments":
        if cfg.exponent != 2:
            raise ValueError("the moments fast path requires exponent r=2")
        return True
    raise ValueError("method must be 'reference' or 'moments'")


def fgw_1d(xs: Projected1D, ys: Projected1D, cfg: FgwConfig, method: str = "reference") -> float:
    """Fused 1D cost, minimized over the two monotone couplings."""
    a, b = _paired_sorted(xs, ys)
    costs, _ = _kernels.cost_batch(a, b, cfg.beta, cfg.exponent, _use_moments(cfg, method))
    return float(costs[0])


_BRUTEFORCE_LIMIT = 8


def fgw_1d_bruteforce(xs: Projected1D, ys: Projected1D, cfg: FgwConfig) -> float:
    """Exact minimum of the fused objective over all n! permutation couplings.

    Validation oracle for ``fgw_1d``; deliberately shares no kernel code with
    it. Limited to n <= 8.
    """
    if len(xs) != len(ys):
        raise ValueError("projected clouds must have equal sizes")
    n = len(xs)
    if n > _BRUTEFORCE_LIMIT:
        raise ValueError(f"bruteforce oracle is limited to n <= {_BRUTEFORCE_LIMIT}")
    x = xs.values
    y = ys.values
    beta = cfg.beta
    r = cfg.exponent
    dx = np.abs(x[:, None] - x[None, :]) ** r
    best = np.inf
    for perm in itertools.permutations(range(n)):
        yp = y[list(perm)]
        w = float(np.mean(np.abs(x - yp) ** r))
        dy = np.abs(yp[:, None] - yp[None, :]) ** r
        gw = float(np.mean((dx - dy) ** 2))
        cost = (1.0 - beta) * w + beta * gw
        if cost < best:
            best = cost
    return best


def fgw_1d_grad(xs: Projected1D, ys: Projected1D, cfg: FgwConfig, method: str = "reference"):
    """Gradient of ``fgw_1d`` wrt the (unsorted) projected values, with the
    optimal monotone coupling frozen (envelope differentiation).

    Returns ``(grad_xs, grad_ys, coupling)``; gradients are aligned with the
    input order of ``values``, not the sorted order. Requires r=2.
    """
    if cfg.exponent != 2:
        raise ValueError("fgw_1d_grad requires exponent r=2")
    a, b = _paired_sorted(xs, ys)
    use_moments = _use_moments(cfg, method)
    costs, orients = _kernels.cost_batch(a, b, cfg.beta, 2, use_moments)
    ga, gb = _kernels.grad_batch(a, b, cfg.beta, orients, use_moments)
    grad_xs = np.empty(len(xs))
    grad_ys = np.empty(len(ys))
    grad_xs[xs.sort_permutation] = ga[0]
    grad_ys[ys.sort_permutation] = gb[0]
    coupling = MonotoneCoupling.REVERSED if orients[0] else MonotoneCoupling.ASCENDING
    return grad_xs, grad_ys, coupling
