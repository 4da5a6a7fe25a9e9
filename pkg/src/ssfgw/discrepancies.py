"""The sliced fused Gromov-Wasserstein discrepancy family.

* ``sfg``: Monte Carlo average of the 1D fused cost over uniform directions.
* ``max_sfg``: projected Adam ascent of the single-direction cost, multi-start.
* ``ssfg`` / ``pssfg``: ascent of the vMF- / power-spherical-smoothed cost in
  the slicing location via reparameterized (or finite-difference) gradients.
* ``mssfg``: joint ascent of all locations of a mixture-of-vMF slicing
  distribution; each sample's gradient is routed to the component that drew it
  and scaled by that component's weight. A single-component mixture follows
  the exact ssfg path (identical stream, identical trace).

Every engine consumes an explicit ``numpy.random.Generator``; with a shared
seed the direction stream does not depend on argument order, and the per-slice
kernels are exactly swap-symmetric, so each discrepancy is exactly symmetric
in its two clouds. Evaluation inside the engines uses the O(n) moment kernels
for r=2 (validated against the O(n^2) reference in the tests) and the direct
double sum otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import _kernels
from .fgw import FgwConfig, as_point_cloud
from .sampling import (
    MixtureVmfParams,
    PowerSphericalParams,
    Rng,
    VmfParams,
    _check_direction,
    sample_mixture_vmf,
    sample_power_spherical,
    sample_uniform_sphere,
    sample_vmf,
)
from .sphere_opt import (
    GradientMethod,
    adam_init,
    adam_step,
    assemble_directions,
    project_to_sphere,
    reflection_location_grads,
    tangent_basis,
)

_CONVERGENCE_TOL = 1e-6
_FD_STEP = 1e-4


# ---------------------------------------------------------------------------
# slicing distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UniformSlicing:
    """Uniform distribution over projection directions."""


@dataclass(frozen=True)
class DiracSlicing:
    """Point mass on a single projection direction."""

    direction: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "direction", _check_direction(self.direction))


@dataclass(frozen=True)
class VmfSlicing:
    """von Mises-Fisher distributed directions."""

    params: VmfParams


@dataclass(frozen=True)
class PowerSphericalSlicing:
    """Power-spherical distributed directions."""

    params: PowerSphericalParams


@dataclass(frozen=True)
class MixtureVmfSlicing:
    """Mixture-of-vMF distributed directions."""

    params: MixtureVmfParams


SlicingDistribution = Union[
    UniformSlicing, DiracSlicing, VmfSlicing, PowerSphericalSlicing, MixtureVmfSlicing
]


def sample_slicing(slicing: SlicingDistribution, d: int, L: int, rng: Rng) -> np.ndarray:
    """Draw (L, d) directions from a slicing distribution."""
    L = int(L)
    if L < 1:
        raise ValueError("L must be >= 1")
    if isinstance(slicing, UniformSlicing):
        return sample_uniform_sphere(d, rng, size=L)
    if isinstance(slicing, DiracSlicing):
        if slicing.direction.size != d:
            raise ValueError("slicing dimension does not match the clouds")
        return np.tile(slicing.direction, (L, 1))
    if isinstance(slicing, VmfSlicing):
        params = slicing.params
    elif isinstance(slicing, PowerSphericalSlicing):
        params = slicing.params
    elif isinstance(slicing, MixtureVmfSlicing):
        params = slicing.params
    else:
        raise ValueError(f"unknown slicing distribution: {slicing!r}")
    if params.dim != d:
        raise ValueError("slicing dimension does not match the clouds")
    if isinstance(slicing, VmfSlicing):
        return sample_vmf(params, rng, size=L)
    if isinstance(slicing, PowerSphericalSlicing):
        return sample_power_spherical(params, rng, size=L)
    return sample_mixture_vmf(params, rng, size=L)[0]


# ---------------------------------------------------------------------------
# configuration and report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings of the slicing-parameter ascent.

    ``num_projections`` is the Monte Carlo batch per iteration, ``seed`` a
    fallback used only when an engine is called without an explicit generator.
    """

    learning_rate: float = 0.001
    adam_beta1: float = 0.5
    adam_beta2: float = 0.999
    max_iter: int = 10
    num_projections: int = 50
    gradient_method: GradientMethod = GradientMethod.PATHWISE
    seed: Optional[int] = None

    def __post_init__(self):
        if not self.learning_rate > 0.0:
            raise ValueError("learning_rate must be positive")
        if not (0.0 < self.adam_beta1 < 1.0 and 0.0 < self.adam_beta2 < 1.0):
            raise ValueError("Adam betas must lie in (0, 1)")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be >= 1")
        if int(self.num_projections) < 1:
            raise ValueError("num_projections must be >= 1")
        object.__setattr__(self, "max_iter", int(self.max_iter))
        object.__setattr__(self, "num_projections", int(self.num_projections))
        object.__setattr__(self, "gradient_method", GradientMethod(self.gradient_method))


@dataclass(frozen=True)
class DiscrepancyReport:
    """Outcome of one discrepancy computation.

    ``trace`` lists (iteration, Monte Carlo objective) per ascent iteration;
    ``value`` is evaluated at the final slicing with a fresh direction batch,
    ``std_error`` its Monte Carlo standard error (0 for deterministic values),
    and ``num_projections_used`` counts every 1D slice evaluation.
    """

    value: float
    final_slicing: SlicingDistribution
    trace: tuple
    num_projections_used: int
    std_error: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.value) or self.value < 0.0:
            raise ValueError("discrepancy value must be finite and >= 0")


# ---------------------------------------------------------------------------
# batched slice evaluation
# ---------------------------------------------------------------------------


def _validate_pair(mu, nu):
    X = as_point_cloud(mu)
    Y = as_point_cloud(nu)
    if X.shape[1] != Y.shape[1]:
        raise ValueError(
            f"clouds must share a dimension, got {X.shape[1]} and {Y.shape[1]}"
        )
    if X.shape[0] != Y.shape[0]:
        raise ValueError(
            f"clouds must have equal sizes, got {X.shape[0]} and {Y.shape[0]}"
        )
    return X, Y


def _project_sorted(X, thetas):
    values = thetas @ X.T
    order = np.argsort(values, axis=1, kind="stable")
    return np.ascontiguousarray(np.take_along_axis(values, order, axis=1)), order


def _eval_slices(X, Y, thetas, cfg: FgwConfig, want_grads: bool):
    """Per-direction fused costs, optionally with gradients wrt the original
    (unsorted) cloud rows."""
    use_moments = cfg.exponent == 2
    A, order_x = _project_sorted(X, thetas)
    B, order_y = _project_sorted(Y, thetas)
    costs, orients = _kernels.cost_batch(A, B, cfg.beta, cfg.exponent, use_moments)
    if not want_grads:
        return costs, None, None
    GA, GB = _kernels.grad_batch(A, B, cfg.beta, orients, use_moments)
    gx = np.empty_like(GA)
    gy = np.empty_like(GB)
    np.put_along_axis(gx, order_x, GA, axis=1)
    np.put_along_axis(gy, order_y, GB, axis=1)
    return costs, gx, gy


def slice_costs(mu, nu, cfg: FgwConfig, directions) -> np.ndarray:
    """Fused 1D costs of two clouds along given (L, d) directions."""
    X, Y = _validate_pair(mu, nu)
    thetas = np.atleast_2d(np.asarray(directions, dtype=np.float64))
    if thetas.shape[1] != X.shape[1]:
        raise ValueError("direction dimension does not match the clouds")
    costs, _, _ = _eval_slices(X, Y, thetas, cfg, want_grads=False)
    return costs


def _mc_std_error(costs: np.ndarray) -> float:
    if costs.size < 2:
        return 0.0
    return float(np.std(costs, ddof=1) / np.sqrt(costs.size))


def _resolve_rng(rng, opt: Optional[OptimizerConfig]) -> Rng:
    if rng is not None:
        return rng
    seed = opt.seed if opt is not None else None
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# fixed-slicing estimators
# ---------------------------------------------------------------------------


def expected_fgw(mu, nu, cfg: FgwConfig, slicing: SlicingDistribution, L: int, rng: Rng) -> DiscrepancyReport:
    """Monte Carlo estimate of the expected fused cost under a fixed slicing
    distribution (no optimization)."""
    X, Y = _validate_pair(mu, nu)
    thetas = sample_slicing(slicing, X.shape[1], L, rng)
    costs, _, _ = _eval_slices(X, Y, thetas, cfg, want_grads=False)
    return DiscrepancyReport(
        value=float(max(costs.mean(), 0.0)),
        final_slicing=slicing,
        trace=(),
        num_projections_used=int(L),
        std_error=_mc_std_error(costs),
    )


def sfg(mu, nu, cfg: FgwConfig, L: int = 50, rng: Optional[Rng] = None) -> DiscrepancyReport:
    """Sliced fused Gromov-Wasserstein: expectation over uniform directions."""
    return expected_fgw(mu, nu, cfg, UniformSlicing(), L, _resolve_rng(rng, None))


# ---------------------------------------------------------------------------
# max-SFG: ascent over a single direction
# ---------------------------------------------------------------------------


def _dirac_cost_grad(X, Y, theta, cfg: FgwConfig):
    costs, gx, gy = _eval_slices(X, Y, theta[None, :], cfg, want_grads=True)
    return float(costs[0]), gx[0] @ X + gy[0] @ Y


def _dirac_cost(X, Y, theta, cfg: FgwConfig) -> float:
    costs, _, _ = _eval_slices(X, Y, theta[None, :], cfg, want_grads=False)
    return float(costs[0])


def max_sfg(
    mu,
    nu,
    cfg: FgwConfig,
    opt: Optional[OptimizerConfig] = None,
    rng: Optional[Rng] = None,
    num_restarts: int = 8,
) -> DiscrepancyReport:
    """Largest single-direction fused cost, by projected Adam ascent with
    multi-start (best of ``num_restarts`` uniform initializations)."""
    opt = opt or OptimizerConfig()
    rng = _resolve_rng(rng, opt)
    X, Y = _validate_pair(mu, nu)
    d = X.shape[1]
    analytic = cfg.exponent == 2
    best_value = -np.inf
    best_theta = None
    best_trace = ()
    projections = 0
    for _ in range(int(num_restarts)):
        theta = sample_uniform_sphere(d, rng)
        adam = adam_init(d, opt.learning_rate, opt.adam_beta1, opt.adam_beta2)
        trace = []
        for it in range(1, opt.max_iter + 1):
            if analytic:
                value, grad = _dirac_cost_grad(X, Y, theta, cfg)
                # drop the radial component: the cost is homogeneous in theta,
                # so the ambient gradient is dominated by a radial part that
                # Adam's per-coordinate normalization would amplify into
                # projection-cancelled steps
                grad = grad - theta * float(theta @ grad)
                projections += 1
            else:
                value = _dirac_cost(X, Y, theta, cfg)
                basis = tangent_basis(theta)
                partials = np.empty(d - 1)
                for j in range(d - 1):
                    plus = project_to_sphere(theta + _FD_STEP * basis[:, j])
                    minus = project_to_sphere(theta - _FD_STEP * basis[:, j])
                    partials[j] = (
                        _dirac_cost(X, Y, plus, cfg) - _dirac_cost(X, Y, minus, cfg)
                    ) / (2.0 * _FD_STEP)
                grad = basis @ partials
                projections += 1 + 2 * (d - 1)
            trace.append((it, value))
            updated, adam = adam_step(adam, grad, theta, ascend=True)
            updated = project_to_sphere(updated)
            delta = float(np.linalg.norm(updated - theta))
            theta = updated
            if delta < _CONVERGENCE_TOL:
                break
        final_value = _dirac_cost(X, Y, theta, cfg)
        projections += 1
        if final_value > best_value:
            best_value = final_value
            best_theta = theta
            best_trace = tuple(trace)
    return DiscrepancyReport(
        value=float(max(best_value, 0.0)),
        final_slicing=DiracSlicing(best_theta),
        trace=best_trace,
        num_projections_used=projections,
        std_error=0.0,
    )


# ---------------------------------------------------------------------------
# smoothed discrepancies: ssfg / pssfg / mssfg
# ---------------------------------------------------------------------------


def _smoothed_engine(X, Y, cfg, family, kappas, alphas, opt, rng, mixture: bool):
    from .sampling import _uniform_sphere, _vmf_omega, _ps_omega  # noqa: F401

    d = X.shape[1]
    k = len(kappas)
    L = opt.num_projections
    method = opt.gradient_method
    if method is GradientMethod.PATHWISE and cfg.exponent != 2:
        raise ValueError(
            "pathwise gradients need the r=2 closed form; use FiniteDifference"
        )
    radial = _vmf_omega if family == "vmf" else _ps_omega
    locs = np.stack([sample_uniform_sphere(d, rng) for _ in range(k)])
    adam = adam_init((k, d), opt.learning_rate, opt.adam_beta1, opt.adam_beta2)
    trace = []
    projections = 0
    for it in range(1, opt.max_iter + 1):
        if k == 1:
            idx = np.zeros(L, dtype=np.int64)
        else:
            idx = rng.choice(k, size=L, p=alphas)
        omega = np.empty(L)
        counts = np.bincount(idx, minlength=k)
        for i in range(k):
            if counts[i]:
                omega[idx == i] = radial(kappas[i], d, int(counts[i]), rng)
        v = _uniform_sphere(d - 1, rng, L)
        thetas = np.empty((L, d))
        pole_frames = np.empty((L, d))
        for i in range(k):
            sel = idx == i
            if counts[i]:
                thetas[sel], pole_frames[sel] = assemble_directions(
                    locs[i], omega[sel], v[sel]
                )
        costs, gx, gy = _eval_slices(
            X, Y, thetas, cfg, want_grads=method is GradientMethod.PATHWISE
        )
        value = float(costs.mean())
        trace.append((it, value))
        projections += L
        grad = np.zeros((k, d))
        if method is GradientMethod.PATHWISE:
            g_theta = gx @ X + gy @ Y
            for i in range(k):
                sel = idx == i
                if counts[i]:
                    per_sample = reflection_location_grads(
                        locs[i], pole_frames[sel], g_theta[sel]
                    )
                    ambient = per_sample.mean(axis=0)
                    # Riemannian gradient on the sphere, matching the
                    # finite-difference branch below
                    ambient -= locs[i] * float(locs[i] @ ambient)
                    grad[i] = alphas[i] * ambient
        else:
            for i in range(k):
                sel = idx == i
                if not counts[i]:
                    continue
                basis = tangent_basis(locs[i])
                partials = np.empty(d - 1)
                for j in range(d - 1):
                    plus = project_to_sphere(locs[i] + _FD_STEP * basis[:, j])
                    minus = project_to_sphere(locs[i] - _FD_STEP * basis[:, j])
                    th_plus, _ = assemble_directions(plus, omega[sel], v[sel])
                    th_minus, _ = assemble_directions(minus, omega[sel], v[sel])
                    c_plus, _, _ = _eval_slices(X, Y, th_plus, cfg, want_grads=False)
                    c_minus, _, _ = _eval_slices(X, Y, th_minus, cfg, want_grads=False)
                    partials[j] = (c_plus.mean() - c_minus.mean()) / (2.0 * _FD_STEP)
                ambient = basis @ partials
                ambient -= locs[i] * float(locs[i] @ ambient)
                grad[i] = alphas[i] * ambient
                projections += 2 * (d - 1) * int(counts[i])
        updated, adam = adam_step(adam, grad, locs, ascend=True)
        updated = updated / np.linalg.norm(updated, axis=1, keepdims=True)
        delta = float(np.linalg.norm(updated - locs))
        locs = updated
        if delta < _CONVERGENCE_TOL:
            break
    if mixture:
        params = MixtureVmfParams(
            tuple(VmfParams(locs[i], kappas[i]) for i in range(k)),
            np.asarray(alphas, dtype=np.float64),
        )
        final_slicing = MixtureVmfSlicing(params)
    elif family == "vmf":
        final_slicing = VmfSlicing(VmfParams(locs[0], kappas[0]))
    else:
        final_slicing = PowerSphericalSlicing(PowerSphericalParams(locs[0], kappas[0]))
    final_dirs = sample_slicing(final_slicing, d, L, rng)
    final_costs, _, _ = _eval_slices(X, Y, final_dirs, cfg, want_grads=False)
    projections += L
    return DiscrepancyReport(
        value=float(max(final_costs.mean(), 0.0)),
        final_slicing=final_slicing,
        trace=tuple(trace),
        num_projections_used=projections,
        std_error=_mc_std_error(final_costs),
    )


def ssfg(
    mu,
    nu,
    cfg: FgwConfig,
    kappa: float,
    opt: Optional[OptimizerConfig] = None,
    rng: Optional[Rng] = None,
) -> DiscrepancyReport:
    """Spherical SFG: ascends the location of a vMF(eps, kappa) slicing
    distribution and reports the smoothed objective at the optimum."""
    opt = opt or OptimizerConfig()
    rng = _resolve_rng(rng, opt)
    X, Y = _validate_pair(mu, nu)
    kappa = float(kappa)
    if kappa < 0.0:
        raise ValueError("kappa must be >= 0")
    return _smoothed_engine(
        X, Y, cfg, "vmf", [kappa], np.array([1.0]), opt, rng, mixture=False
    )


def pssfg(
    mu,
    nu,
    cfg: FgwConfig,
    kappa: float,
    opt: Optional[OptimizerConfig] = None,
    rng: Optional[Rng] = None,
) -> DiscrepancyReport:
    """Power spherical SFG: ssfg with the rejection-free PS sampler."""
    opt = opt or OptimizerConfig()
    rng = _resolve_rng(rng, opt)
    X, Y = _validate_pair(mu, nu)
    kappa = float(kappa)
    if kappa < 0.0:
        raise ValueError("kappa must be >= 0")
    return _smoothed_engine(
        X, Y, cfg, "power_spherical", [kappa], np.array([1.0]), opt, rng, mixture=False
    )


def mssfg(
    mu,
    nu,
    cfg: FgwConfig,
    kappas,
    alphas=None,
    opt: Optional[OptimizerConfig] = None,
    rng: Optional[Rng] = None,
) -> DiscrepancyReport:
    """Mixture spherical SFG: jointly ascends all k vMF locations; sample
    gradients are routed by the drawing component and scaled by its weight."""
    opt = opt or OptimizerConfig()
    rng = _resolve_rng(rng, opt)
    X, Y = _validate_pair(mu, nu)
    kappas = [float(kappa) for kappa in np.atleast_1d(np.asarray(kappas, dtype=np.float64))]
    if len(kappas) < 1:
        raise ValueError("mssfg needs at least one concentration")
    if any(kappa < 0.0 for kappa in kappas):
        raise ValueError("all concentrations must be >= 0")
    k = len(kappas)
    if alphas is None:
        alphas = np.full(k, 1.0 / k)
    else:
        alphas = np.asarray(alphas, dtype=np.float64)
    if alphas.shape != (k,):
        raise ValueError("alphas length must match the number of concentrations")
    if np.any(alphas < 0.0) or abs(float(alphas.sum()) - 1.0) > 1e-12:
        raise ValueError("alphas must be nonnegative and sum to 1 within 1e-12")
    return _smoothed_engine(X, Y, cfg, "vmf", kappas, alphas, opt, rng, mixture=True)
