"""Sphere-constrained first-order optimization primitives.

Plain bias-corrected Adam on the ambient coordinates followed by projection
back to S^{d-1} (no Riemannian transport of the moments), plus the two
location-gradient estimators shared by the smoothed discrepancies:

* Pathwise: directions are reparameterized as theta = U(eps) h where the
  pole-frame sample h = (omega, sqrt(1-omega^2) v) depends only on noise and
  the (fixed) concentration, and U is the Householder reflection mapping e_1
  to eps. The objective gradient in theta is pulled back through U's
  eps-Jacobian and averaged; no score-function term is needed because the
  accepted radial noise is independent of eps.
* FiniteDifference: central differences of the smoothed objective along an
  orthonormal tangent basis at eps, replaying the same (omega, v) noise at
  every perturbed location (common random numbers), step 1e-4, assembled in
  the basis and tangent-projected.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .sampling import (
    Rng,
    _assemble_directions,
    _pole_gap,
    _ps_omega,
    _uniform_sphere,
    _vmf_omega,
    householder_matrix,
)

_FD_STEP = 1e-4
_ZERO_NORM_TOL = 1e-12


class GradientMethod(Enum):
    """How the location gradient of a smoothed objective is estimated."""

    PATHWISE = "pathwise"
    FINITE_DIFFERENCE = "finite_difference"


@dataclass(frozen=True)
class AdamState:
    """Immutable Adam accumulator; ``adam_step`` returns updated copies."""

    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int
    learning_rate: float
    beta1: float
    beta2: float
    epsilon_stability: float = 1e-8


def adam_init(shape, learning_rate: float, beta1: float = 0.5, beta2: float = 0.999) -> AdamState:
    """Fresh Adam state with zero moments for a parameter of ``shape``."""
    lr = float(learning_rate)
    b1 = float(beta1)
    b2 = float(beta2)
    if lr <= 0.0:
        raise ValueError("learning_rate must be positive")
    if not (0.0 < b1 < 1.0 and 0.0 < b2 < 1.0):
        raise ValueError("Adam betas must lie in (0, 1)")
    zeros = np.zeros(shape, dtype=np.float64)
    return AdamState(zeros, zeros.copy(), 0, lr, b1, b2)


def adam_step(state: AdamState, gradient, current, ascend: bool = True):
    """One bias-corrected Adam update. Returns (updated parameter, new state);
    ``ascend`` adds the step instead of subtracting it. Pure."""
    g = np.asarray(gradient, dtype=np.float64)
    x = np.asarray(current, dtype=np.float64)
    if g.shape != state.first_moment.shape or x.shape != g.shape:
        raise ValueError("gradient/parameter shape mismatch with Adam state")
    t = state.step_count + 1
    m = state.beta1 * state.first_moment + (1.0 - state.beta1) * g
    v = state.beta2 * state.second_moment + (1.0 - state.beta2) * (g * g)
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    delta = state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon_stability)
    updated = x + delta if ascend else x - delta
    new_state = AdamState(
        m, v, t, state.learning_rate, state.beta1, state.beta2, state.epsilon_stability
    )
    return updated, new_state


def project_to_sphere(v) -> np.ndarray:
    """v / ||v||; rejects near-zero vectors (caller must reinitialize)."""
    arr = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(arr))
    if norm <= _ZERO_NORM_TOL:
        raise ValueError("cannot project a vector with norm <= 1e-12 to the sphere")
    return arr / norm


def tangent_basis(eps) -> np.ndarray:
    """Orthonormal (d, d-1) basis of the tangent space at eps: columns 2..d of
    the Householder reflection mapping e_1 to eps."""
    return householder_matrix(eps)[:, 1:]


def reflection_location_grads(eps, h, grad_theta) -> np.ndarray:
    """Pull per-sample objective gradients back through the Householder map.

    With w = e_1 - eps, rho = ||w||, u = w/rho and theta = h - 2(u^T h)u, the
    eps-Jacobian transpose applied to g is
        (2/rho) * [ (u^T g)(I - uu^T)h + (u^T h)(I - uu^T)g ].
    ``h`` and ``grad_theta`` are (L, d); returns per-sample (L, d) gradients.
    At eps = e_1 the reflection degenerates to the identity and the gradient
    is taken as zero for those samples.
    """
    u, rho = _pole_gap(np.asarray(eps, dtype=np.float64))
    if u is None:
        return np.zeros_like(np.asarray(grad_theta, dtype=np.float64))
    h = np.asarray(h, dtype=np.float64)
    g = np.asarray(grad_theta, dtype=np.float64)
    uh = h @ u
    ug = g @ u
    h_perp = h - np.outer(uh, u)
    g_perp = g - np.outer(ug, u)
    return (2.0 / rho) * (ug[:, None] * h_perp + uh[:, None] * g_perp)


def _radial_noise(family: str, kappa: float, d: int, count: int, rng: Rng) -> np.ndarray:
    if family == "vmf":
        return _vmf_omega(kappa, d, count, rng)
    if family == "power_spherical":
        return _ps_omega(kappa, d, count, rng)
    raise ValueError(f"unknown directional family: {family!r}")


def draw_reparam_noise(family: str, kappa: float, d: int, count: int, rng: Rng):
    """(omega, v) noise for ``count`` reparameterized directional samples.

    omega is the radial coordinate for the family at the given concentration
    (location-independent), v the uniform tangent direction on S^{d-2}. The
    vMF branch runs the rejection loop even at kappa=0 (it then accepts every
    proposal), keeping the noise usable at any concentration.
    """
    omega = _radial_noise(family, float(kappa), int(d), int(count), rng)
    v = _uniform_sphere(int(d) - 1, rng, int(count))
    return omega, v


def assemble_directions(eps, omega, v):
    """Map (omega, v) noise to directions around ``eps``. Returns
    (thetas, pole_frame_samples); the latter feeds the pathwise pullback."""
    return _assemble_directions(np.asarray(eps, dtype=np.float64), omega, v)


def _objective_value_and_grad(objective, theta, need_grad: bool):
    out = objective(theta)
    if isinstance(out, tuple):
        value, grad = out
    else:
        value, grad = out, None
    if need_grad and grad is None:
        raise ValueError(
            "pathwise estimation needs the objective to return (value, grad_theta)"
        )
    return float(value), grad


def estimate_location_gradient(
    objective,
    eps,
    kappa: float,
    L: int,
    method: GradientMethod,
    rng: Rng,
    family: str = "vmf",
) -> np.ndarray:
    """Monte Carlo estimate of the ambient gradient in the location eps of
    E_{theta ~ family(eps, kappa)}[objective(theta)].

    ``objective`` maps a direction to either a float or a
    ``(value, grad_theta)`` tuple; the pathwise method requires the tuple
    form. Returns a (d,) tangent vector at eps (both methods project out the
    radial component, which carries no information on the sphere).
    """
    eps = np.asarray(eps, dtype=np.float64)
    d = eps.size
    L = int(L)
    if L < 1:
        raise ValueError("L must be >= 1")
    method = GradientMethod(method)
    omega, v = draw_reparam_noise(family, kappa, d, L, rng)
    if method is GradientMethod.PATHWISE:
        thetas, h = assemble_directions(eps, omega, v)
        grads = np.empty((L, d))
        for i in range(L):
            _, g = _objective_value_and_grad(objective, thetas[i], need_grad=True)
            grads[i] = np.asarray(g, dtype=np.float64)
        ambient = reflection_location_grads(eps, h, grads).mean(axis=0)
        return ambient - eps * float(eps @ ambient)
    basis = tangent_basis(eps)
    partials = np.empty(d - 1)
    for j in range(d - 1):
        plus = project_to_sphere(eps + _FD_STEP * basis[:, j])
        minus = project_to_sphere(eps - _FD_STEP * basis[:, j])
        thetas_plus, _ = assemble_directions(plus, omega, v)
        thetas_minus, _ = assemble_directions(minus, omega, v)
        f_plus = 0.0
        f_minus = 0.0
        for i in range(L):
            f_plus += _objective_value_and_grad(objective, thetas_plus[i], False)[0]
            f_minus += _objective_value_and_grad(objective, thetas_minus[i], False)[0]
        partials[j] = (f_plus - f_minus) / (2.0 * _FD_STEP * L)
    ambient = basis @ partials
    return ambient - eps * float(eps @ ambient)
