"""Desk-scale experiments on top of the discrepancy family.

* ``kappa_sweep``: ssfg mean/std over trials per concentration, with sfg and
  max_sfg reference rows.
* ``convergence_rate``: empirical decay of the discrepancy between an n-point
  empirical cloud and a large fixed reference cloud, with a fitted log-log
  slope; a classical 1D Wasserstein control mode validates the harness.
* ``particle_flow``: free particles descend a chosen discrepancy toward a
  target cloud; the slicing parameters ascend online (warm-started) from step
  to step.
* ``gmm_fit``: a reparameterized diagonal GMM (fixed uniform weights) descends
  the discrepancy between its sample batch and target batches, with
  straight-through routing of sample gradients to the drawing component.

Particle (and GMM sample) gradients chain the per-slice cost gradients through
the projections: d cost/d x_i = mean over slices of g[l, i] * theta_l. For the
flow this is scaled by n (unit-mass particles would feel O(1/n) forces and the
step size would have to grow with n; the scaling makes step_size n-free).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fgw import FgwConfig, as_point_cloud
from .discrepancies import (
    OptimizerConfig,
    _eval_slices,
    max_sfg,
    sfg,
    ssfg,
)
from .sampling import (
    Rng,
    _uniform_sphere,
    sample_uniform_sphere,
)
from .sphere_opt import (
    adam_init,
    adam_step,
    assemble_directions,
    project_to_sphere,
    reflection_location_grads,
)
from .sphere_opt import _radial_noise


_DIVERGENCE_CAP = 1e100


class DivergenceError(RuntimeError):
    """A descent produced a non-finite (or noisily exploding) state."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


@dataclass(frozen=True)
class Record:
    """One long-format results row."""

    metric: str
    parameter: str
    value: float
    std_error: float

    def __post_init__(self):
        if not (np.isfinite(self.value) and np.isfinite(self.std_error)):
            raise ValueError(f"non-finite record: {self!r}")


@dataclass(frozen=True)
class ExperimentResult:
    table: tuple
    metadata: dict


@dataclass(frozen=True)
class GmmParams:
    """Diagonal-covariance Gaussian mixture parameters."""

    means: np.ndarray
    log_std_devs: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        means = np.asarray(self.means, dtype=np.float64)
        log_std = np.asarray(self.log_std_devs, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if means.ndim != 2 or log_std.shape != means.shape:
            raise ValueError("means and log_std_devs must share a (k, d) shape")
        if weights.shape != (means.shape[0],):
            raise ValueError("weights length must match the number of components")
        if not (np.isfinite(means).all() and np.isfinite(log_std).all()):
            raise ValueError("GMM parameters must be finite")
        if np.any(weights < 0.0) or abs(float(weights.sum()) - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1 within 1e-12")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "log_std_devs", log_std)
        object.__setattr__(self, "weights", weights)


def sample_gmm(params: GmmParams, n: int, rng: Rng) -> np.ndarray:
    """n draws from a diagonal GMM."""
    k, d = params.means.shape
    comp = rng.choice(k, size=int(n), p=params.weights) if k > 1 else np.zeros(int(n), dtype=np.int64)
    eta = rng.standard_normal((int(n), d))
    return params.means[comp] + np.exp(params.log_std_devs[comp]) * eta


_FOUR_MODES = np.array([[4.0, 4.0], [4.0, -4.0], [-4.0, 4.0], [-4.0, -4.0]])
_FOUR_MODE_STD = 0.5


def four_mode_gmm(n: int, rng: Rng) -> np.ndarray:
    """The 2D four-Gaussian toy target: modes at (+-4, +-4), std 0.5, with
    points assigned to modes in balanced round-robin order."""
    n = int(n)
    comp = np.arange(n) % 4
    return _FOUR_MODES[comp] + _FOUR_MODE_STD * rng.standard_normal((n, 2))


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


def _fmt_param(x) -> str:
    return repr(float(x))


def _mean_se(values: np.ndarray):
    mean = float(values.mean())
    if values.size < 2:
        return mean, 0.0
    return mean, float(np.std(values, ddof=1) / np.sqrt(values.size))


def kappa_sweep(
    mu,
    nu,
    cfg: FgwConfig,
    kappas,
    opt: Optional[OptimizerConfig] = None,
    trials: int = 5,
    rng: Optional[Rng] = None,
) -> ExperimentResult:
    """ssfg across a concentration grid, mean and standard error over trials,
    plus sfg and max_sfg reference rows computed with the same budget."""
    opt = opt or OptimizerConfig()
    if int(trials) < 1:
        raise ValueError("trials must be >= 1")
    trials = int(trials)
    rng = rng if rng is not None else np.random.default_rng(opt.seed)
    kappas = [float(k) for k in np.atleast_1d(np.asarray(kappas, dtype=np.float64))]
    rows = []
    for kappa in kappas:
        children = rng.spawn(trials)
        values = np.array(
            [ssfg(mu, nu, cfg, kappa, opt, rng=child).value for child in children]
        )
        mean, se = _mean_se(values)
        rows.append(Record("ssfg", _fmt_param(kappa), mean, se))
    children = rng.spawn(trials)
    values = np.array(
        [sfg(mu, nu, cfg, L=opt.num_projections, rng=child).value for child in children]
    )
    mean, se = _mean_se(values)
    rows.append(Record("sfg", "", mean, se))
    children = rng.spawn(trials)
    values = np.array(
        [max_sfg(mu, nu, cfg, opt, rng=child).value for child in children]
    )
    mean, se = _mean_se(values)
    rows.append(Record("max_sfg", "", mean, se))
    metadata = {
        "experiment": "kappa_sweep",
        "kappas": kappas,
        "trials": trials,
        "beta": cfg.beta,
        "exponent": cfg.exponent,
        "optimizer": _opt_echo(opt),
    }
    return ExperimentResult(tuple(rows), metadata)


def _opt_echo(opt: OptimizerConfig) -> dict:
    return {
        "learning_rate": opt.learning_rate,
        "adam_beta1": opt.adam_beta1,
        "adam_beta2": opt.adam_beta2,
        "max_iter": opt.max_iter,
        "num_projections": opt.num_projections,
        "gradient_method": opt.gradient_method.value,
        "seed": opt.seed,
    }


def _replicated(points: np.ndarray, m: int) -> np.ndarray:
    """Each of the n rows repeated m//n times (empirical measure unchanged)."""
    n = points.shape[0]
    reps = m // n
    return np.repeat(points, reps, axis=0)


def convergence_rate(
    d: int,
    sample_sizes,
    trials: int,
    cfg: FgwConfig,
    kappa: float,
    opt: Optional[OptimizerConfig] = None,
    rng: Optional[Rng] = None,
    metric: str = "ssfg",
) -> ExperimentResult:
    """Decay of the discrepancy between an n-sample empirical cloud and a
    fixed m = 16*max(n) reference cloud, both uniform on [0,1]^d, as n grows.

    The n-point cloud is compared after replicating each point m//n times,
    which leaves its empirical measure unchanged and gives the equal-size
    pairing the 1D solver needs. ``metric="w1_control"`` replaces the sliced
    discrepancy with the classical 1D squared Wasserstein distance (d is
    ignored there) to validate the harness on a known 1/n rate.
    """
    opt = opt or OptimizerConfig()
    sizes = [int(n) for n in sample_sizes]
    if sizes != sorted(sizes) or len(set(sizes)) != len(sizes):
        raise ValueError("sample sizes must be strictly increasing")
    if min(sizes) < 1:
        raise ValueError("sample sizes must be positive")
    if int(trials) < 1:
        raise ValueError("trials must be >= 1")
    if metric not in ("ssfg", "w1_control"):
        raise ValueError("metric must be 'ssfg' or 'w1_control'")
    trials = int(trials)
    rng = rng if rng is not None else np.random.default_rng(opt.seed)
    m = 16 * max(sizes)
    rows = []
    means = []
    for n in sizes:
        reps = m // n
        children = rng.spawn(trials)
        values = np.empty(trials)
        for t, child in enumerate(children):
            if metric == "w1_control":
                samp = child.uniform(size=n)
                ref = child.uniform(size=m)[: reps * n]
                a = np.sort(np.repeat(samp, reps))
                b = np.sort(ref)
                values[t] = float(np.mean((a - b) ** 2))
            else:
                samp = child.uniform(size=(n, d))
                ref = child.uniform(size=(m, d))[: reps * n]
                values[t] = ssfg(
                    _replicated(samp, m), ref, cfg, kappa, opt, rng=child
                ).value
        mean, se = _mean_se(values)
        means.append(mean)
        rows.append(Record(metric, str(n), mean, se))
    logs = np.log(np.maximum(means, 1e-300))
    design = np.column_stack([np.log(np.asarray(sizes, dtype=np.float64)), np.ones(len(sizes))])
    slope = float(np.linalg.lstsq(design, logs, rcond=None)[0][0])
    rows.append(Record(f"{metric}_slope", "", slope, 0.0))
    metadata = {
        "experiment": "convergence_rate",
        "metric": metric,
        "d": int(d),
        "sample_sizes": sizes,
        "reference_size": m,
        "trials": trials,
        "kappa": float(kappa),
        "beta": cfg.beta,
        "exponent": cfg.exponent,
        "optimizer": _opt_echo(opt),
    }
    return ExperimentResult(tuple(rows), metadata)


# ---------------------------------------------------------------------------
# online slicing state for flows
# ---------------------------------------------------------------------------


_FLOW_KINDS = ("sfg", "max_sfg", "ssfg", "pssfg", "mssfg")


@dataclass(frozen=True)
class FlowObjective:
    """Which discrepancy a flow descends, and its slicing-ascent settings."""

    kind: str = "ssfg"
    beta: float = 0.1
    kappa: float = 1000.0
    kappas: Optional[tuple] = None
    alphas: Optional[tuple] = None
    num_projections: int = 50
    learning_rate: float = 0.001
    adam_beta1: float = 0.5
    adam_beta2: float = 0.999

    def __post_init__(self):
        if self.kind not in _FLOW_KINDS:
            raise ValueError(f"kind must be one of {_FLOW_KINDS}, got {self.kind!r}")
        if int(self.num_projections) < 1:
            raise ValueError("num_projections must be >= 1")
        object.__setattr__(self, "num_projections", int(self.num_projections))

    def fgw_config(self) -> FgwConfig:
        # particle gradients chain through the r=2 closed form
        return FgwConfig(beta=self.beta, exponent=2)


class _SlicingState:
    """Per-step direction supplier with warm-started parameter ascent."""

    def __init__(self, objective: FlowObjective, d: int, rng: Rng):
        self.kind = objective.kind
        self.L = objective.num_projections
        self.d = d
        if self.kind == "sfg":
            return
        if self.kind == "max_sfg":
            self.theta = sample_uniform_sphere(d, rng)
            self.adam = adam_init(
                d, objective.learning_rate, objective.adam_beta1, objective.adam_beta2
            )
            return
        if self.kind == "mssfg":
            if objective.kappas is None:
                raise ValueError("mssfg flow needs kappas")
            self.kappas = [float(k) for k in objective.kappas]
            k = len(self.kappas)
            if objective.alphas is None:
                self.alphas = np.full(k, 1.0 / k)
            else:
                self.alphas = np.asarray(objective.alphas, dtype=np.float64)
                if self.alphas.shape != (k,) or abs(float(self.alphas.sum()) - 1.0) > 1e-12:
                    raise ValueError("alphas must match kappas and sum to 1")
        else:
            self.kappas = [float(objective.kappa)]
            self.alphas = np.array([1.0])
        self.family = "power_spherical" if self.kind == "pssfg" else "vmf"
        k = len(self.kappas)
        self.locs = np.stack([sample_uniform_sphere(d, rng) for _ in range(k)])
        self.adam = adam_init(
            (k, d), objective.learning_rate, objective.adam_beta1, objective.adam_beta2
        )

    def directions(self, rng: Rng):
        """(thetas, context) for one step; context feeds ``ascend``."""
        if self.kind == "sfg":
            return sample_uniform_sphere(self.d, rng, size=self.L), None
        if self.kind == "max_sfg":
            return self.theta[None, :], None
        k = len(self.kappas)
        L, d = self.L, self.d
        if k == 1:
            idx = np.zeros(L, dtype=np.int64)
        else:
            idx = rng.choice(k, size=L, p=self.alphas)
        counts = np.bincount(idx, minlength=k)
        omega = np.empty(L)
        for i in range(k):
            if counts[i]:
                omega[idx == i] = _radial_noise(
                    self.family, self.kappas[i], d, int(counts[i]), rng
                )
        v = _uniform_sphere(d - 1, rng, L)
        thetas = np.empty((L, d))
        frames = np.empty((L, d))
        for i in range(k):
            sel = idx == i
            if counts[i]:
                thetas[sel], frames[sel] = assemble_directions(
                    self.locs[i], omega[sel], v[sel]
                )
        return thetas, (idx, counts, frames)

    def ascend(self, g_theta: np.ndarray, context):
        """One warm-started Adam ascent step on the slicing parameters."""
        if self.kind == "sfg":
            return
        if self.kind == "max_sfg":
            updated, self.adam = adam_step(self.adam, g_theta[0], self.theta, ascend=True)
            self.theta = project_to_sphere(updated)
            return
        idx, counts, frames = context
        k = len(self.kappas)
        grad = np.zeros((k, self.d))
        for i in range(k):
            sel = idx == i
            if counts[i]:
                per_sample = reflection_location_grads(
                    self.locs[i], frames[sel], g_theta[sel]
                )
                grad[i] = self.alphas[i] * per_sample.mean(axis=0)
        updated, self.adam = adam_step(self.adam, grad, self.locs, ascend=True)
        self.locs = updated / np.linalg.norm(updated, axis=1, keepdims=True)


@dataclass(frozen=True)
class FlowResult:
    """Particle flow output: snapshots (with their step indices), the
    per-step Monte Carlo discrepancy trace, and the final particles."""

    snapshots: tuple
    snapshot_steps: tuple
    trace: np.ndarray
    particles: np.ndarray


def particle_flow(
    target,
    num_particles: int,
    objective: FlowObjective,
    steps: int,
    step_size: float,
    rng: Optional[Rng] = None,
    snapshot_every: int = 100,
) -> FlowResult:
    """Gradient flow of free particles toward a target cloud under the chosen
    sliced discrepancy. Particles start at 0.1 * standard normal; snapshots
    are taken at step 0, every ``snapshot_every`` steps, and at the end."""
    Y = as_point_cloud(target)
    n, d = int(num_particles), Y.shape[1]
    if n != Y.shape[0]:
        raise ValueError("num_particles must equal the target size")
    if int(steps) < 1:
        raise ValueError("steps must be >= 1")
    rng = rng if rng is not None else np.random.default_rng()
    cfg = objective.fgw_config()
    X = 0.1 * rng.standard_normal((n, d))
    state = _SlicingState(objective, d, rng)
    snapshots = [X.copy()]
    snapshot_steps = [0]
    trace = np.empty(int(steps))
    for step in range(1, int(steps) + 1):
        thetas, context = state.directions(rng)
        costs, gx, gy = _eval_slices(X, Y, thetas, cfg, want_grads=True)
        trace[step - 1] = costs.mean()
        # catch runaway dynamics while every float is still finite, before
        # squared gradients in the slicing ascent can overflow
        if not np.isfinite(trace[step - 1]) or trace[step - 1] > _DIVERGENCE_CAP:
            raise DivergenceError(f"diverging discrepancy at step {step}", step)
        L = thetas.shape[0]
        if state.kind != "sfg":
            state.ascend(gx @ X + gy @ Y, context)
        X = X - float(step_size) * (gx.T @ thetas) * (n / L)
        if not np.isfinite(X).all():
            raise DivergenceError(f"non-finite particle at step {step}", step)
        if step % int(snapshot_every) == 0 and step != int(steps):
            snapshots.append(X.copy())
            snapshot_steps.append(step)
    snapshots.append(X.copy())
    snapshot_steps.append(int(steps))
    return FlowResult(tuple(snapshots), tuple(snapshot_steps), trace, X)


def gmm_fit(
    target,
    k: int,
    objective: FlowObjective,
    steps: int,
    step_size: float,
    batch: int = 128,
    rng: Optional[Rng] = None,
) -> GmmParams:
    """Fit a diagonal GMM to a cloud by descending the chosen discrepancy
    between reparameterized GMM samples and target batches.

    Component choice is straight-through: each sample's gradient flows only to
    the component that drew it. Weights stay fixed at uniform (the discrepancy
    carries no usable weight gradient under straight-through routing)."""
    Y = as_point_cloud(target)
    n, d = Y.shape
    k = int(k)
    if k < 1:
        raise ValueError("k must be >= 1")
    batch = int(batch)
    if not (1 <= batch <= n):
        raise ValueError("batch must lie in [1, target size]")
    if int(steps) < 0:
        raise ValueError("steps must be >= 0")
    rng = rng if rng is not None else np.random.default_rng()
    cfg = objective.fgw_config()
    means = 0.1 * rng.standard_normal((k, d))
    log_std = np.zeros((k, d))
    weights = np.full(k, 1.0 / k)
    if int(steps) == 0:
        return GmmParams(means, log_std, weights)
    state = _SlicingState(objective, d, rng)
    for step in range(1, int(steps) + 1):
        comp = rng.choice(k, size=batch, p=weights) if k > 1 else np.zeros(batch, dtype=np.int64)
        eta = rng.standard_normal((batch, d))
        Z = means[comp] + np.exp(log_std[comp]) * eta
        sel_rows = rng.choice(n, size=batch, replace=False)
        Yb = Y[sel_rows]
        thetas, context = state.directions(rng)
        costs, gz, gy = _eval_slices(Z, Yb, thetas, cfg, want_grads=True)
        mean_cost = float(costs.mean())
        if not np.isfinite(mean_cost) or mean_cost > _DIVERGENCE_CAP:
            raise DivergenceError(f"diverging discrepancy at step {step}", step)
        L = thetas.shape[0]
        sample_grad = (gz.T @ thetas) / L
        grad_means = np.zeros((k, d))
        grad_log_std = np.zeros((k, d))
        scaled = sample_grad * np.exp(log_std[comp]) * eta
        np.add.at(grad_means, comp, sample_grad)
        np.add.at(grad_log_std, comp, scaled)
        means = means - float(step_size) * grad_means
        log_std = log_std - float(step_size) * grad_log_std
        # the magnitude caps stop the run while exp(log_std) and the fourth
        # powers inside the slice cost are still representable
        if (
            not (np.isfinite(means).all() and np.isfinite(log_std).all())
            or np.abs(log_std).max() > 200.0
            or np.abs(means).max() > 1e50
        ):
            raise DivergenceError(f"diverging GMM parameters at step {step}", step)
        if state.kind != "sfg":
            state.ascend(gz @ Z + gy @ Yb, context)
    return GmmParams(means, log_std, weights)
