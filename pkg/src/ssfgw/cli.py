"""Command-line front end.

Subcommands: ``discrepancy``, ``sweep-kappa``, ``convergence``, ``flow``,
``gmm-fit``. Results go to a long-format CSV (metric, parameter, value,
std_error) plus a JSON metadata sidecar echoing the configuration and seed;
with no ``--output`` the CSV goes to stdout and no sidecar is written. Floats
are serialized with their shortest round-trip representation so reruns diff
cleanly. Exit codes: 0 success, 1 input error (including unknown flags), 2
numeric divergence while computing.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from .discrepancies import (
    OptimizerConfig,
    max_sfg,
    mssfg,
    pssfg,
    sfg,
    ssfg,
)
from .experiments import (
    DivergenceError,
    FlowObjective,
    convergence_rate,
    gmm_fit,
    kappa_sweep,
    particle_flow,
)
from .fgw import FgwConfig, as_point_cloud
from .sampling import QuadratureError, SamplingError
from .sphere_opt import GradientMethod

_DEFAULT_KAPPA_GRID = (1.0, 5.0, 10.0, 50.0, 100.0)


class CliInputError(ValueError):
    """Bad flags, paths, or file contents; exits with status 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags, which collides with the
    # divergence exit code; raise instead and let main() map it to 1.
    def error(self, message):
        raise CliInputError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# point cloud I/O
# ---------------------------------------------------------------------------


def parse_point_cloud(path) -> np.ndarray:
    """Read a CSV point cloud: one point per row, comma-separated finite
    decimals, optional single header line (auto-detected by a non-numeric
    first row)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliInputError(f"{path}: {exc.strerror or exc}") from exc
    lines = text.splitlines()
    if not lines or all(not line.strip() for line in lines):
        raise CliInputError(f"{path}: empty input, no point rows")

    def parse_row(line, lineno):
        cells = line.split(",")
        row = []
        for col, cell in enumerate(cells, start=1):
            try:
                value = float(cell.strip())
            except ValueError:
                raise CliInputError(
                    f"{path}: line {lineno}, column {col}: "
                    f"cannot parse {cell.strip()!r} as a number"
                ) from None
            if not np.isfinite(value):
                raise CliInputError(
                    f"{path}: line {lineno}, column {col}: non-finite value"
                )
            row.append(value)
        return row

    rows = []
    width = None
    start = 0
    first = lines[0].split(",")
    header = False
    for cell in first:
        try:
            float(cell.strip())
        except ValueError:
            header = True
            break
    if header:
        start = 1
    for lineno in range(start, len(lines)):
        line = lines[lineno]
        if lineno == len(lines) - 1 and not line.strip():
            break
        row = parse_row(line, lineno + 1)
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise CliInputError(
                f"{path}: line {lineno + 1}: expected {width} columns, got {len(row)}"
            )
        rows.append(row)
    if not rows:
        raise CliInputError(f"{path}: empty input, no point rows")
    try:
        return as_point_cloud(np.asarray(rows, dtype=np.float64))
    except ValueError as exc:
        raise CliInputError(f"{path}: {exc}") from exc


def write_point_cloud(path, cloud) -> None:
    """Write a cloud in the same CSV dialect parse_point_cloud reads; values
    round-trip to identical doubles."""
    arr = as_point_cloud(cloud)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for row in arr:
            fh.write(",".join(repr(float(x)) for x in row))
            fh.write("\n")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _float_list(text: str):
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}")


def _int_list(text: str):
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")


def _add_cost_flags(sub):
    sub.add_argument("--beta", type=float, default=0.1, help="fused weight in [0,1]")
    sub.add_argument("--exponent", type=int, default=2, help="ground cost exponent r")


def _add_opt_flags(sub):
    sub.add_argument("--L", type=int, default=50, dest="L", help="projections per iteration")
    sub.add_argument("--max-iter", type=int, default=10)
    sub.add_argument("--learning-rate", type=float, default=0.001)
    sub.add_argument("--adam-beta1", type=float, default=0.5)
    sub.add_argument("--adam-beta2", type=float, default=0.999)
    sub.add_argument(
        "--gradient-method",
        choices=("pathwise", "finite-difference"),
        default="pathwise",
    )


def _add_common_flags(sub):
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--output", default=None, help="results CSV path (stdout if omitted)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ssfgw", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    disc = commands.add_parser("discrepancy", help="one discrepancy between two clouds")
    disc.add_argument("source", help="CSV point cloud")
    disc.add_argument("target", help="CSV point cloud")
    disc.add_argument(
        "--kind",
        choices=("sfg", "max-sfg", "ssfg", "pssfg", "mssfg"),
        default="ssfg",
    )
    _add_cost_flags(disc)
    disc.add_argument("--kappa", type=float, default=10.0)
    disc.add_argument("--kappas", type=_float_list, default=None, help="mssfg concentrations")
    disc.add_argument("--alphas", type=_float_list, default=None, help="mssfg weights")
    disc.add_argument("--restarts", type=int, default=8, help="max-sfg restarts")
    _add_opt_flags(disc)
    _add_common_flags(disc)

    sweep = commands.add_parser("sweep-kappa", help="ssfg across a concentration grid")
    sweep.add_argument("source")
    sweep.add_argument("target")
    sweep.add_argument("--kappas", type=_float_list, default=_DEFAULT_KAPPA_GRID)
    sweep.add_argument("--trials", type=int, default=5)
    _add_cost_flags(sweep)
    _add_opt_flags(sweep)
    _add_common_flags(sweep)

    conv = commands.add_parser("convergence", help="sample-size decay of the discrepancy")
    conv.add_argument("--d", type=int, default=5)
    conv.add_argument("--sizes", type=_int_list, default=(10, 20, 40, 80, 160, 320, 640))
    conv.add_argument("--trials", type=int, default=20)
    conv.add_argument("--kappa", type=float, default=10.0)
    conv.add_argument("--metric", choices=("ssfg", "w1-control"), default="ssfg")
    _add_cost_flags(conv)
    _add_opt_flags(conv)
    _add_common_flags(conv)

    flow = commands.add_parser("flow", help="particle gradient flow toward a target cloud")
    flow.add_argument("target")
    flow.add_argument(
        "--kind",
        choices=("sfg", "max-sfg", "ssfg", "pssfg", "mssfg"),
        default="ssfg",
    )
    _add_cost_flags(flow)
    flow.add_argument("--kappa", type=float, default=1000.0)
    flow.add_argument("--kappas", type=_float_list, default=None)
    flow.add_argument("--alphas", type=_float_list, default=None)
    flow.add_argument("--num-particles", type=int, default=None, help="defaults to target size")
    flow.add_argument("--steps", type=int, default=3000)
    flow.add_argument("--step-size", type=float, default=0.01)
    flow.add_argument("--snapshot-every", type=int, default=100)
    flow.add_argument("--particles-out", default=None, help="write final particles as CSV")
    _add_opt_flags(flow)
    _add_common_flags(flow)

    gmm = commands.add_parser("gmm-fit", help="fit a diagonal GMM to a cloud")
    gmm.add_argument("target")
    gmm.add_argument("--components", type=int, default=10)
    gmm.add_argument(
        "--kind",
        choices=("sfg", "max-sfg", "ssfg", "pssfg", "mssfg"),
        default="ssfg",
    )
    _add_cost_flags(gmm)
    gmm.add_argument("--kappa", type=float, default=10.0)
    gmm.add_argument("--kappas", type=_float_list, default=None)
    gmm.add_argument("--alphas", type=_float_list, default=None)
    gmm.add_argument("--steps", type=int, default=1000)
    gmm.add_argument("--step-size", type=float, default=0.01)
    gmm.add_argument("--batch", type=int, default=128)
    _add_opt_flags(gmm)
    _add_common_flags(gmm)

    return parser


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _opt_from_args(args) -> OptimizerConfig:
    return OptimizerConfig(
        learning_rate=args.learning_rate,
        adam_beta1=args.adam_beta1,
        adam_beta2=args.adam_beta2,
        max_iter=args.max_iter,
        num_projections=args.L,
        gradient_method=GradientMethod(args.gradient_method.replace("-", "_")),
        seed=args.seed,
    )


def _default_mixture(kappa: float):
    # default mixture: 10 components, all at --kappa
    return tuple([float(kappa)] * 10)


def _cmd_discrepancy(args):
    X = parse_point_cloud(args.source)
    Y = parse_point_cloud(args.target)
    cfg = FgwConfig(beta=args.beta, exponent=args.exponent)
    opt = _opt_from_args(args)
    rng = np.random.default_rng(args.seed)
    kind = args.kind.replace("-", "_")
    if kind == "sfg":
        report = sfg(X, Y, cfg, L=args.L, rng=rng)
        param = ""
    elif kind == "max_sfg":
        report = max_sfg(X, Y, cfg, opt, rng=rng, num_restarts=args.restarts)
        param = ""
    elif kind == "ssfg":
        report = ssfg(X, Y, cfg, args.kappa, opt, rng=rng)
        param = repr(float(args.kappa))
    elif kind == "pssfg":
        report = pssfg(X, Y, cfg, args.kappa, opt, rng=rng)
        param = repr(float(args.kappa))
    else:
        kappas = args.kappas if args.kappas is not None else _default_mixture(args.kappa)
        report = mssfg(X, Y, cfg, kappas, args.alphas, opt, rng=rng)
        param = ",".join(repr(float(k)) for k in kappas)
    rows = [(kind, param, report.value, report.std_error)]
    for iteration, value in report.trace:
        rows.append(("trace", str(iteration), value, 0.0))
    rows.append(("num_projections_used", "", float(report.num_projections_used), 0.0))
    return rows


def _cmd_sweep(args):
    X = parse_point_cloud(args.source)
    Y = parse_point_cloud(args.target)
    cfg = FgwConfig(beta=args.beta, exponent=args.exponent)
    result = kappa_sweep(
        X,
        Y,
        cfg,
        args.kappas,
        _opt_from_args(args),
        trials=args.trials,
        rng=np.random.default_rng(args.seed),
    )
    return [(r.metric, r.parameter, r.value, r.std_error) for r in result.table]


def _cmd_convergence(args):
    cfg = FgwConfig(beta=args.beta, exponent=args.exponent)
    result = convergence_rate(
        args.d,
        args.sizes,
        args.trials,
        cfg,
        args.kappa,
        _opt_from_args(args),
        rng=np.random.default_rng(args.seed),
        metric=args.metric.replace("-", "_"),
    )
    return [(r.metric, r.parameter, r.value, r.std_error) for r in result.table]


def _flow_objective(args) -> FlowObjective:
    kind = args.kind.replace("-", "_")
    kappas = args.kappas
    if kind == "mssfg" and kappas is None:
        kappas = _default_mixture(args.kappa)
    return FlowObjective(
        kind=kind,
        beta=args.beta,
        kappa=args.kappa,
        kappas=kappas,
        alphas=args.alphas,
        num_projections=args.L,
        learning_rate=args.learning_rate,
        adam_beta1=args.adam_beta1,
        adam_beta2=args.adam_beta2,
    )


def _cmd_flow(args):
    Y = parse_point_cloud(args.target)
    if args.exponent != 2:
        raise CliInputError("flow needs --exponent 2 (gradients use the closed form)")
    num_particles = args.num_particles if args.num_particles is not None else Y.shape[0]
    if num_particles != Y.shape[0]:
        raise CliInputError(
            f"--num-particles must equal the target size {Y.shape[0]} "
            "(slices pair clouds point by point)"
        )
    result = particle_flow(
        Y,
        num_particles,
        _flow_objective(args),
        steps=args.steps,
        step_size=args.step_size,
        rng=np.random.default_rng(args.seed),
        snapshot_every=args.snapshot_every,
    )
    if args.particles_out is not None:
        write_point_cloud(args.particles_out, result.particles)
    rows = [
        ("discrepancy", "initial", float(result.trace[0]), 0.0),
        ("discrepancy", "final", float(result.trace[-1]), 0.0),
    ]
    for step in result.snapshot_steps:
        if step >= 1:
            rows.append(("trace", str(step), float(result.trace[step - 1]), 0.0))
    return rows


def _cmd_gmm(args):
    Y = parse_point_cloud(args.target)
    if args.exponent != 2:
        raise CliInputError("gmm-fit needs --exponent 2 (gradients use the closed form)")
    params = gmm_fit(
        Y,
        args.components,
        _flow_objective(args),
        steps=args.steps,
        step_size=args.step_size,
        batch=args.batch,
        rng=np.random.default_rng(args.seed),
    )
    rows = []
    k, d = params.means.shape
    for c in range(k):
        rows.append(("weight", str(c), float(params.weights[c]), 0.0))
    for c in range(k):
        for j in range(d):
            rows.append(("mean", f"{c},{j}", float(params.means[c, j]), 0.0))
    for c in range(k):
        for j in range(d):
            rows.append(("log_std", f"{c},{j}", float(params.log_std_devs[c, j]), 0.0))
    return rows


_DISPATCH = {
    "discrepancy": _cmd_discrepancy,
    "sweep-kappa": _cmd_sweep,
    "convergence": _cmd_convergence,
    "flow": _cmd_flow,
    "gmm-fit": _cmd_gmm,
}


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _format_rows(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("metric", "parameter", "value", "std_error"))
    for metric, parameter, value, std_error in rows:
        writer.writerow((metric, parameter, repr(float(value)), repr(float(std_error))))
    return buf.getvalue()


def _json_safe(value):
    if isinstance(value, tuple):
        return list(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def _sidecar_path(output: str) -> str:
    if output.endswith(".csv"):
        return output[: -len(".csv")] + ".meta.json"
    return output + ".meta.json"


def _emit(args, rows) -> None:
    text = _format_rows(rows)
    if args.output is None:
        sys.stdout.write(text)
        return
    with open(args.output, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    config = {k: _json_safe(v) for k, v in vars(args).items() if k != "command"}
    meta = {"command": args.command, "seed": args.seed, "config": config}
    with open(_sidecar_path(args.output), "w", encoding="utf-8", newline="") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def main(argv=None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        rows = _DISPATCH[args.command](args)
        _emit(args, rows)
        return 0
    except CliInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DivergenceError, SamplingError, QuadratureError) as exc:
        print(f"numeric divergence: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
