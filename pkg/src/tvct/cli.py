"""Command line interface: ``tvct <subcommand> ...``.

Array inputs and outputs default to stdin / stdout, so stages can be piped::

    tvct phantom --n 64 | tvct forward | tvct fbp > recon.tvct

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .diffops import div_h, grad_h
from .fbp import FilterKind, fbp_reconstruct
from .grid import ConstraintMask, Image, ImageGeom, SinoGeom, Sinogram
from .io import ArrayFormatError, ConfigError, RunConfig, export_pgm, read_array, write_array
from .precond import PRECOND_KINDS
from .prox import DataFidelityVariant
from .radon import BoundInapplicable, RadonOp, norm_bound, power_iteration
from .rebin import FanGeom, rebin_fan2para
from .sim import (
    MetalSpec,
    PhantomSpec,
    add_noise,
    cap_sinogram,
    estimate_metal_mask,
    masked_rmse,
    metal_region,
    shepp_logan,
)
from .solvers import SOLVERS, ProblemSpec, SolverParams, run_solver

__all__ = ["main", "build_parser", "UsageError"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _expect(value, cls, what):
    if not isinstance(value, cls):
        raise UsageError(f"{what} must be a {cls.__name__.lower()} file")
    return value


def _op_for_sino(sino: Sinogram, n=None, h=None):
    g = sino.geom
    return RadonOp(ImageGeom(n or g.m_det // 2, h or g.delta_s), g)


# subcommands -------------------------------------------------------------


def cmd_phantom(a):
    metal = None
    if a.metal:
        metal = MetalSpec(center=(a.metal_x, a.metal_y), value=a.metal_value, side=a.metal_side)
    spec = PhantomSpec(a.n, metal=metal, h=a.h)
    write_array(shepp_logan(spec), a.output)
    if a.metal_mask_out:
        if metal is None:
            raise UsageError("--metal-mask-out needs --metal")
        write_array(metal_region(a.n, metal), a.metal_mask_out)


def cmd_forward(a):
    u = _expect(read_array(a.input), Image, "input")
    n = u.geom.n
    op = RadonOp.create(n, a.angles or 3 * n // 2, a.det or 2 * n, h=u.geom.h, delta_s=a.delta_s)
    write_array(op.forward(u), a.output)


def cmd_adjoint(a):
    v = _expect(read_array(a.input), Sinogram, "input")
    op = _op_for_sino(v, a.n, a.h)
    write_array(op.adjoint(v), a.output)


def cmd_fbp(a):
    v = _expect(read_array(a.input), Sinogram, "input")
    op = _op_for_sino(v, a.n, a.h)
    write_array(fbp_reconstruct(v, op, FilterKind.parse(a.filter)), a.output)


def cmd_noise(a):
    v = _expect(read_array(a.input), Sinogram, "input")
    write_array(add_noise(v, a.pct / 100.0, seed=a.seed), a.output)


def cmd_cap(a):
    v = _expect(read_array(a.input), Sinogram, "input")
    capped, mask = cap_sinogram(v, a.cap, a.c_fraction)
    write_array(capped, a.output)
    write_array(mask, a.mask_out)
    print(f"capped {mask.count} of {v.data.size} entries", file=sys.stderr)


def cmd_mask_estimate(a):
    v = _expect(read_array(a.input), Sinogram, "input")
    op = _op_for_sino(v, a.n, a.h)
    mask = estimate_metal_mask(v, op, a.threshold, a.dilate, a.c_fraction)
    write_array(mask, a.output)
    print(f"mask covers {mask.count} of {v.data.size} entries", file=sys.stderr)


_CONFIG_FLAGS = (
    "solver", "precond", "variant", "lam", "sigma", "tau", "tau_grad", "mu", "admm_mu",
    "pcg_iters", "iters", "tol", "seed", "c_fraction", "eps", "input", "mask", "output", "trace",
    "trace_every", "init",
)


def cmd_reconstruct(a):
    cfg = RunConfig.from_json(a.config) if a.config else RunConfig()
    over = {k: getattr(a, k) for k in _CONFIG_FLAGS}
    if a.no_rescale:
        over["rescale"] = False
    cfg = cfg.merged(over)
    if cfg.solver not in SOLVERS:
        raise UsageError(f"unknown solver {cfg.solver!r}")
    v = _expect(read_array(cfg.input), Sinogram, "input")
    op = _op_for_sino(v, a.n, a.h)
    mask = ConstraintMask.empty(v.geom)
    if cfg.mask:
        m = read_array(cfg.mask)
        if not isinstance(m, np.ndarray) or m.shape != v.geom.shape:
            raise UsageError("--mask must be a mask file matching the sinogram")
        mask = ConstraintMask(v.geom, m, cfg.c_fraction * v.data)
    prob = ProblemSpec(
        op, v.data, cfg.lam, mask=mask, variant=DataFidelityVariant(cfg.variant),
        nonneg=cfg.solver == "pdrq-nonneg",
    )
    if cfg.rescale:
        prob = prob.rescaled()
    params = SolverParams(
        sigma=cfg.sigma, tau_step=cfg.tau, mu=cfg.mu, max_iter=cfg.iters, tol=cfg.tol,
        admm_mu=cfg.admm_mu, pcg_iters=cfg.pcg_iters, trace_every=cfg.trace_every,
    )
    tau_grad = "auto" if cfg.tau_grad is None else cfg.tau_grad
    init = "fbp" if cfg.init == "fbp" else None
    u, trace = run_solver(
        prob, cfg.solver, cfg.precond, params, init=init, eps=cfg.eps, seed=cfg.seed, tau_grad=tau_grad
    )
    write_array(Image(op.image_geom, u), cfg.output)
    if cfg.trace:
        meta = {k: json.dumps(val) for k, val in cfg.to_dict().items()}
        trace.to_csv(cfg.trace, meta=meta)
    print(
        f"{cfg.solver}: {len(trace)} iterations, objective {trace.objectives[-1]:.6g}, "
        f"violation {trace.violations[-1]:.3g}",
        file=sys.stderr,
    )


def cmd_rebin(a):
    fan_data = _expect(read_array(a.input), Sinogram, "input").data
    n_views, n_det = fan_data.shape
    fan = FanGeom.uniform(a.d, n_det, math.radians(a.fan_angle), n_views)
    det = a.det or 2 * math.ceil(fan.reach / a.delta_s)
    target = SinoGeom.uniform(a.angles or n_views // 2, det, a.delta_s)
    sino, covered = rebin_fan2para(fan_data, fan, target)
    write_array(sino, a.output)
    if a.coverage_out:
        write_array(covered, a.coverage_out)
    print(f"coverage {covered.mean():.1%}", file=sys.stderr)


def cmd_metrics(a):
    u = _expect(read_array(a.input), Image, "input")
    ref = _expect(read_array(a.reference), Image, "reference")
    exclude = None
    if a.exclude_mask:
        exclude = read_array(a.exclude_mask)
        if not isinstance(exclude, np.ndarray):
            raise UsageError("--exclude-mask must be a mask file")
    out = {
        "rmse": masked_rmse(u, ref),
        "masked_rmse": masked_rmse(u, ref, exclude),
        "max_abs": float(np.max(np.abs(u.data - ref.data))),
    }
    print(json.dumps(out))


def cmd_norm(a):
    op = RadonOp.create(a.n, a.angles, a.det or 2 * a.n, h=a.h, delta_s=a.delta_s)
    est = math.sqrt(power_iteration(op.normal, op.domain_shape, iters=a.iters, seed=a.seed))
    try:
        bound = norm_bound(op)
    except BoundInapplicable:
        bound = None
    g2 = power_iteration(lambda x: -div_h(grad_h(x, a.h), a.h), op.domain_shape, iters=a.iters, seed=a.seed)
    print(json.dumps({
        "radon_norm_power": est,
        "radon_norm_bound": bound,
        "grad_norm_sq_power": g2,
        "grad_norm_sq_bound": 8.0 / a.h**2,
    }))


def cmd_pgm(a):
    u = _expect(read_array(a.input), Image, "input")
    window = tuple(a.window) if a.window else None
    export_pgm(u, a.output, window)


# parser ------------------------------------------------------------------


def build_parser():
    p = _Parser(prog="tvct", description="TV-regularised CT reconstruction with sinogram constraints.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def io_args(sp, out=True):
        sp.add_argument("-i", "--input", default=None, help="input array file (default stdin)")
        if out:
            sp.add_argument("-o", "--output", default=None, help="output array file (default stdout)")

    def grid_args(sp):
        sp.add_argument("--n", type=int, default=None, help="image size (default: detector bins / 2)")
        sp.add_argument("--h", type=float, default=None, help="pixel size (default: bin width)")

    sp = sub.add_parser("phantom", help="Shepp-Logan phantom, optionally with metal")
    sp.add_argument("--n", type=int, default=64)
    sp.add_argument("--h", type=float, default=1.0)
    sp.add_argument("--metal", action="store_true")
    sp.add_argument("--metal-value", type=float, default=3.0)
    sp.add_argument("--metal-x", type=float, default=0.3)
    sp.add_argument("--metal-y", type=float, default=-0.3)
    sp.add_argument("--metal-side", type=int, default=None)
    sp.add_argument("--metal-mask-out", default=None)
    sp.add_argument("-o", "--output", default=None)
    sp.set_defaults(func=cmd_phantom)

    sp = sub.add_parser("forward", help="Radon transform of an image")
    io_args(sp)
    sp.add_argument("--angles", type=int, default=None, help="default 3n/2")
    sp.add_argument("--det", type=int, default=None, help="detector bins (default 2n)")
    sp.add_argument("--delta-s", type=float, default=None, help="bin width (default h)")
    sp.set_defaults(func=cmd_forward)

    sp = sub.add_parser("adjoint", help="backprojection of a sinogram")
    io_args(sp)
    grid_args(sp)
    sp.set_defaults(func=cmd_adjoint)

    sp = sub.add_parser("fbp", help="filtered backprojection")
    io_args(sp)
    grid_args(sp)
    sp.add_argument("--filter", choices=[k.value for k in FilterKind], default="ram-lak")
    sp.set_defaults(func=cmd_fbp)

    sp = sub.add_parser("noise", help="add Gaussian noise")
    io_args(sp)
    sp.add_argument("--pct", type=float, required=True, help="noise std in percent of the data std")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_noise)

    sp = sub.add_parser("cap", help="clip a sinogram and emit the constraint mask")
    io_args(sp)
    sp.add_argument("--cap", type=float, required=True)
    sp.add_argument("--c-fraction", type=float, default=0.8)
    sp.add_argument("--mask-out", required=True)
    sp.set_defaults(func=cmd_cap)

    sp = sub.add_parser("mask-estimate", help="locate metal traces in a sinogram")
    io_args(sp)
    grid_args(sp)
    sp.add_argument("--threshold", type=float, required=True, help="image threshold for metal")
    sp.add_argument("--dilate", type=int, default=5)
    sp.add_argument("--c-fraction", type=float, default=0.8)
    sp.set_defaults(func=cmd_mask_estimate)

    sp = sub.add_parser("reconstruct", help="TV reconstruction")
    sp.add_argument("-i", "--input", default=None)
    sp.add_argument("-o", "--output", default=None)
    grid_args(sp)
    sp.add_argument("--config", default=None, help="JSON run configuration")
    sp.add_argument("--solver", choices=SOLVERS, default=None)
    sp.add_argument("--precond", choices=PRECOND_KINDS + ("invnorm",), default=None)
    sp.add_argument("--variant", choices=("soft", "hard", "ignore", "fitall", "fit-everywhere"), default=None)
    sp.add_argument("--lambda", dest="lam", type=float, default=None)
    sp.add_argument("--sigma", type=float, default=None)
    sp.add_argument("--tau", type=float, default=None, help="CP primal-dual second step")
    sp.add_argument("--tau-grad", type=float, default=None)
    sp.add_argument("--mu", type=float, default=None)
    sp.add_argument("--admm-mu", type=float, default=None)
    sp.add_argument("--pcg-iters", type=int, default=None)
    sp.add_argument("--iters", type=int, default=None)
    sp.add_argument("--tol", type=float, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--mask", default=None, help="constraint mask file")
    sp.add_argument("--c-fraction", type=float, default=None)
    sp.add_argument("--eps", type=float, default=None)
    sp.add_argument("--trace", default=None, help="write the convergence trace CSV here")
    sp.add_argument("--trace-every", type=int, default=None, help="record every k-th iteration")
    sp.add_argument("--init", choices=("zero", "fbp"), default=None, help="initial image")
    sp.add_argument("--no-rescale", action="store_true")
    sp.set_defaults(func=cmd_reconstruct)

    sp = sub.add_parser("rebin", help="fan-beam to parallel-beam rebinning")
    io_args(sp)
    sp.add_argument("--d", type=float, required=True, help="source to centre distance")
    sp.add_argument("--fan-angle", type=float, required=True, help="full fan angle in degrees")
    sp.add_argument("--angles", type=int, default=None)
    sp.add_argument("--det", type=int, default=None)
    sp.add_argument("--delta-s", type=float, default=1.0)
    sp.add_argument("--coverage-out", default=None)
    sp.set_defaults(func=cmd_rebin)

    sp = sub.add_parser("metrics", help="compare an image with a reference")
    sp.add_argument("-i", "--input", default=None)
    sp.add_argument("--reference", required=True)
    sp.add_argument("--exclude-mask", default=None)
    sp.set_defaults(func=cmd_metrics)

    sp = sub.add_parser("norm", help="operator norm estimates and bounds")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--angles", type=int, required=True)
    sp.add_argument("--det", type=int, default=None)
    sp.add_argument("--h", type=float, default=1.0)
    sp.add_argument("--delta-s", type=float, default=None)
    sp.add_argument("--iters", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_norm)

    sp = sub.add_parser("pgm", help="export an image as 16-bit PGM")
    sp.add_argument("-i", "--input", default=None)
    sp.add_argument("-o", "--output", required=True)
    sp.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"), default=None)
    sp.set_defaults(func=cmd_pgm)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"tvct: usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (ArrayFormatError, ValueError, OSError, FloatingPointError, NotImplementedError) as exc:
        print(f"tvct: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # anything else is still a runtime failure
        print(f"tvct: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
