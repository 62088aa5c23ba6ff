import math

import numpy as np

from ..fbp import fbp_reconstruct
from ..grid import GeometryError, Image
from .problem import ConvergenceTrace, objective, rel_change, violation


def initial_image(prob, init):
    """Zero image, a given array, or ``'fbp'`` for a filtered backprojection
    of the data (masked entries included as they are)."""
    shape = prob.op.domain_shape
    if init is None:
        return np.zeros(shape)
    if isinstance(init, str):
        if init != "fbp":
            raise ValueError(f"unknown initialisation {init!r}")
        return fbp_reconstruct(prob.u0, prob.op)
    u = init.data if isinstance(init, Image) else np.array(init, dtype=np.float64)
    if u.shape != shape:
        raise GeometryError(f"initial image shape {u.shape} != {shape}")
    return u.copy()


class Monitor:
    """Records the trace and decides when to stop."""

    def __init__(self, prob, params, trace=None):
        self.prob = prob
        self.every = int(params.trace_every)
        self.tol = params.tol
        self.trace = trace if trace is not None else ConvergenceTrace()

    def _record(self, it, u, rc):
        ru = self.prob.op.forward(u)
        self.trace.append(it, objective(u, self.prob, ru), violation(u, self.prob, ru), rc)

    def __call__(self, it, u_new, u_old):
        rc = rel_change(u_new, u_old)
        if it % self.every == 0:
            self._record(it, u_new, rc)
        if not math.isfinite(rc):
            raise FloatingPointError(f"iteration diverged at step {it}")
        # a zero first step (e.g. ADMM from a zero start) is not convergence
        return it > 1 and rc < self.tol

    def finish(self, it, u_new, u_old):
        # make sure the last iterate is in the trace
        if not self.trace.iters or self.trace.iters[-1] != it:
            if it > 0:
                self._record(it, u_new, rel_change(u_new, u_old))
        return self.trace
