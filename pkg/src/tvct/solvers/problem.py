"""Problem description, solver parameters and convergence traces."""

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..diffops import grad_h
from ..grid import ConstraintMask, GeometryError, Image, Sinogram, one_norm_iso
from ..prox import DataFidelityVariant, FidelityKind
from ..radon import BoundInapplicable, RadonOp, norm_bound, power_iteration, rescale_to_unit

__all__ = [
    "ProblemSpec",
    "SolverParams",
    "ConvergenceTrace",
    "objective",
    "violation",
    "rel_change",
    "attenuation_scale",
    "default_pdrq_sigma",
    "default_tau_grad",
    "radon_norm_sq",
]


def _arr(x):
    return x.data if isinstance(x, (Image, Sinogram)) else np.asarray(x, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """TV-regularised reconstruction problem.

    ``min_u 1/2 |R u - u0|^2_{D \\ D0} + lam |grad u|_1`` subject to
    ``R u >= C`` on the mask ``D0``, with the data term modified by
    ``variant`` and optionally ``u >= 0``.

    Parameters
    ----------
    op : RadonOp
    u0 : Sinogram or ndarray
    lam : float
        Regularisation weight (> 0).
    mask : ConstraintMask, optional
        Defaults to the empty mask (unconstrained problem).
    variant : DataFidelityVariant, optional
        Defaults to ``soft``.
    nonneg : bool
        Add the constraint ``u >= 0``.
    tau_grad : float
        Gradient scaling used by the primal-dual solvers; the minimiser does
        not depend on it.
    beta : float
        Operator rescaling factor applied by :meth:`rescaled`; objective and
        violation are reported in the units of the original problem.
    """

    op: RadonOp
    u0: np.ndarray
    lam: float
    mask: ConstraintMask | None = None
    variant: DataFidelityVariant = field(default_factory=DataFidelityVariant)
    nonneg: bool = False
    tau_grad: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        u0 = _arr(self.u0)
        if u0.shape != self.op.range_shape:
            raise GeometryError(f"data shape {u0.shape} != operator range {self.op.range_shape}")
        if not np.all(np.isfinite(u0)):
            raise ValueError("data contain non-finite values")
        object.__setattr__(self, "u0", u0)
        mask = self.mask if self.mask is not None else ConstraintMask.empty(self.op.sino_geom)
        if mask.mask.shape != u0.shape:
            raise GeometryError("mask shape does not match the data")
        object.__setattr__(self, "mask", mask)
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if not self.tau_grad > 0:
            raise ValueError("tau_grad must be positive")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        w = self.variant.weights
        if w is not None and np.broadcast_to(w, u0.shape).shape != u0.shape:
            raise GeometryError("weights do not match the data")

    @property
    def constrained(self):
        return bool(self.mask) or self.variant.kind is FidelityKind.HARD

    def rescaled(self):
        """Equivalent problem for ``R / beta`` with ``beta`` the norm bound.

        Data and thresholds are divided by ``beta`` and ``lam`` by
        ``beta**2``; the minimiser is unchanged.
        """
        op, b = rescale_to_unit(self.op)
        m = self.mask
        mask = ConstraintMask(m.geom, m.mask, m.thresholds / b)
        return replace(
            self, op=op, u0=self.u0 / b, lam=self.lam / b**2, mask=mask, beta=self.beta * b
        )

    def with_tau_grad(self, tau_grad):
        return replace(self, tau_grad=float(tau_grad))


def objective(u, prob: ProblemSpec, ru=None) -> float:
    """Data misfit off the mask plus ``lam`` times total variation.

    The constraint violation is not included (see :func:`violation`).
    Values are in the units of the original (unrescaled) problem.
    """
    u = _arr(u)
    h = prob.op.image_geom.h
    tv = prob.lam * one_norm_iso(grad_h(u, h))
    kind = prob.variant.kind
    if kind is FidelityKind.HARD:
        data = 0.0
    else:
        r = (prob.op.forward(u) if ru is None else ru) - prob.u0
        if kind is not FidelityKind.FIT_EVERYWHERE:
            r = np.where(prob.mask.mask, 0.0, r)
        w = prob.variant.weights if kind is FidelityKind.WEIGHTED_SOFT else 1.0
        data = 0.5 * float(np.sum(w * r * r))
    return (data + tv) * prob.beta**2


def violation(u, prob: ProblemSpec, ru=None) -> float:
    """Largest constraint violation ``max(0, C - R u)`` on the mask.

    For the hard variant the equality residual ``|R u - u0|`` off the mask
    is included. Reported in original data units.
    """
    kind = prob.variant.kind
    if kind is FidelityKind.IGNORE:
        return 0.0
    ru = prob.op.forward(_arr(u)) if ru is None else ru
    m = prob.mask.mask
    out = 0.0
    if m.any():
        out = max(0.0, float(np.max(prob.mask.thresholds[m] - ru[m])))
    if kind is FidelityKind.HARD and not m.all():
        out = max(out, float(np.max(np.abs(ru - prob.u0)[~m])))
    return out * prob.beta


def attenuation_scale(prob: ProblemSpec) -> float:
    """Rough size of the attenuation values behind the data.

    The largest line integral divided by the longest chord (``n`` pixels,
    measured in bins of width ``delta_s``). Returns 0 for zero data.
    """
    g, s = prob.op.image_geom, prob.op.sino_geom
    peak = float(np.max(np.abs(prob.u0))) / prob.op.scale
    return peak * g.h / (s.delta_s * g.n)


def default_tau_grad(prob: ProblemSpec) -> float:
    """Gradient scaling that balances the two dual blocks of the stacked
    operator ``(R, tau grad)``: ``2.5 sqrt(lam / s)``.

    Rescaling ``R`` by ``1 / b`` (with data and ``lam`` following) scales
    the result by ``1 / b`` as well, so the balance is unit free.
    """
    s = attenuation_scale(prob)
    if not s > 0:
        return 1.0
    return 2.5 * math.sqrt(prob.lam / s)


def radon_norm_sq(op) -> float:
    """Upper estimate of ``|R|^2``: the closed-form bound when it applies,
    else 1.05 times the power-iteration estimate."""
    try:
        return norm_bound(op) ** 2
    except BoundInapplicable:
        return 1.05 * power_iteration(op.normal, op.domain_shape, iters=200, seed=0)


def default_pdrq_sigma(prob: ProblemSpec, splitting="pdrq2", nonneg=False) -> float:
    """Default PDRQ step.

    For PDRQ2 the dual variable lives in the ball of radius
    ``lam / tau_grad`` and the step ``4 lam / (tau_grad s)`` balances it
    against the image scale ``s``. The splittings with the data term in the
    dual use ``0.2 / |R|`` (``5 / |R|`` with the non-negativity constraint,
    whose primal step is fixed to one), assuming ``tau_grad`` follows
    :func:`default_tau_grad`.
    """
    if str(getattr(splitting, "value", splitting)) != "pdrq2":
        return (5.0 if nonneg else 0.2) / math.sqrt(radon_norm_sq(prob.op))
    s = attenuation_scale(prob)
    if not s > 0:
        return 1.0
    return 4.0 * prob.lam / (prob.tau_grad * s)


def rel_change(new, old) -> float:
    """``|new - old| / max(|old|, 1)``."""
    return float(np.linalg.norm(new - old) / max(np.linalg.norm(old), 1.0))


@dataclass
class SolverParams:
    """Iteration parameters shared by the solvers.

    ``sigma`` and ``tau_step`` default per solver when ``None``: CP takes
    ``0.99 / sqrt(L)`` for both (``L = |R|^2 + 8 tau_grad^2 / h^2``), PDRQ
    and its preconditioner take :func:`default_pdrq_sigma`.
    """

    sigma: float | None = None
    tau_step: float | None = None
    mu: float = 1.0
    nu: float = 0.0
    max_iter: int = 1000
    tol: float = 1e-6
    admm_mu: float = 1.0
    pcg_iters: int = 2
    trace_every: int = 1

    def __post_init__(self):
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.tau_step is not None and not self.tau_step > 0:
            raise ValueError("tau_step must be positive")
        if self.mu < 1:
            raise ValueError("mu must be >= 1")
        if self.nu < 0:
            raise ValueError("nu must be >= 0")
        if int(self.max_iter) < 0:
            raise ValueError("max_iter must be non-negative")
        if self.tol < 0:
            raise ValueError("tol must be non-negative")
        if not self.admm_mu > 0:
            raise ValueError("admm_mu must be positive")
        if int(self.pcg_iters) < 1:
            raise ValueError("pcg_iters must be >= 1")
        if int(self.trace_every) < 1:
            raise ValueError("trace_every must be >= 1")


TRACE_HEADER = ("iter", "objective", "violation", "rel_change")


@dataclass
class ConvergenceTrace:
    """Per-iteration records ``(iter, objective, violation, rel_change)``."""

    iters: list = field(default_factory=list)
    objectives: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    rel_changes: list = field(default_factory=list)

    def append(self, it, obj, viol, rc):
        vals = (float(obj), float(viol), float(rc))
        if not all(math.isfinite(v) for v in vals):
            raise FloatingPointError(f"non-finite trace entry at iteration {it}: {vals}")
        self.iters.append(int(it))
        self.objectives.append(vals[0])
        self.violations.append(vals[1])
        self.rel_changes.append(vals[2])

    def __len__(self):
        return len(self.iters)

    @property
    def best_objective(self):
        """Running minimum of the objective."""
        return np.minimum.accumulate(np.asarray(self.objectives)) if self.objectives else np.array([])

    def first_below(self, target):
        """First recorded iteration whose objective is ``<= target`` (or None)."""
        for it, f in zip(self.iters, self.objectives):
            if f <= target:
                return it
        return None

    def to_csv(self, dest=None, meta=None):
        """Write the trace as CSV, preceded by ``# key=value`` comment lines.

        ``dest`` may be a path or a text stream; with ``None`` the CSV text
        is returned.
        """
        buf = io.StringIO()
        for k, v in (meta or {}).items():
            buf.write(f"# {k}={v}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for row in zip(self.iters, self.objectives, self.violations, self.rel_changes):
            w.writerow([row[0]] + [repr(x) for x in row[1:]])
        text = buf.getvalue()
        if dest is None:
            return text
        if hasattr(dest, "write"):
            dest.write(text)
        else:
            with open(dest, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return None

    @classmethod
    def from_csv(cls, src):
        text = src.read() if hasattr(src, "read") else open(src, encoding="utf-8").read()
        lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        rows = list(csv.reader(lines))
        if not rows or tuple(rows[0]) != TRACE_HEADER:
            raise ValueError("not a convergence trace: bad header")
        tr = cls()
        for r in rows[1:]:
            tr.append(int(r[0]), float(r[1]), float(r[2]), float(r[3]))
        return tr
