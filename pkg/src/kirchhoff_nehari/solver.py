"""Ground states by descent of the reduced energy Psi(u) = Phi(t_u u) on the unit sphere.

Every iterate u lives on S = {|u| = 1}. The Riemannian gradient of Psi at u
is t_u times the tangential part of the H-gradient of Phi at t_u u, and a
step is retracted back to S by normalization. Minimizers of Psi are mapped
to least-energy critical points of Phi by u -> t_u u.

Gradient norms and residuals are reported relative to the energy scale
sigma = a t_u^2 + b t_u^4 of the projected point, which keeps the stopping
test meaningful however large t_u gets.
"""
from __future__ import annotations

import csv
import io
import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .energy import EnergyContext, phi, phi_grad
from .errors import FiberingFailureError, InvalidConfigurationError, KirchhoffError
from .mesh import Mesh, h1_inner, h1_norm, integrate, l2_norm, poisson_solve, stiffness_apply
from .nehari import FiberingResult, project_to_nehari, sphere_inverse
from .oracle import pde_residual, residual_norm

__all__ = [
    "SolveConfig",
    "IterationTrace",
    "SolveResult",
    "PSReport",
    "initial_field",
    "retract",
    "psi",
    "psi_tangent_grad",
    "solve_ground_state",
    "multistart_pairs",
    "ps_diagnostic",
    "start_seeds",
]

log = logging.getLogger(__name__)

INITIALIZERS = ("fd_eigenfield", "interior_bump", "random_seeded")
NORM_WARN_TOL = 1e-10
RANDOM_START_SPREAD = 0.6
# Armijo slack relative to sigma = a t^2 + b t^4. Phi is a difference of terms
# of that size, so Psi carries roundoff noise of this order.
DESCENT_SLACK = 1e-14


@dataclass(frozen=True)
class SolveConfig:
    max_iterations: int = 5000
    tol_grad: float = 1e-8
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    initial_step: float = 1.0
    max_backtracks: int = 40
    init: str = "fd_eigenfield"
    seed: int = 0
    k: int = 1
    dedup_tol: float = 1e-3

    def __post_init__(self):
        if self.max_iterations < 0:
            raise InvalidConfigurationError("max_iterations must be >= 0")
        for name in ("tol_grad", "armijo_c1", "initial_step", "dedup_tol"):
            if not getattr(self, name) > 0:
                raise InvalidConfigurationError(f"{name} must be positive")
        if not 0 < self.backtrack < 1:
            raise InvalidConfigurationError("backtrack factor must lie in (0, 1)")
        if self.k < 1:
            raise InvalidConfigurationError("multistart count k must be >= 1")
        if self.init not in INITIALIZERS:
            raise InvalidConfigurationError(f"unknown initializer {self.init!r}")
        if not 0 <= self.seed < 2**64:
            raise InvalidConfigurationError("seed must be an unsigned 64-bit integer")


@dataclass
class IterationTrace:
    iteration: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    grad_norm: list = field(default_factory=list)
    t_u: list = field(default_factory=list)
    step: list = field(default_factory=list)

    def append(self, it, energy, grad_norm, t_u, step):
        self.iteration.append(int(it))
        self.energy.append(float(energy))
        self.grad_norm.append(float(grad_norm))
        self.t_u.append(float(t_u))
        self.step.append(float(step))

    def __len__(self):
        return len(self.iteration)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "energy", "grad_norm", "t_u", "step"])
        for row in zip(self.iteration, self.energy, self.grad_norm, self.t_u, self.step):
            w.writerow([row[0]] + [f"{v:.17g}" for v in row[1:]])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "IterationTrace":
        tr = cls()
        for row in csv.DictReader(io.StringIO(text)):
            tr.append(int(row["iter"]), float(row["energy"]), float(row["grad_norm"]),
                      float(row["t_u"]), float(row["step"]))
        return tr


@dataclass
class SolveResult:
    field: np.ndarray
    energy: float
    t_u: float
    grad_norm: float  # |grad Psi| / sigma
    nehari_residual: float  # |<Phi'(v), v>| / (a|v|^2 + b|v|^4)
    pde_residual: float  # L^2 norm of R(v) relative to (a + b|v|^2) |A v|
    trace: IterationTrace
    status: str
    sphere_point: np.ndarray
    seed: int | None = None
    init: str = "fd_eigenfield"
    iterations: int = 0
    mirror_field: np.ndarray | None = None
    mirror_energy: float | None = None
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def retract(mesh: Mesh, u, v) -> np.ndarray:
    """Sphere retraction (u, v) -> (u + v) / |u + v|."""
    return sphere_inverse(mesh, np.asarray(u) + np.asarray(v))


def initial_field(mesh: Mesh, choice: str = "fd_eigenfield", seed: int | None = None) -> np.ndarray:
    """Unit-norm starting point on S."""
    if choice == "fd_eigenfield":
        u = mesh.sample(lambda *xs: np.prod(
            [np.sin(np.pi * x / L) for x, L in zip(xs, mesh.extents)], axis=0))
    elif choice == "interior_bump":
        u = mesh.sample(lambda *xs: np.prod(
            [1.0 - np.abs(2.0 * x / L - 1.0) for x, L in zip(xs, mesh.extents)], axis=0))
    elif choice == "random_seeded":
        if seed is None:
            raise InvalidConfigurationError("random_seeded initializer needs a seed")
        rng = np.random.default_rng(seed)
        # inverse-Laplacian smoothed noise around the principal mode, random sign;
        # strongly sign-changing fields can push t_u past the floating-point range
        noise = sphere_inverse(mesh, poisson_solve(mesh, rng.standard_normal(mesh.size)))
        base = initial_field(mesh, "fd_eigenfield")
        u = rng.choice([-1.0, 1.0]) * (base + RANDOM_START_SPREAD * rng.uniform() * noise)
    else:
        raise InvalidConfigurationError(f"unknown initializer {choice!r}")
    return sphere_inverse(mesh, u)


def _unit(ctx, u):
    u = np.asarray(u, dtype=float)
    nrm = h1_norm(ctx.mesh, u)
    if abs(nrm - 1.0) > NORM_WARN_TOL:
        warnings.warn(f"psi called off the unit sphere (|u| = {nrm:.12g}); normalizing",
                      RuntimeWarning, stacklevel=3)
        u = sphere_inverse(ctx.mesh, u)
    return u


def psi(ctx: EnergyContext, u) -> float:
    """Reduced energy Phi(t_u u) of a unit field."""
    u = _unit(ctx, u)
    return phi(ctx, project_to_nehari(ctx, u).projected)


def _tangent_grad(ctx, u, fib: FiberingResult, scale=1.0):
    """t_u P_u(G) / scale; dividing first keeps the norms of huge gradients finite."""
    G = phi_grad(ctx, fib.projected) * (fib.t_u / scale)
    return G - h1_inner(ctx.mesh, G, u) * u


def psi_tangent_grad(ctx: EnergyContext, u) -> np.ndarray:
    """Riemannian gradient of psi at a unit field: |M(u)| times the tangential H-gradient."""
    u = _unit(ctx, u)
    return _tangent_grad(ctx, u, project_to_nehari(ctx, u))


def _sigma(ctx, t):
    t = np.float64(t)
    return float(ctx.a * t * t + ctx.b * t**4)


class _Point:
    """A sphere point with its projection, energy and gradient."""

    def __init__(self, ctx, u, fib=None):
        self.u = u
        with np.errstate(over="ignore", invalid="ignore"):
            self.fib = fib or project_to_nehari(ctx, u)
            self.energy = phi(ctx, self.fib.projected)
            self.sigma = _sigma(ctx, self.fib.t_u)
        if not (np.isfinite(self.energy) and np.isfinite(self.sigma)):
            raise FiberingFailureError(
                f"reduced energy overflows double precision (t_u = {self.fib.t_u:.3e})"
            )
        self._ctx = ctx
        self._grad = None

    @property
    def t(self):
        return self.fib.t_u

    @property
    def scaled_grad(self):
        """Riemannian gradient divided by sigma."""
        if self._grad is None:
            self._grad = _tangent_grad(self._ctx, self.u, self.fib, self.sigma)
        return self._grad

    @property
    def grad_norm(self):
        return h1_norm(self._ctx.mesh, self.scaled_grad)


def _finish(ctx, point, trace, status, it, init, seed, message=""):
    v = point.fib.projected
    scale = ctx.a * point.t**2 + ctx.b * point.t**4
    neh = abs(point.t * point.fib.residual) / scale  # <Phi'(t u), t u> = t alpha'(t)
    kirchhoff = ctx.a + ctx.b * h1_inner(ctx.mesh, v, v)
    r = pde_residual(ctx, v)
    rel_pde = residual_norm(ctx, r) / (kirchhoff * residual_norm(ctx, stiffness_apply(ctx.mesh, v)))
    return SolveResult(field=v, energy=point.energy, t_u=point.t, grad_norm=point.grad_norm,
                       nehari_residual=neh, pde_residual=rel_pde, trace=trace, status=status,
                       sphere_point=point.u, seed=seed, init=init, iterations=it, message=message)


def solve_ground_state(ctx: EnergyContext, cfg: SolveConfig = SolveConfig(), init=None,
                       seed: int | None = None) -> SolveResult:
    """Minimize psi over S by Armijo-backtracked Riemannian steepest descent.

    ``init`` overrides ``cfg.init`` with an explicit starting field (any
    nonzero field; it is normalized). The search direction is the negative
    gradient divided by sigma, so a unit step is scale free. The first trial
    step is ``cfg.initial_step``; later ones are Barzilai-Borwein estimates,
    always subject to the Armijo test.
    """
    mesh = ctx.mesh
    label = cfg.init if init is None else "given"
    if init is None:
        seed = cfg.seed if seed is None else seed
        u0 = initial_field(mesh, cfg.init, seed)
    else:
        u0 = sphere_inverse(mesh, init)
    if label != "random_seeded":
        seed = None

    x = _Point(ctx, u0)
    trace = IterationTrace()
    trace.append(0, x.energy, x.grad_norm, x.t, 0.0)
    step = cfg.initial_step
    it = 0
    t_min = t_max = x.t
    while True:
        if x.grad_norm <= cfg.tol_grad:
            status = "converged"
            break
        if it >= cfg.max_iterations:
            status = "max_iter"
            break
        it += 1
        d = -x.scaled_grad
        slope = -x.sigma * x.grad_norm**2
        slack = DESCENT_SLACK * x.sigma
        accepted = None
        for _ in range(cfg.max_backtracks + 1):
            try:
                trial = _Point(ctx, retract(mesh, x.u, step * d))
            except KirchhoffError:
                trial = None
            if trial is not None and trial.energy <= x.energy + cfg.armijo_c1 * step * slope + slack:
                accepted = trial
                break
            step *= cfg.backtrack
        if accepted is None:
            status = "failed"
            break
        trace.append(it, accepted.energy, accepted.grad_norm, accepted.t, step)
        step = _bb_step(mesh, x, accepted, step, cfg.initial_step)
        x = accepted
        t_min, t_max = min(t_min, x.t), max(t_max, x.t)

    log.info("descent %s after %d iterations: energy %.12g, |grad|/sigma %.3e, t_u in [%.6g, %.6g]",
             status, it, x.energy, x.grad_norm, t_min, t_max)
    msg = "" if status != "failed" else "line search exhausted its backtracks"
    return _finish(ctx, x, trace, status, it, label, seed, msg)


def _bb_step(mesh, old, new, step, step0):
    """Short Barzilai-Borwein trial step for the scaled direction -grad / sigma."""
    du = new.u - old.u
    dg = new.scaled_grad - old.scaled_grad
    sy = h1_inner(mesh, du, dg)
    yy = h1_inner(mesh, dg, dg)
    if sy > 0 and yy > 0:
        return float(np.clip(sy / yy, 1e-8 * step0, 1e8 * step0))
    return 2.0 * step


def start_seeds(seed: int, k: int) -> list[int]:
    """Independent 64-bit seeds for the random starts of a multistart run."""
    ss = np.random.SeedSequence(seed)
    return [int(c.generate_state(1, np.uint64)[0]) for c in ss.spawn(k)]


def multistart_pairs(ctx: EnergyContext, cfg: SolveConfig = SolveConfig()) -> list[SolveResult]:
    """Run ``cfg.k`` descents and return one representative per solution class.

    The first start uses ``cfg.init``; the rest are random fields seeded from
    ``cfg.seed``. Converged results are merged when their relative L^2
    distance (up to sign, for odd f) is below ``cfg.dedup_tol``. For odd
    nonlinearities each representative carries its mirror -v. Results are
    sorted by (energy, seed); only converged classes are returned unless no
    start converged.
    """
    mesh = ctx.mesh
    results = [solve_ground_state(ctx, cfg)]
    for s in start_seeds(cfg.seed, cfg.k)[1:]:
        try:
            results.append(solve_ground_state(ctx, replace(cfg, init="random_seeded"), seed=s))
        except KirchhoffError as exc:
            log.warning("multistart seed %d could not be projected: %s", s, exc)

    def key(r):
        return (r.energy, -1 if r.seed is None else r.seed)

    pool = sorted([r for r in results if r.converged] or results, key=key)
    classes: list[SolveResult] = []
    for r in pool:
        dup = False
        for c in classes:
            ref = l2_norm(mesh, c.field)
            dist = l2_norm(mesh, r.field - c.field)
            if ctx.nl.odd:
                dist = min(dist, l2_norm(mesh, r.field + c.field))
            if dist <= cfg.dedup_tol * ref:
                dup = True
                break
        if not dup:
            classes.append(r)

    for c in classes:
        if ctx.nl.odd:
            if integrate(mesh, c.field) < 0:
                c.field, c.sphere_point = -c.field, -c.sphere_point
            c.mirror_field = -c.field
            c.mirror_energy = phi(ctx, c.mirror_field)
    return classes


@dataclass(frozen=True)
class PSReport:
    """Empirical boundedness of a minimizing sequence (diagnostic only)."""

    n_points: int
    bounded: bool
    norm_ratio: float
    energy_bounded: bool
    energy_range: tuple[float, float]
    cauchy_tail: tuple[float, ...]
    tail_decreasing: bool
    diagnostic_only: bool = True


def ps_diagnostic(trace: IterationTrace, bound_ratio: float = 100.0, tail: int = 10) -> PSReport:
    """Check that |M(u_n)| = t_u stayed bounded and the last steps shrink.

    The displacement between consecutive sphere iterates is bounded by
    step_n * |grad_{n-1}| / sigma, which is what the tail reports (in units
    of the relative gradient).
    """
    if len(trace) == 0:
        raise InvalidConfigurationError("empty iteration trace")
    norms = np.asarray(trace.t_u, dtype=float)
    energy = np.asarray(trace.energy, dtype=float)
    finite = bool(np.all(np.isfinite(norms)) and np.min(norms) > 0)
    ratio = float(np.max(norms) / np.min(norms)) if finite else float("inf")
    disp = np.asarray(trace.step[1:]) * np.asarray(trace.grad_norm[:-1])
    tail_vals = tuple(float(v) for v in disp[-tail:])
    decreasing = len(tail_vals) < 2 or tail_vals[-1] <= tail_vals[0]
    e_ok = bool(np.all(np.isfinite(energy)))
    return PSReport(
        n_points=len(trace),
        bounded=finite and ratio <= bound_ratio,
        norm_ratio=ratio,
        energy_bounded=e_ok,
        energy_range=(float(np.min(energy)), float(np.max(energy))),
        cauchy_tail=tail_vals,
        tail_decreasing=bool(decreasing),
    )
