"""Fibering maps t -> Phi(t u) and the radial projection onto the Nehari set.

For u != 0 the derivative of the fibering map,

    alpha'(t) = a |u|^2 t + b |u|^4 t^3 - int u f(x, t u),

is positive below a unique t_u and negative above it, because
alpha'(t) / t^3 = b|u|^4 - g(t) with g increasing. The projection therefore
only needs a sign-change bracket followed by bisection.

Residuals are judged relative to the size of the Kirchhoff terms
a|u|^2 t + b|u|^4 t^3. For superquartic-but-barely nonlinearities such as
u^3 log(1+|u|) the maximizer t_u can be astronomically large, so any
absolute tolerance would be meaningless.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import EnergyContext
from .errors import DegenerateDirectionError, FiberingFailureError
from .mesh import Mesh, h1_inner, h1_norm

__all__ = [
    "FiberingResult",
    "fibering_deriv",
    "fibering_monotone_part",
    "project_to_nehari",
    "nehari_residual",
    "nehari_scale",
    "sphere_inverse",
    "TOL_FIBER",
]

TOL_FIBER = 1e-10
MAX_DOUBLINGS = 2**10
BISECT_RTOL = 1e-12
MAX_POLISH = 5


@dataclass(frozen=True)
class FiberingResult:
    t_u: float
    bracket: tuple[float, float]
    residual: float  # |alpha'(t_u)|
    iterations: int
    projected: np.ndarray
    scale: float = 1.0  # a|u|^2 t_u + b|u|^4 t_u^3

    @property
    def relative_residual(self) -> float:
        return self.residual / self.scale


class _Fiber:
    """alpha'_u(t) with |u|^2 and the quadrature weight computed once."""

    def __init__(self, ctx: EnergyContext, u):
        self.u = np.asarray(u, dtype=float)
        self.s = h1_inner(ctx.mesh, self.u, self.u)
        if not self.s > 0:
            raise DegenerateDirectionError("fibering map needs a nonzero direction")
        self.ctx = ctx
        self.w = ctx.mesh.weight
        self.x = ctx.mesh.coordinates

    def nonlinear(self, t):
        return self.w * float(np.dot(self.u, self.ctx.nl.f(self.x, t * self.u)))

    def scale(self, t):
        t = np.float64(t)  # overflow to inf rather than raising
        return self.ctx.a * self.s * t + self.ctx.b * self.s**2 * t**3

    def __call__(self, t):
        return self.scale(t) - self.nonlinear(t)


def fibering_deriv(ctx: EnergyContext, u, t: float) -> float:
    return _Fiber(ctx, u)(float(t))


def fibering_monotone_part(ctx: EnergyContext, u, t: float) -> float:
    """-a|u|^2 / t^2 + t^-3 int u f(x, t u); alpha'(t) = 0 iff this equals b|u|^4."""
    fib = _Fiber(ctx, u)
    return -ctx.a * fib.s / t**2 + fib.nonlinear(t) / t**3


def nehari_residual(ctx: EnergyContext, u) -> float:
    """<Phi'(u), u>, zero exactly on the Nehari set."""
    return fibering_deriv(ctx, u, 1.0)


def nehari_scale(ctx: EnergyContext, u) -> float:
    """a|u|^2 + b|u|^4, the magnitude against which <Phi'(u), u> is judged."""
    s = h1_inner(ctx.mesh, u, u)
    return ctx.a * s + ctx.b * s * s


def sphere_inverse(mesh: Mesh, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    nrm = h1_norm(mesh, u)
    if not nrm > 0:
        raise DegenerateDirectionError("cannot normalize the zero field")
    return u / nrm


def project_to_nehari(ctx: EnergyContext, u, t_start: float = 1.0) -> FiberingResult:
    """Find the unique maximizer t_u of t -> Phi(t u) and return t_u u.

    The bracket is grown from ``t_start`` by doubling (or halving), then
    narrowed by bisection to relative width 1e-12 and finished with at most
    five Newton steps on a central-difference second derivative.
    """
    fib = _Fiber(ctx, u)
    iters = 0

    def value(t):
        with np.errstate(over="ignore", invalid="ignore"):
            g = fib(t)
        if not np.isfinite(g):
            raise FiberingFailureError(f"fibering derivative is not finite at t = {t:g}")
        return g

    t = float(t_start)
    g = value(t)
    if g == 0.0:
        return FiberingResult(t, (t, t), 0.0, 0, t * fib.u, fib.scale(t))
    if g > 0:
        lo, hi = t, 2.0 * t
        while (g := value(hi)) >= 0:
            iters += 1
            if iters > MAX_DOUBLINGS:
                raise FiberingFailureError(
                    f"no sign change of alpha' after {MAX_DOUBLINGS} doublings; "
                    "the nonlinearity may not be 4-superlinear"
                )
            lo, hi = hi, 2.0 * hi
    else:
        lo, hi = 0.5 * t, t
        while (g := value(lo)) <= 0:
            iters += 1
            if iters > MAX_DOUBLINGS:
                raise FiberingFailureError(f"alpha' not positive near 0 after {MAX_DOUBLINGS} halvings")
            lo, hi = 0.5 * lo, lo

    while hi - lo > BISECT_RTOL * lo:
        iters += 1
        mid = 0.5 * (lo + hi)
        g = value(mid)
        if g > 0:
            lo = mid
        elif g < 0:
            hi = mid
        else:
            lo = hi = mid
            break

    t = 0.5 * (lo + hi)
    g = value(t)
    for _ in range(MAX_POLISH):
        if g == 0.0:
            break
        dt = 1e-6 * t
        slope = (value(t + dt) - value(t - dt)) / (2 * dt)
        if not slope < 0:
            break
        t_new = t - g / slope
        if not lo <= t_new <= hi:
            break
        g_new = value(t_new)
        iters += 1
        if abs(g_new) >= abs(g):
            break
        t, g = t_new, g_new
        if g > 0:
            lo = max(lo, t)
        elif g < 0:
            hi = min(hi, t)

    scale = fib.scale(t)
    if abs(g) > TOL_FIBER * scale:
        raise FiberingFailureError(
            f"relative fibering residual {abs(g) / scale:.3e} exceeds {TOL_FIBER:.1e}"
        )
    return FiberingResult(t, (lo, hi), abs(g), iters, t * fib.u, scale)
