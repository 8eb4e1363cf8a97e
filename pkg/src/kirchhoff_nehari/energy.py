"""The Kirchhoff energy

    Phi(u) = a/2 |u|^2 + b/4 |u|^4 - int F(x, u),    |u|^2 = int |grad u|^2,

its directional derivative and its Riesz representative in the Dirichlet
inner product.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfigurationError
from .mesh import Mesh, h1_inner, integrate, poisson_solve, stiffness_apply
from .nonlinearity import NonlinearitySpec

__all__ = ["EnergyContext", "phi", "phi_dir", "phi_grad", "FD_STEPS"]

FD_STEPS = (1e-4, 1e-5, 1e-6)


@dataclass(frozen=True)
class EnergyContext:
    mesh: Mesh
    nl: NonlinearitySpec
    a: float
    b: float

    def __post_init__(self):
        for name in ("a", "b"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise InvalidConfigurationError(f"{name} must be positive, got {val}")

    @property
    def x(self) -> np.ndarray:
        return self.mesh.coordinates

    def f(self, u) -> np.ndarray:
        return self.nl.f(self.x, u)

    def F(self, u) -> np.ndarray:
        return self.nl.F(self.x, u)

    def fu(self, u) -> np.ndarray:
        return self.nl.fu(self.x, u)


def phi(ctx: EnergyContext, u) -> float:
    u = np.asarray(u, dtype=float)
    s = h1_inner(ctx.mesh, u, u)
    return 0.5 * ctx.a * s + 0.25 * ctx.b * s * s - integrate(ctx.mesh, ctx.F(u))


def phi_dir(ctx: EnergyContext, u, v) -> float:
    """<Phi'(u), v> = (a + b|u|^2) <u, v> - int v f(x, u)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    Au = stiffness_apply(ctx.mesh, u)
    w = ctx.mesh.weight
    s = w * float(np.dot(u, Au))
    return (ctx.a + ctx.b * s) * w * float(np.dot(v, Au)) - integrate(ctx.mesh, v * ctx.f(u))


def phi_grad(ctx: EnergyContext, u) -> np.ndarray:
    """H-gradient G with <G, v> = <Phi'(u), v> for every v."""
    u = np.asarray(u, dtype=float)
    s = h1_inner(ctx.mesh, u, u)
    return (ctx.a + ctx.b * s) * u - poisson_solve(ctx.mesh, ctx.f(u))
