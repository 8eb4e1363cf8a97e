"""Independent checks: a Newton solve of the strong discrete equation

    R(u) = (a + b |u|^2) (-Delta_h) u - f(x, u) = 0

and the closed-form fibering maximizer of the pure sixth-power problem.

Residual norms are discrete L^2 norms measured relative to the Kirchhoff
term (a + b|u|^2)|A u|; solutions of superquartic problems can be huge and
an absolute threshold would sit far below roundoff.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .energy import EnergyContext, phi
from .errors import DegenerateDirectionError, InvalidConfigurationError
from .mesh import h1_inner, l2_norm, stiffness_apply

__all__ = [
    "OracleResult",
    "pde_residual",
    "residual_norm",
    "relative_residual",
    "jacobian_apply",
    "newton_solve",
    "closed_form_tu_check",
]

NEWTON_RTOL = 1e-10


@dataclass(frozen=True)
class OracleResult:
    field: np.ndarray
    residual_norm: float  # relative, see relative_residual
    iterations: int
    converged: bool
    energy: float
    history: tuple = ()


def pde_residual(ctx: EnergyContext, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    Au = stiffness_apply(ctx.mesh, u)
    s = ctx.mesh.weight * float(np.dot(u, Au))
    return (ctx.a + ctx.b * s) * Au - ctx.f(u)


def residual_norm(ctx: EnergyContext, r) -> float:
    """Discrete L^2 norm of a nodal residual."""
    return l2_norm(ctx.mesh, r)


def relative_residual(ctx: EnergyContext, u) -> float:
    u = np.asarray(u, dtype=float)
    Au = stiffness_apply(ctx.mesh, u)
    s = ctx.mesh.weight * float(np.dot(u, Au))
    scale = (ctx.a + ctx.b * s) * residual_norm(ctx, Au)
    r = residual_norm(ctx, (ctx.a + ctx.b * s) * Au - ctx.f(u))
    return r / scale if scale > 0 else r


def jacobian_apply(ctx: EnergyContext, u, w) -> np.ndarray:
    """J(u)[w] = (a + b s) A w + 2 b <u, w> A u - f_u(x, u) w, with s = <u, u>."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    Au = stiffness_apply(ctx.mesh, u)
    s = ctx.mesh.weight * float(np.dot(u, Au))
    return ((ctx.a + ctx.b * s) * stiffness_apply(ctx.mesh, w)
            + 2.0 * ctx.b * h1_inner(ctx.mesh, u, w) * Au
            - ctx.fu(u) * w)


def _newton_step(ctx, u, r):
    """Solve J(u) d = -r: sparse LU of the local part plus a rank-one correction."""
    mesh = ctx.mesh
    A = mesh.stiffness_matrix
    Au = A @ u
    s = mesh.weight * float(np.dot(u, Au))
    B = ((ctx.a + ctx.b * s) * A - sp.diags(ctx.fu(u))).tocsc()
    lu = spla.splu(B)
    c = 2.0 * ctx.b * mesh.weight
    y = lu.solve(-r)
    q = lu.solve(Au)
    return y - q * (c * np.dot(Au, y) / (1.0 + c * np.dot(Au, q)))


def newton_solve(ctx: EnergyContext, init, max_iter: int = 50, max_halvings: int = 30,
                 rtol: float = NEWTON_RTOL) -> OracleResult:
    """Damped Newton iteration on R(u) = 0 from a nonzero initial field.

    Convergence means ``relative_residual(u) <= rtol * (1 + a)``. The step
    is halved while the residual does not decrease.
    """
    u = np.array(init, dtype=float)
    ctx.mesh.check(u)
    if not np.any(u):
        raise DegenerateDirectionError("Newton oracle rejects the trivial initial field u = 0")
    target = rtol * (1.0 + ctx.a)
    r = pde_residual(ctx, u)
    rn = residual_norm(ctx, r)
    history = [relative_residual(ctx, u)]
    it = 0
    while history[-1] > target and it < max_iter:
        it += 1
        d = _newton_step(ctx, u, r)
        lam = 1.0
        for _ in range(max_halvings + 1):
            trial = u + lam * d
            r_trial = pde_residual(ctx, trial)
            rn_trial = residual_norm(ctx, r_trial)
            if np.isfinite(rn_trial) and rn_trial < rn:
                break
            lam *= 0.5
        else:
            break
        u, r, rn = trial, r_trial, rn_trial
        history.append(relative_residual(ctx, u))
    return OracleResult(u, history[-1], it, bool(history[-1] <= target), phi(ctx, u),
                        tuple(history))


def closed_form_tu_check(a: float, b: float, s: float, m: float) -> float:
    """Fibering maximizer for f = u^5: the positive root of m x^2 - b s^2 x - a s = 0, x = t^2.

    Here ``s = |u|^2`` and ``m = int u^6``.
    """
    for name, val in (("a", a), ("b", b), ("s", s), ("m", m)):
        if not val > 0:
            raise InvalidConfigurationError(f"{name} must be positive, got {val}")
    bs2 = b * s * s
    disc = np.sqrt(bs2 * bs2 + 4.0 * a * m * s)
    x = (bs2 + disc) / (2.0 * m)
    return float(np.sqrt(x))
