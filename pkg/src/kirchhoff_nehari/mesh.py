"""Finite-difference geometry for H^1_0 on an interval or a rectangle.

Fields are plain 1-D float arrays holding one value per interior node.
Boundary nodes carry the homogeneous Dirichlet value and are never stored.
Two-dimensional fields are flattened in C order from an ``(nx, ny)`` array,
so the x index varies slowest.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidConfigurationError, MeshMismatchError, SolverFailureError

__all__ = [
    "Mesh",
    "build_mesh",
    "stiffness_apply",
    "h1_inner",
    "h1_norm",
    "integrate",
    "lp_norm",
    "l2_norm",
    "poisson_solve",
]

POISSON_RTOL = 1e-12


@dataclass(frozen=True)
class Mesh:
    dimension: int
    extents: tuple[float, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise InvalidConfigurationError(f"dimension must be 1 or 2, got {self.dimension}")
        if len(self.extents) != self.dimension or len(self.counts) != self.dimension:
            raise InvalidConfigurationError(
                f"need {self.dimension} extents and counts, got {self.extents}, {self.counts}"
            )
        for L in self.extents:
            if not (np.isfinite(L) and L > 0):
                raise InvalidConfigurationError(f"extent must be positive, got {L}")
        for n in self.counts:
            if int(n) != n or n < 2:
                raise InvalidConfigurationError(f"node count must be an integer >= 2, got {n}")

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / (n + 1) for L, n in zip(self.extents, self.counts))

    @property
    def weight(self) -> float:
        """Quadrature weight of every interior node (cell length or area)."""
        return float(np.prod(self.spacing))

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.counts)

    @property
    def volume(self) -> float:
        """Discrete measure of the domain, i.e. the sum of the weights."""
        return self.weight * self.size

    def axes(self) -> list[np.ndarray]:
        return [h * np.arange(1, n + 1) for h, n in zip(self.spacing, self.counts)]

    @cached_property
    def coordinates(self) -> np.ndarray:
        """Node coordinates, shape ``(size, dimension)``, in field order."""
        grids = np.meshgrid(*self.axes(), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        pts.setflags(write=False)
        return pts

    def zeros(self) -> np.ndarray:
        return np.zeros(self.size)

    def sample(self, func) -> np.ndarray:
        """Evaluate ``func(*coords)`` at the interior nodes."""
        x = self.coordinates
        return np.asarray(func(*x.T), dtype=float) * np.ones(self.size)

    def check(self, *fields) -> None:
        for u in fields:
            if np.ndim(u) != 1 or len(u) != self.size:
                raise MeshMismatchError(
                    f"field of shape {np.shape(u)} does not live on a mesh with {self.size} nodes"
                )

    @cached_property
    def stiffness_matrix(self) -> sp.csr_matrix:
        """Sparse matrix of the discrete -Laplacian (not scaled by weights)."""
        def second_diff(n, h):
            return sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]) / h**2

        if self.dimension == 1:
            return sp.csr_matrix(second_diff(self.counts[0], self.spacing[0]))
        (nx, ny), (hx, hy) = self.counts, self.spacing
        A = sp.kron(second_diff(nx, hx), sp.identity(ny)) + sp.kron(sp.identity(nx), second_diff(ny, hy))
        return sp.csr_matrix(A)


def build_mesh(dimension, extents, counts) -> Mesh:
    """Build a uniform mesh; scalars are broadcast over the axes."""
    extents = np.broadcast_to(np.asarray(extents, dtype=float), (dimension,)).tolist()
    counts = np.broadcast_to(np.asarray(counts), (dimension,)).tolist()
    return Mesh(int(dimension), tuple(extents), tuple(counts))


def stiffness_apply(mesh: Mesh, u) -> np.ndarray:
    """Apply the second-order finite-difference -Laplacian with zero Dirichlet data."""
    u = np.asarray(u, dtype=float)
    mesh.check(u)
    if mesh.dimension == 1:
        (h,) = mesh.spacing
        p = np.pad(u, 1)
        return (2.0 * p[1:-1] - p[:-2] - p[2:]) / h**2
    hx, hy = mesh.spacing
    p = np.pad(u.reshape(mesh.shape), 1)
    c = p[1:-1, 1:-1]
    out = (2.0 * c - p[:-2, 1:-1] - p[2:, 1:-1]) / hx**2 + (2.0 * c - p[1:-1, :-2] - p[1:-1, 2:]) / hy**2
    return out.ravel()


def _differences(mesh: Mesh, u):
    """Forward differences along each axis, padded with the zero boundary."""
    if mesh.dimension == 1:
        (h,) = mesh.spacing
        return [np.diff(np.pad(u, 1)) / h]
    hx, hy = mesh.spacing
    p = np.pad(u.reshape(mesh.shape), 1)
    return [np.diff(p[:, 1:-1], axis=0).ravel() / hx, np.diff(p[1:-1, :], axis=1).ravel() / hy]


def h1_inner(mesh: Mesh, u, v) -> float:
    """Discrete Dirichlet inner product <u, v> = int grad u . grad v.

    Summed over edge differences, which equals the weighted dot of v with
    ``stiffness_apply(u)`` exactly in exact arithmetic but avoids the stencil
    cancellation when u is smooth.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    mesh.check(u, v)
    du, dv = _differences(mesh, u), _differences(mesh, v)
    return mesh.weight * float(sum(np.dot(a, b) for a, b in zip(du, dv)))


def h1_norm(mesh: Mesh, u) -> float:
    u = np.asarray(u, dtype=float)
    mesh.check(u)
    return float(np.sqrt(mesh.weight) * scipy.linalg.norm(np.concatenate(_differences(mesh, u)),
                                                          check_finite=False))


def integrate(mesh: Mesh, values) -> float:
    """Lumped nodal quadrature; boundary nodes contribute nothing."""
    values = np.asarray(values, dtype=float)
    mesh.check(values)
    return mesh.weight * float(np.sum(values))


def lp_norm(mesh: Mesh, u, p: float) -> float:
    if not p >= 1:
        raise InvalidConfigurationError(f"L^p norm needs p >= 1, got {p}")
    return integrate(mesh, np.abs(u) ** p) ** (1.0 / p)


def l2_norm(mesh: Mesh, u) -> float:
    """Discrete L^2 norm, safe against overflow of the squared entries."""
    u = np.asarray(u, dtype=float)
    mesh.check(u)
    return float(np.sqrt(mesh.weight) * scipy.linalg.norm(u, check_finite=False))


def poisson_solve(mesh: Mesh, rhs, maxiter: int | None = None) -> np.ndarray:
    """Return g with ``stiffness_apply(mesh, g) == rhs``.

    1D uses banded elimination; 2D runs conjugate gradients on the
    matrix-free stencil. A ``SolverFailureError`` carrying the relative
    residual is raised when CG stalls.
    """
    rhs = np.asarray(rhs, dtype=float)
    mesh.check(rhs)
    # rescale so squared norms inside CG cannot overflow
    scale = float(np.max(np.abs(rhs))) if rhs.size else 0.0
    if scale == 0.0:
        return np.zeros_like(rhs)
    if not np.isfinite(scale):
        raise SolverFailureError("Poisson right-hand side is not finite")
    return scale * _poisson_unit(mesh, rhs / scale, maxiter)


def _poisson_unit(mesh, rhs, maxiter):
    bnorm = np.linalg.norm(rhs)

    if mesh.dimension == 1:
        n, (h,) = mesh.size, mesh.spacing
        bands = np.empty((3, n))
        bands[0] = -1.0 / h**2
        bands[1] = 2.0 / h**2
        bands[2] = -1.0 / h**2
        return scipy.linalg.solve_banded((1, 1), bands, rhs)

    op = spla.LinearOperator((mesh.size, mesh.size), matvec=lambda w: stiffness_apply(mesh, w),
                             dtype=float)
    g, info = spla.cg(op, rhs, rtol=0.1 * POISSON_RTOL, atol=0.0, maxiter=maxiter or 10 * mesh.size)
    rel = np.linalg.norm(stiffness_apply(mesh, g) - rhs) / bnorm
    if rel > POISSON_RTOL:
        raise SolverFailureError(f"CG did not converge (info={info}, relative residual {rel:.3e})",
                                 residual=rel)
    return g
