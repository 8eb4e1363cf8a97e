"""CSV and SVG output for fields.

Field CSV layout::

    # mesh: dim,nx[,ny],Lx[,Ly]
    x[,y],value
    ...

one row per interior node in field order, every float written with 17
significant digits so that a write/read cycle is bit exact.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import InvalidConfigurationError
from .mesh import Mesh

__all__ = ["format_field_csv", "parse_field_csv", "write_field_csv", "read_field_csv", "field_svg"]


def _g(v) -> str:
    return f"{float(v):.17g}"


def format_field_csv(mesh: Mesh, values) -> str:
    values = np.asarray(values, dtype=float)
    mesh.check(values)
    head = ",".join([str(mesh.dimension), *map(str, mesh.counts), *map(_g, mesh.extents)])
    lines = [f"# mesh: {head}"]
    for pt, v in zip(mesh.coordinates, values):
        lines.append(",".join([*map(_g, pt), _g(v)]))
    return "\n".join(lines) + "\n"


def parse_field_csv(text: str) -> tuple[Mesh, np.ndarray]:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("# mesh:"):
        raise InvalidConfigurationError("field CSV must start with a '# mesh:' header")
    try:
        head = [s.strip() for s in lines[0][len("# mesh:"):].split(",")]
        dim = int(head[0])
        if len(head) != 1 + 2 * dim:
            raise ValueError(f"header {lines[0]!r} has the wrong number of entries")
        mesh = Mesh(dim, tuple(float(s) for s in head[1 + dim:]), tuple(int(s) for s in head[1:1 + dim]))
        rows = np.array([[float(s) for s in ln.split(",")] for ln in lines[1:]], dtype=float)
    except ValueError as exc:
        raise InvalidConfigurationError(f"malformed field CSV: {exc}") from exc
    if rows.shape != (mesh.size, dim + 1):
        raise InvalidConfigurationError(
            f"field CSV has {rows.shape[0]} rows, mesh needs {mesh.size} of width {dim + 1}"
        )
    if not np.allclose(rows[:, :dim], mesh.coordinates, rtol=0, atol=1e-12 * max(mesh.extents)):
        raise InvalidConfigurationError("field CSV coordinates do not match the mesh ordering")
    values = rows[:, dim].copy()
    if not np.all(np.isfinite(values)):
        raise InvalidConfigurationError("field CSV contains non-finite values")
    return mesh, values


def write_field_csv(path, mesh: Mesh, values) -> None:
    Path(path).write_text(format_field_csv(mesh, values))


def read_field_csv(path) -> tuple[Mesh, np.ndarray]:
    return parse_field_csv(Path(path).read_text())


def field_svg(mesh: Mesh, values, width: int = 480, height: int = 320) -> str:
    """Self-contained SVG: a polyline in 1D, a grey-scale cell grid in 2D."""
    values = np.asarray(values, dtype=float)
    mesh.check(values)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">', '<rect width="100%" height="100%" fill="white"/>']
    vmax = float(np.max(np.abs(values))) or 1.0
    if mesh.dimension == 1:
        (L,) = mesh.extents
        xs = np.concatenate([[0.0], mesh.axes()[0], [L]])
        ys = np.concatenate([[0.0], values, [0.0]]) / vmax
        pad = 20
        px = pad + (width - 2 * pad) * xs / L
        py = height / 2 - (height / 2 - pad) * ys
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        out.append(f'<line x1="{pad}" y1="{height / 2}" x2="{width - pad}" y2="{height / 2}" '
                   'stroke="#999" stroke-width="1"/>')
        out.append(f'<polyline fill="none" stroke="#1f4e9c" stroke-width="2" points="{pts}"/>')
    else:
        nx, ny = mesh.counts
        V = values.reshape(nx, ny) / vmax
        cw, ch = width / nx, height / ny
        for i in range(nx):
            for j in range(ny):
                g = int(round(255 * (1 - (V[i, j] + 1) / 2)))
                # y grows upward in the domain, downward in SVG
                out.append(f'<rect x="{i * cw:.2f}" y="{(ny - 1 - j) * ch:.2f}" width="{cw:.2f}" '
                           f'height="{ch:.2f}" fill="rgb({g},{g},{g})"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
