"""Command-line front end: ``solve``, ``verify``, ``hypotheses`` and ``sweep``.

Configuration is a flat ``key = value`` file; ``#`` starts a comment. Keys
and defaults are listed in ``CONFIG_KEYS``. Exit codes:

    0  success
    1  invalid configuration, occupied output directory, or a failed check
    2  solver did not converge, or a requested hypothesis is not consistent
    3  I/O failure
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .energy import EnergyContext, phi
from .errors import DegenerateDirectionError, InvalidConfigurationError, KirchhoffError
from .fieldio import field_svg, format_field_csv, read_field_csv
from .mesh import Mesh, build_mesh
from .nehari import nehari_residual, nehari_scale
from .nonlinearity import CONSISTENT, ar_ratio, check_hypotheses, from_name
from .oracle import newton_solve, relative_residual
from .solver import INITIALIZERS, SolveConfig, multistart_pairs, ps_diagnostic, solve_ground_state

__all__ = ["RunConfig", "parse_config", "load_config", "main", "cmd_solve", "cmd_verify",
           "cmd_hypotheses", "cmd_sweep", "VERIFY_TOLERANCES"]

log = logging.getLogger("kirchhoff_nehari")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3
HYPOTHESES = ("f2", "f3", "f4", "f5", "AR")

# Pass thresholds for `verify`; all relative, see the README for their scale.
VERIFY_TOLERANCES = {
    "nehari_residual": 1e-8,
    "pde_residual": 1e-6,
    "max_norm_difference": 1e-6,
    "energy_difference": 1e-8,
}


class CliExit(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _float_list(text: str) -> tuple[float, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    return tuple(float(p) for p in parts)


def _name_list(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())


# key -> (attribute, parser)
CONFIG_KEYS = {
    "mesh.dim": ("mesh_dim", int),
    "mesh.n": ("mesh_n", int),
    "mesh.L": ("mesh_L", float),
    "physics.a": ("a", float),
    "physics.b": ("b", float),
    "nl.name": ("nl_name", str),
    "nl.p": ("nl_p", float),
    "solver.tol": ("tol", float),
    "solver.max_iter": ("max_iter", int),
    "solver.seed": ("seed", int),
    "solver.k": ("k", int),
    "solver.init": ("init", str),
    "hypotheses.kmin": ("hyp_kmin", int),
    "hypotheses.kmax": ("hyp_kmax", int),
    "hypotheses.check": ("hyp_check", _name_list),
    "sweep.b": ("sweep_b", _float_list),
}
_KEY_OF = {attr: key for key, (attr, _) in CONFIG_KEYS.items()}


@dataclass(frozen=True)
class RunConfig:
    mesh_dim: int = 1
    mesh_n: int = 127
    mesh_L: float = 1.0
    a: float = 1.0
    b: float = 1.0
    nl_name: str = "log_power"
    nl_p: float = 6.0
    tol: float = 1e-8
    max_iter: int = 5000
    seed: int = 0
    k: int = 1
    init: str = "fd_eigenfield"
    hyp_kmin: int = -3
    hyp_kmax: int = 6
    hyp_check: tuple = ("f2", "f3", "f4", "f5")
    sweep_b: tuple = ()

    def __post_init__(self):
        def bad(attr, msg):
            raise InvalidConfigurationError(f"{_KEY_OF[attr]}: {msg}")

        if self.mesh_dim not in (1, 2):
            bad("mesh_dim", f"must be 1 or 2, got {self.mesh_dim}")
        if self.mesh_n < 2:
            bad("mesh_n", f"need at least 2 interior nodes, got {self.mesh_n}")
        if not (np.isfinite(self.mesh_L) and self.mesh_L > 0):
            bad("mesh_L", f"must be positive, got {self.mesh_L}")
        for attr in ("a", "b"):
            val = getattr(self, attr)
            if not (np.isfinite(val) and val > 0):
                bad(attr, f"must be positive, got {val}")
        try:
            self.nonlinearity()
        except InvalidConfigurationError as exc:
            bad("nl_p" if self.nl_name == "pure_power" else "nl_name", str(exc))
        if not (np.isfinite(self.tol) and self.tol > 0):
            bad("tol", f"must be positive, got {self.tol}")
        if self.max_iter < 0:
            bad("max_iter", f"must be >= 0, got {self.max_iter}")
        if not 0 <= self.seed < 2**64:
            bad("seed", f"must be an unsigned 64-bit integer, got {self.seed}")
        if self.k < 1:
            bad("k", f"must be >= 1, got {self.k}")
        if self.init not in INITIALIZERS:
            bad("init", f"must be one of {', '.join(INITIALIZERS)}, got {self.init!r}")
        if self.hyp_kmax - self.hyp_kmin < 4:
            bad("hyp_kmax", "the sample grid must span at least 4 decades")
        unknown = [h for h in self.hyp_check if h not in HYPOTHESES]
        if unknown or not self.hyp_check:
            bad("hyp_check", f"choose from {', '.join(HYPOTHESES)}, got {', '.join(unknown) or 'nothing'}")
        bs = np.asarray(self.sweep_b, dtype=float)
        if bs.size and not (np.all(np.isfinite(bs)) and np.all(bs > 0) and np.all(np.diff(bs) > 0)):
            bad("sweep_b", "values must be positive and strictly increasing")

    def mesh(self) -> Mesh:
        return build_mesh(self.mesh_dim, self.mesh_L, self.mesh_n)

    def nonlinearity(self):
        return from_name(self.nl_name, self.nl_p)

    def context(self, mesh: Mesh | None = None, b: float | None = None) -> EnergyContext:
        return EnergyContext(mesh or self.mesh(), self.nonlinearity(), self.a,
                             self.b if b is None else b)

    def solve_config(self) -> SolveConfig:
        return SolveConfig(max_iterations=self.max_iter, tol_grad=self.tol, init=self.init,
                           seed=self.seed, k=self.k)


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from ``key = value`` lines plus optional overrides."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfigurationError(f"line {lineno}: expected key = value, got {line!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key in raw:
            raise InvalidConfigurationError(f"line {lineno}: duplicate key {key}")
        raw[key] = val
    raw.update(overrides or {})
    values = {}
    for key, val in raw.items():
        if key not in CONFIG_KEYS:
            raise InvalidConfigurationError(f"{key}: unknown key (known: {', '.join(CONFIG_KEYS)})")
        attr, conv = CONFIG_KEYS[key]
        try:
            values[attr] = conv(val)
        except ValueError:
            raise InvalidConfigurationError(f"{key}: cannot parse {val!r}") from None
    return RunConfig(**values)


def load_config(path, overrides: dict | None = None) -> RunConfig:
    text = ""
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise CliExit(EXIT_IO, f"cannot read config {path}: {exc}") from exc
    return parse_config(text, overrides)


def _prepare_out(out: Path, force: bool) -> None:
    if out.exists():
        if not out.is_dir():
            raise CliExit(EXIT_IO, f"{out} exists and is not a directory")
        if any(out.iterdir()) and not force:
            raise CliExit(EXIT_CONFIG, f"output directory {out} is not empty (use --force)")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliExit(EXIT_IO, f"cannot create {out}: {exc}") from exc


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise CliExit(EXIT_IO, f"cannot write {path}: {exc}") from exc


def _g(v) -> str:
    return f"{float(v):.17g}"


def _kv(rows) -> str:
    return "".join(f"{k} = {v}\n" for k, v in rows)


def parse_summary(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


# -- solve ------------------------------------------------------------------

def cmd_solve(cfg: RunConfig, out: Path, force: bool = False) -> int:
    _prepare_out(out, force)
    ctx = cfg.context()
    try:
        classes = multistart_pairs(ctx, cfg.solve_config())
    except KirchhoffError as exc:
        _write(out / "summary.txt", _kv([("status", "failed"), ("message", str(exc))]))
        print(f"solve failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    best = classes[0]
    ps = ps_diagnostic(best.trace)
    rows = [
        ("status", best.status),
        ("energy", _g(best.energy)),
        ("t_u", _g(best.t_u)),
        ("max_u", _g(np.max(np.abs(best.field)))),
        ("grad_norm_rel", _g(best.grad_norm)),
        ("nehari_residual_rel", _g(best.nehari_residual)),
        ("pde_residual_rel", _g(best.pde_residual)),
        ("iterations", best.iterations),
        ("init", best.init),
        ("seed", "" if best.seed is None else best.seed),
        ("starts", cfg.k),
        ("classes", len(classes)),
        ("class_energies", ",".join(_g(c.energy) for c in classes)),
        ("energy_floor", _g(min(c.energy for c in classes))),
        ("mirror_energy", "" if best.mirror_energy is None else _g(best.mirror_energy)),
        ("ps_bounded", ps.bounded),
        ("ps_norm_ratio", _g(ps.norm_ratio)),
    ]
    if best.message:
        rows.append(("message", best.message))
    mesh = ctx.mesh
    _write(out / "solution.csv", format_field_csv(mesh, best.field))
    _write(out / "trace.csv", best.trace.to_csv())
    _write(out / "summary.txt", _kv(rows))
    _write(out / "solution.svg", field_svg(mesh, best.field))
    print(f"{best.status}: energy {best.energy:.12g}, t_u {best.t_u:.6g}, {best.iterations} iterations")
    return EXIT_OK if best.converged else EXIT_SOLVER


# -- verify -----------------------------------------------------------------

def verify_field(cfg: RunConfig, mesh: Mesh, v) -> list[tuple[str, bool, str]]:
    """Pass/fail table for a candidate ground state ``v`` on ``mesh``."""
    ctx = cfg.context(mesh)
    v = np.asarray(v, dtype=float)
    checks = []
    nontrivial = bool(np.any(v))
    checks.append(("nontrivial", nontrivial, f"max|v| = {np.max(np.abs(v)):.6g}"))
    if not nontrivial:
        for name in ("nehari_residual", "pde_residual", "newton_converged", "max_norm_difference",
                     "energy_difference", "energy_positive"):
            checks.append((name, False, "zero field is excluded from the Nehari set"))
        return checks
    tol = VERIFY_TOLERANCES
    with np.errstate(over="ignore", invalid="ignore"):
        neh = abs(nehari_residual(ctx, v)) / nehari_scale(ctx, v)
        pde = relative_residual(ctx, v)
        energy = phi(ctx, v)
    checks.append(("nehari_residual", bool(neh <= tol["nehari_residual"]),
                   f"{neh:.3e} (tol {tol['nehari_residual']:.0e})"))
    checks.append(("pde_residual", bool(pde <= tol["pde_residual"]),
                   f"{pde:.3e} (tol {tol['pde_residual']:.0e})"))
    try:
        newt = newton_solve(ctx, v)
    except (KirchhoffError, np.linalg.LinAlgError, RuntimeError) as exc:
        checks.append(("newton_converged", False, f"Newton oracle raised: {exc}"))
        checks.append(("max_norm_difference", False, "no oracle solution"))
        checks.append(("energy_difference", False, "no oracle solution"))
    else:
        ref = np.max(np.abs(newt.field))
        dmax = np.max(np.abs(v - newt.field)) / ref
        de = abs(energy - newt.energy) / abs(newt.energy)
        checks.append(("newton_converged", newt.converged,
                       f"{newt.iterations} iterations, relative residual {newt.residual_norm:.3e}"))
        checks.append(("max_norm_difference", bool(dmax <= tol["max_norm_difference"]),
                       f"{dmax:.3e} relative (tol {tol['max_norm_difference']:.0e})"))
        checks.append(("energy_difference", bool(de <= tol["energy_difference"]),
                       f"{de:.3e} relative (tol {tol['energy_difference']:.0e})"))
    checks.append(("energy_positive", bool(energy > 0), f"energy = {energy:.12g}"))
    return checks


def cmd_verify(cfg: RunConfig, solution: Path, out: Path, force: bool = False) -> int:
    try:
        mesh, v = read_field_csv(solution)
    except OSError as exc:
        raise CliExit(EXIT_IO, f"cannot read solution {solution}: {exc}") from exc
    _prepare_out(out, force)
    checks = verify_field(cfg, mesh, v)
    lines = [f"{'PASS' if ok else 'FAIL'} {name}: {detail}" for name, ok, detail in checks]
    _write(out / "verify.txt", "\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_CONFIG


# -- hypotheses -------------------------------------------------------------

def _hyp_samples(cfg: RunConfig):
    mags = 10.0 ** np.arange(cfg.hyp_kmin, cfg.hyp_kmax + 1)
    u = np.concatenate([-mags[::-1], mags])
    L = cfg.mesh_L
    x = [np.full(cfg.mesh_dim, c * L) for c in (0.25, 0.5, 0.75)]
    return u, x


def cmd_hypotheses(cfg: RunConfig, out: Path, force: bool = False) -> int:
    _prepare_out(out, force)
    nl = cfg.nonlinearity()
    u, x = _hyp_samples(cfg)
    report = check_hypotheses(nl, u, x)
    _write(out / "hypotheses.txt", report.to_text())
    _write(out / "hypotheses.csv", report.to_csv())
    pos = u[u > 0]
    ar = "".join(f"{_g(s)},{_g(ar_ratio(nl, s, x[1]))}\n" for s in pos)
    _write(out / "ar_ratio.csv", "u,ar_ratio\n" + ar)
    print(report.to_text(), end="")
    return EXIT_OK if report.all_consistent(cfg.hyp_check) else EXIT_SOLVER


# -- sweep ------------------------------------------------------------------

def _monotonicity(bs, energies) -> str:
    e = np.asarray([en for en in energies if np.isfinite(en)])
    if e.size < 2:
        return "too few converged points to judge monotonicity"
    d = np.diff(e)
    if np.all(d > 0):
        return "energy increases monotonically in b"
    if np.all(d < 0):
        return "energy decreases monotonically in b"
    return "FLAG: energy is not monotone in b over the converged points"


def cmd_sweep(cfg: RunConfig, out: Path, force: bool = False, bs=None) -> int:
    bs = tuple(cfg.sweep_b if bs is None else bs)
    if not bs:
        raise InvalidConfigurationError("sweep.b: need a nonempty list of b values")
    replace(cfg, sweep_b=bs)  # validates ordering and positivity
    _prepare_out(out, force)
    mesh = cfg.mesh()
    scfg = cfg.solve_config()
    rows, notes, energies = [], [], []
    prev = None
    failed = 0
    for b in bs:
        ctx = cfg.context(mesh, b)
        try:
            if prev is None:
                res = multistart_pairs(ctx, scfg)[0]
            else:
                res = solve_ground_state(ctx, scfg, init=prev)
        except KirchhoffError as exc:
            failed += 1
            energies.append(float("nan"))
            rows.append(f"{_g(b)},nan,nan,nan,0")
            notes.append(f"b = {_g(b)}: failed ({type(exc).__name__}: {exc})")
            continue
        if not res.converged:
            failed += 1
        else:
            prev = res.field
        energies.append(res.energy if res.converged else float("nan"))
        rows.append(",".join([_g(b), _g(res.energy), _g(res.t_u),
                              _g(np.max(np.abs(res.field))), str(res.iterations)]))
        notes.append(f"b = {_g(b)}: {res.status}")
    _write(out / "sweep.csv", "b,energy,t_u,max_u,iters\n" + "".join(r + "\n" for r in rows))
    notes.append(_monotonicity(bs, energies))
    _write(out / "sweep.txt", "\n".join(notes) + "\n")
    print("\n".join(notes))
    return EXIT_SOLVER if failed else EXIT_OK


# -- entry point ------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliExit(EXIT_CONFIG, f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value configuration file")
    common.add_argument("--out", type=Path, required=True, help="output directory")
    common.add_argument("--force", action="store_true", help="allow a non-empty output directory")
    common.add_argument("--seed", type=int, help="override solver.seed")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="kirchhoff-nehari", description="Nehari-manifold ground states of Kirchhoff problems")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("solve", parents=[common], help="multistart ground-state solve")
    v = sub.add_parser("verify", parents=[common], help="check a solution against the Newton oracle")
    v.add_argument("--solution", type=Path, required=True, help="field CSV written by solve")
    sub.add_parser("hypotheses", parents=[common], help="sample the growth hypotheses")
    s = sub.add_parser("sweep", parents=[common], help="warm-started sweep over b")
    s.add_argument("--b", help="comma-separated b values (overrides sweep.b)")
    return p


def _overrides(args) -> dict:
    ov = {}
    for item in args.set:
        if "=" not in item:
            raise InvalidConfigurationError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        ov[k.strip()] = v.strip()
    if args.seed is not None:
        ov["solver.seed"] = str(args.seed)
    if getattr(args, "b", None) is not None:
        ov["sweep.b"] = args.b
    return ov


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = load_config(args.config, _overrides(args))
        if args.command == "solve":
            return cmd_solve(cfg, args.out, args.force)
        if args.command == "verify":
            return cmd_verify(cfg, args.solution, args.out, args.force)
        if args.command == "hypotheses":
            return cmd_hypotheses(cfg, args.out, args.force)
        return cmd_sweep(cfg, args.out, args.force)
    except CliExit as exc:
        print(exc, file=sys.stderr)
        return exc.code
    except InvalidConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def main(argv=None) -> None:
    sys.exit(run(argv))
