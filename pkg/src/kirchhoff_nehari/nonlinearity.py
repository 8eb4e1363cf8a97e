"""Nonlinearities f(x, u) with antiderivative F and derivative df/du.

Evaluators take ``x`` of shape ``(N, dim)`` (or anything that broadcasts
against it) and ``u`` of shape ``(N,)`` and return arrays of shape ``(N,)``.
The sampled hypothesis checker in this module can only ever call a
hypothesis *consistent*, *violated* or *inconclusive*: the conditions are
asymptotic statements and are not decidable from finitely many samples.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, InvalidConfigurationError

__all__ = [
    "NonlinearitySpec",
    "HypothesisVerdict",
    "HypothesisReport",
    "builtin_log_power",
    "builtin_pure_power",
    "from_name",
    "check_hypotheses",
    "ar_ratio",
]

CONSISTENT = "consistent"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive"

# relative slack when comparing sampled ratios for monotonicity
MONOTONE_RTOL = 1e-12


@dataclass(frozen=True)
class NonlinearitySpec:
    f: Callable
    F: Callable
    fu: Callable
    p: float
    odd: bool
    name: str
    params: dict = field(default_factory=dict)

    def __call__(self, x, u):
        return self.f(x, u)


# Series of int_0^s r^3 log(1 + r) dr = sum_k (-1)^(k+1) s^(k+4) / (k (k+4)),
# used below the switch point where the closed form cancels catastrophically.
_LOG_SERIES_SWITCH = 0.25
_LOG_SERIES_TERMS = 32
_LOG_SERIES_COEF = np.array(
    [(-1.0) ** (k + 1) / (k * (k + 4)) for k in range(1, _LOG_SERIES_TERMS + 1)]
)


def _log_power_F(x, u):
    s = np.abs(np.asarray(u, dtype=float))
    out = np.empty_like(s)
    small = s < _LOG_SERIES_SWITCH
    ss = s[small]
    # Horner in s for sum_k c_k s^(k-1), then times s^5
    acc = np.zeros_like(ss)
    for c in _LOG_SERIES_COEF[::-1]:
        acc = acc * ss + c
    out[small] = acc * ss**5
    sl = s[~small]
    lg = np.log1p(sl)
    out[~small] = 0.25 * sl**4 * lg - 0.25 * (0.25 * sl**4 - sl**3 / 3.0 + 0.5 * sl**2 - sl + lg)
    return out


def builtin_log_power() -> NonlinearitySpec:
    """f(u) = u^3 log(1 + |u|): 4-superlinear but failing the AR condition."""
    def f(x, u):
        u = np.asarray(u, dtype=float)
        return u * u**2 * np.log1p(np.abs(u))

    def fu(x, u):
        u = np.asarray(u, dtype=float)
        a = np.abs(u)
        return 3.0 * u**2 * np.log1p(a) + u**2 * a / (1.0 + a)

    return NonlinearitySpec(f=f, F=_log_power_F, fu=fu, p=5.0, odd=True, name="log_power")


def builtin_pure_power(p: float) -> NonlinearitySpec:
    """f(u) = |u|^(p-2) u with p > 4."""
    p = float(p)
    if not p > 4:
        raise InvalidConfigurationError(f"pure_power needs p > 4, got {p}")

    def f(x, u):
        u = np.asarray(u, dtype=float)
        return np.abs(u) ** (p - 2) * u

    def F(x, u):
        return np.abs(np.asarray(u, dtype=float)) ** p / p

    def fu(x, u):
        return (p - 1) * np.abs(np.asarray(u, dtype=float)) ** (p - 2)

    return NonlinearitySpec(f=f, F=F, fu=fu, p=p, odd=True, name="pure_power", params={"p": p})


def from_name(name: str, p: float | None = None) -> NonlinearitySpec:
    if name == "log_power":
        return builtin_log_power()
    if name == "pure_power":
        if p is None:
            raise InvalidConfigurationError("pure_power needs an exponent p")
        return builtin_pure_power(p)
    raise InvalidConfigurationError(f"unknown nonlinearity {name!r}")


def ar_ratio(nl: NonlinearitySpec, u: float, x=0.0) -> float:
    """Return u f(x,u) / F(x,u), the quantity bounded below by mu > 4 under AR."""
    if u == 0:
        raise DomainError("AR ratio is undefined at u = 0")
    xs = np.atleast_2d(np.asarray(x, dtype=float))
    uu = np.array([float(u)])
    F = float(nl.F(xs, uu)[0])
    if not F > 0:
        raise DomainError(f"AR ratio needs F(x,u) > 0, got F = {F!r} at u = {u!r}")
    return float(u * nl.f(xs, uu)[0] / F)


@dataclass
class HypothesisVerdict:
    name: str
    status: str
    witnesses: list = field(default_factory=list)
    table: list = field(default_factory=list)  # rows (x, u, ratio)
    note: str = ""

    def __post_init__(self):
        if self.status == VIOLATED and not self.witnesses:
            raise ValueError(f"{self.name}: a violated verdict needs a witness")


@dataclass
class HypothesisReport:
    nonlinearity: str
    verdicts: dict

    def __getitem__(self, key) -> HypothesisVerdict:
        return self.verdicts[key]

    def all_consistent(self, names=None) -> bool:
        names = self.verdicts if names is None else names
        return all(self.verdicts[n].status == CONSISTENT for n in names)

    def to_text(self) -> str:
        lines = [f"nonlinearity: {self.nonlinearity}",
                 f"{'hypothesis':<11}{'verdict':<14}witness / note"]
        for v in self.verdicts.values():
            wit = "; ".join(f"x={_fmt_point(x)} u={u:.6g}" for x, u in v.witnesses[:3])
            lines.append(f"{v.name:<11}{v.status:<14}{wit or v.note}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["hypothesis", "verdict", "x", "u", "ratio", "witness"])
        for v in self.verdicts.values():
            wit = {(tuple(x), u) for x, u in v.witnesses}
            for x, u, r in v.table:
                w.writerow([v.name, v.status, _fmt_point(x), repr(float(u)), repr(float(r)),
                            int((tuple(x), u) in wit)])
        return buf.getvalue()


def _fmt_point(x) -> str:
    return " ".join(f"{c:.6g}" for c in np.atleast_1d(x))


def _eval(fn, x, u):
    u = np.asarray(u, dtype=float)
    xs = np.broadcast_to(np.asarray(x, dtype=float), (len(u), np.size(x)))
    return np.asarray(fn(xs, u), dtype=float)


def _is_increasing(r, strict):
    if strict:
        return bool(np.all(r[1:] > r[:-1] * (1 + MONOTONE_RTOL)))
    return bool(np.all(r[1:] >= r[:-1] - MONOTONE_RTOL * np.abs(r[:-1])))


def check_hypotheses(nl: NonlinearitySpec, u_samples, x_samples) -> HypothesisReport:
    """Sample (f2)-(f5) and the AR condition at every ``(x, u)`` pair.

    Small-|u| tests use the lowest two sampled decades, large-|u| tests the
    highest decade. The samples must span at least four decades in |u|.
    """
    u_all = np.unique(np.asarray(u_samples, dtype=float))
    xs = [np.atleast_1d(np.asarray(x, dtype=float)) for x in x_samples]
    if u_all.size == 0 or not xs:
        raise InvalidConfigurationError("hypothesis check needs nonempty u and x samples")
    u_nz = u_all[u_all != 0]  # (f4) ratio is undefined at 0
    if u_nz.size == 0:
        raise InvalidConfigurationError("hypothesis check needs nonzero u samples")
    mags = np.abs(u_nz)
    lo, hi = mags.min(), mags.max()
    if math.log10(hi / lo) < 4 - 1e-9:
        raise InvalidConfigurationError(
            f"|u| samples must span at least 4 decades, got [{lo:g}, {hi:g}]"
        )
    small_band = mags <= lo * 100 * (1 + 1e-12)
    large_band = mags >= hi / 10 * (1 - 1e-12)

    verdicts = {}
    verdicts["f2"] = _check_f2(nl, xs, u_nz[small_band])
    verdicts["f3"] = _check_f3(nl, xs, u_nz[large_band])
    verdicts["f4"] = _check_f4(nl, xs, u_nz)
    verdicts["f5"] = _check_f5(nl, xs, u_all)
    verdicts["AR"] = _check_ar(nl, xs, u_nz[large_band])
    return HypothesisReport(nl.name, verdicts)


def _by_sign(u):
    """Split into (positive ascending |u|, negative ascending |u|)."""
    pos = np.sort(u[u > 0])
    neg = -np.sort(-u[u < 0])
    return [s for s in (pos, neg) if s.size]


def _check_f2(nl, xs, band):
    table, witnesses, statuses = [], [], []
    for x in xs:
        for u in _by_sign(band):
            r = np.abs(_eval(nl.f, x, u) / u)
            table += [(x, ui, ri) for ui, ri in zip(u, r)]
            if u.size < 2:
                statuses.append(INCONCLUSIVE)
            elif _is_increasing(r, strict=True):
                statuses.append(CONSISTENT)
            elif r[0] >= r[-1]:
                statuses.append(VIOLATED)
                witnesses.append((x, float(u[0])))
            else:
                statuses.append(INCONCLUSIVE)
    return HypothesisVerdict("f2", _combine(statuses), witnesses, table,
                             "f/u at small |u| decays toward 0")


def _check_f3(nl, xs, band):
    table, witnesses, statuses = [], [], []
    for x in xs:
        for u in _by_sign(band):
            r = _eval(nl.F, x, u) / u**4
            table += [(x, ui, ri) for ui, ri in zip(u, r)]
            bad = [k for k in range(1, u.size) if not r[k] > r[k - 1] * (1 + MONOTONE_RTOL)]
            bad += [k for k in range(u.size) if r[k] <= 0]
            if u.size < 2:
                statuses.append(INCONCLUSIVE)
            elif bad:
                statuses.append(VIOLATED)
                witnesses += [(x, float(u[k])) for k in sorted(set(bad))]
            else:
                statuses.append(CONSISTENT)
    return HypothesisVerdict("f3", _combine(statuses), witnesses, table,
                             "F/u^4 increasing over the largest sampled decade")


def _check_f4(nl, xs, u_nz):
    table, witnesses = [], []
    for x in xs:
        u = np.sort(u_nz)
        g = _eval(nl.f, x, u) / u**3
        table += [(x, ui, gi) for ui, gi in zip(u, g)]
        witnesses += [(x, float(ui)) for ui, gi in zip(u, g) if not gi > 0]
        pos, neg = u > 0, u < 0
        gp, up = g[pos], u[pos]
        for k in range(1, gp.size):
            if gp[k] < gp[k - 1] - MONOTONE_RTOL * abs(gp[k - 1]):
                witnesses.append((x, float(up[k])))
        gn, un = g[neg], u[neg]
        for k in range(1, gn.size):
            if gn[k] > gn[k - 1] + MONOTONE_RTOL * abs(gn[k - 1]):
                witnesses.append((x, float(un[k])))
    status = VIOLATED if witnesses else CONSISTENT
    return HypothesisVerdict("f4", status, witnesses, table,
                             "f/u^3 positive, nonincreasing for u<0, nondecreasing for u>0")


def _check_f5(nl, xs, u_all):
    table, witnesses = [], []
    for x in xs:
        fp = _eval(nl.f, x, u_all)
        fm = _eval(nl.f, x, -u_all)
        table += [(x, ui, a + b) for ui, a, b in zip(u_all, fp, fm)]
        witnesses += [(x, float(ui)) for ui, a, b in zip(u_all, fp, fm) if a != -b]
    status = VIOLATED if witnesses else CONSISTENT
    return HypothesisVerdict("f5", status, witnesses, table, "f(x,-u) = -f(x,u) exactly")


def _check_ar(nl, xs, band):
    table, witnesses, statuses = [], [], []
    for x in xs:
        for u in _by_sign(band):
            F = _eval(nl.F, x, u)
            uf = u * _eval(nl.f, x, u)
            r = np.where(F > 0, uf / np.where(F > 0, F, 1.0), -np.inf)
            table += [(x, ui, ri) for ui, ri in zip(u, r)]
            bad = [float(ui) for ui, ri in zip(u, r) if not ri > 4]
            if bad:
                statuses.append(VIOLATED)
                witnesses += [(x, ui) for ui in bad]
            elif u.size >= 2 and np.all(r[1:] < r[:-1] * (1 - MONOTONE_RTOL)):
                statuses.append(INCONCLUSIVE)
            else:
                statuses.append(CONSISTENT)
    note = "uf/F bounded below by some mu > 4 for large |u|"
    if INCONCLUSIVE in statuses:
        note = "uf/F strictly decreasing over the largest decade; decay to 4 not excluded"
    return HypothesisVerdict("AR", _combine(statuses), witnesses, table, note)


def _combine(statuses):
    if VIOLATED in statuses:
        return VIOLATED
    if not statuses or INCONCLUSIVE in statuses:
        return INCONCLUSIVE
    return CONSISTENT
