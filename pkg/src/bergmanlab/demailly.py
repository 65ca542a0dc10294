"""Demailly approximants ``V_m = (1/2m) log K_{mV}`` and their diagnostics.

The two-sided bound for psh weights reads

    V(z) - C1/m  <=  V_m(z)  <=  ess sup_{B(z,r)} V + (1/m) log(C2 / r^n),

with ``C2 = sqrt(n!/pi^n)`` coming from the mean-value inequality and ``C1``
estimated empirically here. For general weights ``V_m`` tends to the psh
envelope, which :func:`converge_run` compares against the envelope oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bergman import DEFAULT_CLIP, basis_degree, engine_for
from .domains import Domain, as_points, ball_volume, dist_to_boundary, real_coords
from .exceptions import ContractError
from .quadrature import DEFAULT_TOL
from .weights import SampledField, Weight, eval_weight, require_psh, usc_regularize, weight_esssup

DEFAULT_SCHEDULE = (1, 2, 4, 8, 16, 32, 64)
BOUND_TOL = 1e-9


def c2_constant(n: int) -> float:
    """``sqrt(n!/pi^n)``, so that ``(1/2) log(1/Vol B(z,r)) = log(C2/r^n)``."""
    return math.sqrt(math.factorial(n) / math.pi ** n)


@dataclass
class Constants:
    n: int
    C2: float
    C1_estimate: float = float("nan")

    @classmethod
    def for_dim(cls, n: int, c1: float = float("nan")):
        return cls(n, c2_constant(n), c1)

    def identity_gap(self, r: float) -> float:
        """``(1/2) log(1/Vol B(r)) - log(C2/r^n)``; zero up to rounding."""
        return 0.5 * math.log(1 / ball_volume(self.n, r)) - math.log(self.C2 / r ** self.n)


def _default_domain(w: Weight) -> Domain:
    return Domain.disk() if w.n == 1 else Domain.polydisk()


def _scalar_input(z, n) -> bool:
    return np.ndim(z) == 0 or (n > 1 and np.ndim(z) == 1)


class Approximant:
    """``z -> V_m(z)`` for one weight and one ``m`` (engine built once)."""

    def __init__(self, w: Weight, m: int, max_degree: int | None = None,
                 quad_tol: float = DEFAULT_TOL, clip_threshold: float = DEFAULT_CLIP,
                 engine: str = "auto"):
        if m < 1:
            raise ValueError("m must be a positive integer")
        self.weight = w
        self.m = m
        self.max_degree = basis_degree(m, w.gamma_max, w.bound) if max_degree is None else max_degree
        self.engine = engine_for(w, m, self.max_degree, quad_tol, clip_threshold, engine)

    def values_and_tail(self, points):
        """``(V_m, tail)``; the tail is the V_m-scale uncertainty ``log1p(tail/K)/2m``."""
        logk, rel = self.engine.log_kernel(points)
        return logk / (2 * self.m), np.log1p(rel) / (2 * self.m)

    def __call__(self, points):
        return self.values_and_tail(points)[0]


def demailly_value(w: Weight, m: int, z, max_degree: int | None = None,
                   quad_tol: float = DEFAULT_TOL, engine: str = "auto",
                   clip_threshold: float = DEFAULT_CLIP):
    """``(1/2m) log K_{mV}(z)``; ``-inf`` where the truncated kernel vanishes."""
    vals = Approximant(w, m, max_degree, quad_tol, clip_threshold, engine)(z)
    return float(vals[0]) if _scalar_input(z, w.n) else vals


def select_radius(domain: Domain, z, m: int) -> float:
    """``r = min(dist(z, boundary) / 2, m^{-1/2})``."""
    return min(0.5 * dist_to_boundary(domain, z), m ** -0.5)


def upper_bound_check(w: Weight, m: int, z, r: float, v_m: float, domain: Domain | None = None) -> float:
    """Signed slack of the mean-value upper bound (nonnegative when it holds)."""
    domain = domain or _default_domain(w)
    z = as_points(z, w.n)[0]
    d = dist_to_boundary(domain, z.reshape(1, -1))[0]
    if not 0 < r < d:
        raise ValueError(f"radius {r:g} must lie in (0, dist(z, boundary) = {d:g})")
    bound = weight_esssup(w, z, r) + math.log(c2_constant(w.n) / r ** w.n) / m
    if v_m == -np.inf:
        return np.inf
    return float(bound - v_m)


def lower_bound_check(w: Weight, m: int, z, v_m: float) -> float:
    """Scaled deficit ``m (V(z) - V_m(z))`` for psh weights (``-inf`` on poles)."""
    require_psh(w)
    v = float(eval_weight(w, z)[0])
    if v == -np.inf:
        return -np.inf
    return float(m * (v - v_m))


# --------------------------------------------------------------------------
# convergence runs

REPORT_FIELDS = ("weight", "m", "point", "V_m", "V_tilde", "error", "tail",
                 "lower_slack", "upper_slack", "r_used")


@dataclass
class ConvergenceReport:
    """Rows sorted by (weight, point index, m) plus a summary dictionary."""

    weight: str
    n: int
    m_schedule: tuple
    points: np.ndarray
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def column(self, key, m=None) -> np.ndarray:
        rows = self.rows if m is None else [r for r in self.rows if r["m"] == m]
        return np.asarray([r[key] for r in rows], dtype=float)

    def values_at(self, m: int) -> np.ndarray:
        """``V_m`` ordered like ``points``."""
        return self.column("V_m", m)

    @property
    def header(self):
        cols = ["weight", "m"]
        for j in range(1, self.n + 1):
            cols += [f"re_z{j}", f"im_z{j}"]
        return cols + ["V_m", "V_tilde", "error", "tail", "lower_slack", "upper_slack", "r_used"]

    def csv_rows(self):
        real = real_coords(self.points)
        for r in self.rows:
            yield [r["weight"], r["m"], *real[r["point"]], r["V_m"], r["V_tilde"], r["error"],
                   r["tail"], r["lower_slack"], r["upper_slack"], r["r_used"]]


def _error(v_m, v_t):
    if np.isnan(v_t):
        return np.nan
    if v_m == -np.inf and v_t == -np.inf:
        return 0.0
    return v_m - v_t


def row_violates(upper_slack: float, tail: float, lower_slack: float, error: float) -> bool:
    """Nonconforming report row: a bound fails beyond tolerance or ``V_m`` collapses.

    An error of ``-inf`` means ``V_m = -inf`` where the reference is finite.
    ``+inf`` is legitimate: on a pole set with ``m gamma < 1`` the constant
    monomial is still admissible, so ``V_m`` stays finite there.
    """
    if upper_slack < -(tail + BOUND_TOL):
        return True
    if np.isfinite(lower_slack) and lower_slack < -BOUND_TOL:
        return True
    return bool(error == -np.inf)


def converge_run(w: Weight, m_schedule=DEFAULT_SCHEDULE, points=None, domain: Domain | None = None,
                 basis_schedule=None, quad_tol: float = DEFAULT_TOL, envelope=None,
                 c1: float | None = None, clip_threshold: float = DEFAULT_CLIP) -> ConvergenceReport:
    """Evaluate ``V_m`` over a schedule and record errors and bound slacks.

    ``envelope`` is a callable oracle for the psh envelope (e.g. an
    :class:`~bergmanlab.envelope.EnvelopeResult`); without one the error
    column holds the Cauchy surrogate ``V_{2m} - V_m``. ``basis_schedule``
    maps ``m`` to the degree cap (default ``max(60, 4 m gamma + 40)``).
    ``lower_slack`` is ``V_m - (V_tilde - C1/m)`` with ``C1`` either given or
    the run's own largest deficit ``m (V_tilde - V_m)``.
    """
    schedule = tuple(int(m) for m in m_schedule)
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("m schedule must be strictly increasing")
    domain = domain or _default_domain(w)
    pts = as_points(points, w.n)
    basis_schedule = basis_schedule or (lambda m: basis_degree(m, w.gamma_max, w.bound))
    v_tilde = np.asarray(envelope(pts), dtype=float) if envelope is not None else np.full(len(pts), np.nan)
    c2 = c2_constant(w.n)

    vm, tails = {}, {}
    for m in schedule:
        vm[m], tails[m] = Approximant(w, m, basis_schedule(m), quad_tol, clip_threshold).values_and_tail(pts)

    errors = {}
    for i, m in enumerate(schedule):
        if envelope is not None:
            errors[m] = np.array([_error(a, b) for a, b in zip(vm[m], v_tilde)])
        elif 2 * m in vm:
            errors[m] = np.array([_error(a, b) for a, b in zip(vm[2 * m], vm[m])])
        else:
            errors[m] = np.full(len(pts), np.nan)

    if c1 is None:
        deficits = [m * (v_tilde[k] - vm[m][k]) for m in schedule for k in range(len(pts))
                    if np.isfinite(v_tilde[k]) and np.isfinite(vm[m][k])]
        c1 = max(deficits) if deficits else np.nan

    rows = []
    violations = 0
    for k in range(len(pts)):
        for m in schedule:
            r = select_radius(domain, pts[k], m)
            v = float(vm[m][k])
            upper = upper_bound_check(w, m, pts[k], r, v, domain)
            tail = float(tails[m][k])
            lower = np.nan
            if np.isfinite(v_tilde[k]) and np.isfinite(c1):
                lower = v - (v_tilde[k] - c1 / m)
            elif v_tilde[k] == -np.inf:
                lower = np.inf
            err = float(errors[m][k])
            bad = row_violates(upper, tail, lower, err)
            violations += int(bad)
            rows.append({"weight": w.name, "m": m, "point": k, "V_m": v, "V_tilde": float(v_tilde[k]),
                         "error": err, "tail": tail, "lower_slack": float(lower),
                         "upper_slack": float(upper), "r_used": r, "violation": bad})

    report = ConvergenceReport(w.name, w.n, schedule, pts, rows)
    max_err = []
    for m in schedule:
        e = np.abs(errors[m])
        e = e[np.isfinite(e)]
        max_err.append(float(e.max()) if e.size else np.nan)
    finite = [(m, e) for m, e in zip(schedule, max_err) if np.isfinite(e) and e > 0]
    rate = np.nan
    if len(finite) >= 2:
        rate = float(np.polyfit(np.log([m for m, _ in finite]), np.log([e for _, e in finite]), 1)[0])
    trend = [e for e in max_err if np.isfinite(e)]
    report.summary = {
        "weight": w.name,
        "max_error_at_mmax": max_err[-1] if envelope is not None else (
            trend[-1] if trend else np.nan),
        "max_error_by_m": dict(zip(schedule, max_err)),
        "monotone_trend": _decreasing_trend(trend),
        "rate_exponent": rate,
        "C1_estimate": float(c1),
        "bounds_violations": violations,
        "C2": c2,
    }
    return report


def _decreasing_trend(errors) -> bool:
    """Max error non-increasing over the top half of the schedule and below its first value.

    Small ``m`` may overshoot before the decay sets in, so only the tail of
    the schedule is required to be monotone.
    """
    if len(errors) < 2:
        return True
    tail = errors[len(errors) - max(2, len(errors) // 2):]
    return bool(errors[-1] <= errors[0] + 1e-12 and all(b <= a + 1e-12 for a, b in zip(tail, tail[1:])))


def top_half(schedule) -> tuple:
    """The largest ``floor(k/2)`` entries of a schedule of length ``k >= 2``."""
    schedule = tuple(sorted(schedule))
    if len(schedule) < 2:
        raise ValueError("limsup surrogate needs at least two values of m")
    return schedule[len(schedule) - len(schedule) // 2:]


def limsup_regularized(report: ConvergenceReport, domain: Domain | None = None, radii=None) -> SampledField:
    """``Phi``: max of ``V_m`` over the top half of the schedule, then usc-regularized."""
    ms = top_half(report.m_schedule)
    stack = np.vstack([report.values_at(m) for m in ms])
    phi = SampledField(report.points, stack.max(axis=0), domain)
    if len(phi) < 3:
        return phi
    return usc_regularize(phi, radii)


def estimate_c1(weights, points, m_schedule=DEFAULT_SCHEDULE, quad_tol: float = DEFAULT_TOL) -> float:
    """Largest deficit ``m (V - V_m)`` over psh weights, points and the schedule."""
    best = -np.inf
    for w in weights:
        if w.psh != "yes":
            raise ContractError(f"C1 is only estimated from psh weights, got {w.name!r}")
        pts = as_points(points, w.n)
        v = eval_weight(w, pts)
        for m in m_schedule:
            vm = Approximant(w, m, quad_tol=quad_tol)(pts)
            ok = np.isfinite(v) & np.isfinite(vm)
            if ok.any():
                best = max(best, float(np.max(m * (v[ok] - vm[ok]))))
    return best
