"""Plurisubharmonic envelope of toric weights in logarithmic coordinates.

A toric function on the disk or polydisk is psh iff, as a function of
``t = (log|z_1|, ..., log|z_n|)``, it is convex and nondecreasing in each
variable. Writing ``u(t) = sum_j gamma_j t_j + w(t)`` with ``w`` the bounded
part, every psh minorant ``psi`` of ``u`` satisfies: ``psi - gamma . t`` is
convex and bounded above along rays toward ``-inf``, hence nondecreasing. So
the envelope is ``gamma . t`` plus the largest convex, coordinatewise
nondecreasing minorant of ``w`` on the box, obtained by alternating suffix
minima with lower convex hulls until nothing moves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, replace
from typing import Callable

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .domains import Domain, GridSpec, as_points
from .exceptions import ContractError, DomainError, IterationError
from .weights import SampledField, Weight

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 50
DEFAULT_LOG_POINTS = 401


@dataclass(frozen=True)
class LogProfile:
    """Bounded part ``w`` sampled on a product grid in ``t = log r``.

    ``slopes`` are the pole coefficients; the full profile is
    ``u(t) = w(t) + sum_j slopes[j] * t_j``.
    """

    t_grids: tuple
    values: np.ndarray
    slopes: tuple

    def __post_init__(self):
        grids = tuple(np.asarray(t, dtype=float) for t in self.t_grids)
        for t in grids:
            if np.any(np.diff(t) <= 0):
                raise ValueError("log grid must be strictly increasing")
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != tuple(len(t) for t in grids):
            raise ValueError("values shape does not match the grid")
        object.__setattr__(self, "t_grids", grids)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "slopes", tuple(float(s) for s in self.slopes))

    @property
    def ndim(self) -> int:
        return len(self.t_grids)

    def with_values(self, values) -> "LogProfile":
        return replace(self, values=np.asarray(values, dtype=float))

    def pole_part(self) -> np.ndarray:
        mesh = np.meshgrid(*self.t_grids, indexing="ij")
        return sum(s * t for s, t in zip(self.slopes, mesh)) if self.ndim else 0.0

    @property
    def u(self) -> np.ndarray:
        return self.values + self.pole_part()


def log_grid(radius: float, n_points: int = DEFAULT_LOG_POINTS, t_min: float = -8.0,
             t_max: float | None = None) -> np.ndarray:
    """Uniform grid in ``t`` up to ``log radius`` (the boundary limit) by default."""
    if t_max is None:
        t_max = math.log(radius)
    if not t_min < t_max:
        raise DomainError("log floor must lie below the upper end of the log grid")
    return np.linspace(t_min, t_max, n_points)


def to_log_profile(w: Weight, grid: GridSpec | None = None, domain: Domain | None = None,
                   n_points: int | None = None, t_min: float | None = None,
                   extra_points=None) -> LogProfile:
    """Sample the bounded part of a toric weight at ``z_j = exp(t_j)``.

    The grid runs from ``log_floor`` to ``log R`` inclusive: the upper node
    holds the boundary limit of the weight, which the envelope must see.
    The log-moduli of ``extra_points`` and of the weight's profile
    breakpoints inside that range become extra nodes.
    """
    if not w.toric:
        raise ContractError(f"weight {w.name!r} is not toric; no log-coordinate oracle")
    domain = domain or (Domain.disk() if w.n == 1 else Domain.polydisk())
    if n_points is None:
        n_points = grid.points_per_axis if grid is not None else DEFAULT_LOG_POINTS
    if t_min is None:
        t_min = grid.log_floor if grid is not None else -8.0
    grids = tuple(log_grid(r, n_points, t_min) for r in domain.radius)
    if w.breakpoints:
        bp = np.log(np.asarray(w.breakpoints, dtype=float))
        grids = tuple(np.unique(np.concatenate([g, bp[(bp > g[0]) & (bp < g[-1])]])) for g in grids)
    if extra_points is not None:
        extra = np.abs(as_points(extra_points, w.n))
        with np.errstate(divide="ignore"):
            extra_t = np.log(extra)
        grids = tuple(np.unique(np.concatenate([g, et[(et > g[0]) & (et < g[-1])]]))
                      for g, et in zip(grids, extra_t.T))
    mesh = np.meshgrid(*grids, indexing="ij")
    pts = np.column_stack([np.exp(t).ravel() for t in mesh]).astype(complex)
    vals = w.bounded(pts).reshape(mesh[0].shape)
    return LogProfile(grids, vals, w.pole_coeffs)


def monotone_minorant(profile: LogProfile) -> LogProfile:
    """Largest coordinatewise nondecreasing minorant (suffix minima) of the bounded part."""
    vals = profile.values
    for axis in range(vals.ndim):
        flipped = np.flip(vals, axis=axis)
        vals = np.flip(np.minimum.accumulate(flipped, axis=axis), axis=axis)
    return profile.with_values(vals)


def _lower_hull_1d(t: np.ndarray, u: np.ndarray) -> np.ndarray:
    hull = []
    for i in range(len(t)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b when it lies on or above the chord from a to i
            cross = (t[b] - t[a]) * (u[i] - u[a]) - (u[b] - u[a]) * (t[i] - t[a])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull)


def _lower_planes_2d(t1, t2, vals):
    """Lower facets of the 3-D hull as rows ``(a, b, c)``: ``u = a t1 + b t2 + c``."""
    mesh = np.meshgrid(t1, t2, indexing="ij")
    pts = np.column_stack([mesh[0].ravel(), mesh[1].ravel(), vals.ravel()])
    try:
        hull = ConvexHull(pts)
    except QhullError:
        feats = np.column_stack([pts[:, 0], pts[:, 1], np.ones(len(pts))])
        coef, *_ = np.linalg.lstsq(feats, pts[:, 2], rcond=None)
        if np.max(np.abs(feats @ coef - pts[:, 2])) > 1e-12 * max(1.0, np.abs(pts[:, 2]).max()):
            raise
        return coef.reshape(1, 3)
    eq = hull.equations
    lower = eq[eq[:, 2] < -1e-14]
    planes = np.column_stack([-lower[:, 0] / lower[:, 2], -lower[:, 1] / lower[:, 2],
                              -lower[:, 3] / lower[:, 2]])
    # coplanar facets give duplicate planes; lexicographic order keeps evaluation deterministic
    return planes[np.lexsort(planes.T[::-1])]


def _separable_parts(vals: np.ndarray, tol: float = 1e-12):
    """``(a, b)`` with ``vals[i, j] = a[i] + b[j]`` when that holds to ``tol``, else ``None``."""
    cross = vals - vals[:, :1] - vals[:1, :] + vals[0, 0]
    if np.max(np.abs(cross)) > tol * max(1.0, float(np.abs(vals).max())):
        return None
    return vals[:, 0].copy(), vals[0, :] - vals[0, 0]


def _hull_interp_1d(t: np.ndarray, u: np.ndarray, x: np.ndarray) -> np.ndarray:
    idx = _lower_hull_1d(t, u)
    return np.interp(x, t[idx], u[idx])


def _max_planes(planes: np.ndarray, x1: np.ndarray, x2: np.ndarray, budget: int = 2 ** 22) -> np.ndarray:
    """``max_k (a_k x1 + b_k x2 + c_k)`` evaluated in memory-bounded chunks."""
    x1, x2 = np.ravel(x1), np.ravel(x2)
    out = np.empty(len(x1))
    step = max(1, budget // max(1, len(planes)))
    for lo in range(0, len(x1), step):
        sl = slice(lo, lo + step)
        out[sl] = np.max(planes[:, 0, None] * x1[None, sl] + planes[:, 1, None] * x2[None, sl]
                         + planes[:, 2, None], axis=0)
    return out


def convex_envelope(profile: LogProfile) -> LogProfile:
    """Lower convex hull of the bounded part, evaluated back on the grid."""
    if any(len(t) < 2 for t in profile.t_grids):
        raise ValueError("convex envelope needs at least 2 grid points per axis")
    vals = profile.values
    if not np.all(np.isfinite(vals)):
        raise ValueError("convex envelope needs finite values")
    if profile.ndim == 1:
        t = profile.t_grids[0]
        idx = _lower_hull_1d(t, vals)
        out = np.interp(t, t[idx], vals[idx])
    elif profile.ndim == 2:
        t1, t2 = profile.t_grids
        parts = _separable_parts(vals)
        if parts is not None:
            # the envelope of a(t1) + b(t2) is env(a)(t1) + env(b)(t2)
            out = _hull_interp_1d(t1, parts[0], t1)[:, None] + _hull_interp_1d(t2, parts[1], t2)[None, :]
        else:
            planes = _lower_planes_2d(t1, t2, vals)
            mesh = np.meshgrid(t1, t2, indexing="ij")
            out = _max_planes(planes, mesh[0], mesh[1]).reshape(vals.shape)
    else:
        raise ValueError("only 1-D and 2-D log profiles are supported")
    return profile.with_values(np.minimum(out, vals))


@dataclass
class EnvelopeResult:
    """Grid approximation of the psh envelope plus iteration diagnostics.

    Calling the result evaluates the envelope at arbitrary points of the
    domain (``-inf`` on pole axes).
    """

    weight: Weight
    profile: LogProfile
    field: SampledField
    iterations: int
    final_gap: float
    monotone_fixpoint: bool
    _evaluator: Callable = dc_field(repr=False, default=None)

    def __post_init__(self):
        prof = self.profile
        if prof.ndim == 1:
            t = prof.t_grids[0]
            idx = _lower_hull_1d(t, prof.values)
            tv, vv = t[idx], prof.values[idx]

            def bounded(tt):
                return np.interp(tt[:, 0], tv, vv)
        else:
            t1, t2 = prof.t_grids
            parts = _separable_parts(prof.values)
            if parts is not None:
                i1, i2 = _lower_hull_1d(t1, parts[0]), _lower_hull_1d(t2, parts[1])
                h1, v1, h2, v2 = t1[i1], parts[0][i1], t2[i2], parts[1][i2]

                def bounded(tt):
                    return np.interp(tt[:, 0], h1, v1) + np.interp(tt[:, 1], h2, v2)
            else:
                planes = _lower_planes_2d(t1, t2, prof.values)

                def bounded(tt):
                    a = np.clip(tt[:, 0], t1[0], t1[-1])
                    b = np.clip(tt[:, 1], t2[0], t2[-1])
                    return _max_planes(planes, a, b)
        self._evaluator = bounded

    def bounded(self, points) -> np.ndarray:
        """Bounded part of the envelope at arbitrary points.

        Between log-grid nodes the hull is interpolated linearly in ``t``,
        which can overshoot ``V`` by the interpolation error; pass the points
        as ``extra_points`` when building the envelope to make them nodes.
        Below the log floor the profile is extended flat and capped by ``V``
        (the limit ``t -> -inf`` of a nondecreasing profile never exceeds it).
        """
        pts = as_points(points, self.profile.ndim)
        with np.errstate(divide="ignore"):
            tt = np.log(np.abs(pts))
        out = self._evaluator(tt)
        below = np.any(tt < np.array([g[0] for g in self.profile.t_grids]), axis=1)
        if below.any():
            out[below] = np.minimum(out[below], self.weight.bounded(pts[below]))
        return out

    def __call__(self, points) -> np.ndarray:
        pts = as_points(points, self.profile.ndim)
        out = self.bounded(pts)
        with np.errstate(divide="ignore"):
            tt = np.log(np.abs(pts))
        for j, g in enumerate(self.profile.slopes):
            if g > 0:
                out = out + g * tt[:, j]
        return out

    def summary(self) -> dict:
        return {"iterations": self.iterations, "final_gap": self.final_gap,
                "monotone_fixpoint": bool(self.monotone_fixpoint)}

    def as_weight(self, refine: int = 64) -> Weight:
        """Lift the envelope to a psh toric weight dominated by ``V``.

        The profile is piecewise linear in ``t`` through the hull vertices.
        Where ``V`` is convex in ``t`` such chords overshoot it between nodes,
        so the lift is shifted down by the largest overshoot found on a grid
        ``refine`` times finer, plus a second-difference bound on what lies
        between the fine samples (recorded as ``params["shift"]``). A constant
        shift keeps the lift psh.
        """
        prof = self.profile
        w = self.weight
        n = prof.ndim
        if n == 1:
            axes = [(prof.t_grids[0], prof.values)]
        else:
            parts = _separable_parts(prof.values)
            if parts is None:
                raise ContractError("2-D envelope is not separable; cannot lift to a toric weight")
            axes = list(zip(prof.t_grids, parts))
        anchor = np.exp([g[0] for g in prof.t_grids])
        profiles, shift, breakpoints = [], 0.0, set()
        for j, (tg, vals) in enumerate(axes):
            idx = _lower_hull_1d(tg, vals)
            tv, vv = tg[idx], vals[idx]
            # V along axis j with the other coordinates at the floor, offset like ``vals``
            fine = np.concatenate([np.linspace(a, b, refine, endpoint=False) for a, b in zip(tg[:-1], tg[1:])]
                                  + [tg[-1:]])
            line = np.tile(anchor.astype(complex), (len(fine), 1))
            line[:, j] = np.exp(fine)
            true = w.bounded(line) - (w.bounded(anchor.reshape(1, n).astype(complex))[0] if j > 0 else 0.0)
            # chord error of the sampled V inside each segment; segment ends may be kinks
            d2 = true[2:] - 2 * true[1:-1] + true[:-2]
            interior = (np.arange(1, len(fine) - 1) % refine) != 0
            between = max(0.0, float(np.max(d2[interior], initial=0.0))) / 8
            shift += max(0.0, float(np.max(np.interp(fine, tv, vv) - true)) + between)

            def v(r, tv=tv, vv=vv):
                with np.errstate(divide="ignore"):
                    return np.interp(np.log(np.asarray(r, dtype=float)), tv, vv)
            profiles.append(v)
            if n == 1:
                breakpoints.update(np.exp(tv[1:-1]).tolist())
        first = profiles[0]
        profiles[0] = lambda r, first=first, shift=shift: first(r) - shift
        profiles = tuple(profiles)

        def bounded(points, profiles=profiles):
            mod = np.abs(points)
            return sum(p(mod[:, j]) for j, p in enumerate(profiles))

        return Weight(name=f"envelope({w.name})", pole_coeffs=prof.slopes,
                      bounded_part=bounded, bound=float(np.abs(prof.values).max()) + shift, toric=True,
                      psh="yes", profiles=profiles, breakpoints=tuple(sorted(breakpoints)),
                      params={"shift": shift})


def psh_envelope_toric(w: Weight, grid: GridSpec | None = None, tol: float = DEFAULT_TOL,
                       max_iter: int = DEFAULT_MAX_ITER, domain: Domain | None = None,
                       n_points: int | None = None, t_min: float | None = None,
                       extra_points=None) -> EnvelopeResult:
    """Alternate monotone minorant and convex envelope to a fixpoint.

    ``extra_points`` are added as log-grid nodes (see :func:`to_log_profile`)
    so that evaluating the result there needs no interpolation.
    """
    prof = to_log_profile(w, grid, domain, n_points, t_min, extra_points)
    return envelope_of_profile(prof, w, tol, max_iter)


def envelope_of_profile(prof: LogProfile, w: Weight, tol: float = DEFAULT_TOL,
                        max_iter: int = DEFAULT_MAX_ITER) -> EnvelopeResult:
    cur = prof
    gap = np.inf
    for it in range(1, max_iter + 1):
        nxt = convex_envelope(monotone_minorant(cur))
        gap = float(np.max(np.abs(nxt.values - cur.values)))
        cur = nxt
        if gap < tol:
            break
    else:
        raise IterationError(f"envelope iteration did not converge in {max_iter} steps (gap {gap:.3g})",
                             gap=gap)
    mono_gap = float(np.max(np.abs(monotone_minorant(cur).values - cur.values)))
    mesh = np.meshgrid(*cur.t_grids, indexing="ij")
    pts = np.column_stack([np.exp(t).ravel() for t in mesh]).astype(complex)
    fld = SampledField(pts, cur.u.ravel())
    return EnvelopeResult(w, cur, fld, it, gap, mono_gap < tol)


# --------------------------------------------------------------------------
# sub-mean-value diagnostic

@dataclass
class SubMeanReport:
    max_violation: float
    tested: int
    skipped: list

    def passed(self, tol: float = 1e-6) -> bool:
        return self.max_violation <= tol


def default_centers(n: int, radius: float = 1.0) -> np.ndarray:
    """Ten deterministic interior centres."""
    rs = radius * np.array([0.0, 0.15, 0.3, 0.45, 0.6])
    ph = np.exp(1j * np.array([0.3, 2.1]))
    c = np.array([r * p for r in rs for p in ph])
    if n == 1:
        return c.reshape(-1, 1)
    return np.column_stack([c, c[::-1] * 0.8])


def _field_callable(fld, n):
    if callable(fld):
        return fld
    if isinstance(fld, SampledField):
        pts = fld.points
        if n != 1:
            raise ContractError("sampled polydisk fields must be passed as callables")
        z = pts[:, 0]
        if np.allclose(z.imag, 0) and np.all(z.real >= 0):
            order = np.argsort(z.real)
            rr, vv = z.real[order], fld.values[order]
            return lambda p: np.interp(np.abs(as_points(p, 1)[:, 0]), rr, vv)
        from scipy.interpolate import LinearNDInterpolator
        interp = LinearNDInterpolator(np.column_stack([z.real, z.imag]), fld.values)
        return lambda p: interp(as_points(p, 1)[:, 0].real, as_points(p, 1)[:, 0].imag)
    raise TypeError("field must be callable or a SampledField")


def subharmonicity_check(fld, circles, centers=None, domain: Domain | None = None,
                         n_theta: int = 256, n: int | None = None) -> SubMeanReport:
    """Largest ``f(c) - mean_circle f`` over centres, radii and complex directions.

    Circles leaving the domain are skipped and recorded. For the polydisk the
    circles run along ``e_1``, ``e_2`` and ``(e_1 + e_2)/sqrt 2``.
    """
    if n is None:
        n = domain.complex_dim if domain is not None else (
            fld.points.shape[1] if isinstance(fld, SampledField) else 1)
    domain = domain or (Domain.disk() if n == 1 else Domain.polydisk())
    f = _field_callable(fld, n)
    centers = default_centers(n, min(domain.radius)) if centers is None else as_points(centers, n)
    if n == 1:
        dirs = [np.array([1.0 + 0j])]
    else:
        dirs = [np.array([1.0, 0j]), np.array([0j, 1.0]), np.array([1.0, 1.0]) / math.sqrt(2)]
    circle = np.exp(2j * np.pi * np.arange(n_theta) / n_theta)
    worst = -np.inf
    tested = 0
    skipped = []
    radius = np.asarray(domain.radius)
    for c in centers:
        fc = float(np.asarray(f(c.reshape(1, n)))[0])
        for rho in circles:
            for d in dirs:
                ring = c[None, :] + rho * circle[:, None] * d[None, :]
                if np.any(np.abs(ring) >= radius):
                    skipped.append((tuple(c), float(rho)))
                    continue
                vals = np.asarray(f(ring), dtype=float)
                mean = vals.mean()
                if fc == -np.inf:
                    v = -np.inf
                elif mean == -np.inf:
                    v = np.inf
                else:
                    v = fc - mean
                worst = max(worst, v)
                tested += 1
    return SubMeanReport(float(worst), tested, skipped)
