"""Weights ``V = sum_j gamma_j log|z_j| + b(z) + c``, a small catalog of test
weights, sampled fields and the discrete weak usc regularization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from .domains import Domain, as_points, grid_spacing, point_columns, real_coords
from .exceptions import CatalogError, ContractError, DomainError

PSH_STATES = ("yes", "no", "unknown")


@dataclass(frozen=True, eq=False)
class Weight:
    """A measurable weight with coordinate-axis log poles and a bounded part.

    ``bounded_part`` maps a ``(k, n)`` complex array to ``k`` reals bounded by
    ``bound`` in absolute value. For toric weights ``profiles`` holds one
    radial profile ``v_j(r)`` per axis with ``b(z) = sum_j v_j(|z_j|)``; the
    Bergman engines integrate those profiles directly. ``offset`` is a constant
    added to ``b`` and is treated analytically everywhere.
    """

    name: str
    pole_coeffs: tuple
    bounded_part: Callable[[np.ndarray], np.ndarray]
    bound: float = 0.0
    toric: bool = True
    psh: str = "unknown"
    profiles: tuple | None = None
    offset: float = 0.0
    breakpoints: tuple = ()
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        gam = tuple(float(g) for g in self.pole_coeffs)
        if any(g < 0 for g in gam):
            raise ValueError("pole coefficients must be nonnegative")
        object.__setattr__(self, "pole_coeffs", gam)
        if self.psh not in PSH_STATES:
            raise ValueError(f"psh flag must be one of {PSH_STATES}")
        if self.toric and self.profiles is None:
            raise ValueError("toric weights need per-axis radial profiles")

    @property
    def n(self) -> int:
        return len(self.pole_coeffs)

    @property
    def gamma_max(self) -> float:
        return max(self.pole_coeffs)

    def __call__(self, points) -> np.ndarray:
        return eval_weight(self, points)

    def shifted(self, c: float) -> "Weight":
        """The weight ``V + c``."""
        return replace(self, name=f"{self.name}{c:+g}", offset=self.offset + float(c))

    def bounded(self, points) -> np.ndarray:
        """``b(z) + offset`` on a ``(k, n)`` array."""
        return np.asarray(self.bounded_part(points), dtype=float) + self.offset

    def profile_values(self, axis: int, r) -> np.ndarray:
        """Radial profile ``v_axis(r)`` (without the offset)."""
        return np.asarray(self.profiles[axis](np.asarray(r, dtype=float)), dtype=float)


def eval_weight(w: Weight, z, domain: Domain | None = None) -> np.ndarray:
    """Evaluate ``V`` at points; ``-inf`` exactly on pole axes with ``gamma_j > 0``.

    Membership is only checked when ``domain`` is given (a :class:`Weight`
    is a formula and does not carry its domain); points outside raise
    :class:`DomainError`.
    """
    pts = as_points(z, w.n)
    if domain is not None and not np.all(domain.contains(pts)):
        raise DomainError("point outside the domain")
    out = w.bounded(pts)
    mod = np.abs(pts)
    for j, g in enumerate(w.pole_coeffs):
        if g > 0:
            with np.errstate(divide="ignore"):
                out = out + g * np.log(mod[:, j])
    return out


# --------------------------------------------------------------------------
# catalog

def _sum_profiles(profiles):
    def bounded(points):
        mod = np.abs(points)
        return sum(p(mod[:, j]) for j, p in enumerate(profiles))
    return bounded


def _toric(name, n, gammas, profile, bound, psh, breakpoints=(), params=None):
    profiles = tuple(profile for _ in range(n))
    return Weight(
        name=name,
        pole_coeffs=tuple(gammas),
        bounded_part=_sum_profiles(profiles),
        bound=bound,
        toric=True,
        psh=psh,
        profiles=profiles,
        breakpoints=tuple(breakpoints),
        params=dict(params or {}),
    )


def _zero_profile(r):
    return np.zeros_like(np.asarray(r, dtype=float))


def _sq_profile(r):
    return np.asarray(r, dtype=float) ** 2


def _neg_sq_profile(r):
    return -np.asarray(r, dtype=float) ** 2


def catalog(name: str, n: int = 1, radius: float = 1.0, **params) -> Weight:
    """Build a named test weight on the disk (``n = 1``) or polydisk (``n = 2``).

    Names: ``zero``, ``log_pole`` (``gamma``), ``neg_abs_square``,
    ``abs_square``, ``radial_custom`` (``table`` of ``(r, v)`` pairs,
    piecewise linear), ``angular_bump`` (``eps``; non-toric, disk only).
    """
    if n not in (1, 2):
        raise CatalogError("complex dimension must be 1 or 2")
    r2 = n * radius ** 2
    if name == "zero":
        return _toric("zero", n, (0.0,) * n, _zero_profile, 0.0, "yes")
    if name == "log_pole":
        gamma = params.get("gamma", 1.0)
        gammas = tuple(float(g) for g in np.broadcast_to(np.asarray(gamma, dtype=float), (n,)))
        if any(g < 0 for g in gammas):
            raise CatalogError("log_pole needs gamma >= 0")
        return _toric("log_pole", n, gammas, _zero_profile, 0.0, "yes", params={"gamma": gammas})
    if name == "abs_square":
        return _toric("abs_square", n, (0.0,) * n, _sq_profile, r2, "yes")
    if name == "neg_abs_square":
        return _toric("neg_abs_square", n, (0.0,) * n, _neg_sq_profile, r2, "no")
    if name == "radial_custom":
        table = params.get("table")
        if table is None:
            raise CatalogError("radial_custom needs a table of (r, value) pairs")
        table = np.asarray(table, dtype=float)
        if table.ndim != 2 or table.shape[1] != 2 or len(table) < 2:
            raise CatalogError("radial_custom table must be a list of (r, value) pairs")
        rs, vs = table[:, 0], table[:, 1]
        if np.any(np.diff(rs) <= 0):
            raise CatalogError("radial_custom table radii must be strictly increasing")

        def profile(r, rs=rs, vs=vs):
            return np.interp(np.asarray(r, dtype=float), rs, vs)

        bp = tuple(float(x) for x in rs if 0 < x < radius)
        return _toric("radial_custom", n, (0.0,) * n, profile, float(np.abs(vs).max()) * n,
                      params.get("psh", "unknown"), breakpoints=bp,
                      params={"table": [tuple(row) for row in table.tolist()]})
    if name == "angular_bump":
        if n != 1:
            raise CatalogError("angular_bump is defined on the disk only")
        eps = float(params.get("eps", 0.5))
        center = complex(params.get("center", 0.5))
        width = float(params.get("width", 0.3))

        def bump(points, eps=eps, center=center, width=width):
            d2 = np.abs(points[:, 0] - center) ** 2
            return eps * np.exp(-d2 / width ** 2)

        return Weight(
            name="angular_bump",
            pole_coeffs=(0.0,),
            bounded_part=bump,
            bound=abs(eps),
            toric=eps == 0.0,
            psh="yes" if eps == 0.0 else "unknown",
            profiles=(_zero_profile,) if eps == 0.0 else None,
            params={"eps": eps, "center": center, "width": width},
        )
    raise CatalogError(f"unknown catalog weight {name!r}")


CATALOG_NAMES = ("zero", "log_pole", "neg_abs_square", "abs_square", "radial_custom", "angular_bump")


def check_bound(w: Weight, points) -> float:
    """Largest ``|b(z)|`` over the sample; compare against ``w.bound``."""
    vals = w.bounded_part(as_points(points, w.n))
    return float(np.max(np.abs(vals))) if len(vals) else 0.0


# --------------------------------------------------------------------------
# sampled fields

@dataclass
class SampledField:
    """Values (``-inf`` allowed, ``+inf`` not) attached to grid points."""

    points: np.ndarray
    values: np.ndarray
    domain: Domain | None = None
    grid: object = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=complex)
        if self.points.ndim == 1:
            self.points = self.points.reshape(-1, 1)
        self.values = np.asarray(self.values, dtype=float).copy()
        if self.values.shape != (self.points.shape[0],):
            raise ValueError("values must have one entry per grid point")
        if np.any(np.isposinf(self.values)) or np.any(np.isnan(self.values)):
            raise ValueError("sampled fields may not contain +inf or nan")

    @classmethod
    def from_weight(cls, w: Weight, points, domain=None, grid=None):
        pts = as_points(points, w.n)
        return cls(pts, eval_weight(w, pts), domain, grid)

    def __len__(self):
        return len(self.values)

    @property
    def header(self):
        return point_columns(self.points.shape[1]) + ["value"]

    def rows(self):
        for coords, v in zip(real_coords(self.points), self.values):
            yield [*coords, v]


def _quadratic_features(x: np.ndarray) -> np.ndarray:
    d = x.shape[1]
    cols = [np.ones(len(x))]
    cols += [x[:, i] for i in range(d)]
    cols += [x[:, i] * x[:, j] for i in range(d) for j in range(i, d)]
    return np.column_stack(cols)


def _predict_center(offsets: np.ndarray, vals: np.ndarray) -> float:
    if np.all(vals == vals[0]):
        return float(vals[0])
    scale = np.abs(offsets).max()
    feats = _quadratic_features(offsets / scale)
    if len(vals) < feats.shape[1]:
        feats = feats[:, : 1 + offsets.shape[1]]
    coef, *_ = np.linalg.lstsq(feats, vals, rcond=None)
    # smooth fields may peak at the centre, so allow half the spread beyond the range
    lo, hi = vals.min(), vals.max()
    pad = 0.5 * (hi - lo)
    return float(np.clip(coef[0], lo - pad, hi + pad))


def usc_regularize(field: SampledField, radii=None, tol: float = 1e-9,
                   spike_ratio: float = 2.0, n_fit: int | None = None) -> SampledField:
    """Discrete weak usc regularization of a sampled field.

    A single grid point carries no Lebesgue mass, so a value that disagrees
    with what its neighbourhood predicts is invisible to essential suprema.
    Each point is compared with a least-squares quadratic fitted to its
    nearest finite neighbours inside the largest radius. With
    ``margin = tol + spike_ratio * (neighbour spread)``, a point is isolated
    when it leaves the value range of its neighbours in the smallest ball by
    more than ``margin`` and its residual also exceeds ``margin``. It then
    takes the fitted value, kept within the neighbour range widened by half
    its spread. Isolated points are removed greedily, strongest first, so
    one outlier never contaminates its neighbours' fits. Every other value is kept, which makes
    the operator idempotent and leaves continuous fields unchanged.
    ``-inf`` samples are kept: on a grid they mark declared log poles.

    ``radii`` must be strictly decreasing with smallest element at least twice
    the grid spacing; default ``(8h, 4h, 2h)``.
    """
    if radii is not None and len(tuple(radii)) == 0:
        raise ValueError("radii schedule must be non-empty")
    pts = field.points
    vals = field.values.copy()
    k = len(vals)
    if k < 3:
        return SampledField(pts, vals, field.domain, field.grid)
    h = grid_spacing(pts)
    if radii is None:
        radii = (8 * h, 4 * h, 2 * h)
    radii = tuple(float(r) for r in radii)
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    if radii[-1] < 2 * h * (1 - 1e-9):
        raise ValueError(f"smallest radius {radii[-1]:g} is below twice the grid spacing {h:g}")

    real = real_coords(pts)
    d = real.shape[1]
    if n_fit is None:
        n_fit = 3 * (1 + d + d * (d + 1) // 2)
    tree = cKDTree(real)
    dist, idx = tree.query(real, k=min(n_fit + 1, k), distance_upper_bound=radii[0])
    finite = np.isfinite(vals)
    flagged = np.zeros(k, dtype=bool)

    def neighbours(i):
        sel = [j for dj, j in zip(dist[i], idx[i]) if j < k and j != i and np.isfinite(dj)]
        return np.asarray([j for j in sel if finite[j] and not flagged[j]], dtype=int)

    def near(i):
        return [j for dj, j in zip(dist[i], idx[i])
                if j < k and j != i and dj <= radii[-1] and finite[j] and not flagged[j]]

    def score(i):
        nb = neighbours(i)
        close = near(i)
        if len(nb) < 2 or not close:
            return -np.inf, vals[i]
        nv = vals[nb]
        # trimmed range: one outlier nearby must not hide another
        srt = np.sort(nv)
        spread = srt[-2] - srt[1] if len(srt) >= 4 else srt[-1] - srt[0]
        margin = tol + spike_ratio * spread
        # an isolated modification must stick out of its nearest neighbours' range
        cv = vals[close]
        if max(vals[i] - cv.max(), cv.min() - vals[i]) <= margin:
            return -np.inf, vals[i]
        pred = _predict_center(real[nb] - real[i], nv)
        return abs(vals[i] - pred) - margin, pred

    candidates = np.flatnonzero(finite)
    while True:
        scored = {i: score(i) for i in candidates if not flagged[i]}
        bad = {i: s for i, s in scored.items() if s[0] > 0}
        if not bad:
            break
        # flag local maxima of the score among flagged candidates
        chosen = []
        for i, (s, _) in bad.items():
            nb = [j for j in idx[i] if j < k and j != i]
            if all(bad.get(j, (-np.inf,))[0] <= s for j in nb):
                chosen.append(i)
        for i in chosen:
            flagged[i] = True
    out = vals.copy()
    for i in np.flatnonzero(flagged):
        nb = neighbours(i)
        out[i] = _predict_center(real[nb] - real[i], vals[nb])
    return SampledField(pts, out, field.domain, field.grid)


def grid_esssup(values: np.ndarray, center_index: int | None = None, tol: float = 1e-9) -> float:
    """Essential supremum of samples in a ball under the neighbour-max convention.

    The centre sample is replaced by the neighbour maximum when it strictly
    exceeds every neighbour by more than ``tol`` (an isolated upward spike).
    """
    vals = np.asarray(values, dtype=float)
    if center_index is None or len(vals) < 2:
        return float(vals.max())
    others = np.delete(vals, center_index)
    nbr = others.max()
    c = vals[center_index]
    return float(nbr if c > nbr + tol else max(c, nbr))


def ball_samples(z: np.ndarray, r: float, n_rings: int = 24, n_dirs: int = 64, seed: int = 0) -> np.ndarray:
    """Sample points in the closed Euclidean ball ``B(z, r)`` of ``C^n``.

    The centre comes first. Rings along complex-line directions cover the
    ball; for ``n = 2`` a deterministic set of unit directions in ``C^2`` is
    used, always including ``z / |z|``.
    """
    z = np.asarray(z, dtype=complex).ravel()
    n = len(z)
    rho = r * np.arange(1, n_rings + 1) / n_rings
    if n == 1:
        dirs = np.exp(2j * np.pi * np.arange(n_dirs) / n_dirs).reshape(-1, 1)
    else:
        rng = np.random.default_rng(seed)
        g = rng.normal(size=(n_dirs, 4))
        base = [np.array([1, 0, 0, 0]), np.array([0, 0, 1, 0]),
                np.array([1, 0, 1, 0]) / math.sqrt(2)]
        nz = np.abs(z)
        if nz.sum() > 0:
            base.append(np.array([nz[0], 0, nz[1], 0]) / np.linalg.norm(nz))
        g = np.vstack(base + list(g))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        unit = g[:, 0::2] + 1j * g[:, 1::2]
        phases = np.exp(2j * np.pi * np.arange(8) / 8)
        # rotate each direction by a common phase per coordinate to sweep the torus
        dirs = np.vstack([unit * ph for ph in phases])
        dirs = np.vstack([dirs, unit * np.array([1, -1])])
    pts = (z + rho[:, None, None] * dirs[None, :, :]).reshape(-1, n)
    return np.vstack([z.reshape(1, n), pts])


def weight_esssup(w: Weight, z, r: float, tol: float = 1e-9) -> float:
    """Grid estimate of ``ess sup_{B(z, r)} V`` (neighbour-max convention)."""
    samples = ball_samples(np.asarray(z, dtype=complex).ravel(), r)
    return grid_esssup(eval_weight(w, samples), center_index=0, tol=tol)


def require_psh(w: Weight):
    if w.psh != "yes":
        raise ContractError(f"weight {w.name!r} is not declared psh (psh={w.psh})")
