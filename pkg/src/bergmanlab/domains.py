"""Model domains (unit disk, unit polydisk), evaluation grids and ball geometry.

Points are stored as complex arrays of shape ``(k, n)``; a single point may be
passed as a scalar (n = 1) or a length-n sequence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, GridError

GRID_MODES = ("radial", "cartesian", "log_radial")


@dataclass(frozen=True)
class Domain:
    """Unit disk (``n = 1``) or polydisk (``n = 2``) with per-axis radii."""

    kind: str = "disk"
    radius: tuple = (1.0,)

    def __post_init__(self):
        if self.kind not in ("disk", "polydisk"):
            raise DomainError(f"unknown domain kind {self.kind!r}")
        radius = self.radius
        if np.isscalar(radius):
            radius = (float(radius),) * (1 if self.kind == "disk" else 2)
        radius = tuple(float(r) for r in radius)
        expected = 1 if self.kind == "disk" else 2
        if len(radius) != expected:
            raise DomainError(f"{self.kind} needs {expected} radius component(s), got {len(radius)}")
        if any(not r > 0 for r in radius):
            raise DomainError("radius components must be strictly positive")
        object.__setattr__(self, "radius", radius)

    @classmethod
    def disk(cls, radius=1.0):
        return cls("disk", (radius,))

    @classmethod
    def polydisk(cls, radius=1.0):
        if np.isscalar(radius):
            radius = (radius, radius)
        return cls("polydisk", tuple(radius))

    @property
    def complex_dim(self) -> int:
        return len(self.radius)

    def contains(self, points) -> np.ndarray:
        pts = as_points(points, self.complex_dim)
        return np.all(np.abs(pts) < np.asarray(self.radius), axis=1)


def as_points(points, n: int) -> np.ndarray:
    """Coerce ``points`` to a complex array of shape ``(k, n)``."""
    pts = np.asarray(points, dtype=complex)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        pts = pts.reshape(-1, 1) if n == 1 else pts.reshape(1, -1)
    if pts.shape[1] != n:
        raise DomainError(f"expected points with {n} coordinate(s), got shape {pts.shape}")
    return pts


def dist_to_boundary(domain: Domain, z) -> np.ndarray | float:
    """Euclidean distance from ``z`` to the boundary of ``domain``.

    For the polydisk this is ``min_j (R_j - |z_j|)``. Raises
    :class:`DomainError` for points outside the domain.
    """
    scalar = np.ndim(z) == 0 or (np.ndim(z) == 1 and len(z) == domain.complex_dim)
    pts = as_points(z, domain.complex_dim)
    gaps = np.asarray(domain.radius) - np.abs(pts)
    if np.any(gaps <= 0):
        raise DomainError("point outside the domain")
    d = gaps.min(axis=1)
    return float(d[0]) if scalar else d


def ball_volume(n: int, r: float) -> float:
    """Lebesgue volume ``pi**n r**(2n) / n!`` of the real 2n-ball."""
    if n not in (1, 2):
        raise ValueError("complex dimension must be 1 or 2")
    if not r > 0:
        raise ValueError("ball radius must be positive")
    return math.pi ** n * r ** (2 * n) / math.factorial(n)


@dataclass(frozen=True)
class GridSpec:
    """Evaluation grid description.

    ``radial`` grids place ``points_per_axis`` radii ``k (R - margin) / p`` on
    the positive real axis (rotated by ``n_phases`` equispaced phases);
    ``cartesian`` grids are square lattices inscribed in the disk of radius
    ``R - margin``; ``log_radial`` grids are uniform in ``t = log|z|`` on
    ``[log_floor, log(R - margin)]``.
    """

    mode: str = "radial"
    points_per_axis: int = 8
    margin: float = 0.05
    log_floor: float = -8.0
    n_phases: int = 1

    def __post_init__(self):
        if self.mode not in GRID_MODES:
            raise GridError(f"unknown grid mode {self.mode!r}; expected one of {GRID_MODES}")
        if int(self.points_per_axis) != self.points_per_axis or self.points_per_axis < 1:
            raise GridError("points_per_axis must be a positive integer")
        if not 0 < self.margin < 1:
            raise GridError("margin must lie in (0, 1)")
        if not self.log_floor < 0:
            raise GridError("log_floor must be negative")
        if self.n_phases < 1:
            raise GridError("n_phases must be >= 1")


def _axis_nodes(spec: GridSpec, radius: float) -> np.ndarray:
    inner = radius - spec.margin
    p = spec.points_per_axis
    if spec.mode == "radial":
        radii = np.arange(p) * (inner / p)
        if spec.n_phases == 1:
            return radii.astype(complex)
        phases = np.exp(2j * np.pi * np.arange(spec.n_phases) / spec.n_phases)
        nodes = [0j] + [r * ph for r in radii[1:] for ph in phases]
        return np.asarray(nodes, dtype=complex)
    if spec.mode == "log_radial":
        t_max = math.log(inner)
        if spec.log_floor >= t_max:
            raise GridError("log_floor must lie below log(radius - margin)")
        return np.exp(np.linspace(spec.log_floor, t_max, p)).astype(complex)
    half = inner / math.sqrt(2.0)
    xs = np.linspace(-half, half, p) if p > 1 else np.zeros(1)
    xx, yy = np.meshgrid(xs, xs, indexing="ij")
    return (xx + 1j * yy).ravel()


def make_grid(domain: Domain, spec: GridSpec) -> np.ndarray:
    """Deterministic grid of interior points, shape ``(k, n)``.

    Every point keeps distance at least ``spec.margin`` from the boundary.
    """
    if any(spec.margin >= r for r in domain.radius):
        raise GridError(f"margin {spec.margin} leaves no room inside radius {min(domain.radius)}")
    axes = [_axis_nodes(spec, r) for r in domain.radius]
    if len(axes) == 1:
        pts = axes[0].reshape(-1, 1)
    else:
        a, b = np.meshgrid(axes[0], axes[1], indexing="ij")
        pts = np.column_stack([a.ravel(), b.ravel()])
    if pts.shape[0] == 0:
        raise GridError("grid is empty")
    return pts


def grid_spacing(points: np.ndarray) -> float:
    """Median nearest-neighbour distance of a point cloud (in R^{2n})."""
    from scipy.spatial import cKDTree

    real = real_coords(points)
    if len(real) < 2:
        raise GridError("need at least two points to define a spacing")
    d, _ = cKDTree(real).query(real, k=2)
    d = d[:, 1]
    return float(np.median(d[d > 0]))


def real_coords(points: np.ndarray) -> np.ndarray:
    """Interleave real and imaginary parts: ``(k, n)`` complex -> ``(k, 2n)`` real."""
    pts = np.asarray(points, dtype=complex)
    out = np.empty((pts.shape[0], 2 * pts.shape[1]))
    out[:, 0::2] = pts.real
    out[:, 1::2] = pts.imag
    return out


def point_columns(n: int) -> list:
    cols = []
    for j in range(1, n + 1):
        cols += [f"re_z{j}", f"im_z{j}"]
    return cols


@dataclass
class GridExport:
    """Rows for the point CSV export (coordinates plus boundary distance)."""

    domain: Domain
    points: np.ndarray
    dist: np.ndarray = field(init=False)

    def __post_init__(self):
        self.dist = dist_to_boundary(self.domain, self.points)

    def rows(self):
        real = real_coords(self.points)
        for coords, d in zip(real, np.atleast_1d(self.dist)):
            yield [*coords, d]

    @property
    def header(self):
        return point_columns(self.domain.complex_dim) + ["dist_boundary"]
