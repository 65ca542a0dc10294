"""Diagonal weighted Bergman kernels ``K_{mV}(z)`` on the disk and polydisk.

Two engines compute the extremal value ``sup |f(z)|^2`` over the unit ball of
the truncated space spanned by monomials of degree ``<= N`` per axis:

* :class:`ToricEngine` uses that monomials are orthogonal for weights that
  depend on moduli only, so the kernel is a sum of ``|z^a|^2 / ||z^a||^2``.
* :class:`GramEngine` (disk only) assembles the full monomial Gram matrix by
  radial Gauss-Legendre times angular FFT quadrature and inverts it through a
  diagonally scaled, eigenvalue-clipped factorization.

Log poles and constant offsets are handled analytically: a pole
``gamma log|z|`` only shifts radial exponents, and ``V + c`` multiplies every
norm by ``exp(-2mc)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np
from scipy.special import logsumexp

from .domains import as_points
from .exceptions import ConditioningError, ContractError, ExcludedMonomialError
from .quadrature import DEFAULT_TOL, MAX_NODES, adaptive_radial
from .weights import Weight

DEFAULT_DEGREE = 60
DEFAULT_CLIP = 1e-12
HERMITIAN_TOL = 1e-12
INDEFINITE_TOL = 1e-8
_INCLUSION_SLACK = 1e-9


def inclusion_test(gamma, m: int, alpha) -> bool:
    """True iff ``z^alpha`` has finite norm for the weight ``exp(-2m gamma log|z|)``.

    Per axis the radial integral of ``r^(2 alpha + 1 - 2 m gamma)`` converges
    iff ``alpha + 1 > m gamma``; the borderline is excluded.
    """
    gam = np.atleast_1d(np.asarray(gamma, dtype=float))
    al = np.atleast_1d(np.asarray(alpha, dtype=float))
    return bool(np.all(al + 1 - m * gam > _INCLUSION_SLACK))


def included_degrees(gamma: float, m: int, max_degree: int) -> np.ndarray:
    first = max(0, math.floor(m * gamma - 1 + _INCLUSION_SLACK) + 1)
    while first <= max_degree and not inclusion_test(gamma, m, first):
        first += 1
    return np.arange(first, max_degree + 1)


@dataclass(frozen=True)
class BasisSpec:
    """Included multi-indices (lexicographic) below a per-axis degree cap."""

    max_degree: int
    axis_degrees: tuple
    included: tuple = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.included)

    @property
    def first_degree(self) -> tuple:
        return tuple(int(d[0]) if len(d) else -1 for d in self.axis_degrees)


def make_basis(gamma, m: int, max_degree: int = DEFAULT_DEGREE) -> BasisSpec:
    gam = tuple(np.atleast_1d(np.asarray(gamma, dtype=float)))
    axes = tuple(included_degrees(g, m, max_degree) for g in gam)
    included = tuple(product(*[tuple(int(a) for a in ax) for ax in axes]))
    return BasisSpec(max_degree, axes, included)


def basis_degree(m: int, gamma_max: float, bound: float = 0.0) -> int:
    """Degree cap ``max(60, 4 m (gamma_max + bound) + 40)``.

    Poles shift the first admissible degree by about ``m gamma``; a bounded
    part of size ``B`` moves the mass of ``|z^a|^2 exp(-2mV)`` by up to about
    ``2 m B`` degrees, so both enter the cap.
    """
    return int(max(DEFAULT_DEGREE, math.ceil(4 * m * (gamma_max + bound) + 40)))


# --------------------------------------------------------------------------
# toric engine

def _axis_log_norms(w: Weight, axis: int, m: int, degrees: np.ndarray, R: float, quad_tol: float):
    gamma = w.pole_coeffs[axis]
    powers = 2 * degrees + 1 - 2 * m * gamma
    shift_holder = {}

    def integrate(rule):
        expo = -2 * m * w.profile_values(axis, np.append(rule.nodes, rule.eps))
        if "s" not in shift_holder:
            shift_holder["s"] = float(expo.max())
        g = 2 * np.pi * np.exp(expo - shift_holder["s"])
        return rule.power_moments(powers, g[:-1], g[-1])

    vals, err, rule = adaptive_radial(integrate, R, quad_tol, breakpoints=w.breakpoints)
    if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
        raise ArithmeticError("nonpositive or non-finite monomial norm")
    return np.log(vals) + shift_holder["s"], err


@dataclass(frozen=True, eq=False)
class MomentTable:
    """Per-axis log norms ``log ||z_j^a||^2`` for a toric weight at fixed ``m``.

    The squared norm of ``z^alpha`` is ``exp(sum_j log_norms[j][alpha_j] - 2 m c)``
    with ``c`` the weight's constant offset.
    """

    weight: Weight
    m: int
    basis: BasisSpec
    log_norms: tuple
    quad_tol: float
    quad_error: float

    def norm(self, alpha) -> float:
        alpha = tuple(np.atleast_1d(alpha).astype(int))
        total = -2 * self.m * self.weight.offset
        for j, a in enumerate(alpha):
            degs = self.basis.axis_degrees[j]
            if len(degs) == 0 or a < degs[0] or a > degs[-1]:
                raise ExcludedMonomialError(f"z^{alpha} is not in the basis")
            total += self.log_norms[j][a - degs[0]]
        return math.exp(total)

    @property
    def norms(self) -> dict:
        return {alpha: self.norm(alpha) for alpha in self.basis.included}


@lru_cache(maxsize=256)
def moment_table(w: Weight, m: int, max_degree: int = DEFAULT_DEGREE,
                 quad_tol: float = DEFAULT_TOL, radius: tuple | None = None) -> MomentTable:
    if not w.toric:
        raise ContractError(f"weight {w.name!r} is not toric; use the Gram engine")
    radius = radius or (1.0,) * w.n
    basis = make_basis(w.pole_coeffs, m, max_degree)
    logs, errs = [], []
    for j in range(w.n):
        degs = basis.axis_degrees[j]
        if len(degs) == 0:
            logs.append(np.empty(0))
            errs.append(0.0)
            continue
        ln, err = _axis_log_norms(w, j, m, degs, radius[j], quad_tol)
        logs.append(ln)
        errs.append(err)
    return MomentTable(w, m, basis, tuple(logs), quad_tol, float(max(errs)))


def monomial_norm(w: Weight, m: int, alpha, quad_tol: float = DEFAULT_TOL, radius=None) -> float:
    """``||z^alpha||^2_{mV}`` for a toric weight."""
    if not w.toric:
        raise ContractError(f"weight {w.name!r} is not toric")
    alpha = tuple(int(a) for a in np.atleast_1d(alpha))
    if not inclusion_test(w.pole_coeffs, m, alpha):
        raise ExcludedMonomialError(f"z^{alpha} has infinite norm for m={m}, gamma={w.pole_coeffs}")
    return moment_table(w, m, max(max(alpha), 1), quad_tol, radius).norm(alpha)


class ToricEngine:
    """Kernel evaluation from a :class:`MomentTable`."""

    def __init__(self, table: MomentTable):
        self.table = table
        self.m = table.m
        self.weight = table.weight

    @property
    def basis(self) -> BasisSpec:
        return self.table.basis

    @property
    def dim(self) -> int:
        return self.table.basis.size

    def _axis_terms(self, j, modulus):
        degs = self.table.basis.axis_degrees[j]
        with np.errstate(divide="ignore", invalid="ignore"):
            logz = np.log(modulus)
            powers = np.where(degs[None, :] == 0, 0.0, 2 * degs[None, :] * logz[:, None])
        return powers - self.table.log_norms[j][None, :]

    def log_kernel(self, points):
        """``(log K, relative tail)`` at each point; ``log K = -inf`` if ``K = 0``."""
        pts = as_points(points, self.weight.n)
        logk = np.full(len(pts), 2 * self.m * self.weight.offset)
        rel_tail = np.zeros(len(pts))
        for j in range(self.weight.n):
            degs = self.table.basis.axis_degrees[j]
            if len(degs) == 0:
                return np.full(len(pts), -np.inf), np.zeros(len(pts))
            terms = self._axis_terms(j, np.abs(pts[:, j]))
            lk = logsumexp(terms, axis=1)
            logk = logk + lk
            rel_tail = (1 + rel_tail) * (1 + _geometric_tail(terms, lk)) - 1
        return logk, rel_tail

    def kernel(self, points):
        logk, rel = self.log_kernel(points)
        k = np.exp(logk)
        return k, k * rel

    def orthonormal_values(self, points) -> np.ndarray:
        """Values of the normalized monomials ``z^a / ||z^a||`` at points."""
        pts = as_points(points, self.weight.n)
        cols = None
        for j in range(self.weight.n):
            degs = self.table.basis.axis_degrees[j]
            ln = self.table.log_norms[j]
            vals = pts[:, j:j + 1] ** degs[None, :] * np.exp(-0.5 * ln)[None, :]
            cols = vals if cols is None else (cols[:, :, None] * vals[:, None, :]).reshape(len(pts), -1)
        return cols * math.exp(self.m * self.weight.offset)


def _geometric_tail(log_terms: np.ndarray, log_sum: np.ndarray) -> np.ndarray:
    """Relative tail from the ratio of the last two terms (geometric model)."""
    k = log_terms.shape[1]
    out = np.zeros(log_terms.shape[0])
    last = log_terms[:, -1]
    if k < 2:
        out[np.isfinite(last)] = np.inf
        return out
    prev = log_terms[:, -2]
    finite = np.isfinite(last) & np.isfinite(prev)
    with np.errstate(divide="ignore", invalid="ignore"):
        logq = np.where(finite, last - prev, -np.inf)
        q = np.exp(logq)
        tail = np.where(q < 1, np.exp(last - log_sum) * q / (1 - q), np.inf)
    out[finite] = tail[finite]
    return out


# --------------------------------------------------------------------------
# Gram engine (disk)

@dataclass(frozen=True, eq=False)
class GramFactor:
    """Clipped, diagonally scaled eigen-factorization of the monomial Gram matrix.

    ``whiten`` maps monomial values ``z^k`` to orthonormal-basis values
    (up to the factor ``exp(-log_shift / 2)``).
    """

    weight: Weight
    m: int
    degrees: np.ndarray
    gram: np.ndarray = field(repr=False)
    log_shift: float
    whiten: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray
    clip_threshold: float
    report: dict


def _gram_matrix(w: Weight, m: int, degrees: np.ndarray, R: float, quad_tol: float,
                 n_theta: int, max_nodes: int):
    gamma = w.pole_coeffs[0]
    d = len(degrees)
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    circle = np.exp(1j * theta)
    lags = np.arange(-(d - 1), d)
    shift_holder = {}

    def integrate(rule):
        radii = np.append(rule.nodes, rule.eps)
        zz = (radii[:, None] * circle[None, :]).reshape(-1, 1)
        expo = (-2 * m * np.asarray(w.bounded_part(zz), dtype=float)).reshape(len(radii), n_theta)
        if "s" not in shift_holder:
            shift_holder["s"] = float(expo.max())
        fourier = 2 * np.pi * np.fft.ifft(np.exp(expo - shift_holder["s"]), axis=1)
        g = np.zeros((d, d), dtype=complex)
        for lag in lags:
            # G[j, j + lag] = int r^(deg_j + deg_{j+lag} + 1 - 2 m gamma) c_lag(r) dr
            js = np.arange(max(0, -lag), min(d, d - lag))
            c = fourier[:, lag % n_theta]
            powers = degrees[js] + degrees[js + lag] + 1 - 2 * m * gamma
            g[js, js + lag] = rule.power_moments(powers, c[:-1], c[-1])
        return g

    def scale(g):
        diag = np.sqrt(np.abs(np.diag(g)))
        return np.outer(diag, diag)

    g, err, _ = adaptive_radial(integrate, R, quad_tol, breakpoints=w.breakpoints,
                                max_nodes=max_nodes, scale=scale)
    return g, shift_holder["s"], err


@lru_cache(maxsize=64)
def gram_factor(w: Weight, m: int, max_degree: int = DEFAULT_DEGREE, quad_tol: float = DEFAULT_TOL,
                clip_threshold: float = DEFAULT_CLIP, radius: float = 1.0,
                n_theta: int | None = None, max_nodes: int = MAX_NODES) -> GramFactor:
    if w.n != 1:
        raise ContractError("the Gram engine supports the disk (n = 1) only")
    degrees = included_degrees(w.pole_coeffs[0], m, max_degree)
    d = len(degrees)
    report = {"size": d, "rank": 0, "clipped": 0, "cond": float("nan"), "min_eig": float("nan"),
              "asymmetry": 0.0, "quad_error": 0.0, "flag": "empty"}
    if d == 0:
        return GramFactor(w, m, degrees, np.zeros((0, 0)), 0.0, np.zeros((0, 0)), np.zeros(0),
                          clip_threshold, report)
    if n_theta is None:
        n_theta = max(128, 1 << int(math.ceil(math.log2(4 * (max_degree + 1)))))
    g, log_shift, err = _gram_matrix(w, m, degrees, radius, quad_tol, n_theta, max_nodes)
    fro = np.linalg.norm(g)
    asym = float(np.linalg.norm(g - g.conj().T) / fro) if d > 1 else 0.0
    report.update(asymmetry=asym, quad_error=float(err))
    if asym > HERMITIAN_TOL:
        raise ConditioningError(f"Gram matrix asymmetry {asym:.3g} exceeds {HERMITIAN_TOL:g}")
    g = 0.5 * (g + g.conj().T)
    diag = np.sqrt(np.real(np.diag(g)))
    scaled = g / np.outer(diag, diag)
    lam, vec = np.linalg.eigh(scaled)
    lam_max = lam[-1]
    if lam[0] < -INDEFINITE_TOL * lam_max:
        raise ConditioningError(f"Gram matrix indefinite: eigenvalue {lam[0]:.3g} "
                                f"(relative {lam[0] / lam_max:.3g})", pivot=0, value=float(lam[0]))
    keep = lam >= clip_threshold * lam_max
    whiten = (vec[:, keep] / np.sqrt(lam[keep])[None, :]) / diag[:, None]
    rank = int(keep.sum())
    report.update(rank=rank, clipped=d - rank, cond=float(lam_max / lam[keep][0]),
                  min_eig=float(lam[0]), flag="ok" if rank == d else "clipped")
    return GramFactor(w, m, degrees, g, log_shift, whiten, lam[keep], clip_threshold, report)


class GramEngine:
    """Kernel evaluation from a :class:`GramFactor`: ``K = ||W^T b(z)||^2``."""

    def __init__(self, factor: GramFactor):
        self.factor = factor
        self.m = factor.m
        self.weight = factor.weight

    @property
    def dim(self) -> int:
        return self.factor.report["rank"]

    def orthonormal_values(self, points) -> np.ndarray:
        pts = as_points(points, 1)[:, 0]
        b = pts[:, None] ** self.factor.degrees[None, :]
        scale = math.exp(-0.5 * self.factor.log_shift + self.m * self.weight.offset)
        return (b @ self.factor.whiten) * scale

    def log_kernel(self, points):
        pts = as_points(points, 1)[:, 0]
        if self.dim == 0:
            return np.full(len(pts), -np.inf), np.zeros(len(pts))
        b = pts[:, None] ** self.factor.degrees[None, :]
        k = np.sum(np.abs(b @ self.factor.whiten) ** 2, axis=1)
        with np.errstate(divide="ignore"):
            logk = np.log(k) - self.factor.log_shift + 2 * self.m * self.weight.offset
        return logk, np.zeros(len(pts))

    def kernel(self, points):
        logk, _ = self.log_kernel(points)
        return np.exp(logk), np.zeros(len(logk))


# --------------------------------------------------------------------------
# public operations

def engine_for(w: Weight, m: int, max_degree: int | None = None, quad_tol: float = DEFAULT_TOL,
               clip_threshold: float = DEFAULT_CLIP, engine: str = "auto", radius=None):
    """Pick the toric engine for toric weights and the Gram engine otherwise."""
    if m < 1:
        raise ValueError("m must be a positive integer")
    if max_degree is None:
        max_degree = basis_degree(m, w.gamma_max, w.bound)
    if engine == "auto":
        engine = "toric" if w.toric else "gram"
    if engine == "toric":
        rad = tuple(radius) if radius is not None else None
        return ToricEngine(moment_table(w, m, max_degree, quad_tol, rad))
    if engine == "gram":
        rad = float(np.atleast_1d(radius)[0]) if radius is not None else 1.0
        return GramEngine(gram_factor(w, m, max_degree, quad_tol, clip_threshold, rad))
    raise ValueError(f"unknown engine {engine!r}")


def kernel_diag_toric(w: Weight, m: int, z, max_degree: int = DEFAULT_DEGREE,
                      quad_tol: float = DEFAULT_TOL):
    """``(K, tail)`` from the orthogonal monomial sum; ``K = 0`` on an empty basis."""
    eng = ToricEngine(moment_table(w, m, max_degree, quad_tol))
    k, tail = eng.kernel(z)
    if np.ndim(z) == 0 or (w.n > 1 and np.ndim(z) == 1):
        return float(k[0]), float(tail[0])
    return k, tail


def gram_kernel_general(w: Weight, m: int, z, max_degree: int = DEFAULT_DEGREE,
                        quad_tol: float = DEFAULT_TOL, clip_threshold: float = DEFAULT_CLIP):
    """``(K, condition_report)`` from the stabilized Gram factorization (disk)."""
    factor = gram_factor(w, m, max_degree, quad_tol, clip_threshold)
    k, _ = GramEngine(factor).kernel(z)
    report = dict(factor.report)
    if np.ndim(z) == 0:
        return float(k[0]), report
    return k, report


def extremal_witness_check(w: Weight, m: int, z, max_degree: int = DEFAULT_DEGREE,
                           trials: int = 100, seed: int = 42, engine: str = "auto",
                           quad_tol: float = DEFAULT_TOL):
    """Random elements of the truncated space never beat ``K(z)``.

    Draws ``trials`` complex Gaussian coefficient vectors in an orthonormal
    basis and returns ``(max ratio, witness ratio, K)`` where ratio is
    ``|f(z)|^2 / ||f||^2`` and the witness is the reproducing element.
    """
    eng = engine_for(w, m, max_degree, quad_tol, engine=engine)
    e = eng.orthonormal_values(z)[0]
    k = float(np.sum(np.abs(e) ** 2))
    rng = np.random.default_rng(seed)
    best = 0.0
    if trials > 0 and e.size:
        c = rng.normal(size=(trials, e.size)) + 1j * rng.normal(size=(trials, e.size))
        ratios = np.abs(c @ e) ** 2 / np.sum(np.abs(c) ** 2, axis=1)
        best = float(ratios.max())
    witness = np.conj(e)
    witness_ratio = float(np.abs(witness @ e) ** 2 / k) if k > 0 else 0.0
    return best, witness_ratio, k
