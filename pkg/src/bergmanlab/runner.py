"""Execute the checks of an :class:`~bergmanlab.config.ExperimentConfig`.

Each check writes one CSV into the output directory and contributes an entry
to ``summary.json``. A row is *nonconforming* when it violates the check's
invariant beyond tolerance; the JSON violation count of a check equals the
number of such rows in its CSV. Check-level problems that are not tied to a
row (a numerical failure, a missed envelope fixpoint, a witness beating the
kernel) are listed under ``failures``. The exit status is 0 iff there are no
violations and no failures.

CSV files (all prefixed by a ``weight`` column so one file covers every
weight):

* ``points.csv``: ``re_z1, im_z1, ..., dist_boundary``
* ``kernel.csv``: ``weight, m, coords..., K, tail_estimate, basis_size, cond_flag``
* ``envelope.csv``: ``weight, coords..., value``
* ``bounds.csv`` and ``converge.csv``: the convergence report columns
* ``phi.csv``: ``weight, coords..., value, V_tilde``
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bergman import basis_degree, engine_for, extremal_witness_check
from .config import CHECKS, ExperimentConfig
from .demailly import converge_run, limsup_regularized
from .domains import GridExport, make_grid, point_columns, real_coords
from .envelope import psh_envelope_toric
from .exceptions import BergmanLabError
from .reports import SCHEMA_VERSION, write_csv, write_json, write_points
from .weights import Weight, eval_weight

DOMINATION_TOL = 1e-12
WITNESS_RTOL = 1e-9


def kernel_oracle(w: Weight, m: int, points, radius) -> np.ndarray | None:
    """Closed-form ``K_{mV}`` where one is available, else ``None``.

    Zero weight on any (poly)disk; ``log_pole`` on unit radii when every
    ``m gamma_j`` is an integer (the kernel of ``|z|^{2p}`` weights is then
    ``|z|^{2p}`` times the unweighted one).
    """
    pts = np.asarray(points, dtype=complex)
    R = np.asarray(radius, dtype=float)
    if w.name == "zero" and w.offset == 0:
        mod2 = np.abs(pts) ** 2
        return np.prod(R ** 2 / (math.pi * (R ** 2 - mod2) ** 2), axis=1)
    if w.name == "log_pole" and w.offset == 0 and np.all(R == 1.0):
        p = m * np.asarray(w.pole_coeffs)
        if not np.allclose(p, np.round(p), atol=1e-12):
            return None
        p = np.round(p)
        mod2 = np.abs(pts) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            fac = np.where(p > 0, mod2 ** p, 1.0)
        return np.prod(fac / (math.pi * (1 - mod2) ** 2), axis=1)
    return None


@dataclass
class CheckResult:
    name: str
    csv: str | None = None
    rows: int = 0
    violations: int = 0
    failures: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    weights: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0 and not self.failures

    def as_dict(self) -> dict:
        return {"csv": self.csv, "rows": self.rows, "violations": self.violations,
                "failures": self.failures, "skipped": self.skipped, "weights": self.weights,
                "passed": self.passed}


class Runner:
    """Runs checks in the fixed order of :data:`CHECKS`, sharing envelope/convergence work."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.points = make_grid(cfg.domain, cfg.grid)
        self._envelopes = {}
        self._converge = {}

    # ----------------------------------------------------------- helpers
    def _envelope(self, label, w):
        if label not in self._envelopes:
            self._envelopes[label] = psh_envelope_toric(w, tol=self.cfg.envelope_tol, domain=self.cfg.domain,
                                                        t_min=self.cfg.grid.log_floor,
                                                        extra_points=self.points)
        return self._envelopes[label]

    def _convergence(self, label, w):
        if label not in self._converge:
            env = self._envelope(label, w) if w.toric else None
            self._converge[label] = converge_run(
                w, self.cfg.m_schedule, self.points, self.cfg.domain,
                quad_tol=self.cfg.quad_tol, envelope=env, clip_threshold=self.cfg.clip_threshold)
        return self._converge[label]

    def _csv_path(self, name) -> Path:
        return Path(self.cfg.output) / f"{name}.csv"

    def _witness_point(self):
        return self.points[len(self.points) // 2]

    # ------------------------------------------------------------ checks
    def check_kernel(self) -> CheckResult:
        res = CheckResult("kernel")
        cfg = self.cfg
        header = ["weight", "m"] + point_columns(cfg.domain.complex_dim) + [
            "K", "tail_estimate", "basis_size", "cond_flag"]
        real = real_coords(self.points)
        rows = []
        for label, w in cfg.weights.items():
            info = {"oracle": False, "max_rel_error": None}
            worst = 0.0
            try:
                for m in cfg.m_schedule:
                    eng = engine_for(w, m, basis_degree(m, w.gamma_max, w.bound), cfg.quad_tol,
                                     cfg.clip_threshold, radius=cfg.domain.radius)
                    k, rel = eng.kernel(self.points)
                    tail = k * rel
                    flag = "ok"
                    if hasattr(eng, "factor"):
                        flag = eng.factor.report["flag"]
                    oracle = kernel_oracle(w, m, self.points, cfg.domain.radius)
                    for i in range(len(self.points)):
                        cond = flag
                        if not (np.isfinite(k[i]) and k[i] >= 0):
                            cond = "nonfinite"
                        elif oracle is not None:
                            info["oracle"] = True
                            err = abs(k[i] - oracle[i])
                            if oracle[i] > 0:
                                worst = max(worst, err / oracle[i])
                            if err > cfg.kernel_rtol * oracle[i] + tail[i]:
                                cond = "oracle_mismatch"
                        if cond not in ("ok", "clipped"):
                            res.violations += 1
                        rows.append([label, m, *real[i], k[i], tail[i], eng.dim, cond])
                    best, witness, kz = extremal_witness_check(
                        w, m, self._witness_point(), basis_degree(m, w.gamma_max, w.bound),
                        seed=cfg.seed, quad_tol=cfg.quad_tol)
                    if best > kz * (1 + WITNESS_RTOL) or abs(witness - kz) > WITNESS_RTOL * max(kz, 1e-300):
                        res.failures.append(f"{label}: extremal witness check failed at m={m}")
            except BergmanLabError as exc:
                res.failures.append(f"{label}: {type(exc).__name__}: {exc}")
            if info["oracle"]:
                info["max_rel_error"] = worst
            res.weights[label] = info
        res.csv = write_csv(self._csv_path("kernel"), header, rows).name
        res.rows = len(rows)
        return res

    def check_envelope(self) -> CheckResult:
        res = CheckResult("envelope")
        cfg = self.cfg
        header = ["weight"] + point_columns(cfg.domain.complex_dim) + ["value"]
        real = real_coords(self.points)
        rows = []
        for label, w in cfg.weights.items():
            if not w.toric:
                res.skipped.append(f"{label}: envelope oracle needs a toric weight")
                continue
            try:
                env = self._envelope(label, w)
            except BergmanLabError as exc:
                res.failures.append(f"{label}: {type(exc).__name__}: {exc}")
                continue
            vals = env(self.points)
            v = eval_weight(w, self.points)
            for i in range(len(self.points)):
                if vals[i] > v[i] + DOMINATION_TOL:
                    res.violations += 1
                rows.append([label, *real[i], vals[i]])
            res.weights[label] = env.summary()
            if not env.monotone_fixpoint:
                res.failures.append(f"{label}: envelope is not a monotone fixpoint")
        res.csv = write_csv(self._csv_path("envelope"), header, rows).name
        res.rows = len(rows)
        return res

    def _report_check(self, name, select, make) -> CheckResult:
        res = CheckResult(name)
        header = None
        rows = []
        for label, w in self.cfg.weights.items():
            reason = select(w)
            if reason:
                res.skipped.append(f"{label}: {reason}")
                continue
            try:
                rep = make(label, w)
            except BergmanLabError as exc:
                res.failures.append(f"{label}: {type(exc).__name__}: {exc}")
                continue
            header = rep.header
            for row, raw in zip(rep.csv_rows(), rep.rows):
                rows.append([label, *row[1:]])
                res.violations += int(raw["violation"])
            s = rep.summary
            res.weights[label] = {"weight": label, "max_error_at_mmax": s["max_error_at_mmax"],
                                  "rate_exponent": s["rate_exponent"], "C1_estimate": s["C1_estimate"],
                                  "bounds_violations": s["bounds_violations"],
                                  "monotone_trend": s["monotone_trend"]}
        if header is None:
            header = ["weight", "m"] + point_columns(self.cfg.domain.complex_dim) + [
                "V_m", "V_tilde", "error", "tail", "lower_slack", "upper_slack", "r_used"]
        res.csv = write_csv(self._csv_path(name), header, rows).name
        res.rows = len(rows)
        return res

    def check_bounds(self) -> CheckResult:
        cfg = self.cfg

        def make(label, w):
            return converge_run(w, cfg.m_schedule, self.points, cfg.domain, quad_tol=cfg.quad_tol,
                                envelope=lambda p, w=w: eval_weight(w, p),
                                clip_threshold=cfg.clip_threshold)

        return self._report_check("bounds", lambda w: None if w.psh == "yes" else
                                  "two-sided bound needs a psh weight", make)

    def check_converge(self) -> CheckResult:
        res = self._report_check("converge", lambda w: None, self._convergence)
        for label, info in res.weights.items():
            if self.cfg.weights[label].toric and not info["monotone_trend"]:
                res.failures.append(f"{label}: envelope error does not decrease along the schedule")
        return res

    def check_phi(self) -> CheckResult:
        res = CheckResult("phi")
        cfg = self.cfg
        header = ["weight"] + point_columns(cfg.domain.complex_dim) + ["value", "V_tilde"]
        real = real_coords(self.points)
        rows = []
        for label, w in cfg.weights.items():
            try:
                rep = self._convergence(label, w)
                phi = limsup_regularized(rep, cfg.domain)
            except (BergmanLabError, ValueError) as exc:
                res.failures.append(f"{label}: {type(exc).__name__}: {exc}")
                continue
            vt = self._envelope(label, w)(self.points) if w.toric else np.full(len(self.points), np.nan)
            worst = 0.0
            for i in range(len(self.points)):
                if np.isfinite(vt[i]) or vt[i] == -np.inf:
                    gap = 0.0 if phi.values[i] == vt[i] else abs(phi.values[i] - vt[i])
                    worst = max(worst, gap)
                    if gap > cfg.phi_tol:
                        res.violations += 1
                rows.append([label, *real[i], phi.values[i], vt[i]])
            res.weights[label] = {"max_gap": worst if w.toric else None}
        res.csv = write_csv(self._csv_path("phi"), header, rows).name
        res.rows = len(rows)
        return res

    # --------------------------------------------------------------- run
    def run(self) -> dict:
        out = Path(self.cfg.output)
        out.mkdir(parents=True, exist_ok=True)
        write_points(out / "points.csv", GridExport(self.cfg.domain, self.points))
        results = {}
        for name in CHECKS:
            if name in self.cfg.checks:
                results[name] = getattr(self, f"check_{name}")()
        failed = [name for name, r in results.items() if not r.passed]
        summary = {
            "schema_version": SCHEMA_VERSION,
            "config": self.cfg.source,
            "seed": self.cfg.seed,
            "domain": {"kind": self.cfg.domain.kind, "radius": list(self.cfg.domain.radius)},
            "m_schedule": list(self.cfg.m_schedule),
            "n_points": len(self.points),
            "checks": {name: r.as_dict() for name, r in results.items()},
            "total_violations": sum(r.violations for r in results.values()),
            "failed_checks": failed,
            "status": "pass" if not failed else "fail",
        }
        write_json(out / "summary.json", summary)
        return summary


def run(cfg: ExperimentConfig) -> tuple[int, dict]:
    """Run every requested check; returns ``(exit_status, summary)``."""
    summary = Runner(cfg).run()
    return (0 if not summary["failed_checks"] else 1), summary
