"""Acceptance suite: ten criteria, each checked against an independent oracle.

Every criterion prints one ``PASS``/``FAIL`` line (also when run as a script:
``python tests/test_acceptance.py``). Oracles are closed forms or direct
numpy computations that do not go through the library's own checkers.
"""
import math
import time

import numpy as np
import pytest

from bergmanlab import (Approximant, Domain, GridSpec, SampledField, catalog, demailly_value,
                        dist_to_boundary, engine_for, make_basis, make_grid, psh_envelope_toric,
                        usc_regularize)
from bergmanlab.bergman import basis_degree
from bergmanlab.demailly import converge_run, select_radius

SCHEDULE = (1, 2, 4, 8, 16, 32, 64)
CUSTOM = [(0.0, 0.0), (0.5, -0.5), (1.0, 0.0)]
DISK = Domain.disk()


def grid():
    return make_grid(DISK, GridSpec("radial", 10, 0.05))


def toric_weights(n=1):
    return [catalog("zero", n=n), catalog("log_pole", n=n, gamma=1.0), catalog("neg_abs_square", n=n),
            catalog("abs_square", n=n), catalog("radial_custom", n=n, table=CUSTOM)]


def circle_mean(f, center, r, n_theta=256):
    ring = center + r * np.exp(2j * np.pi * np.arange(n_theta) / n_theta)
    return float(np.mean(f(ring.reshape(-1, 1))))


def disk_centers():
    # 10 centres spread over |z| <= 0.7, away from the real axis symmetry
    k = np.arange(10)
    return 0.7 * np.sqrt(k / 9) * np.exp(2j * np.pi * 0.618 * k)


# ---------------------------------------------------------------- criteria

def criterion_1():
    t0 = time.perf_counter()
    z = np.array([0.0, 0.25, 0.5, 0.75])
    k, _ = engine_for(catalog("zero"), 1, 60).kernel(z)
    elapsed = time.perf_counter() - t0
    oracle = 1 / (math.pi * (1 - z ** 2) ** 2)
    err = float(np.max(np.abs(k - oracle) / oracle))
    return err <= 1e-7 and elapsed < 1.0, f"max rel error {err:.1e}, {elapsed:.2f} s"


def criterion_2():
    t0 = time.perf_counter()
    z = np.array([0.25, 0.5, 0.75])
    w = catalog("log_pole", gamma=1.0)
    err, first_ok = 0.0, True
    for m in range(1, 9):
        k, _ = engine_for(w, m).kernel(z)
        oracle = z ** (2 * m) / (math.pi * (1 - z ** 2) ** 2)
        err = max(err, float(np.max(np.abs(k - oracle) / oracle)))
        first_ok &= make_basis(1.0, m, basis_degree(m, 1.0)).first_degree == (m,)
    elapsed = time.perf_counter() - t0
    return (err <= 1e-7 and first_ok and elapsed < 5.0,
            f"max rel error {err:.1e}, first degree = m: {first_ok}, {elapsed:.2f} s")


def ball_sup(name, z, r):
    # sup of V over the closed disk B(z, r), in closed form
    a = abs(z)
    return {"zero": 0.0, "log_pole": math.log(a + r), "abs_square": (a + r) ** 2}[name]


def criterion_3():
    t0 = time.perf_counter()
    pts = grid()
    c2 = 1 / math.sqrt(math.pi)  # mean value inequality on a disk of radius r
    worst_slack, growth = np.inf, -np.inf
    for name in ("zero", "log_pole", "abs_square"):
        w = catalog(name)
        rep = converge_run(w, SCHEDULE, pts, DISK)
        v = w(pts)
        for row in rep.rows:
            z = complex(pts[row["point"], 0])
            m = row["m"]
            r = select_radius(DISK, z, m)
            upper = ball_sup(name, z, r) + math.log(c2 / r) / m
            worst_slack = min(worst_slack, upper - row["V_m"] + row["tail"] + 1e-9)
        ok = np.isfinite(v)
        deficit = {m: float(np.max(m * (v[ok] - rep.values_at(m)[ok]))) for m in SCHEDULE}
        half = len(SCHEDULE) // 2
        top = max(deficit[m] for m in SCHEDULE[-half:])
        bottom = max(deficit[m] for m in SCHEDULE[:-half])
        growth = max(growth, (top - bottom) / abs(bottom))
    elapsed = time.perf_counter() - t0
    return (worst_slack >= 0 and growth < 0.05 and elapsed < 60,
            f"min slack + tail {worst_slack:.3g}, deficit growth {growth:+.4f}, {elapsed:.1f} s")


def criterion_4():
    t0 = time.perf_counter()
    w = catalog("neg_abs_square")
    env = psh_envelope_toric(w)
    exact = bool(np.all(env.field.values == -1.0))
    pts = grid()
    pts = pts[dist_to_boundary(DISK, pts) >= 0.2]
    v8, v64 = Approximant(w, 8)(pts), Approximant(w, 64)(pts)
    e8, e64 = np.abs(v8 + 1), np.abs(v64 + 1)
    elapsed = time.perf_counter() - t0
    ok = exact and e64.max() <= 0.1 and bool(np.all(e64 <= e8)) and elapsed < 120
    return ok, (f"envelope == -1 on log grid: {exact}, max |V_64 + 1| {e64.max():.4f}, "
                f"max |V_8 + 1| {e8.max():.4f}, {elapsed:.1f} s")


def criterion_5():
    w = catalog("neg_abs_square")
    lifted = psh_envelope_toric(w).as_weight()
    pts = grid()
    gap = max(float(np.max(Approximant(lifted, m)(pts) - Approximant(w, m)(pts))) for m in SCHEDULE)
    return gap <= 1e-9, f"max V_m(envelope) - V_m(V) = {gap:.2e}"


def criterion_6(seed=2024):
    rng = np.random.default_rng(seed)
    weights = toric_weights() + [catalog("angular_bump", eps=0.3)]
    worst = 0.0
    for _ in range(20):
        w = weights[rng.integers(len(weights))]
        m = int(rng.choice([1, 2, 3, 4, 8]))
        z = complex(rng.uniform(0.05, 0.85) * np.exp(2j * np.pi * rng.uniform()))
        base = demailly_value(w, m, z)
        for c in (-1.0, 0.5):
            worst = max(worst, abs(demailly_value(w.shifted(c), m, z) - base - c))
    return worst <= 1e-12, f"max deviation {worst:.1e} over 20 samples"


def criterion_7():
    z = np.array([0.0, 0.3, 0.55 + 0.2j, -0.7, 0.85j])
    worst = 0.0
    for w in toric_weights() + [catalog("angular_bump", eps=0.0)]:
        for m in range(1, 9):
            kt, _ = engine_for(w, m, 40, engine="toric").kernel(z)
            kg, _ = engine_for(w, m, 40, engine="gram").kernel(z)
            pos = kt > 0
            assert np.all(kg[~pos] == 0)
            worst = max(worst, float(np.max(np.abs(kg[pos] - kt[pos]) / kt[pos])))
    return worst <= 1e-7, f"max rel difference {worst:.1e}"


def criterion_8():
    dom, idem, sub, iters = -np.inf, 0.0, -np.inf, 0
    for w in toric_weights():
        env = psh_envelope_toric(w, n_points=401)
        u = env.field.values
        v = w(env.field.points)
        ok = np.isfinite(v)
        dom = max(dom, float(np.max(u[ok] - v[ok])))
        lifted = env.as_weight()
        nodes = env.field.points
        gap = psh_envelope_toric(lifted, n_points=401)(nodes) - lifted(nodes)
        idem = max(idem, float(np.max(np.abs(gap[ok]))))
        for c in disk_centers():
            for r in (0.05, 0.1, 0.2):
                base = float(env(np.array([[c]]))[0])
                if np.isfinite(base):
                    sub = max(sub, base - circle_mean(env, c, r))
        iters = max(iters, env.iterations)
    for w in toric_weights(2):
        env = psh_envelope_toric(w, n_points=61)
        u, v = env.field.values, w(env.field.points)
        ok = np.isfinite(v)
        dom = max(dom, float(np.max(u[ok] - v[ok])))
        iters = max(iters, env.iterations)
    ok = dom <= 1e-12 and idem <= 1e-9 and sub <= 1e-6 and iters <= 50
    return ok, f"domination {dom:.1e}, idempotence {idem:.1e}, sub-mean {sub:.1e}, iterations {iters}"


def criterion_9():
    worst = -np.inf
    for w in toric_weights() + [catalog("angular_bump", eps=0.3)]:
        for m in (4, 16):
            vm = Approximant(w, m)
            for c in disk_centers():
                base = float(vm(np.array([[c]]))[0])
                if not np.isfinite(base):
                    continue
                for r in (0.05, 0.1, 0.2):
                    worst = max(worst, base - circle_mean(vm, c, r))
    return worst <= 1e-6, f"max sub-mean violation {worst:.1e} (10 centres x 3 radii)"


def criterion_10():
    pts = make_grid(DISK, GridSpec("cartesian", 15, 0.05))
    base = SampledField.from_weight(catalog("neg_abs_square"), pts)
    reg = usc_regularize(base)
    idem = float(np.max(np.abs(usc_regularize(reg).values - reg.values)))
    spike = 0.0
    rng = np.random.default_rng(10)
    for i in list(rng.choice(len(pts), 8, replace=False)) + [0, len(pts) // 2, len(pts) - 1]:
        for size in (-5.0, 5.0):
            vals = base.values.copy()
            vals[i] += size
            out = usc_regularize(SampledField(pts, vals))
            spike = max(spike, float(np.max(np.abs(out.values - reg.values))))
            idem = max(idem, float(np.max(np.abs(usc_regularize(out).values - out.values))))
    flat = np.zeros(len(pts))
    flat[100] = -5.0
    dip = float(np.max(np.abs(usc_regularize(SampledField(pts, flat)).values)))
    ok = idem == 0.0 and spike <= 1e-9 and dip == 0.0
    return ok, f"idempotence {idem:.1e}, spike effect {spike:.1e}, dip residue {dip:.1e}"


CRITERIA = {
    1: ("closed-form kernel, V = 0", criterion_1),
    2: ("pole kernel, V = log|z|", criterion_2),
    3: ("sandwich bounds for psh weights", criterion_3),
    4: ("convergence to the envelope of -|z|^2", criterion_4),
    5: ("approximant monotonicity under the envelope", criterion_5),
    6: ("translation equivariance", criterion_6),
    7: ("toric vs Gram engine agreement", criterion_7),
    8: ("envelope oracle properties", criterion_8),
    9: ("sub-mean value of V_m", criterion_9),
    10: ("usc regularization", criterion_10),
}


def report_line(number, passed, detail):
    return f"[acceptance {number:2d}] {'PASS' if passed else 'FAIL'}  {CRITERIA[number][0]}: {detail}"


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    passed, detail = CRITERIA[number][1]()
    with capsys.disabled():
        print("\n" + report_line(number, passed, detail))
    assert passed, detail


if __name__ == "__main__":
    failures = 0
    for number in sorted(CRITERIA):
        passed, detail = CRITERIA[number][1]()
        failures += not passed
        print(report_line(number, passed, detail))
    raise SystemExit(1 if failures else 0)
