import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bergmanlab import (Approximant, ContractError, Domain, GridSpec, catalog, converge_run,
                        demailly_value, dist_to_boundary, limsup_regularized, lower_bound_check,
                        make_grid, psh_envelope_toric, select_radius, upper_bound_check)
from bergmanlab.demailly import c2_constant, row_violates, top_half

LOG_PI = math.log(math.pi)


def closed_form_vm(m, z, p=0):
    # log_pole with integer m gamma = p, or the zero weight for p = 0
    r2 = abs(z) ** 2
    return math.log(r2 ** p / (math.pi * (1 - r2) ** 2)) / (2 * m)


def test_demailly_value_examples():
    assert demailly_value(catalog("zero"), 1, 0) == pytest.approx(0.5 * math.log(1 / math.pi), abs=1e-12)
    assert demailly_value(catalog("zero"), 1, 0) == pytest.approx(-0.5724, abs=1e-4)
    v = demailly_value(catalog("log_pole", gamma=1), 2, 0.5)
    assert v == pytest.approx(0.25 * math.log(1 / (9 * math.pi)), abs=1e-10)
    assert v == pytest.approx(math.log(0.5) + 0.25 * math.log(1 / (math.pi * 0.75 ** 2)), abs=1e-10)
    assert v == pytest.approx(-0.8354, abs=1e-4)


@settings(max_examples=20, deadline=None)
@given(st.floats(-2, 2), st.sampled_from([1, 2, 4, 8]), st.floats(0, 0.8), st.floats(0, 6.3))
def test_constant_weight_translation(c, m, r, theta):
    z = r * np.exp(1j * theta)
    zero = catalog("zero")
    assert demailly_value(zero.shifted(c), m, z) - demailly_value(zero, m, z) == pytest.approx(c, abs=1e-12)


def test_pole_value():
    assert demailly_value(catalog("log_pole", gamma=1), 3, 0.0) == -np.inf


@pytest.mark.parametrize("m", [1, 2, 5, 8])
def test_approximant_matches_closed_form(m):
    z = np.array([0.1, 0.45j, 0.7 + 0.1j])
    vals = Approximant(catalog("log_pole", gamma=1), m)(z)
    ref = [closed_form_vm(m, zz, p=m) for zz in z]
    np.testing.assert_allclose(vals, ref, rtol=0, atol=1e-10)


def test_polydisk_approximant_is_sum():
    z = np.array([[0.3, 0.2j]])
    v2 = Approximant(catalog("abs_square", n=2), 3)(z)[0]
    v1 = Approximant(catalog("abs_square"), 3)([0.3, 0.2j])
    assert v2 == pytest.approx(v1.sum(), abs=1e-10)


def test_upper_bound_examples():
    zero = catalog("zero")
    v4 = demailly_value(zero, 4, 0)
    slack = upper_bound_check(zero, 4, 0, 0.5, v4)
    assert slack == pytest.approx(0.25 * math.log((1 / math.sqrt(math.pi)) / 0.5) - v4, abs=1e-12)
    assert slack >= 0
    pole = catalog("log_pole", gamma=1)
    for m in (1, 2, 4, 8, 16):
        assert upper_bound_check(pole, m, 0.5, 0.25, demailly_value(pole, m, 0.5)) >= 0


def test_upper_bound_trend_for_zero_weight():
    zero = catalog("zero")
    slacks = [upper_bound_check(zero, m, 0, select_radius(Domain.disk(), 0, m), demailly_value(zero, m, 0))
              for m in (4, 16, 64, 256)]
    assert all(s >= 0 for s in slacks)
    assert all(b < a for a, b in zip(slacks, slacks[1:]))


def test_upper_bound_radius_validation():
    with pytest.raises(ValueError):
        upper_bound_check(catalog("zero"), 1, 0.5, 0.9, 0.0)


def test_lower_bound_examples():
    zero = catalog("zero")
    assert lower_bound_check(zero, 1, 0, demailly_value(zero, 1, 0)) == pytest.approx(0.5724, abs=1e-4)
    pole = catalog("log_pole", gamma=1)
    d = lower_bound_check(pole, 2, 0.5, demailly_value(pole, 2, 0.5))
    assert d == pytest.approx(-0.5 * math.log(1 / (math.pi * 0.5625)), abs=1e-10)
    assert d == pytest.approx(0.2846, abs=1e-4)
    for m in (1, 3, 16, 64):
        assert lower_bound_check(zero, m, 0, demailly_value(zero, m, 0)) == pytest.approx(0.5 * LOG_PI, abs=1e-10)


def test_lower_bound_needs_psh():
    with pytest.raises(ContractError):
        lower_bound_check(catalog("neg_abs_square"), 1, 0.5, 0.0)


def test_constants():
    assert c2_constant(1) == pytest.approx(1 / math.sqrt(math.pi))
    assert c2_constant(2) == pytest.approx(math.sqrt(2) / math.pi)
    assert select_radius(Domain.disk(), 0.5, 4) == pytest.approx(0.25)
    assert select_radius(Domain.disk(), 0.0, 4) == pytest.approx(0.5)


def test_row_violates():
    assert not row_violates(0.0, 0.0, 0.0, 0.0)
    assert row_violates(-1e-6, 0.0, 0.0, 0.0)
    assert not row_violates(-1e-6, 1e-6, 0.0, 0.0)
    assert row_violates(0.0, 0.0, -1e-6, 0.0)
    assert not row_violates(0.0, 0.0, np.nan, 0.0)
    assert row_violates(0.0, 0.0, 0.0, -np.inf)
    assert not row_violates(0.0, 0.0, 0.0, np.inf)


def test_top_half():
    assert top_half((1, 2, 4, 8, 16, 32, 64)) == (16, 32, 64)
    assert top_half((1, 2, 4, 8)) == (4, 8)
    assert top_half((1, 2)) == (2,)


def test_converge_neg_abs_square():
    w = catalog("neg_abs_square")
    pts = np.array([0.0, 0.3, 0.6], dtype=complex)
    rep = converge_run(w, points=pts, envelope=psh_envelope_toric(w))
    assert np.all(rep.column("V_tilde") == -1.0)
    assert abs(rep.values_at(64)[0] + 1) <= 0.1
    errs = [rep.summary["max_error_by_m"][m] for m in rep.m_schedule]
    assert errs[-1] < errs[0]
    assert rep.summary["monotone_trend"]


def test_converge_zero_weight():
    zero = catalog("zero")
    rep = converge_run(zero, points=np.array([0j]), envelope=zero)
    errs = [abs(e) for e in rep.column("error")]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert abs(rep.values_at(64)[0]) == pytest.approx(LOG_PI / 128, abs=1e-12)
    assert rep.summary["bounds_violations"] == 0


def test_converge_pole_error_is_scaled_deficit(radial_points):
    pole = catalog("log_pole", gamma=1)
    rep = converge_run(pole, points=radial_points, envelope=pole)
    c1 = rep.summary["C1_estimate"]
    for row in rep.rows:
        if not np.isfinite(row["V_tilde"]):
            continue
        deficit = lower_bound_check(pole, row["m"], radial_points[row["point"]], row["V_m"])
        assert -row["error"] * row["m"] == pytest.approx(deficit, abs=1e-12)
        assert -row["error"] <= c1 / row["m"] + 1e-12
    assert rep.summary["bounds_violations"] == 0


def test_report_columns(radial_points):
    rep = converge_run(catalog("zero"), (1, 4), radial_points[:3])
    assert rep.header == ["weight", "m", "re_z1", "im_z1", "V_m", "V_tilde", "error", "tail",
                          "lower_slack", "upper_slack", "r_used"]
    rows = list(rep.csv_rows())
    assert len(rows) == 6 and all(len(r) == len(rep.header) for r in rows)


def test_limsup_neg_abs_square(disk, radial_points):
    w = catalog("neg_abs_square")
    rep = converge_run(w, points=radial_points, envelope=psh_envelope_toric(w))
    phi = limsup_regularized(rep)
    inner = dist_to_boundary(disk, radial_points) >= 0.3
    assert np.max(np.abs(phi.values[inner] + 1)) <= 0.1


@pytest.mark.parametrize("name", ["zero", "log_pole"])
def test_limsup_below_psh_weight(name, radial_points):
    # V + log K / 2m <= V wherever K <= 1, which covers |z| <= 0.66 on the unit disk
    w = catalog(name)
    rep = converge_run(w, points=radial_points, envelope=w)
    phi = limsup_regularized(rep)
    inside = np.abs(radial_points[:, 0]) <= 0.66
    v = w(radial_points)
    ok = inside & np.isfinite(v)
    assert np.all(phi.values[ok] <= v[ok] + 1e-6)


@pytest.mark.parametrize("c", [-0.4, 1.3])
def test_limsup_constant_weight(c):
    w = catalog("zero").shifted(c)
    rep = converge_run(w, points=np.array([0, 0.1, 0.2], dtype=complex), envelope=w)
    phi = limsup_regularized(rep)
    assert abs(phi.values[0] - c) <= LOG_PI / (2 * 64) + 1e-12


def test_limsup_needs_two_m():
    rep = converge_run(catalog("zero"), (1,), np.array([0j]))
    with pytest.raises(ValueError):
        limsup_regularized(rep)


CUSTOM = [(0.0, 0.0), (0.5, -0.5), (1.0, 0.0)]
TORIC = [catalog("zero"), catalog("log_pole", gamma=1), catalog("neg_abs_square"),
         catalog("abs_square"), catalog("radial_custom", table=CUSTOM)]


@pytest.mark.parametrize("w", TORIC, ids=lambda w: w.name)
def test_pointwise_convergence_to_envelope(w, disk, radial_points):
    env = psh_envelope_toric(w, extra_points=radial_points)
    rep = converge_run(w, points=radial_points, envelope=env)
    e8, e64 = np.abs(rep.column("error", 8)), np.abs(rep.column("error", 64))
    assert np.all(e64 <= e8 + 1e-12)
    inner = dist_to_boundary(disk, radial_points) >= 0.2
    assert np.max(e64[inner]) <= 0.1


def test_monotonicity_transfer(radial_points):
    lo = catalog("radial_custom", table=[(0, -1.0), (0.5, -0.7), (1, -0.2)])
    hi = catalog("radial_custom", table=[(0, -0.5), (0.5, -0.6), (1, 0.0)])
    for m in (1, 4, 16):
        assert np.all(Approximant(lo, m)(radial_points) <= Approximant(hi, m)(radial_points) + 1e-9)


def test_envelope_comparison(radial_points):
    w = catalog("radial_custom", table=CUSTOM)
    lifted = psh_envelope_toric(w).as_weight()
    for m in (1, 8, 32):
        assert np.all(Approximant(w, m)(radial_points) >= Approximant(lifted, m)(radial_points) - 1e-9)


def test_c2_identity():
    from bergmanlab import ball_volume
    for n in (1, 2):
        for r in (0.1, 0.5, 2.0):
            assert 0.5 * math.log(1 / ball_volume(n, r)) == pytest.approx(math.log(c2_constant(n) / r ** n))
