import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bergmanlab import (CATALOG_NAMES, CatalogError, ContractError, Domain, DomainError, GridSpec,
                        SampledField, catalog, eval_weight, make_grid, usc_regularize)
from bergmanlab.weights import check_bound, grid_esssup, require_psh, weight_esssup


def test_eval_weight_examples():
    pole = catalog("log_pole", gamma=1)
    assert eval_weight(pole, 0.5)[0] == pytest.approx(math.log(0.5))
    assert eval_weight(pole, 0)[0] == -np.inf
    assert eval_weight(catalog("neg_abs_square"), 0.5)[0] == pytest.approx(-0.25)


def test_eval_weight_checks_domain_when_given():
    with pytest.raises(DomainError):
        eval_weight(catalog("zero"), 1.2, domain=Domain.disk())


def test_catalog_flags():
    zero = catalog("zero")
    assert zero.pole_coeffs == (0.0,) and zero.psh == "yes" and zero.toric
    assert catalog("log_pole", gamma=1).psh == "yes"
    assert catalog("neg_abs_square").psh == "no"
    bump = catalog("angular_bump", eps=0.3)
    assert not bump.toric and bump.psh == "unknown"
    assert catalog("angular_bump", eps=0.0).toric


def test_catalog_errors():
    with pytest.raises(CatalogError):
        catalog("nope")
    with pytest.raises(CatalogError):
        catalog("log_pole", gamma=-1)
    with pytest.raises(CatalogError):
        catalog("radial_custom")
    with pytest.raises(CatalogError):
        catalog("angular_bump", n=2)


@pytest.mark.parametrize("name,n", [(name, n) for name in CATALOG_NAMES for n in (1, 2)
                                    if not (name == "angular_bump" and n == 2)])
def test_declared_bound_holds(name, n):
    kw = {"table": [(0, 0), (0.5, -0.5), (1, 0)]} if name == "radial_custom" else {}
    w = catalog(name, n=n, **kw)
    dom = Domain.disk() if n == 1 else Domain.polydisk()
    pts = make_grid(dom, GridSpec("cartesian", 9, 0.01))
    assert check_bound(w, pts) <= w.bound + 1e-12


def test_polydisk_weight_is_sum_over_axes():
    w = catalog("abs_square", n=2)
    z = np.array([[0.3 + 0.1j, -0.5j]])
    assert w(z)[0] == pytest.approx(0.1 + 0.25)


@given(st.floats(-3, 3))
def test_shift_adds_constant(c):
    w = catalog("abs_square")
    z = np.array([[0.2 + 0.3j], [0.7 + 0j]])
    np.testing.assert_allclose(w.shifted(c)(z), w(z) + c, atol=1e-12)


def test_require_psh():
    require_psh(catalog("zero"))
    with pytest.raises(ContractError):
        require_psh(catalog("neg_abs_square"))


# ------------------------------------------------------------ usc regularization

def test_usc_drops_single_dip(cartesian_points):
    vals = np.zeros(len(cartesian_points))
    vals[56] = -5.0
    out = usc_regularize(SampledField(cartesian_points, vals))
    assert np.all(out.values == 0.0)


def test_usc_continuous_field_unchanged(cartesian_points):
    fld = SampledField.from_weight(catalog("neg_abs_square"), cartesian_points)
    out = usc_regularize(fld)
    assert np.max(np.abs(out.values - fld.values)) <= 1e-9


def test_usc_jump_keeps_sampled_values(disk):
    # a jump along a circle is a set of positive length, not an isolated point
    pts = make_grid(disk, GridSpec("cartesian", 21, 0.05))
    vals = np.where(np.abs(pts[:, 0]) < 0.5, 1.0, 0.0)
    out = usc_regularize(SampledField(pts, vals))
    np.testing.assert_array_equal(out.values, vals)


@pytest.mark.parametrize("index", [0, 56, 112, 200])
@pytest.mark.parametrize("size", [-5.0, 5.0])
def test_usc_spike_invisible(cartesian_points, index, size):
    base = SampledField.from_weight(catalog("neg_abs_square"), cartesian_points)
    ref = usc_regularize(base).values
    vals = base.values.copy()
    vals[index] += size
    out = usc_regularize(SampledField(cartesian_points, vals)).values
    assert np.max(np.abs(out - ref)) <= 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 224), st.floats(1.0, 20.0), st.booleans())
def test_usc_idempotent(index, size, up):
    pts = make_grid(Domain.disk(), GridSpec("cartesian", 15, 0.05))
    vals = -np.abs(pts[:, 0]) ** 2
    vals[index] += size if up else -size
    once = usc_regularize(SampledField(pts, vals))
    twice = usc_regularize(once)
    np.testing.assert_array_equal(once.values, twice.values)


def test_usc_keeps_poles(radial_points):
    fld = SampledField.from_weight(catalog("log_pole"), radial_points)
    out = usc_regularize(fld)
    assert out.values[0] == -np.inf
    np.testing.assert_array_equal(out.values[1:], fld.values[1:])


def test_usc_radii_validation(cartesian_points):
    fld = SampledField(cartesian_points, np.zeros(len(cartesian_points)))
    with pytest.raises(ValueError):
        usc_regularize(fld, radii=[])
    with pytest.raises(ValueError):
        usc_regularize(fld, radii=[0.2, 0.4])


def test_grid_esssup_neighbour_max():
    assert grid_esssup(np.array([5.0, 0.0, 0.1]), center_index=0) == pytest.approx(0.1)
    assert grid_esssup(np.array([0.0, 0.0, 0.1]), center_index=0) == pytest.approx(0.1)


def test_weight_esssup_pole():
    # log|z| on B(0.5, 0.25) has ess sup log 0.75
    assert weight_esssup(catalog("log_pole"), 0.5, 0.25) == pytest.approx(math.log(0.75), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.01, 1.0), st.integers(0, 224), st.integers(0, 224),
       st.sampled_from([-5.0, 5.0]), st.sampled_from([-5.0, 5.0]))
def test_usc_monotone_under_single_modifications(a, b, lift, i, j, s1, s2):
    pts = make_grid(Domain.disk(), GridSpec("cartesian", 15, 0.05))
    x = pts[:, 0]
    f1 = a * x.real ** 2 + b * np.abs(x) ** 2
    f2 = f1 + lift * (1 + x.imag ** 2)
    f1[i] += s1
    f2[j] += s2
    f2 = np.maximum(f1, f2)
    o1 = usc_regularize(SampledField(pts, f1)).values
    o2 = usc_regularize(SampledField(pts, f2)).values
    assert np.all(o1 <= o2 + 1e-9)
