import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bergmanlab import (ExcludedMonomialError, QuadratureError, catalog, engine_for,
                        extremal_witness_check, gram_kernel_general, inclusion_test,
                        kernel_diag_toric, make_basis, moment_table, monomial_norm)
from bergmanlab.bergman import basis_degree
from bergmanlab.quadrature import adaptive_radial


def bergman_disk(z):
    return 1 / (math.pi * (1 - abs(z) ** 2) ** 2)


def test_inclusion_examples():
    assert inclusion_test(1, 3, 2) is False
    assert inclusion_test(1, 3, 3) is True
    for m in (1, 5, 40):
        assert inclusion_test(0, m, 0) is True


@given(st.integers(0, 6), st.integers(1, 12), st.integers(0, 40))
def test_inclusion_matches_integrability(g, m, a):
    # r^(2a + 1 - 2 m g) is integrable at 0 iff its exponent exceeds -1
    assert inclusion_test(g, m, a) == (2 * a + 1 - 2 * m * g > -1)


def test_first_degree_shift():
    for m in range(1, 9):
        assert make_basis(1.0, m, 60).first_degree == (m,)
    assert make_basis((0.5, 0.0), 3, 10).first_degree == (1, 0)


def test_monomial_norm_examples():
    zero = catalog("zero")
    assert monomial_norm(zero, 1, 0) == pytest.approx(math.pi, rel=1e-10)
    assert monomial_norm(zero, 1, 1) == pytest.approx(math.pi / 2, rel=1e-10)
    assert monomial_norm(catalog("log_pole", gamma=1), 1, 1) == pytest.approx(math.pi, rel=1e-10)


def test_monomial_norm_excluded():
    with pytest.raises(ExcludedMonomialError):
        monomial_norm(catalog("log_pole", gamma=1), 3, 2)


def test_monomial_norm_unweighted_closed_form():
    zero = catalog("zero")
    for a in (0, 3, 10, 30):
        assert monomial_norm(zero, 2, a) == pytest.approx(math.pi / (a + 1), rel=1e-9)
    assert monomial_norm(catalog("zero", n=2), 1, (1, 2)) == pytest.approx(math.pi ** 2 / 6, rel=1e-9)


def test_monomial_norm_weighted_closed_form():
    # exp(2m|z|^2) on the disk: 2 pi int r^(2a+1) e^(2 m r^2) dr
    from scipy.integrate import quad
    w = catalog("neg_abs_square")
    for m, a in ((1, 0), (3, 4)):
        ref = 2 * math.pi * quad(lambda r: r ** (2 * a + 1) * math.exp(2 * m * r * r), 0, 1,
                                 epsabs=0, epsrel=1e-13)[0]
        assert monomial_norm(w, m, a) == pytest.approx(ref, rel=1e-9)


def test_quadrature_reports_failure():
    with pytest.raises(QuadratureError) as info:
        adaptive_radial(lambda rule: np.array([np.sum(rule.weights * np.sin(1e4 * rule.nodes))]),
                        1.0, tol=1e-14, max_nodes=3000)
    assert info.value.estimate > 0


def test_kernel_diag_examples():
    zero = catalog("zero")
    assert kernel_diag_toric(zero, 1, 0.0)[0] == pytest.approx(1 / math.pi, abs=1e-12)
    k, tail = kernel_diag_toric(zero, 1, 0.5, 50)
    assert abs(k - 16 / (9 * math.pi)) <= 1e-8
    assert tail >= 0
    k, _ = kernel_diag_toric(catalog("log_pole", gamma=1), 2, 0.5, 50)
    assert abs(k - 1 / (9 * math.pi)) <= 1e-8


def test_kernel_zero_on_pole_axis():
    k, _ = kernel_diag_toric(catalog("log_pole", gamma=1), 2, 0.0)
    assert k == 0.0


def test_kernel_tail_covers_truncation():
    zero = catalog("zero")
    z = 0.9
    k, tail = kernel_diag_toric(zero, 1, z, 60)
    assert 0 < bergman_disk(z) - k <= 1.5 * tail


def test_polydisk_kernel_is_product():
    w = catalog("zero", n=2)
    z = np.array([[0.3 + 0.2j, -0.4j]])
    k, _ = engine_for(w, 1).kernel(z)
    assert k[0] == pytest.approx(bergman_disk(z[0, 0]) * bergman_disk(z[0, 1]), rel=1e-9)


def test_gram_single_constant():
    zero = catalog("zero")
    for z in (0.0, 0.4 + 0.3j, -0.9):
        k, report = gram_kernel_general(zero, 1, z, 0)
        assert k == pytest.approx(1 / math.pi, rel=1e-12)
        assert report["size"] == 1


def test_gram_matches_toric():
    zero = catalog("zero")
    kg, report = gram_kernel_general(zero, 1, 0.5, 50)
    kt, _ = kernel_diag_toric(zero, 1, 0.5, 50)
    assert abs(kg - kt) <= 1e-7 * kt
    assert report["flag"] in ("ok", "clipped")


def test_bump_switched_off_is_radial():
    flat = catalog("angular_bump", eps=0.0)
    for z in (0.2, 0.5 + 0.3j):
        kg, _ = gram_kernel_general(flat, 2, z, 40)
        kt, _ = kernel_diag_toric(catalog("zero"), 2, z, 40)
        assert abs(kg - kt) <= 1e-7 * kt


def test_gram_general_agrees_with_toric_on_radial_weights():
    for w in (catalog("abs_square"), catalog("neg_abs_square"),
              catalog("radial_custom", table=[(0, 0), (0.5, -0.5), (1, 0)])):
        for m in (1, 4):
            z = np.array([0.1, 0.6 + 0.2j])
            kt, _ = engine_for(w, m, 40, engine="toric").kernel(z)
            kg, _ = engine_for(w, m, 40, engine="gram").kernel(z)
            np.testing.assert_allclose(kg, kt, rtol=1e-7)


def test_witness_examples():
    zero = catalog("zero")
    best, witness, k = extremal_witness_check(zero, 1, 0, trials=50)
    assert best <= 1 / math.pi * (1 + 1e-12)
    assert witness == pytest.approx(k, rel=1e-9)
    assert k == pytest.approx(1 / math.pi, rel=1e-12)
    best, _, _ = extremal_witness_check(zero, 1, 0, trials=0)
    assert best == 0.0


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(0, 0.8), st.floats(0, 6.3))
def test_witness_never_beats_kernel(seed, r, theta):
    w = catalog("angular_bump", eps=0.3)
    z = r * np.exp(1j * theta)
    best, witness, k = extremal_witness_check(w, 2, z, 30, trials=40, seed=seed)
    assert best <= k * (1 + 1e-9)
    assert abs(witness - k) <= 1e-9 * k


def test_truncation_monotone():
    w = catalog("abs_square")
    z = np.array([0.3, 0.7, 0.9])
    prev = np.zeros(3)
    for n in (0, 5, 10, 20, 40):
        k, _ = engine_for(w, 3, n).kernel(z)
        assert np.all(k >= prev * (1 - 1e-12))
        prev = k


def test_weight_monotonicity():
    # V <= W pointwise implies K_{mV} <= K_{mW}
    lo, hi = catalog("neg_abs_square"), catalog("zero")
    z = np.array([0.0, 0.5, 0.8])
    for m in (1, 4):
        k_lo, _ = engine_for(lo, m).kernel(z)
        k_hi, _ = engine_for(hi, m).kernel(z)
        assert np.all(k_lo <= k_hi * (1 + 1e-12))


@given(st.floats(-2, 2), st.integers(1, 6))
@settings(max_examples=15, deadline=None)
def test_translation_scales_kernel(c, m):
    w = catalog("abs_square")
    z = np.array([0.25, 0.6j])
    k, _ = engine_for(w, m).kernel(z)
    ks, _ = engine_for(w.shifted(c), m).kernel(z)
    np.testing.assert_allclose(ks, k * math.exp(2 * m * c), rtol=1e-12)


def test_basis_degree_grows_with_pole_and_bound():
    assert basis_degree(1, 0.0) == 60
    assert basis_degree(64, 1.0) == 4 * 64 + 40
    assert basis_degree(64, 0.0, 1.0) == 4 * 64 + 40


def test_moment_table_norms():
    table = moment_table(catalog("zero"), 1, 5)
    norms = table.norms
    assert set(norms) == {(a,) for a in range(6)}
    assert norms[(2,)] == pytest.approx(math.pi / 3, rel=1e-10)
    assert table.quad_error <= 1e-10


@pytest.mark.parametrize("name", ["zero", "log_pole", "abs_square", "neg_abs_square"])
def test_mean_value_bound(name):
    from bergmanlab import ball_volume
    from bergmanlab.weights import weight_esssup
    w = catalog(name)
    for m in (1, 4):
        for z in (0.0, 0.3 + 0.2j, 0.6):
            r = 0.5 * (1 - abs(z))
            k, _ = engine_for(w, m).kernel(np.array([z]))
            bound = math.exp(2 * m * weight_esssup(w, z, r)) / ball_volume(1, r)
            assert k[0] <= bound * (1 + 1e-9)
