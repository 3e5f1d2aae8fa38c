import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bosecool.oscillator import (ZERO_CUTOFF, delta_c, delta_c_block, fc_matrix,
                                 franck_condon, hermite_functions, write_delta_c_table,
                                 write_fc_table)
from scipy.special import eval_genlaguerre

from _oracles import delta_c_oracle, fc_expm


def test_ground_self_overlap():
    for eta in (0.3, 1.0, 2.0, 3.0):
        assert franck_condon(0, 0, eta) == pytest.approx(math.exp(-eta ** 2 / 2), rel=1e-14)


def test_zero_recoil_is_identity():
    np.testing.assert_array_equal(fc_matrix(6, 6, 0.0), np.eye(6))


def test_dark_zero_n1_s8_eta3():
    # L_1^(8)(9) = 9 - 9 = 0
    assert abs(franck_condon(9, 1, 3.0)) < 1e-12
    assert franck_condon(9, 1, 3.0) == 0.0


def test_elastic_zero_at_eta1():
    assert franck_condon(1, 1, 1.0) == 0.0


def test_against_matrix_exponential():
    for x in (0.7, 2.0, 3.0, -1.5):
        ref = fc_expm(40, 40, x)
        F = fc_matrix(40, 40, x)
        np.testing.assert_allclose(F, ref, atol=1e-12)


def test_negative_index_rejected():
    with pytest.raises(ValueError):
        franck_condon(-1, 0, 1.0)


@given(l=st.integers(0, 30), m=st.integers(0, 30), x=st.floats(-4, 4))
@settings(max_examples=200, deadline=None)
def test_modulus_symmetry(l, m, x):
    assert abs(franck_condon(l, m, x)) == pytest.approx(abs(franck_condon(m, l, x)),
                                                        rel=1e-12, abs=1e-15)


@given(m=st.integers(0, 15), s=st.integers(0, 12))
@settings(max_examples=60, deadline=None)
def test_laguerre_root_gives_zero(m, s):
    # the first root of L_m^(s) used as eta^2 makes <m+s|e^{ikx}|m> vanish
    if m == 0:
        return
    from scipy.special import roots_genlaguerre
    root = roots_genlaguerre(m, s)[0][0]
    assert abs(eval_genlaguerre(m, s, root)) < 1e-8
    assert abs(franck_condon(m + s, m, math.sqrt(root))) < 1e-9


def test_unitarity_at_50_levels():
    F = fc_matrix(50, 10, 3.0)
    deficit = 1 - (np.abs(F) ** 2).sum(axis=0)
    assert np.all(deficit < 1e-6)
    assert np.all(deficit > -1e-12)


def test_delta_c_examples():
    assert delta_c(0, 0, 0) == pytest.approx(math.pi / 2, rel=1e-15)
    assert delta_c(1, 1, 0) == pytest.approx(math.pi / 64, rel=1e-15)
    assert delta_c(2, 0, 1) == delta_c(0, 2, 1)


def test_delta_c_matches_rational_oracle():
    worst = 0.0
    for E in range(0, 21):
        for n1 in range(E + 1):
            for n3 in range(E + 1):
                ref = delta_c_oracle(n1, E - n1, n3)
                got = delta_c(n1, E - n1, n3)
                if ref == 0:
                    assert abs(got) < 1e-15
                else:
                    worst = max(worst, abs(got - ref) / ref)
    assert worst < 1e-12


@given(n1=st.integers(0, 15), n2=st.integers(0, 15), data=st.data())
@settings(max_examples=100, deadline=None)
def test_delta_c_permutation_invariance(n1, n2, data):
    E = n1 + n2
    n3 = data.draw(st.integers(0, E))
    n4 = E - n3
    v = delta_c(n1, n2, n3)
    for a, b, c in ((n2, n1, n3), (n3, n4, n1), (n4, n3, n2), (n1, n2, n4)):
        assert delta_c(a, b, c) == pytest.approx(v, rel=1e-12, abs=1e-300)


def test_delta_c_domain_error():
    with pytest.raises(ValueError):
        delta_c(1, 1, 3)


def test_delta_c_block_readonly_and_symmetric():
    B = delta_c_block(12)
    assert not B.flags.writeable
    np.testing.assert_allclose(B, B.T, rtol=1e-12, atol=0)


def test_hermite_functions_orthonormal():
    z, w = np.polynomial.hermite.hermgauss(60)
    psi = hermite_functions(20, z) * np.exp(z ** 2 / 2)
    G = (psi * w) @ psi.T
    np.testing.assert_allclose(G, np.eye(21), atol=1e-12)


def test_table_dumps(tmp_path):
    p = tmp_path / "fc.csv"
    write_fc_table(p, 3.0, 4, [1.0, -0.5])
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["l", "m", "kappa", "re", "im"]
    assert len(rows) == 1 + 2 * 16
    q = tmp_path / "dc.csv"
    write_delta_c_table(q, 3)
    rows = list(csv.reader(open(q)))
    assert rows[0] == ["n1", "n2", "n3", "value"]
    assert float(rows[1][3]) == pytest.approx(math.pi / 2)
