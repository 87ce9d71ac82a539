import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oslab import interpolation as ip
from oslab import obstruction as ob
from oslab import opspaces as osp


@pytest.mark.parametrize("n", [1, 2, 5, 8])
def test_special_norms(n):
    r = 1.7
    sp = ob.build_special(n, r)
    for a, b in zip(sp.a, sp.b):
        assert osp.norm(a).value == pytest.approx(r, abs=1e-9)
        assert osp.norm(b).value == pytest.approx(r, abs=1e-9)
        assert osp.distance(a, b).value == pytest.approx(math.sqrt(2) * r, abs=1e-9)
    assert osp.norm(sp.c).value == pytest.approx(r, abs=1e-9)
    assert osp.norm(sp.d).value == pytest.approx(r, abs=1e-9)
    assert osp.distance(sp.c, sp.d).value == pytest.approx(math.sqrt(2) * r, abs=1e-9)


def test_special_outer_column_in_column_space():
    sp = ob.build_special(4, 1.0, osp.Column(8))
    assert osp.norm(sp.c).value == pytest.approx(2.0, abs=1e-9)


def test_special_truncation_error():
    with pytest.raises(ob.TruncationError):
        ob.build_special(3, 1.0, osp.Row(5))


def test_outer_column_row_default():
    row = ob.lemma32_row(4, 0.5)
    assert (row.n, row.theta) == (4, 0.5)
    assert row.target == pytest.approx(math.sqrt(2), abs=1e-12)
    assert row.dual_lower == pytest.approx(math.sqrt(2), abs=1e-12)
    assert row.upper >= row.target
    assert row.as_csv_row()[:3] == [4, 0.5, row.target]


def test_outer_column_table_shape():
    tab = ob.lemma32_table([1, 2], [0.0, 0.5], workers=2)
    assert [(r.n, r.theta) for r in tab] == [(1, 0.0), (1, 0.5), (2, 0.0), (2, 0.5)]


# --- growth obstruction -------------------------------------------------------------


def test_obstruction_scan_and_formula_example():
    res = ob.growth_obstruction(0.0, 1.0, 1.0, 1.0, 1.0, range(1, 200))
    assert res.n_star == 10
    assert res.n_certified == 9
    # past the closed form every row must violate
    assert all(row.violated for row in res.rows if row.n > res.n_certified)


def test_obstruction_ordering():
    with pytest.raises(ob.OrderingError):
        ob.growth_obstruction(0.5, 0.5, 1, 1, 1, range(1, 10))
    with pytest.raises(ob.OrderingError):
        ob.growth_obstruction(0.7, 0.3, 1, 1, 1, range(1, 10))
    res = ob.growth_obstruction(0.7, 0.3, 1, 1, 1, range(1, 500), symmetric=True)
    assert res.reduced and res.theta == pytest.approx(0.3) and res.gamma == pytest.approx(0.7)


def test_obstruction_no_violation_in_short_range():
    res = ob.growth_obstruction(0.0, 1.0, 1.0, 1.0, 1.0, range(1, 5))
    assert res.n_star is None and not res.violated_in_range


@given(
    st.floats(0.0, 0.9),
    st.floats(0.05, 1.0),
    st.floats(0.1, 3.0),
    st.floats(0.2, 3.0),
    st.floats(0.1, 3.0),
)
def test_scanned_crossover_never_beyond_closed_form(theta, dg, r, D, L):
    gamma = min(1.0, theta + dg)
    if gamma <= theta:
        return
    nc = ob.certified_crossover(theta, gamma, r, D, L)
    if nc > 5000:
        return
    res = ob.growth_obstruction(theta, gamma, r, D, L, range(1, nc + 2))
    assert res.n_star is not None and res.n_star <= nc + 1
    # the closed form is a guarantee: nothing past it satisfies the inequality
    assert all(row.violated for row in res.rows if row.n > nc)


# --- divergence of amplified candidates ------------------------------------------------------


def test_transpose_candidate_divergence():
    r = 1.0
    for n in (1, 3, 6):
        row = ob.prop31_row(n, r, ob.transpose_candidate, extra_pairs=4)
        assert row.stacked_norm >= row.sqrt_n_rho_witness - 1e-9
        assert row.omega_side <= row.omega_sampled + 1e-12
        assert row.stacked_norm == pytest.approx(math.sqrt(2 * n) * r, abs=1e-9)


def test_collapsing_candidate_has_zero_rho_witness():
    row = ob.prop31_row(3, 1.0, ob.collapsing_candidate, extra_pairs=2)
    assert row.sqrt_n_rho_witness == pytest.approx(0.0, abs=1e-9)


def test_amplify_entrywise():
    rng = np.random.default_rng(0)
    x = osp.random_element(osp.Row(3), 2, rng)
    t = rng.standard_normal((3, 3))
    out = ob.amplify(lambda v: t @ v, x, osp.Column(3))
    np.testing.assert_allclose(out.coords, np.einsum("lk,kij->lij", t, x.coords))


def test_amplified_outer_column_interpolation_scaling():
    b = ob.lemma32_element(2).coords.ravel()
    assert ip.upper_geometric(b, ip.row_couple(2, 2), 0.5) == pytest.approx(2**0.25)
