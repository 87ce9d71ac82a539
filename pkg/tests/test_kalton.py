import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from oslab import kalton as kt
from oslab import opspaces as osp

Q3 = kt.sign_quotient(3)
RNG = np.random.default_rng(3)


def rand_x(k, radius=1.0, rng=RNG):
    return kt.random_x(Q3, k, rng, radius)


# --- quotient ---------------------------------------------------------------------------


@pytest.mark.parametrize("N", [1, 2, 3, 4, 5, 6])
def test_sign_quotient_shape(N):
    q = kt.sign_quotient(N)
    assert q.Q.shape == (N, 2 ** (N - 1))
    assert np.all(np.abs(q.Q) == 1) and np.all(q.Q[0] == 1)
    assert len({tuple(c) for c in q.Q.T}) == q.M
    assert q.source == osp.MinL1(q.M) and q.target == osp.MinLinf(N)


@pytest.mark.parametrize("N", [2, 3, 4])
def test_extreme_points_have_unit_preimages(N):
    assert kt.sign_quotient(N).extreme_point_bound() == pytest.approx(1.0, abs=1e-12)


def test_complex_section_bound():
    for _ in range(100):
        x = RNG.standard_normal(3) + 1j * RNG.standard_normal(3)
        y = kt.complex_section(Q3, x)
        np.testing.assert_allclose(Q3.Q @ y, x, atol=1e-12)
        assert np.abs(y).sum() <= Q3.C * kt.linf(x) * (1 + 1e-12)


def test_complex_scalars_need_constant_above_one():
    q = kt.sign_quotient(2)
    x = np.array([1.0, 1.0j])
    y = np.linalg.solve(q.Q, x)  # Q is invertible, so this is the only preimage
    assert np.abs(y).sum() == pytest.approx(math.sqrt(2), abs=1e-12)
    assert kt.linf(x) == 1.0


def test_real_section_matches_vertex_oracle():
    for _ in range(20):
        x = RNG.uniform(-1, 1, 3)
        best, _ = oracles.l1_vertex_enumeration(Q3.Q, x)
        assert np.abs(kt.real_section(Q3, x)).sum() == pytest.approx(best, rel=1e-10)


# --- homogeneous maps ----------------------------------------------------------------------


def test_extension_of_identity_and_constant():
    ident = kt.homogeneous_extension(lambda u: u, kt.linf)
    v = np.array([0.3, -1.0, 0.5j])
    const = kt.homogeneous_extension(lambda u: v, kt.linf)
    for _ in range(20):
        x = RNG.standard_normal(3) + 1j * RNG.standard_normal(3)
        np.testing.assert_allclose(ident(x), x, rtol=1e-14)
        np.testing.assert_allclose(const(x), kt.linf(x) * v, rtol=1e-14)
    np.testing.assert_array_equal(ident(np.zeros(3)), np.zeros(3))


@given(st.floats(0.0, 10.0), st.integers(0, 2**32 - 1))
def test_sections_are_homogeneous(alpha, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    for f in (kt.y_section(Q3), kt.section_into_Z(Q3, 2, math.exp(-2))):
        a, b = f(alpha * x), kt.scale_value(f(x), alpha)
        assert kt.value_gap(a, b) <= 1e-9 * max(1.0, alpha * kt.linf(x))


def test_section_zero():
    z = kt.section_into_Z(Q3, 1, 0.5)(np.zeros(3))
    assert all(not np.any(v) for v in z.parts.values())


# --- choice of summand ------------------------------------------------------------------------


def test_choose_m_examples():
    assert kt.choose_m(1.0, 2, math.exp(-2)) == 6
    assert kt.choose_m(2.0, 3, math.exp(-3)) == 10
    assert kt.choose_m(1.0, 3, 2 * 9 * 1.0) == 1
    assert kt.choose_m(1.0, 3, 100.0) == 1


@given(st.floats(0.5, 4.0), st.integers(1, 4), st.floats(1e-6, 50.0))
def test_choose_m_is_least(C, k, eps):
    m = kt.choose_m(C, k, eps)
    assert 2.0 ** (1 - m) * C * k * k <= eps
    assert m == 1 or 2.0 ** (2 - m) * C * k * k > eps


# --- Y_m and Z norms ---------------------------------------------------------------------------


def test_ym_norm_defining_max():
    y = np.array([2.25, -2.0, -2.0, 1.75]).reshape(4, 1, 1)
    np.testing.assert_allclose(Q3.apply(y).ravel(), [0, 0.5, 0.5])
    assert kt.ym_norm(Q3, 3, y).value == pytest.approx(1.0, abs=1e-12)
    assert kt.YmSpace(Q3, 3).norm(y).value == pytest.approx(1.0, abs=1e-12)


def test_ym_norm_zero_and_kernel():
    assert kt.ym_norm(Q3, 2, np.zeros((4, 2, 2))).value == pytest.approx(0.0, abs=1e-9)
    u = np.array([1.0, -1.0, -1.0, 1.0])
    assert np.allclose(Q3.Q @ u, 0)
    mats = np.einsum("m,ij->mij", u, RNG.standard_normal((2, 2)))
    src, _ = osp.minl1_bracket(mats)
    c = kt.ym_norm(Q3, 4, mats)
    assert c.lower <= src.upper / 16 + 1e-9 and c.upper >= src.lower / 16 - 1e-9


def test_ym_norm_sampled_formula():
    for m in (1, 3, 6):
        for _ in range(10):
            v = RNG.standard_normal(4) + 1j * RNG.standard_normal(4)
            expected = max(2.0**-m * np.abs(v).sum(), kt.linf(Q3.Q @ v))
            assert kt.ym_norm(Q3, m, v.reshape(4, 1, 1)).value == pytest.approx(expected, rel=1e-9)


def test_ym_norm_shape_error():
    with pytest.raises(osp.ShapeError):
        kt.ym_norm(Q3, 1, np.zeros((3, 2, 2)))


def test_z_norm_single_summand_and_zero():
    y = RNG.standard_normal((4, 2, 2)) + 0j
    z = kt.ZElement(2, {5: y})
    assert kt.z_norm(Q3, z).value == pytest.approx(kt.ym_norm(Q3, 5, y).value, abs=1e-12)
    assert kt.z_norm(Q3, kt.zero_z(2)).value == pytest.approx(0.0, abs=1e-9)


def test_z_norm_two_equal_copies():
    x = rand_x(2)
    y = kt.section_into_Z(Q3, 2, 1.0).amplify(x)
    (m,) = y.parts
    arr = y.parts[m]
    v = kt.ym_norm(Q3, 1, arr).value
    assert kt.ym_norm(Q3, 2, arr).value == pytest.approx(v)
    z = kt.ZElement(2, {1: arr, 2: arr})
    plain = kt.z_norm(Q3, z, refine=False)
    assert plain.lower == pytest.approx(v, abs=2e-9)
    assert plain.upper == pytest.approx(2 * v, abs=4e-9)
    refined = kt.z_norm(Q3, z)
    assert plain.lower - 1e-9 <= refined.lower <= refined.upper


def test_z_norm_first_level_is_exact_sum():
    for _ in range(10):
        parts = {m: RNG.standard_normal((4, 1, 1)) + 1j * RNG.standard_normal((4, 1, 1)) for m in (1, 3, 4)}
        z = kt.ZElement(1, parts)
        c = kt.z_norm(Q3, z)
        total = sum(max(2.0**-m * np.abs(p).sum(), kt.linf(Q3.Q @ p.ravel())) for m, p in parts.items())
        assert c.lower <= total + 1e-9 <= c.upper + 2e-9
        assert c.width <= 1e-8


def test_z_sandwich_consistency():
    for _ in range(10):
        z = kt.random_z(Q3, 3, RNG, [1, 2, 6], 1.0)
        c = kt.z_norm(Q3, z)
        assert 0 <= c.lower <= c.upper
        assert c.lower >= max(kt.ym_norm(Q3, m, z.parts[m]).lower for m in z.support) - 1e-9
        assert c.lower >= kt.x_norm(Q3, kt.qtilde(Q3, z)) - 1e-9


def test_zelement_validation():
    with pytest.raises(ValueError):
        kt.ZElement(2, {0: np.zeros((4, 2, 2))})
    with pytest.raises(ValueError):
        kt.ZElement(2, {1: np.zeros((4, 3, 3))})


# --- section into Z -----------------------------------------------------------------------------


@pytest.mark.parametrize("k", [1, 2, 3])
def test_section_into_z_residual(k):
    f = kt.section_into_Z(Q3, k, math.exp(-k))
    for _ in range(30):
        x = rand_x(k, RNG.uniform(0, math.e**k))
        z = f.amplify(x)
        assert z.support == (f.meta["m"],) or not np.any(x)
        np.testing.assert_allclose(kt.qtilde(Q3, z), x, atol=1e-9)


def test_section_at_basis_vector():
    f = kt.section_into_Z(Q3, 1, 0.1)
    z = f(np.array([1.0, 0.0, 0.0]))
    (m,) = z.parts
    assert m == f.meta["m"] == kt.choose_m(Q3.C, 1, 0.1)
    best, sols = oracles.l1_vertex_enumeration(Q3.Q, [1.0, 0.0, 0.0])
    assert np.abs(z.parts[m]).sum() == pytest.approx(best, abs=1e-12)
    assert any(np.allclose(z.parts[m].real, s) for s in sols)


# --- eps-norms ---------------------------------------------------------------------------------


def test_eps_norm_linear_contraction():
    half = kt.HomogeneousMap(lambda v: 0.5 * v, Q3.target, Q3.target)
    pairs = kt.sample_x_pairs(Q3, 2, 60, RNG, 3.0)
    s = kt.eps_norm_lower(half, 2, 0.1, pairs, q=None)
    assert s.lower <= 0.5 + 1e-9


def test_eps_norm_norm_times_vector_first_level():
    """Brute-force grid over scalar pairs: sup of the ratio is 1 (triangle inequality)."""
    eps = 0.2
    v = np.array([1.0])
    f = kt.HomogeneousMap(lambda x: np.abs(x[0]) * v, osp.MinLinf(1), osp.MinLinf(1))
    grid = [r * np.exp(1j * a) for r in np.linspace(0, 2, 9) for a in np.linspace(0, 2 * np.pi, 12, endpoint=False)]
    pairs = [(np.array([[[x]]]), np.array([[[y]]])) for x in grid for y in grid]
    s = kt.eps_norm_lower(f, 1, eps, pairs)
    assert s.lower == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("k", [1, 2])
def test_eps_norm_section_bounded(k):
    f = kt.section_into_Z(Q3, k, math.exp(-k))
    pairs = kt.sample_x_pairs(Q3, k, 60, RNG, math.e**k)
    assert kt.eps_norm_lower(f, k, math.exp(-k), pairs).lower <= 1 + 1e-6


def test_lemma42_bound_on_section():
    k = 2
    f = kt.section_into_Z(Q3, k, math.exp(-k))
    pairs = kt.sample_x_pairs(Q3, k, 60, RNG, math.e**k)
    bad = kt.lemma42_violations(
        f.amplify,
        1.0,
        1.0,
        0.0,
        pairs,
        lambda x: osp.NormCertificate.exact_value(kt.x_norm(Q3, x)),
        lambda u, v: kt.z_norm(Q3, u - v),
    )
    assert bad == []


# --- equivalence maps ------------------------------------------------------------------------------


def test_g_h_inverse():
    k = 2
    eq = kt.equivalence_maps(Q3, k)
    for z in kt.sample_z_points(Q3, k, eq, 100, RNG, math.e**k):
        x, kz = eq.g(z)
        assert (eq.h(x, kz) - z).max_abs() <= 1e-9
        np.testing.assert_allclose(kt.qtilde(Q3, kz), 0, atol=1e-9)


def test_equivalence_checks_first_level():
    checks = kt.verify_equivalence(Q3, 1, samples=60, seed=1)
    assert all(c.passed for c in checks), [c.to_json() for c in checks if not c.passed]


def test_faulty_section_detected():
    good = kt.section_into_Z(Q3, 1, math.exp(-1))
    m = good.meta["m"]
    bad = kt.HomogeneousMap(lambda x: kt.ZVector(Q3.M, {m: 1.01 * good(x).parts[m]}), Q3.target, "Z", dict(good.meta))
    checks = {c.name: c for c in kt.verify_equivalence(Q3, 1, samples=30, section=bad)}
    assert not checks["section-residual"].passed


def test_budget_exhaustion():
    with pytest.raises(kt.BudgetExceeded):
        kt.verify_equivalence(Q3, 3, samples=200, seconds=0.0)


# --- interpolated family and gluing -----------------------------------------------------------------


def test_family_nodes_and_midpoints():
    fam = kt.section_family(Q3, 1, T=4)
    x = rand_x(1)[:, 0, 0]
    for n in range(5):
        assert kt.value_gap(fam.at(n)(x), fam.nodes[n](x)) == 0.0
    mid = fam.at(1.5)(x)
    avg = (fam.nodes[1](x) + fam.nodes[2](x)).scale(0.5)
    assert kt.value_gap(mid, avg) <= 1e-15
    with pytest.raises(ValueError):
        kt.interpolate_family([])


def test_family_time_lipschitz_constant_is_two():
    """Neighbouring nodes sit in different summands, so |f^t - f^s| reaches 2|t - s| on the unit sphere."""
    fam = kt.section_family(Q3, 1, T=3)
    worst = 0.0
    for _ in range(20):
        x = rand_x(1)
        x = x / kt.x_norm(Q3, x)
        for t, s in ((0.2, 0.7), (1.0, 2.0), (2.5, 2.75)):
            d = kt.z_norm(Q3, fam.at(t).amplify(x) - fam.at(s).amplify(x)).upper
            assert d <= 2 * abs(t - s) + 1e-8
            worst = max(worst, d / abs(t - s))
    assert worst == pytest.approx(2.0, abs=1e-6)


def test_family_hypotheses_report():
    fam = kt.section_family(Q3, 1, T=2)
    pts = [rand_x(1, r) for r in (0.5, 1.0, 2.0, 3.0)]
    assert kt.check_family_hypotheses(fam, 2.0, 1, pts, [0.0, 0.5, 1.0]).ok
    assert not kt.check_family_hypotheses(fam, 1.0, 1, pts, [0.0, 0.5, 1.0]).ok


def test_glue_zero_and_section():
    F = kt.glue_spherical(kt.section_family(Q3, 2), 1.0, 2)
    assert F(np.zeros((3, 2, 2))).support == ()
    for r in (0.3, 1.0, 2.7, 30.0):
        x = rand_x(2, r)
        np.testing.assert_allclose(kt.qtilde(Q3, F(x)), x, atol=1e-9)


def test_glue_constant_linear_family_is_amplification():
    t = RNG.standard_normal((3, 3))
    lin = kt.HomogeneousMap(lambda v: t @ v, Q3.target, Q3.target)
    F = kt.glue_spherical(kt.interpolate_family([lin] * 4, Q3), 1.0, 2)
    for r in (0.0, 0.5, 3.0, 40.0):
        x = rand_x(2, r)
        np.testing.assert_allclose(F(x) if r else lin.amplify(x), lin.amplify(x), atol=1e-12)


def test_glue_flags_radius_beyond_grid():
    F = kt.glue_spherical(kt.section_family(Q3, 1, T=2), 1.0, 1)
    F(rand_x(1, math.e**3))
    assert F.diagnostics and F.diagnostics[0][0] == "log-radius-beyond-grid"


def test_glued_ray_pair_breaks_stated_bound():
    lhs, rhs = kt.ray_counterexample(Q3)
    assert lhs.lower > rhs + 1.0
    assert lhs.upper <= 2 * rhs


def test_gluing_first_level_doubled_bound():
    rep = kt.verify_gluing(Q3, 1, pairs=90, seed=2)
    checks = {c.name: c for c in rep.checks}
    assert checks["glued-section-residual"].passed
    assert checks["sphere-restriction"].passed
    assert checks["glued-bound-doubled"].passed


# --- uniqueness of witnesses ------------------------------------------------------------------


@pytest.mark.parametrize("k", [2, 3])
def test_uniqueness_same_witness(k):
    F = kt.glue_spherical(kt.section_family(Q3, k), 1.0, k)
    rep = kt.spherical_uniqueness_check(F, F.witness, F.witness, [0.5, 1.0, 4.0, 20.0], samples=5)
    assert rep.agree and rep.checks == 20


@pytest.mark.parametrize("k", [2, 3])
def test_uniqueness_outside_modification_invisible(k):
    F = kt.glue_spherical(kt.section_family(Q3, k), 1.0, k)

    def modified(r):
        base = F.witness(r)

        def rule(x):
            v = base(x)
            return v.scale(5.0) if kt.linf(x) > r * (1 + 1e-12) else v

        return kt.HomogeneousMap(rule, base.source, base.target)

    rep = kt.spherical_uniqueness_check(F, F.witness, modified, [0.5, 2.0, 9.0], samples=6)
    assert rep.agree


@pytest.mark.parametrize("k", [2, 3])
def test_uniqueness_interior_perturbation_detected(k):
    F = kt.glue_spherical(kt.section_family(Q3, k), 1.0, k)

    def perturbed(r):
        base = F.witness(r)

        def rule(x):
            v = base(x)
            return v.scale(1.5) if kt.linf(x) < r else v

        return kt.HomogeneousMap(rule, base.source, base.target)

    rep = kt.spherical_uniqueness_check(F, F.witness, perturbed, [0.5, 2.0, 9.0], samples=6)
    assert not rep.agree and rep.counterexamples


def test_uniqueness_needs_k_above_one():
    F = kt.glue_spherical(kt.section_family(Q3, 1), 1.0, 1)
    with pytest.raises(ValueError):
        kt.spherical_uniqueness_check(F, F.witness, F.witness, [1.0])
