import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import erfc

from hermlab import estimates as est
from hermlab.basis import SpectralField, build_mode_table, gauss_hermite_grid, hermite_eval_1d
from hermlab.spectral import harmonic_propagate
from oracles import hermite_function_mp


def mp_integral(f):
    return float(mpmath.quad(f, [-mpmath.inf, -3, 0, 3, mpmath.inf]))


# --- fits ------------------------------------------------------------------------


def test_fit_exact_power_law():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    f = est.fit_scaling(x, 3 * x**-0.5)
    assert f.slope == pytest.approx(-0.5, abs=1e-14)
    assert f.intercept == pytest.approx(np.log(3), abs=1e-14)
    assert f.max_residual < 1e-14


def test_fit_noisy_power_law_slope_within_error():
    rng = np.random.default_rng(0)
    x = np.geomspace(1, 1000, 30)
    y = 2 * x**1.5 * np.exp(0.01 * rng.standard_normal(x.size))
    f = est.fit_scaling(x, y)
    lx = np.log(x)
    se = 0.01 / np.sqrt(np.sum((lx - lx.mean()) ** 2))
    assert abs(f.slope - 1.5) < 4 * se


@pytest.mark.parametrize("x,y", [([1, 2], [1, 2]), ([1, 2, 3], [1, -2, 3]), ([0, 1, 2], [1, 1, 1])])
def test_fit_rejects(x, y):
    with pytest.raises(ValueError):
        est.fit_scaling(x, y)


# --- L^p norms ----------------------------------------------------------------------


def test_ground_state_norms():
    assert est.hermite_lp_norm(0, np.inf) == pytest.approx(np.pi**-0.25, rel=1e-12)
    assert est.hermite_lp_norm(0, 4) == pytest.approx((2 * np.pi) ** -0.125, rel=1e-10)
    assert est.hermite_lp_norm((0, 0, 0), np.inf) == pytest.approx(np.pi**-0.75, rel=1e-12)


@pytest.mark.parametrize("index", [3, 40, (2, 5), (1, 0, 7)])
def test_l2_norm_is_one(index):
    assert est.hermite_lp_norm(index, 2) == pytest.approx(1.0, rel=1e-10)


def test_l4_against_extended_precision():
    ref = mp_integral(lambda x: hermite_function_mp(6, x) ** 4) ** 0.25
    assert est.hermite_lp_norm(6, 4) == pytest.approx(ref, rel=1e-9)


def test_sup_norm_refined_beyond_grid():
    n = 30
    x = np.linspace(0, 12, 2000001)
    ref = np.max(np.abs(hermite_eval_1d(n, x)))
    assert est.hermite_lp_norm(n, np.inf) == pytest.approx(ref, rel=1e-9)


def test_lp_validation_and_tail_warning():
    with pytest.raises(ValueError):
        est.hermite_lp_norm(3, 0.5)
    short = gauss_hermite_grid(1, 3.0, 0.01)
    with pytest.warns(RuntimeWarning):
        est.hermite_lp_norm(20, 4, short)


# --- products ----------------------------------------------------------------------


def test_ground_state_square():
    # ||e_0^2||_{L^2} = (2 pi)^{-1/4}
    assert est.product_sobolev_norm([[0], [0]], 0) == pytest.approx((2 * np.pi) ** -0.25, rel=1e-12)


def test_product_norm_s0_equals_exact_l2():
    for ns in ([5, 9], [3, 4, 7]):
        v = est.product_sobolev_norm([[n] for n in ns], 0)
        ref = mp_integral(lambda x: np.prod([hermite_function_mp(n, x) for n in ns]) ** 2)
        assert v == pytest.approx(np.sqrt(ref), rel=1e-10)


def test_product_norm_tensorises():
    a = est.product_sobolev_norm([[3, 0], [1, 2]], 0)
    b = est.product_sobolev_norm([[3], [1]], 0) * est.product_sobolev_norm([[0], [2]], 0)
    assert a == pytest.approx(b, rel=1e-12)


def test_product_truncation_warns():
    with pytest.warns(RuntimeWarning):
        est.product_sobolev_norm([[20], [20]], 0.5, K=10)


def test_product_validation():
    with pytest.raises(ValueError):
        est.product_sobolev_norm([[1]], 0)
    with pytest.raises(ValueError):
        est.product_sobolev_norm([[1], [2]], 1.5)


def test_pair_sup_consistent():
    v, m = est.pair_product_sup(12)
    assert v == pytest.approx(est.product_sobolev_norm([[12], [m]], 0), rel=1e-10)
    assert all(est.product_sobolev_norm([[12], [k]], 0) <= v * (1 + 1e-12) for k in range(13))


# --- quartic integrals ----------------------------------------------------------------


def test_quartic_ground_state():
    v = est.quartic_integral([[0], [0], [0], [0]])
    assert v == pytest.approx(1 / np.sqrt(2 * np.pi), rel=1e-15)


@given(ns=st.lists(st.integers(0, 30), min_size=4, max_size=4).filter(lambda v: sum(v) % 2 == 1))
def test_quartic_odd_parity_vanishes(ns):
    idx = [[n] for n in ns]
    assert est.quartic_integral(idx) == 0.0
    assert est.quartic_integral(idx, "quadrature") == 0.0


@given(ns=st.lists(st.integers(0, 25), min_size=4, max_size=4).filter(lambda v: sum(v) % 2 == 0))
def test_quartic_paths_agree(ns):
    idx = [[n] for n in ns]
    a = est.quartic_integral(idx)
    b = est.quartic_integral(idx, "quadrature")
    assert abs(a - b) <= 1e-13


@pytest.mark.parametrize("ns", [(2, 2, 1, 1), (5, 3, 4, 2), (10, 8, 1, 1)])
def test_quartic_against_mpmath_quadrature(ns):
    ref = mp_integral(lambda x: np.prod([hermite_function_mp(n, x) for n in ns]))
    assert est.quartic_integral([[n] for n in ns]) == pytest.approx(ref, rel=1e-12, abs=1e-15)


def test_quartic_symmetric_and_tensor():
    a = est.quartic_integral([[4, 1], [2, 1], [3, 0], [1, 2]])
    b = est.quartic_integral([[4], [2], [3], [1]]) * est.quartic_integral([[1], [1], [0], [2]])
    assert a == pytest.approx(b, rel=1e-14)
    assert est.quartic_integral([[3], [1], [2], [0]]) == est.quartic_integral([[0], [2], [1], [3]])


def test_quartic_large_index_underflow_free():
    v = est.quartic_integral_mp([[512], [8], [5], [3]])
    assert v != 0 and mpmath.log(abs(v)) < -100


def test_quartic_validation():
    with pytest.raises(ValueError):
        est.quartic_integral([[1], [2], [3]])
    with pytest.raises(ValueError):
        est.quartic_integral([[1], [1], [1], [1]], "other")


# --- bilinear -----------------------------------------------------------------------


@pytest.mark.parametrize("n", [0, 3, 8])
def test_bilinear_single_mode(n):
    # |e^{itH} h_n| = |h_n|, so Q^2 = 2 ||h_n^2||^2 on t in [-1, 1]
    q = est.bilinear_norm_sparse(([[n]], [1.0]), ([[n]], [1.0]))
    ref = np.sqrt(2 * mp_integral(lambda x: hermite_function_mp(n, x) ** 4))
    assert q == pytest.approx(ref, rel=1e-12)


def test_bilinear_sparse_matches_quadrature():
    t = build_mode_table(2, 13)
    rng = np.random.default_rng(4)
    v = SpectralField(t, rng.standard_normal(len(t)) + 1j * rng.standard_normal(len(t)))
    u = SpectralField(t, rng.standard_normal(len(t)) + 1j * rng.standard_normal(len(t)))
    a = est.bilinear_norm_sparse((t.indices, v.coeffs), (t.indices, u.coeffs))
    b = est.bilinear_norm_quadrature(v, u)
    assert a == pytest.approx(b, rel=1e-10)


def test_bilinear_time_shift():
    t = build_mode_table(1, 21)
    rng = np.random.default_rng(5)
    v = SpectralField(t, rng.standard_normal(len(t)) + 0j)
    u = SpectralField(t, rng.standard_normal(len(t)) + 0j)
    c = 0.37
    shifted = est.bilinear_norm_sparse((t.indices, v.coeffs), (t.indices, u.coeffs), (-1 + c, 1 + c))
    vs, us = harmonic_propagate(v, -c), harmonic_propagate(u, -c)
    base = est.bilinear_norm_sparse((t.indices, vs.coeffs), (t.indices, us.coeffs))
    assert shifted == pytest.approx(base, rel=1e-12)


def test_block_field_properties():
    rng = np.random.default_rng(0)
    idx, c = est.sample_block_field(8, 3, rng, modes=12)
    lam2 = 2 * idx.sum(axis=1) + 3
    assert np.linalg.norm(c) == pytest.approx(1.0)
    assert np.all((lam2 >= 16) & (lam2 <= 128))
    assert len({tuple(r) for r in idx}) == len(idx)
    with pytest.raises(ValueError):
        est.sample_block_field(1, 2, rng)


@given(k=st.integers(0, 12), d=st.integers(1, 3))
def test_unrank_compositions_enumerate_shell(k, d):
    got = [est._unrank_composition(k, r, d) for r in range(est._shell_counts(k, d))]
    assert len(set(got)) == len(got)
    assert all(sum(g) == k and len(g) == d for g in got)


def test_envelope_formula():
    assert est.bilinear_envelope(4, 4, 2) == 1.0
    assert est.bilinear_envelope(2, 8, 3, delta=0.1) == pytest.approx(2**0.5 * 0.25**0.4)


def test_time_window_integral_limits():
    w = est.time_window_integral(np.array([0.0, 1e-14, 3.0]))
    assert w[0] == 2 and w[1] == 2
    assert w[2] == pytest.approx(2 * np.sin(3.0) / 3.0)


# --- smoothing ---------------------------------------------------------------------


@given(alpha=st.floats(0.05, 0.5))
def test_gaussian_sum_expansion(alpha):
    tau, w = est.gaussian_sum_weights(alpha)
    r = np.linspace(0, 60, 601)
    approx = (w[None, :] * np.exp(-np.outer(r**2, tau))).sum(axis=1)
    assert np.max(np.abs(approx / (1 + r**2) ** -alpha - 1)) < 1e-5


@pytest.mark.parametrize("n,eps", [(0, 0.1), (3, 0.1), (6, 0.3)])
def test_smoothing_single_mode(n, eps):
    t = build_mode_table(1, 2 * n + 1)
    c = np.zeros(len(t))
    c[n] = 1
    R = est.smoothing_ratio(c, t, eps)[0]
    lam = np.sqrt(2 * n + 1)
    ref = 2 * np.pi * lam ** (1 - 4 * eps) * mp_integral(lambda x: (1 + x * x) ** (-(1 - 2 * eps) / 2) * hermite_function_mp(n, x) ** 2)
    assert R == pytest.approx(np.sqrt(ref), rel=1e-6)


def test_smoothing_limit_eps_half():
    t = build_mode_table(1, 1)
    R = est.smoothing_ratio(np.ones(1), t, 0.5 - 1e-9)[0]
    assert R == pytest.approx(np.sqrt(2 * np.pi), rel=1e-6)


def test_smoothing_matches_reference():
    t = build_mode_table(1, 41)
    rng = np.random.default_rng(7)
    f = SpectralField(t, rng.standard_normal(len(t)) + 1j * rng.standard_normal(len(t)))
    a = est.smoothing_ratio(f.coeffs, t, 0.1)[0]
    assert a == pytest.approx(est.smoothing_ratio_reference(f, 0.1), rel=1e-6)


def test_smoothing_scale_invariant():
    t = build_mode_table(2, 15)
    rng = np.random.default_rng(8)
    c = rng.standard_normal((2, len(t)))
    R = est.smoothing_ratio(np.vstack([c[0], 5 * c[0]]), t, 0.2)
    assert R[0] == pytest.approx(R[1], rel=1e-12)


@pytest.mark.parametrize("eps", [0.0, 0.5, 0.7])
def test_smoothing_rejects_eps(eps):
    with pytest.raises(ValueError):
        est.smoothing_ratio(np.ones(1), build_mode_table(1, 1), eps)


# --- localisation -------------------------------------------------------------------


def test_ground_state_tail_mass():
    v = est.tail_localization(0, 0, 3.0, 2)
    assert v**2 == pytest.approx(erfc(3.0), rel=1e-6)
    assert v**2 < 1e-3


def test_localization_weight_increases_norm():
    assert est.tail_localization(10, 2, 1.5, 2) > est.tail_localization(10, 0, 1.5, 2)


def test_localization_validation():
    with pytest.raises(ValueError):
        est.tail_localization(3, 0, 0.9, 2)
    with pytest.warns(RuntimeWarning):
        assert est.tail_localization(3, 0, 1.5, 2, reach=1.0) == 0.0


def test_exact_grid_degree():
    g = est.exact_grid(10, 2.0)
    x, W = g.points, g.unit_weights
    # int x^10 exp(-2 x^2) dx = Gamma(11/2) / 2^{11/2}
    assert np.sum(W * x**10 * np.exp(-2 * x**2)) == pytest.approx(float(mpmath.gamma(5.5)) / 2**5.5, rel=1e-13)
