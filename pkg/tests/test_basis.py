import itertools

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hermlab.basis import (
    SpectralField,
    analyze,
    analyze_many,
    build_mode_table,
    evaluate,
    gauss_hermite_grid,
    hermite_derivative_table_1d,
    hermite_eval_1d,
    hermite_log_abs_1d,
    hermite_table_1d,
    integrate,
    product_grid,
    synthesize,
    synthesize_many,
)
from oracles import hermite_function_mp, naive_synthesis

# e_25(1.3) from the explicit polynomial sum at 40 digits
E25_AT_1_3 = 0.05731102076154456


# --- Hermite functions -------------------------------------------------------


def test_ground_state_at_origin():
    assert hermite_eval_1d(0, np.array([0.0]))[0] == pytest.approx(np.pi**-0.25, rel=1e-15)


def test_first_excited_vanishes_at_origin():
    assert hermite_eval_1d(1, np.array([0.0]))[0] == 0.0


def test_e25_against_extended_precision():
    v = hermite_eval_1d(25, np.array([1.3]))[0]
    assert v == pytest.approx(E25_AT_1_3, rel=1e-10)
    assert E25_AT_1_3 == pytest.approx(float(hermite_function_mp(25, 1.3)), rel=1e-14)


@given(n=st.integers(0, 60), x=st.floats(-12, 12))
def test_matches_explicit_sum(n, x):
    ref = float(hermite_function_mp(n, x, dps=60))
    v = hermite_eval_1d(n, np.array([x]))[0]
    assert abs(v - ref) <= 1e-11 * max(1.0, abs(ref)) + 1e-13


def test_negative_index_rejected():
    with pytest.raises(ValueError):
        hermite_eval_1d(-1, np.array([0.0]))


def test_large_index_stays_finite():
    x = np.linspace(-200, 200, 4001)
    v = hermite_eval_1d(10000, x)
    assert np.all(np.isfinite(v))
    assert np.max(np.abs(v)) < 1.0
    assert np.all(np.isfinite(hermite_log_abs_1d(10000, x)[v != 0]))


@given(n=st.integers(0, 80), x=st.floats(-15, 15))
def test_parity(n, x):
    a = hermite_eval_1d(n, np.array([x, -x]))
    assert a[1] == pytest.approx((-1) ** n * a[0], abs=1e-14)


def test_log_abs_consistent():
    x = np.linspace(-8, 8, 97)
    for n in (0, 3, 40):
        v = hermite_eval_1d(n, x)
        nz = np.abs(v) > 1e-250
        assert np.allclose(np.exp(hermite_log_abs_1d(n, x)[nz]), np.abs(v[nz]), rtol=1e-12)


def test_table_rows_match_single_evaluations():
    x = np.linspace(-5, 5, 41)
    T = hermite_table_1d(30, x)
    assert T.shape == (31, 41)
    for n in (0, 7, 30):
        assert np.allclose(T[n], hermite_eval_1d(n, x), atol=1e-15)


def test_derivative_table_against_finite_differences():
    x = np.linspace(-6, 6, 61)
    h = 1e-5
    D = hermite_derivative_table_1d(20, x)
    fd = (hermite_table_1d(20, x + h) - hermite_table_1d(20, x - h)) / (2 * h)
    assert np.max(np.abs(D - fd)) < 1e-8


@pytest.mark.parametrize("n", [0, 3, 12, 40])
def test_eigenvalue_relation_by_quadrature(n):
    # int |e_n'|^2 + x^2 e_n^2 dx = 2n + 1, integrand degree 2n + 2
    g = gauss_hermite_grid(n + 2)
    x, W = g.points, g.unit_weights
    e = hermite_table_1d(n, x)[n]
    de = hermite_derivative_table_1d(n, x)[n]
    assert np.sum(W * (de**2 + x**2 * e**2)) == pytest.approx(2 * n + 1, rel=1e-12)


# --- mode tables ---------------------------------------------------------------


def test_mode_table_examples():
    t = build_mode_table(1, 5)
    assert [e[0] for e in t.entries] == [(0,), (1,), (2,)]
    assert list(t.lambda_sq) == [1, 3, 5]
    t3 = build_mode_table(3, 5)
    assert t3.entries[0] == ((0, 0, 0), 3, 0)
    assert [e[0] for e in t3.entries[1:]] == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]
    assert set(t3.lambda_sq[1:]) == {5}


@given(d=st.integers(1, 3), cutoff=st.integers(3, 40))
def test_mode_table_invariants(d, cutoff):
    t = build_mode_table(d, cutoff)
    # completeness against plain enumeration
    expect = {n for n in itertools.product(range(cutoff), repeat=d) if 2 * sum(n) + d <= cutoff}
    got = [e[0] for e in t.entries]
    assert set(got) == expect and len(got) == len(expect)
    assert np.all(t.lambda_sq == 2 * t.indices.sum(axis=1) + d)
    assert np.all(np.diff(t.lambda_sq) >= 0)
    for a, b in zip(got[:-1], got[1:]):
        if sum(a) == sum(b):
            assert a < b
    assert all(t.rank(n) == r for n, _, r in t.entries)


@pytest.mark.parametrize("d,cutoff", [(0, 5), (4, 10), (3, 2)])
def test_mode_table_rejects(d, cutoff):
    with pytest.raises(ValueError):
        build_mode_table(d, cutoff)


# --- quadrature ------------------------------------------------------------------


def test_order_one_grid():
    g = gauss_hermite_grid(1)
    assert g.points[0] == 0.0
    assert g.weights_1d[0] == pytest.approx(np.sqrt(np.pi), rel=1e-15)


@given(order=st.integers(1, 200))
def test_grid_weights_sum_and_symmetry(order):
    g = gauss_hermite_grid(order)
    assert np.sum(g.weights_1d) == pytest.approx(np.sqrt(np.pi), rel=1e-12)
    assert np.all(g.weights_1d > 0)
    assert np.allclose(g.points, -g.points[::-1], atol=0)


@pytest.mark.parametrize("order", [5, 20, 64])
def test_grid_exact_for_even_moments(order):
    g = gauss_hermite_grid(order)
    for k in range(order):
        ref = float(mpmath.gamma(k + 0.5))
        assert np.sum(g.weights_1d * g.points ** (2 * k)) == pytest.approx(ref, rel=1e-11)


def test_grid_matches_numpy_rule():
    x, w = np.polynomial.hermite.hermgauss(40)
    g = gauss_hermite_grid(40)
    assert np.allclose(g.points, x, atol=1e-13)
    assert np.allclose(g.weights_1d, w, rtol=1e-11)


def test_x_squared_moment_closed_form():
    # int x^2 e^{-x^2} = sqrt(pi) / 2
    g = gauss_hermite_grid(20)
    assert np.sum(g.weights_1d * g.points**2) == pytest.approx(np.sqrt(np.pi) / 2, rel=1e-14)


@pytest.mark.parametrize("nmax", [0, 10, 60, 150])
def test_gram_identity(nmax):
    g = gauss_hermite_grid(nmax + 1)
    E = hermite_table_1d(nmax, g.points)
    G = (E * g.unit_weights) @ E.T
    assert np.max(np.abs(G - np.eye(nmax + 1))) < 1e-12


def test_product_grid_integrates_triple_products():
    g = product_grid(12, 3)
    E = hermite_table_1d(12, g.points)
    W = g.unit_weights
    v = np.sum(W * E[12] * E[12] * E[6] * E[6])
    ref = float(mpmath.quad(lambda x: hermite_function_mp(12, x) ** 2 * hermite_function_mp(6, x) ** 2, [-mpmath.inf, 0, mpmath.inf]))
    assert v == pytest.approx(ref, rel=1e-12)


# --- synthesis and analysis ------------------------------------------------------


def test_ground_state_synthesis_3d():
    t = build_mode_table(3, 9)
    f = SpectralField.mode(t, (0, 0, 0))
    x = np.array([0.3, -0.2])
    v = evaluate(f, [x, x, x])
    r2 = x[:, None, None] ** 2 + x[None, :, None] ** 2 + x[None, None, :] ** 2
    assert np.allclose(v, np.pi**-0.75 * np.exp(-r2 / 2), rtol=1e-14)


def test_zero_field_synthesis():
    t = build_mode_table(2, 15)
    g = gauss_hermite_grid(t.max_index + 1)
    assert np.all(synthesize(SpectralField.zeros(t), g) == 0)


def test_synthesis_matches_naive_sum():
    t = build_mode_table(2, 19)
    rng = np.random.default_rng(1)
    c = rng.standard_normal(len(t)) + 1j * rng.standard_normal(len(t))
    x = np.array([-1.1, 0.2, 2.5])
    v = evaluate(SpectralField(t, c), [x, x])
    pts = np.array([[a, b] for a in x for b in x])
    assert np.allclose(v.ravel(), naive_synthesis(t.indices, c, pts), atol=1e-13)


@pytest.mark.parametrize("d,cutoff", [(1, 61), (2, 21), (3, 13)])
def test_round_trip(d, cutoff):
    t = build_mode_table(d, cutoff)
    g = gauss_hermite_grid(t.max_index + 1)
    rng = np.random.default_rng(d)
    c = rng.standard_normal(len(t)) + 1j * rng.standard_normal(len(t))
    back = analyze(synthesize(SpectralField(t, c), g), g, t)
    assert np.max(np.abs(back.coeffs - c)) < 1e-10


def test_analysis_of_basis_function_is_unit_vector():
    t = build_mode_table(2, 15)
    g = gauss_hermite_grid(t.max_index + 1)
    f = SpectralField.mode(t, (2, 3))
    c = analyze(synthesize(f, g), g, t).coeffs
    e = np.zeros(len(t))
    e[t.rank((2, 3))] = 1
    assert np.max(np.abs(c - e)) < 1e-13


def test_x_times_ground_state():
    # x e_0 = e_1 / sqrt(2); the coefficient is int x e_0 e_1 dx
    t = build_mode_table(1, 7)
    g = gauss_hermite_grid(t.max_index + 2)
    vals = g.points * hermite_eval_1d(0, g.points)
    c = analyze(vals, g, t).coeffs
    ref = float(mpmath.quad(lambda x: x * hermite_function_mp(0, x) * hermite_function_mp(1, x), [-mpmath.inf, mpmath.inf]))
    assert c[1].real == pytest.approx(ref, rel=1e-13)
    assert ref == pytest.approx(1 / np.sqrt(2), rel=1e-13)
    assert np.max(np.abs(np.delete(c, 1))) < 1e-14


def test_analysis_rejects_low_order():
    t = build_mode_table(1, 21)
    g = gauss_hermite_grid(5)
    with pytest.raises(ValueError):
        analyze(np.zeros(5), g, t)


def test_batch_paths_equal_single_paths():
    t = build_mode_table(2, 13)
    g = gauss_hermite_grid(t.max_index + 1)
    rng = np.random.default_rng(3)
    C = rng.standard_normal((5, len(t))) + 0j
    V = synthesize_many(t, C, g.points)
    for i in range(5):
        assert np.array_equal(V[i], synthesize(SpectralField(t, C[i]), g))
    back = analyze_many(V, g, t)
    assert np.max(np.abs(back - C)) < 1e-12


def test_integrate_ground_state_mass():
    t = build_mode_table(2, 6)
    g = gauss_hermite_grid(4)
    v = synthesize(SpectralField.mode(t, (0, 0)), g)
    assert integrate(np.abs(v) ** 2, g) == pytest.approx(1.0, rel=1e-14)


def test_field_arithmetic():
    t = build_mode_table(1, 7)
    a = SpectralField.mode(t, (0,))
    b = SpectralField.mode(t, (1,), 2.0)
    assert (a + b).norm() == pytest.approx(np.sqrt(5))
    assert (b - b).norm() == 0
    assert (a * 3).norm() == pytest.approx(3)
    with pytest.raises(ValueError):
        a + SpectralField.zeros(build_mode_table(1, 9))
