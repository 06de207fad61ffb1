"""Norm measurements, scaling fits and bound-ratio scans for Hermite functions."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import mpmath
import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammainc, gammaln

from .basis import (
    QuadratureGrid,
    build_mode_table,
    gauss_hermite_grid,
    hermite_eval_1d,
    hermite_log_abs_1d,
    hermite_table_1d,
    product_grid,
)
from .spectral import DEFAULT_CUTOFFS, _check_dyadic

# ---------------------------------------------------------------------------
# fits


@dataclass
class ScalingFit:
    log_x: np.ndarray
    log_y: np.ndarray
    slope: float
    intercept: float
    max_residual: float

    def as_dict(self):
        return {"slope": self.slope, "intercept": self.intercept, "max_residual": self.max_residual}


def fit_scaling(x, y):
    """Least-squares line through (log x, log y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3 or x.shape != y.shape:
        raise ValueError("need at least 3 (x, y) pairs")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("fit_scaling needs positive x and y")
    return fit_log_scaling(np.log(x), np.log(y))


def fit_log_scaling(log_x, log_y):
    """Same fit for data already in log form (values below float range)."""
    lx = np.asarray(log_x, dtype=float)
    ly = np.asarray(log_y, dtype=float)
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = float(np.max(np.abs(A @ [slope, icpt] - ly)))
    return ScalingFit(lx, ly, float(slope), float(icpt), resid)


def exact_grid(degree, k=1.0):
    """Gauss-Hermite grid exact for polynomials of ``degree`` times exp(-k x^2)."""
    return gauss_hermite_grid(degree // 2 + 1, scale=1.0 / np.sqrt(k))


# ---------------------------------------------------------------------------
# Lebesgue norms of Hermite functions


def _dense_axis(n, halfwidth=None, step=None):
    lam = np.sqrt(2.0 * n + 1.0)
    if halfwidth is None:
        halfwidth = max(1.5 * lam + 4.0, lam + 9.0)
    if step is None:
        step = min(0.02, 2 * np.pi / (8 * lam))
    m = int(np.ceil(halfwidth / step))
    return step * np.arange(-m, m + 1), step


def _sup_1d(n, x):
    v = np.abs(hermite_eval_1d(n, x))
    best = float(v.max())
    # refine around the few largest sampled peaks
    h = x[1] - x[0]
    for i in np.argsort(v)[-4:]:
        res = minimize_scalar(
            lambda z: -abs(hermite_eval_1d(n, np.array([z]))[0]),
            bounds=(x[i] - h, x[i] + h),
            method="bounded",
            options={"xatol": 1e-13},
        )
        best = max(best, -float(res.fun))
    return best


def hermite_lp_norm_1d(n, p, grid=None):
    if p < 1:
        raise ValueError("p must be >= 1")
    if grid is not None and grid.dense_halfwidth is not None:
        x, h = grid.dense_points, grid.dense_step
    else:
        x, h = _dense_axis(n)
    edge = hermite_log_abs_1d(n, np.array([x[-1]]))[0]
    peak = hermite_log_abs_1d(n, np.array([0.0, 1.0]))
    if edge > np.max(peak) - 36:
        warnings.warn("dense grid does not certify the tail of e_n", RuntimeWarning)
    if np.isinf(p):
        return _sup_1d(n, x)
    v = np.abs(hermite_eval_1d(n, x))
    return float((np.sum(v**p) * h) ** (1.0 / p))


def hermite_lp_norm(index, p, grid=None):
    """||h_n||_{L^p(R^d)}, computed as a product of one-dimensional norms."""
    index = (index,) if np.isscalar(index) else tuple(index)
    out = 1.0
    for n in index:
        out *= hermite_lp_norm_1d(int(n), p, grid)
    return out


def hermite_l4_asymptotic(n):
    """Leading asymptotic of ||e_n||_{L^4}^4, (2/pi^2)(log mu + c)/mu."""
    mu = np.sqrt(2.0 * n + 1.0)
    return 2.0 / np.pi**2 * (np.log(mu) + 2.02) / mu


def lp_scan(ns, p, log_power=0.0):
    """Scan ||e_n||_{L^p} over 1D indices and fit against mu_n.

    Returns (values, raw fit, corrected fit) where the corrected fit divides
    by (log mu_n)^{log_power}.
    """
    ns = np.asarray(ns)
    mu = np.sqrt(2.0 * ns + 1.0)
    vals = np.array([hermite_lp_norm_1d(int(n), p) for n in ns])
    raw = fit_scaling(mu, vals)
    corr = fit_scaling(mu, vals / np.log(mu) ** log_power) if log_power else raw
    return vals, raw, corr


# ---------------------------------------------------------------------------
# products


def product_coefficients_1d(ns, K=None):
    """Coefficients a_k = int e_k prod_i e_{n_i} dx for k <= K (exact quadrature)."""
    ns = [int(n) for n in ns]
    f = len(ns)
    tot = sum(ns)
    if K is None:
        K = int(tot + 12 * np.sqrt(tot + 1) + 40)
    grid = exact_grid(K + tot, (f + 1) / 2.0)
    x, W = grid.points, grid.unit_weights
    prod = W.copy()
    for n in ns:
        prod = prod * hermite_eval_1d(n, x)
    return hermite_table_1d(K, x) @ prod


def product_l2_sq_1d(ns):
    """int prod_i e_{n_i}^2 dx, exactly."""
    ns = [int(n) for n in ns]
    grid = exact_grid(2 * sum(ns), float(len(ns)))
    x, W = grid.points, grid.unit_weights
    prod = W.copy()
    for n in ns:
        prod = prod * hermite_eval_1d(n, x) ** 2
    return float(prod.sum())


def product_sobolev_norm(indices, s, K=None):
    """Harmonic H^s norm of the pointwise product of 2 or 3 Hermite functions.

    The product is analysed axis by axis into a truncated 1D table; the
    truncation is checked against the exact L^2 mass of the product.
    """
    idx = np.atleast_2d(np.asarray(indices, dtype=int))
    if idx.shape[0] not in (2, 3):
        raise ValueError("product_sobolev_norm takes 2 or 3 multi-indices")
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    d = idx.shape[1]
    coeffs, lost = [], 0.0
    for j in range(d):
        a = product_coefficients_1d(idx[:, j], K)
        exact = product_l2_sq_1d(idx[:, j])
        lost = max(lost, (exact - float(np.sum(a**2))) / exact)
        coeffs.append(a**2)
    if lost > 1e-8:
        warnings.warn(f"product analysis truncates {lost:.2e} of the L2 mass", RuntimeWarning)
    total = coeffs[0]
    lam = 2.0 * np.arange(coeffs[0].size)
    for j in range(1, d):
        total = total[..., None] * coeffs[j].reshape((1,) * j + (-1,))
        k = 2.0 * np.arange(coeffs[j].size)
        lam = lam[..., None] + k.reshape((1,) * j + (-1,))
    lam = lam + d
    return float(np.sqrt(np.sum(lam**s * total)))


def pair_product_sup(n, s=0.0, m_step=1):
    """sup over m <= n of ||e_n e_m||_{L^2}, exact quadrature (s = 0) or analysed."""
    best, arg = 0.0, 0
    ms = list(range(0, n + 1, m_step))
    if ms[-1] != n:
        ms.append(n)
    if s == 0:
        grid = exact_grid(4 * n, 2.0)
        x, W = grid.points, grid.unit_weights
        E = hermite_table_1d(n, x)
        en2 = E[n] ** 2 * W
        vals = (E[ms] ** 2) @ en2
        i = int(np.argmax(vals))
        return float(np.sqrt(vals[i])), ms[i]
    for m in ms:
        v = product_sobolev_norm([[n], [m]], s)
        if v > best:
            best, arg = v, m
    return best, arg


# ---------------------------------------------------------------------------
# quartic integrals


@lru_cache(maxsize=None)
def hermite_poly_int(n):
    """Integer coefficients (ascending powers) of the physicists' H_n."""
    prev, cur = [1], [0, 2]
    if n == 0:
        return (1,)
    for k in range(1, n):
        nxt = [0] * (k + 2)
        for i, c in enumerate(cur):
            nxt[i + 1] += 2 * c
        for i, c in enumerate(prev):
            nxt[i] -= 2 * k * c
        prev, cur = cur, nxt
    return tuple(cur)


def _polymul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _quartic_axis_exact(ns):
    """(rational S, integer D) with int prod e_{n_j} = S / sqrt(2 pi D)."""
    poly = [1]
    for n in ns:
        poly = _polymul(poly, hermite_poly_int(n))
    S = Fraction(0)
    dfact = 1  # (2k - 1)!!
    for k in range(0, (len(poly) + 1) // 2):
        if k:
            dfact *= 2 * k - 1
        c = poly[2 * k] if 2 * k < len(poly) else 0
        if c:
            S += Fraction(c * dfact, 4**k)
    D = 1
    for n in ns:
        D *= 2**n * factorial(n)
    return S, D


def quartic_integral_mp(indices, dps=50):
    """int h_{n1} h_{n2} h_{n3} h_{n4} dx as an mpmath number (exact rational path)."""
    idx = np.atleast_2d(np.asarray(indices, dtype=int))
    if idx.shape[0] != 4:
        raise ValueError("quartic_integral takes 4 multi-indices")
    with mpmath.workdps(dps):
        val = mpmath.mpf(1)
        for j in range(idx.shape[1]):
            ns = [int(n) for n in idx[:, j]]
            if sum(ns) % 2:
                return mpmath.mpf(0)
            S, D = _quartic_axis_exact(ns)
            val *= mpmath.mpf(S.numerator) / mpmath.mpf(S.denominator) / mpmath.sqrt(2 * mpmath.pi * D)
        return +val


def quartic_integral(indices, method="exact"):
    """int prod_{j=1..4} h_{n_j} dx.

    ``exact`` sums the integer Hermite polynomial product against the
    Gaussian moments in rational arithmetic; ``quadrature`` uses a Gauss rule
    exact for the polynomial-times-Gaussian integrand in floating point.
    Odd index sum on any axis gives exactly 0 in both.
    """
    idx = np.atleast_2d(np.asarray(indices, dtype=int))
    if idx.shape[0] != 4:
        raise ValueError("quartic_integral takes 4 multi-indices")
    if np.any(idx.sum(axis=0) % 2):
        return 0.0
    if method == "exact":
        return float(quartic_integral_mp(idx))
    if method != "quadrature":
        raise ValueError("method must be 'exact' or 'quadrature'")
    val = 1.0
    for j in range(idx.shape[1]):
        ns = idx[:, j]
        grid = exact_grid(int(ns.sum()), 2.0)
        x, W = grid.points, grid.unit_weights
        prod = W.copy()
        for n in ns:
            prod = prod * hermite_eval_1d(int(n), x)
        val *= float(prod.sum())
    return val


def quartic_decay_scan(n1_list, rest=(8, 5, 3)):
    """log |int e_{n1} e_{n2} e_{n3} e_{n4}| against log mu_{n1}."""
    logs = []
    for n1 in n1_list:
        v = quartic_integral_mp([[n1], [rest[0]], [rest[1]], [rest[2]]])
        logs.append(float(mpmath.log(abs(v))) if v != 0 else -np.inf)
    mu = np.sqrt(2.0 * np.asarray(n1_list) + 1.0)
    return np.array(logs), fit_log_scaling(np.log(mu), np.array(logs))


# ---------------------------------------------------------------------------
# bilinear estimate


def _shell_counts(k, d):
    return comb(k + d - 1, d - 1)


def _unrank_composition(k, r, d):
    """r-th (lexicographic) d-tuple of non-negative integers summing to k."""
    out = []
    for j in range(d - 1):
        for first in range(k + 1):
            c = _shell_counts(k - first, d - 1 - j)
            if r < c:
                out.append(first)
                k -= first
                break
            r -= c
    out.append(k)
    return tuple(out)


def block_shells(N, d, cutoffs=DEFAULT_CUTOFFS):
    """Total degrees k whose eigenvalue 2k + d lies in the support of psi(./N^2)."""
    _check_dyadic(N)
    ks = []
    k = 0
    while 2 * k + d <= 2 * N * N:
        if cutoffs.psi((2 * k + d) / N**2) > 0:
            ks.append(k)
        k += 1
    return ks


def sample_block_field(N, d, rng, modes=12, cutoffs=DEFAULT_CUTOFFS):
    """Random unit-L^2 field Delta_N(sum g_n h_n) on ``modes`` block modes.

    Returns (indices (K, d), coeffs (K,)); all block modes are used when the
    block holds fewer than ``modes``.
    """
    ks = block_shells(N, d, cutoffs)
    if not ks:
        raise ValueError(f"dyadic block N={N} is empty in d={d}")
    counts = np.array([_shell_counts(k, d) for k in ks])
    total = int(counts.sum())
    take = min(modes, total)
    flat = np.sort(rng.choice(total, size=take, replace=False))
    edges = np.concatenate([[0], np.cumsum(counts)])
    idx = []
    for f in flat:
        s = int(np.searchsorted(edges, f, side="right") - 1)
        idx.append(_unrank_composition(ks[s], int(f - edges[s]), d))
    idx = np.array(idx, dtype=int)
    lam2 = 2 * idx.sum(axis=1) + d
    g = (rng.standard_normal(take) + 1j * rng.standard_normal(take)) * np.sqrt(0.5)
    c = g * cutoffs.psi(lam2 / N**2)
    return idx, c / np.linalg.norm(c)


def time_window_integral(omega, window=(-1.0, 1.0)):
    """int_a^b exp(i omega t) dt, elementwise."""
    a, b = window
    omega = np.asarray(omega, dtype=float)
    out = np.empty(omega.shape, dtype=complex)
    small = np.abs(omega) < 1e-12
    out[small] = b - a
    w = omega[~small]
    out[~small] = (np.exp(1j * w * b) - np.exp(1j * w * a)) / (1j * w)
    return out


def bilinear_norm_sparse(v, u, window=(-1.0, 1.0)):
    """||e^{itH}v . e^{itH}u||_{L^2(window x R^d)} for sparse fields.

    ``v`` and ``u`` are (indices, coeffs) pairs.  The time integral is exact
    and each spatial factor is a 1D quartic integral evaluated by exact
    Gauss quadrature, so the result is exact up to rounding.
    """
    vi, vc = v
    ui, uc = u
    vi, ui = np.atleast_2d(vi), np.atleast_2d(ui)
    d = vi.shape[1]
    A = np.outer(vc, uc).ravel()
    a_idx = np.repeat(vi, len(ui), axis=0)
    b_idx = np.tile(ui, (len(vi), 1))
    omega = (2 * a_idx.sum(1) + d) + (2 * b_idx.sum(1) + d)
    T = time_window_integral(omega[:, None] - omega[None, :], window)
    G = np.ones((A.size, A.size))
    for j in range(d):
        nmax = int(max(a_idx[:, j].max(), b_idx[:, j].max()))
        grid = product_grid(nmax, 3)
        E = hermite_table_1d(nmax, grid.points)
        F = E[a_idx[:, j]] * E[b_idx[:, j]]
        G *= (F * grid.unit_weights) @ F.T
    q2 = np.real(A @ (T * G) @ np.conj(A))
    return float(np.sqrt(max(q2, 0.0)))


def bilinear_norm_quadrature(v, u, window=(-1.0, 1.0), time_nodes=None):
    """Reference value of the bilinear norm for fields on a shared table.

    Gauss-Legendre in time and exact tensor Gauss quadrature in space.
    """
    table = v.table
    d = table.dimension
    if time_nodes is None:
        time_nodes = max(64, 4 + 2 * table.cutoff)
    t, wt = np.polynomial.legendre.leggauss(time_nodes)
    a, b = window
    t = 0.5 * (b - a) * t + 0.5 * (a + b)
    wt = 0.5 * (b - a) * wt
    nmax = table.max_index
    grid = product_grid(nmax, 3)
    E = hermite_table_1d(nmax, grid.points)
    W = grid.unit_weights
    lam2 = table.lambda_sq.astype(float)
    from .basis import _coeff_tensor, _contract_axes

    total = 0.0
    for tk, wk in zip(t, wt):
        ph = np.exp(1j * tk * lam2)
        fv = _contract_axes(_coeff_tensor(table, v.coeffs * ph, nmax), [E.T] * d)
        fu = _contract_axes(_coeff_tensor(table, u.coeffs * ph, nmax), [E.T] * d)
        dens = np.abs(fv * fu) ** 2
        total += wk * _contract_axes(dens, [W[None, :]] * d).item()
    return float(np.sqrt(total))


def bilinear_envelope(N, M, d, delta=0.1):
    lo, hi = min(N, M), max(N, M)
    return lo ** ((d - 2) / 2) * (lo / hi) ** (0.5 - delta)


@dataclass
class BilinearStats:
    N: int
    M: int
    d: int
    envelope: float
    q_values: np.ndarray

    @property
    def ratios(self):
        return self.q_values / self.envelope

    @property
    def max_ratio(self):
        return float(np.max(self.ratios))

    @property
    def mean_ratio(self):
        return float(np.mean(self.ratios))


def bilinear_experiment(N, M, sample_count, d, seed=0, modes=12, delta=0.1, window=(-1.0, 1.0)):
    """Q / envelope over random pairs of unit block fields (v in block N, u in block M)."""
    _check_dyadic(N)
    _check_dyadic(M)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(d), int(N), int(M)]))
    qs = []
    for _ in range(sample_count):
        v = sample_block_field(N, d, rng, modes)
        u = sample_block_field(M, d, rng, modes)
        qs.append(bilinear_norm_sparse(v, u, window))
    return BilinearStats(N, M, d, bilinear_envelope(N, M, d, delta), np.array(qs))


# ---------------------------------------------------------------------------
# smoothing effect


def gaussian_sum_weights(alpha, h=0.35, u_lo=-40.0, u_hi=4.5):
    """(tau_k, w_k) with (1 + r^2)^{-alpha} ~= sum_k w_k exp(-tau_k r^2).

    Trapezoid rule on (1+r^2)^{-alpha} = Gamma(alpha)^{-1} int exp(alpha u - e^u
    (1 + r^2)) du; the part below ``u_lo`` (where exp(-e^u r^2) = 1 to double
    precision for moderate r) is lumped into a constant term.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if alpha == 0:
        return np.zeros(1), np.ones(1)
    u = np.arange(u_lo, u_hi + h / 2, h)
    w = h * np.exp(alpha * u - np.exp(u) - gammaln(alpha))
    w[0] *= 0.5
    tau = np.concatenate([[0.0], np.exp(u)])
    w = np.concatenate([[gammainc(alpha, np.exp(u_lo))], w])
    return tau, w


def _gaussian_grams(nmax, taus):
    """M_k[n, m] = int exp(-tau_k x^2) e_n e_m dx, exact for each tau_k."""
    base = gauss_hermite_grid(nmax + 1)
    out = np.empty((len(taus), nmax + 1, nmax + 1))
    for k, tau in enumerate(taus):
        g = QuadratureGrid(base.nodes_1d, base.log_weights_1d, base.order, 1.0 / np.sqrt(1.0 + tau))
        E = hermite_table_1d(nmax, g.points)
        out[k] = (E * (g.unit_weights * np.exp(-tau * g.points**2))) @ E.T
    return out


def smoothing_shell_forms(table, eps, h=0.35):
    """Per eigenvalue shell a: (ranks, G_a) with

    R^2 = 2 pi sum_a lambda_a^{1 - 4 eps} c_a^* G_a c_a,
    G_a[i, j] = int <x>^{-(1 - 2 eps)} h_i h_j dx over modes i, j of the shell.
    The time integral over [-pi, pi] (a full period) removes cross-shell terms.
    """
    alpha = (1.0 - 2.0 * eps) / 2.0
    taus, ws = gaussian_sum_weights(alpha, h)
    Ms = _gaussian_grams(table.max_index, taus)
    out = []
    for a in np.unique(table.lambda_sq):
        ranks = np.nonzero(table.lambda_sq == a)[0]
        sub = table.indices[ranks]
        G = np.zeros((len(ranks), len(ranks)))
        for Mk, wk in zip(Ms, ws):
            P = np.ones_like(G)
            for j in range(table.dimension):
                P *= Mk[np.ix_(sub[:, j], sub[:, j])]
            G += wk * P
        out.append((int(a), ranks, G))
    return out


def smoothing_ratio(coeff_rows, table, eps, forms=None):
    """Smoothing ratio R for each row of coefficients (shape (B, M))."""
    if not 0.0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    rows = np.atleast_2d(coeff_rows)
    forms = smoothing_shell_forms(table, eps) if forms is None else forms
    num = np.zeros(rows.shape[0])
    for a, ranks, G in forms:
        c = rows[:, ranks]
        num += float(a) ** (0.5 - 2 * eps) * np.real(np.sum((c.conj() @ G) * c, axis=1))
    mass = np.sum(np.abs(rows) ** 2, axis=1)
    return np.sqrt(2 * np.pi * num / mass)


def smoothing_ratio_reference(field, eps, time_nodes=None, step=0.02, halfwidth=None):
    """R for a d = 1 field by Gauss-Legendre time quadrature and a dense x grid."""
    table = field.table
    if table.dimension != 1:
        raise ValueError("reference path is one-dimensional")
    lam2 = table.lambda_sq.astype(float)
    if time_nodes is None:
        time_nodes = int(2 * lam2.max()) + 16
    if halfwidth is None:
        halfwidth = 1.5 * np.sqrt(lam2.max()) + 10
    t, wt = np.polynomial.legendre.leggauss(time_nodes)
    t, wt = np.pi * t, np.pi * wt
    x = np.arange(-halfwidth, halfwidth + step / 2, step)
    E = hermite_table_1d(table.max_index, x)[table.indices[:, 0]]
    weight = (1 + x**2) ** (-(1 - 2 * eps) / 2) * step
    c = field.coeffs * lam2 ** ((0.5 - 2 * eps) / 2)
    vals = (c[None, :] * np.exp(1j * np.outer(t, lam2))) @ E
    num = wt @ (np.abs(vals) ** 2 @ weight)
    return float(np.sqrt(num) / field.norm())


@dataclass
class SmoothingStats:
    cutoff: int
    d: int
    eps: float
    ratios: np.ndarray

    @property
    def max_ratio(self):
        return float(np.max(self.ratios))


def smoothing_experiment(sample_count, eps, d, cutoff, seed=0):
    """Distribution of R over random unit-L^2 data on the table lambda^2 <= cutoff."""
    if not 0.0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    table = build_mode_table(d, cutoff)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(d), int(cutoff)]))
    rows = (rng.standard_normal((sample_count, len(table))) + 1j * rng.standard_normal((sample_count, len(table)))) * np.sqrt(0.5)
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    return SmoothingStats(cutoff, d, eps, smoothing_ratio(rows, table, eps))


# ---------------------------------------------------------------------------
# eigenfunction localisation


def tail_localization_log(index, K, c, p, step=0.01, reach=None):
    """log ||<x>^K h_n||_{L^p(|x| >= c lambda_n)} in d = 1 (log-space throughout).

    The grid starts at c lambda_n and extends until |e_n| has dropped by a
    factor e^{-60} below its value at the start (or to ``reach``).
    """
    index = (index,) if np.isscalar(index) else tuple(index)
    if len(index) != 1:
        raise ValueError("tail_localization_log is one-dimensional")
    if c <= 1 or p < 1:
        raise ValueError("need c > 1 and p >= 1")
    n = int(index[0])
    lam = np.sqrt(2.0 * n + 1.0)
    x0 = c * lam
    if reach is None:
        # past the turning point log|e_n| decays at least like -(x^2 - lam^2)/2
        reach = np.sqrt(x0**2 + 2 * 60.0 + 2 * K * np.log1p(x0)) + 2.0
    if reach <= x0:
        warnings.warn("dense grid does not reach the tail region; returning 0", RuntimeWarning)
        return -np.inf
    m = 2 * int(np.ceil((reach - x0) / (2 * step)))
    x = x0 + step * np.arange(m + 1)
    logv = p * hermite_log_abs_1d(n, x) + K * p * 0.5 * np.log1p(x**2)
    if logv[-1] > logv.max() - 36:
        warnings.warn("dense grid too short to certify the tail", RuntimeWarning)
    # Simpson weights
    w = np.full(x.size, 2 * step / 3)
    w[1::2] = 4 * step / 3
    w[0] = w[-1] = step / 3
    logint = np.log(2.0) + np.logaddexp.reduce(logv + np.log(w))
    return float(logint / p)


def tail_localization(index, K, c, p, step=0.01, reach=None):
    """||<x>^K h_n||_{L^p(|x| >= c lambda_n)} in d = 1; may underflow to 0."""
    return float(np.exp(tail_localization_log(index, K, c, p, step, reach)))


def tail_localization_scan(ns, K=0, c=1.5, p=2):
    logs = np.array([tail_localization_log(n, K, c, p) for n in ns])
    lam = np.sqrt(2.0 * np.asarray(ns) + 1.0)
    return logs, fit_log_scaling(np.log(lam), logs)
