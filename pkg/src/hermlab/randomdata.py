"""Gaussian randomisation of initial data and Monte Carlo statistics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from .basis import SpectralField, default_dense, gauss_hermite_grid, hermite_table_1d
from .spectral import dyadic_multiplier, flat_sobolev_gram, standard_eta

BLOCK = 1024


@dataclass(frozen=True)
class RandomizationSpec:
    """Base coefficients c_n on a table, a seed and a sample budget."""

    table: object
    base_coeffs: np.ndarray
    seed: int
    sample_count: int

    def __post_init__(self):
        c = np.asarray(self.base_coeffs, dtype=complex)
        if c.shape != (len(self.table),):
            raise ValueError("base_coeffs must align with the mode table")
        object.__setattr__(self, "base_coeffs", c)
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def modes(self):
        return len(self.table)


def _block(seed, block, modes):
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(block)]))
    z = rng.standard_normal((BLOCK, modes, 2))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def gaussians(seed, modes, start, count):
    """Complex Gaussians g[i, n] for samples start..start+count-1.

    Sample i always reads row i % BLOCK of block i // BLOCK, each block drawn
    from its own counter-derived stream, so any partition of the sample range
    reproduces the same numbers.
    """
    out = np.empty((count, modes), dtype=complex)
    i = start
    while i < start + count:
        b, r = divmod(i, BLOCK)
        take = min(BLOCK - r, start + count - i)
        out[i - start : i - start + take] = _block(seed, b, modes)[r : r + take]
        i += take
    return out


def randomize_many(spec, start=0, count=None):
    """Coefficient rows c_n g_n(omega_i), shape (count, M)."""
    if count is None:
        count = spec.sample_count - start
    if start < 0 or start + count > spec.sample_count:
        raise IndexError("sample range outside sample_count")
    return gaussians(spec.seed, spec.modes, start, count) * spec.base_coeffs


def randomize(spec, sample_index):
    if not 0 <= sample_index < spec.sample_count:
        raise IndexError("sample_index must be below sample_count")
    return SpectralField(spec.table, randomize_many(spec, sample_index, 1)[0])


def iter_batches(spec, batch=BLOCK, count=None):
    """Yield (start, coeff rows) over the sample range in fixed-size batches."""
    n = spec.sample_count if count is None else count
    for start in range(0, n, batch):
        yield start, randomize_many(spec, start, min(batch, n - start))


def truncate(field, K, side):
    """Low part keeps lambda_n < K, high part keeps lambda_n >= K."""
    lam = np.sqrt(field.table.lambda_sq.astype(float))
    keep = lam < K
    if side == "high":
        keep = ~keep
    elif side != "low":
        raise ValueError("side must be 'low' or 'high'")
    return field.with_coeffs(np.where(keep, field.coeffs, 0))


# ---------------------------------------------------------------------------
# chaos moments


@dataclass
class ChaosMoment:
    order: int
    q: float
    estimate: float
    stderr: float
    kernel_norm: float

    @property
    def bound(self):
        return self.q ** (self.order / 2) * self.kernel_norm

    @property
    def ratio(self):
        return self.estimate / self.bound


def _chaos_values(kernel, g):
    k = kernel.ndim
    if k == 1:
        return g @ kernel
    if k == 2:
        return np.einsum("ij,bi,bj->b", kernel, g, g, optimize=True)
    if k == 3:
        return np.einsum("ijk,bi,bj,bk->b", kernel, g, g, g, optimize=True)
    raise ValueError("chaos order must be 1, 2 or 3")


def default_kernel(spec, order):
    """Strictly ordered kernel built from base coefficients.

    Entries c_i c_j (c_k) on i < j (< k), so every monomial has distinct
    Gaussian factors and E|X|^2 equals the squared kernel norm.
    """
    c = spec.base_coeffs
    if order == 1:
        return c.copy()
    m = c.size
    if order == 2:
        return np.triu(np.outer(c, c), 1)
    i, j, k = np.meshgrid(np.arange(m), np.arange(m), np.arange(m), indexing="ij")
    return np.where((i < j) & (j < k), c[:, None, None] * c[None, :, None] * c[None, None, :], 0)


def chaos_moment(spec, order, q, kernel=None, batch=BLOCK):
    """Monte Carlo L^q(Omega) norm of the Gaussian polynomial with ``kernel``.

    The kernel is a tensor of shape (m,)*order acting on the first m Gaussians
    of each sample; the base coefficients only set m when no kernel is given.
    """
    if q < 2:
        raise ValueError("q must be >= 2")
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    kernel = default_kernel(spec, order) if kernel is None else np.asarray(kernel, dtype=complex)
    if kernel.ndim != order:
        raise ValueError("kernel rank must equal the chaos order")
    m = kernel.shape[0]
    acc = np.empty(spec.sample_count)
    for start in range(0, spec.sample_count, batch):
        n = min(batch, spec.sample_count - start)
        g = gaussians(spec.seed, spec.modes, start, n)[:, :m]
        acc[start : start + n] = np.abs(_chaos_values(kernel, g)) ** q
    mean = float(np.mean(acc))
    se_mean = float(np.std(acc, ddof=1) / np.sqrt(acc.size))
    est = mean ** (1.0 / q)
    se = est / (q * mean) * se_mean if mean > 0 else 0.0
    return ChaosMoment(order, q, est, se, float(np.linalg.norm(kernel.ravel())))


# ---------------------------------------------------------------------------
# statistics of samples


def hs_norm_sq_statistic(table, s, multiplier=None):
    """Row-wise harmonic H^s norm squared of coefficient rows."""
    w = table.lambda_sq.astype(float) ** s
    if multiplier is not None:
        w = w * np.abs(multiplier) ** 2

    def stat(rows):
        return np.abs(rows) ** 2 @ w

    return stat


def statistic_samples(spec, statistic, batch=BLOCK):
    out = np.empty(spec.sample_count)
    for start, rows in iter_batches(spec, batch):
        out[start : start + len(rows)] = statistic(rows)
    return out


@dataclass
class PaleyZygmund:
    lam: float
    lhs: float
    rhs: float
    stderr: float

    @property
    def holds(self):
        return self.lhs >= self.rhs - 3 * self.stderr


def paley_zygmund_check(spec, statistic, lam, samples=None):
    """Empirical P(X >= lam E X) against (1 - lam)^2 (E X)^2 / E X^2."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    X = statistic_samples(spec, statistic) if samples is None else np.asarray(samples, float)
    if np.any(X < 0):
        raise ValueError("statistic must be non-negative")
    n = X.size
    m1, m2 = X.mean(), (X**2).mean()
    lhs = float(np.mean(X >= lam * m1))
    rhs = float((1 - lam) ** 2 * m1**2 / m2)
    # delta method for rhs, binomial error for lhs
    cov = np.cov(np.vstack([X, X**2])) / n
    grad = (1 - lam) ** 2 * np.array([2 * m1 / m2, -(m1**2) / m2**2])
    var_rhs = float(grad @ cov @ grad)
    var_lhs = lhs * (1 - lhs) / n
    return PaleyZygmund(lam, lhs, rhs, float(np.sqrt(var_lhs + var_rhs)))


# ---------------------------------------------------------------------------
# deviation tails


@dataclass
class TailEstimate:
    lambda_grid: np.ndarray
    empirical_prob: np.ndarray
    wilson_ci: np.ndarray
    counts: np.ndarray
    sample_count: int
    fitted_c: float
    intercept: float
    fit_residual: float
    fit_mask: np.ndarray
    norm_scale: float

    @property
    def upper_bound_only(self):
        return self.counts == 0


def wilson_intervals(counts, n):
    lo, hi = proportion_confint(counts, n, alpha=0.05, method="wilson")
    lo, hi = np.atleast_1d(lo).astype(float), np.atleast_1d(hi).astype(float)
    zero = np.asarray(counts) == 0
    lo[zero] = 0.0
    hi[zero] = 3.0 / n
    return np.stack([lo, hi], axis=1)


def tail_from_statistics(stats, lambda_grid, norm_scale, min_count=10):
    """Tail estimate P(stat > Lambda) with Wilson intervals and an exponential fit.

    The fit regresses -log p on Lambda^2 / norm_scale^2 over cells with at
    least ``min_count`` exceedances and p < 1.
    """
    stats = np.asarray(stats, dtype=float)
    lam = np.asarray(lambda_grid, dtype=float)
    n = stats.size
    srt = np.sort(stats)
    counts = n - np.searchsorted(srt, lam, side="right")
    counts[lam <= 0] = n
    p = counts / n
    ci = wilson_intervals(counts, n)
    x = lam**2 / norm_scale**2
    mask = (counts >= min_count) & (counts < n)
    if mask.sum() >= 2:
        A = np.vstack([x[mask], np.ones(mask.sum())]).T
        y = -np.log(p[mask])
        (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
        resid = float(np.max(np.abs(A @ [slope, icpt] - y)))
    else:
        slope = icpt = resid = float("nan")
    return TailEstimate(lam, p, ci, counts, n, float(slope), float(icpt), resid, mask, float(norm_scale))


@dataclass
class TailEvent:
    """Which deviation event to measure.

    ``hsigma``: the statistic is ||u^omega||_{H^sigma}.
    ``E0``: max(||u||_{L^2}, max_N N^{1/6} ||Delta_N e^{itH} u||_{L^4_t L^inf_x}).
    ``F0``: max(||u||_{H^{(d-1)/2}}, ||e^{-itH} u||_{L^{2p}_t W^{1/7,inf}_x}), the
    fractional derivative realised as the harmonic multiplier lambda_n^{1/7}.

    Time norms use Gauss-Legendre quadrature on [-pi, pi] and spatial sups
    the dense grid (d = 1).  A sample lies outside the event at level Lambda
    exactly when its statistic exceeds Lambda.
    """

    kind: str = "hsigma"
    sigma: float = 0.0
    N_list: tuple = ()
    p: int = 3
    time_nodes: int = 64


def _spacetime_norm(spec, multiplier, q, time_nodes, batch=128):
    """||e^{itH} m(H) u||_{L^q([-pi,pi]; L^inf)} for every sample (d = 1)."""
    table = spec.table
    active = np.nonzero(multiplier)[0]
    out = np.zeros(spec.sample_count)
    if active.size == 0:
        return out
    t, wt = np.polynomial.legendre.leggauss(time_nodes)
    t, wt = np.pi * t, np.pi * wt
    halfwidth, step = default_dense(table)
    x = np.arange(-halfwidth, halfwidth + step / 2, step)
    idx = table.indices[active, 0]
    E = hermite_table_1d(int(idx.max()), x)[idx]
    phases = np.exp(1j * np.outer(t, table.lambda_sq[active].astype(float)))
    for start, rows in iter_batches(spec, batch):
        r = rows[:, active] * multiplier[active]
        stacked = (r[:, None, :] * phases[None, :, :]).reshape(-1, active.size)
        sup = np.max(np.abs(stacked @ E), axis=1).reshape(len(rows), t.size)
        out[start : start + len(rows)] = (sup**q @ wt) ** (1.0 / q)
    return out


def event_statistics(spec, event):
    table = spec.table
    if event.kind == "hsigma":
        return np.sqrt(statistic_samples(spec, hs_norm_sq_statistic(table, event.sigma)))
    if event.kind not in ("E0", "F0"):
        raise ValueError(f"unknown event kind {event.kind!r}")
    if table.dimension != 1:
        raise ValueError("space-time events are implemented in d = 1")
    lam2 = table.lambda_sq.astype(float)
    if event.kind == "E0":
        stat = np.sqrt(statistic_samples(spec, hs_norm_sq_statistic(table, 0.0)))
        for N in event.N_list:
            mult = dyadic_multiplier(table, N, "sharp")
            norm = _spacetime_norm(spec, mult, 4, event.time_nodes)
            stat = np.maximum(stat, float(N) ** (1 / 6) * norm)
        return stat
    d = table.dimension
    stat = np.sqrt(statistic_samples(spec, hs_norm_sq_statistic(table, (d - 1) / 2)))
    norm = _spacetime_norm(spec, lam2 ** (1 / 14), 2 * event.p, event.time_nodes)
    return np.maximum(stat, norm)


def tail_probability(spec, event, lambda_grid, min_count=10):
    """Empirical P(statistic > Lambda) for a deviation event."""
    stats = event_statistics(spec, event)
    scale = np.sqrt(np.sum(spec.table.lambda_sq.astype(float) ** event.sigma * np.abs(spec.base_coeffs) ** 2))
    return tail_from_statistics(stats, lambda_grid, scale, min_count)


# ---------------------------------------------------------------------------
# non-smoothing


def divergent_profile(table, s):
    """c_n = lambda_n^{-s} (rank + 1)^{-1/2}; its H^s mass diverges like log."""
    lam = np.sqrt(table.lambda_sq.astype(float))
    return lam ** (-s) / np.sqrt(np.arange(1, len(table) + 1))


@dataclass
class NonsmoothingRow:
    N: int
    median: float
    q1: float
    q3: float
    sigma_sq: float
    bound_t: np.ndarray = field(repr=False)
    bound_empirical: np.ndarray = field(repr=False)
    bound_value: np.ndarray = field(repr=False)
    bound_stderr: np.ndarray = field(repr=False)

    @property
    def bound_holds(self):
        return bool(np.all(self.bound_empirical <= self.bound_value + 3 * self.bound_stderr))


def nonsmoothing_scan(spec, s, N_list, chi=standard_eta, grid=None, t_points=24):
    """Distribution of S_N = ||chi(H/N^2) u^omega||_{H^s} (flat Sobolev norm).

    The flat norm is a quadratic form in the coefficients evaluated with a
    Gram matrix built once on the dense grid.  The small-ball bound is checked
    with the harmonic-scale norm of chi(H/N^2)u^omega, for which sigma_N^2 is
    the expected square.
    """
    table = spec.table
    if grid is None:
        h, st = default_dense(table)
        grid = gauss_hermite_grid(1, h, st)
    G = flat_sobolev_gram(table, s, grid)
    lam2 = table.lambda_sq.astype(float)
    rows_out = []
    for N in N_list:
        mult = chi(lam2 / float(N) ** 2)
        active = np.nonzero(mult)[0]
        Gs = G[np.ix_(active, active)]
        flat = np.empty(spec.sample_count)
        harm = np.empty(spec.sample_count)
        for start, rows in iter_batches(spec):
            r = rows[:, active] * mult[active]
            sl = slice(start, start + len(rows))
            flat[sl] = np.sqrt(np.maximum(np.real(np.sum((r.conj() @ Gs) * r, axis=1)), 0))
            harm[sl] = np.sqrt(np.abs(r) ** 2 @ lam2[active] ** s)
        sigma_sq = float(np.sum(lam2 ** s * np.abs(mult * spec.base_coeffs) ** 2))
        ts = np.linspace(0, np.sqrt(sigma_sq), t_points + 1)[1:]
        emp = np.array([np.mean(harm <= t) for t in ts])
        se = np.sqrt(np.maximum(emp * (1 - emp), 1.0 / harm.size) / harm.size)
        bound = np.exp(ts**2 - sigma_sq / 2)
        q1, med, q3 = np.quantile(flat, [0.25, 0.5, 0.75])
        rows_out.append(NonsmoothingRow(int(N), float(med), float(q1), float(q3), sigma_sq, ts, emp, bound, se))
    return rows_out
