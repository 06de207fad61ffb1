"""Duhamel/Picard solver for the harmonic-frame NLS with cosine weight.

    i u_t - H u = kappa cos(2t)^{d(p-1)/2 - 2} |u|^{p-1} u,   |t| <= T < pi/4.

The unknown is the interaction variable a(t) = e^{itH} u(t), which satisfies

    a(t) = u0 - i kappa int_0^t w(s) e^{isH} N(e^{-isH} a(s)) ds.

Time is discretised by composite Gauss-Legendre collocation on panels that
shrink geometrically towards pi/4, where the weight may blow up.  The
nonlinearity is the exact Galerkin projection of |u|^{p-1}u onto the mode
table, computed with a Gauss rule exact for the polynomial-times-Gaussian
integrand.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import BarycentricInterpolator

from .basis import (
    SpectralField,
    analyze_many,
    evaluate,
    gauss_hermite_grid,
    hermite_table_1d,
    product_grid,
    synthesize_many,
)


class PicardDivergence(RuntimeError):
    """Raised when Picard increments stop contracting."""

    def __init__(self, message, ratios):
        super().__init__(message)
        self.ratios = list(ratios)


@dataclass
class SolverConfig:
    kappa: float = 1.0
    p: int = 3
    T: float = 0.7
    time_nodes: int = 16
    max_picard_iters: int = 60
    picard_tol: float = 1e-10
    dealias_cutoff: int | None = None
    norm_s: float = 0.0
    max_panel: float = 0.25

    def validate(self, table=None):
        if self.kappa not in (-1, 0, 1):
            raise ValueError("kappa must be -1, 0 or +1")
        if self.p < 3 or self.p % 2 == 0:
            raise ValueError("p must be an odd integer >= 3")
        if not 0 < self.T < np.pi / 4:
            raise ValueError("T must lie in (0, pi/4)")
        if self.time_nodes < 2 or self.max_picard_iters < 1 or self.picard_tol <= 0:
            raise ValueError("invalid discretisation parameters")
        if table is not None and self.dealias_cutoff is not None and self.dealias_cutoff < table.cutoff:
            raise ValueError("dealias_cutoff must be >= the table cutoff")

    def as_dict(self):
        return asdict(self)


def weight_exponent(d, p):
    return d * (p - 1) / 2 - 2


def time_weight(t, d, p):
    return np.cos(2 * np.asarray(t, dtype=float)) ** weight_exponent(d, p)


# ---------------------------------------------------------------------------
# nonlinearity


class Nonlinearity:
    """Exact Galerkin projection of |u|^{p-1} u onto a mode table."""

    def __init__(self, table, p):
        self.table = table
        self.p = p
        self.grid = product_grid(table.max_index, p)

    def __call__(self, coeffs):
        """coeffs (B, M) -> projected coefficients (B, M)."""
        c = np.atleast_2d(coeffs)
        vals = synthesize_many(self.table, c, self.grid.points)
        mod = np.abs(vals) ** (self.p - 1)
        return analyze_many(mod * vals, self.grid, self.table)


def nonlinearity(field, p, grid=None, report=False):
    """P(|u|^{p-1} u) for a SpectralField.

    With ``report=True`` also returns the fraction of the L^2 mass of
    |u|^{p-1}u lying outside the dealiasing table (p times the working
    cutoff) and outside the working table.
    """
    if p < 1 or p % 2 == 0:
        raise ValueError("p must be odd")
    table = field.table
    N = Nonlinearity(table, p)
    if grid is not None:
        N.grid = grid
    out = SpectralField(table, N(field.coeffs)[0])
    if not report:
        return out
    from .basis import build_mode_table

    big = build_mode_table(table.dimension, p * table.cutoff)
    # grid exact for e_k (k <= big max index) times p factors
    deg = p * table.max_index + big.max_index
    g = gauss_hermite_grid(deg // 2 + 1, scale=1.0 / np.sqrt((p + 1) / 2.0))
    vals = synthesize_many(table, field.coeffs[None, :], g.points)
    full = analyze_many(np.abs(vals) ** (p - 1) * vals, g, big)[0]
    # exact L^2 mass of |u|^{p-1} u: 2p factors, Gaussian exp(-p x^2)
    g2 = product_grid(table.max_index, 2 * p - 1)
    v2 = synthesize_many(table, field.coeffs[None, :], g2.points)[0]
    dens = np.abs(v2) ** (2 * p)
    for _ in range(table.dimension):
        dens = np.tensordot(dens, g2.unit_weights, axes=([0], [0]))
    total = float(dens)
    kept = float(np.sum(np.abs(out.coeffs) ** 2))
    in_big = float(np.sum(np.abs(full) ** 2))
    scale = total if total > 0 else 1.0
    info = {
        "aliasing_lost": max(total - in_big, 0.0) / scale,
        "truncated": max(total - kept, 0.0) / scale,
    }
    if info["aliasing_lost"] > 1e-6:
        warnings.warn(f"nonlinear product loses {info['aliasing_lost']:.2e} outside the dealias table", RuntimeWarning)
    return out, info


# ---------------------------------------------------------------------------
# time panels


def _integration_matrix(q):
    """Reference GL nodes xi, weights w and S[i, j] = int_{-1}^{xi_i} l_j."""
    xi, w = np.polynomial.legendre.leggauss(q)
    V = np.polynomial.legendre.legvander(xi, q)
    # int_{-1}^{x} P_m = (P_{m+1} - P_{m-1}) / (2m + 1), and x + 1 for m = 0
    Psi = np.empty((q, q))
    Psi[:, 0] = xi + 1.0
    for m in range(1, q):
        Psi[:, m] = (V[:, m + 1] - V[:, m - 1]) / (2 * m + 1)
    S = np.linalg.solve(V[:, :q].T, Psi.T).T
    return xi, w, S


def panel_edges(T, max_panel=0.25, omega_max=0.0):
    """Panel boundaries 0 = b_0 < ... < b_K = T, graded towards pi/4."""
    cap = max_panel
    if omega_max > 0:
        cap = min(cap, 4 * np.pi / omega_max)
    edges = [0.0]
    while edges[-1] < T:
        b = edges[-1]
        step = min(cap, 0.5 * (np.pi / 4 - b))
        nxt = b + step
        if nxt >= T or T - nxt < 1e-3 * step:
            nxt = T
        edges.append(nxt)
    return np.array(edges)


@dataclass
class Panel:
    start: float
    h: float
    nodes: np.ndarray
    a_start: np.ndarray
    a_nodes: np.ndarray
    a_end: np.ndarray

    @property
    def end(self):
        return self.start + self.h

    def contains(self, t):
        lo, hi = sorted((self.start, self.end))
        return lo - 1e-15 <= t <= hi + 1e-15

    def interpolate(self, ts):
        pts = np.concatenate([[self.start], self.nodes])
        vals = np.vstack([self.a_start[None, :], self.a_nodes])
        return BarycentricInterpolator(pts, vals)(np.atleast_1d(ts))


@dataclass
class Trajectory:
    """Solution samples u(t_k) (Schrodinger picture) on one mode table."""

    table: object
    times: np.ndarray
    coeffs: np.ndarray
    u0: np.ndarray
    config: dict = field(default_factory=dict)
    panels: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or np.any(np.diff(t) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        if self.coeffs.shape != (t.size, len(self.table)):
            raise ValueError("coeffs must have shape (len(times), modes)")

    @property
    def fields(self):
        return [SpectralField(self.table, c) for c in self.coeffs]

    def phases(self, t):
        return np.exp(-1j * np.outer(np.atleast_1d(t), self.table.lambda_sq.astype(float)))

    def interaction_at(self, ts):
        """a(t) = e^{itH} u(t) at arbitrary |t| <= T via the collocation polynomial."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        out = np.empty((ts.size, len(self.table)), dtype=complex)
        for i, t in enumerate(ts):
            if t == 0.0:
                out[i] = self.u0
                continue
            for pn in self.panels:
                if np.sign(pn.h) == np.sign(t) and pn.contains(t):
                    if abs(t - pn.end) < 1e-15:
                        out[i] = pn.a_end
                    else:
                        out[i] = pn.interpolate(t)[0]
                    break
            else:
                raise ValueError(f"time {t} outside the solved window")
        return out

    def state_at(self, ts):
        return self.interaction_at(ts) * self.phases(ts)

    def end_value(self, sign=1):
        """Interaction variable at +T (sign=1) or -T (sign=-1), exactly."""
        side = [pn for pn in self.panels if np.sign(pn.h) == sign]
        return side[-1].a_end


# ---------------------------------------------------------------------------
# Picard iteration


@dataclass
class PicardDiagnostics:
    iterations: int
    increments: list
    ratios: list
    converged: bool
    mass_drift: float


def _hs_weights(table, s):
    return table.lambda_sq.astype(float) ** s


def _rhs(N, t, a, lam2, kappa, d, p):
    """f(t, a) = -i kappa w(t) e^{itH} N(e^{-itH} a), rows over times."""
    ph = np.exp(1j * np.outer(t, lam2))
    u = a * np.conj(ph)
    return -1j * kappa * time_weight(t, d, p)[:, None] * ph * N(u)


def picard_solve(u0, config):
    """Fixed point of the Duhamel map on the collocation grid over [-T, T]."""
    table = u0.table
    config.validate(table)
    d = table.dimension
    lam2 = table.lambda_sq.astype(float)
    q = config.time_nodes
    xi, wq, S = _integration_matrix(q)
    N = Nonlinearity(table, config.p)
    omega = (config.p + 1) * float(lam2.max())
    edges = panel_edges(config.T, config.max_panel, omega)
    # signed panels: positive side then negative side
    specs = []
    for sign in (1, -1):
        for b0, b1 in zip(edges[:-1], edges[1:]):
            start, h = sign * b0, sign * (b1 - b0)
            specs.append((start, h, start + h * (xi + 1) / 2))
    all_t = np.concatenate([sp[2] for sp in specs])
    nq = len(specs)
    c0 = u0.coeffs.astype(complex)
    a = np.tile(c0, (all_t.size, 1))
    ends = [None] * nq
    starts = [None] * nq
    hw = _hs_weights(table, config.norm_s)
    increments, ratios = [], []
    converged = False
    bad = 0
    it = 0
    for it in range(1, config.max_picard_iters + 1):
        if config.kappa == 0:
            F = np.zeros_like(a)
        else:
            F = _rhs(N, all_t, a, lam2, config.kappa, d, config.p)
        new = np.empty_like(a)
        for side in (0, 1):
            cur = c0.copy()
            for k in range(side * nq // 2, (side + 1) * nq // 2):
                start, h, _ = specs[k]
                sl = slice(k * q, (k + 1) * q)
                starts[k] = cur
                new[sl] = cur + 0.5 * h * (S @ F[sl])
                cur = cur + 0.5 * h * (wq @ F[sl])
                ends[k] = cur
        if not np.all(np.isfinite(new)):
            raise PicardDivergence("non-finite Picard iterate", ratios)
        diff = np.max(np.sqrt(np.abs(new - a) ** 2 @ hw))
        a = new
        if increments and increments[-1] > 0:
            r = diff / increments[-1]
            ratios.append(float(r))
            bad = bad + 1 if r >= 1 else 0
            if bad >= 3:
                raise PicardDivergence("Picard iteration is not contracting", ratios)
        increments.append(float(diff))
        if diff < config.picard_tol:
            converged = True
            break
    if not converged and config.max_picard_iters > 1:
        warnings.warn("Picard iteration stopped before reaching tolerance", RuntimeWarning)
    panels = [
        Panel(specs[k][0], specs[k][1], specs[k][2], starts[k], a[k * q : (k + 1) * q], ends[k])
        for k in range(nq)
    ]
    order = np.argsort(all_t)
    times = all_t[order]
    u = a[order] * np.exp(-1j * np.outer(times, lam2))
    mass = np.sum(np.abs(u) ** 2, axis=1)
    m0 = float(np.sum(np.abs(c0) ** 2))
    drift = float(np.max(np.abs(mass - m0)))
    traj = Trajectory(table, times, u, c0, config.as_dict(), panels)
    return traj, PicardDiagnostics(it, increments, ratios, converged, drift)


def _config_from(traj, config):
    if config is None:
        return SolverConfig(**traj.config)
    return config


def duhamel_residual(traj, config=None, check_times=None, s=None):
    """sup_t || u(t) - e^{-itH}u0 - (Duhamel integral)(t) ||_{H^s} at off-node times.

    The trajectory is interpolated with its collocation polynomials and the
    Duhamel integral is re-evaluated with a finer Gauss rule on each panel.
    """
    config = _config_from(traj, config)
    table = traj.table
    d = table.dimension
    lam2 = table.lambda_sq.astype(float)
    s = config.norm_s if s is None else s
    hw = _hs_weights(table, s)
    N = Nonlinearity(table, config.p)
    q = len(traj.panels[0].nodes)
    xr, wr = np.polynomial.legendre.leggauss(2 * q + 4)

    def integral(t0, t1):
        if config.kappa == 0 or t0 == t1:
            return np.zeros(len(table), dtype=complex)
        ts = t0 + (t1 - t0) * (xr + 1) / 2
        f = _rhs(N, ts, traj.interaction_at(ts), lam2, config.kappa, d, config.p)
        return 0.5 * (t1 - t0) * (wr @ f)

    if check_times is None:
        check = []
        for pn in traj.panels:
            pts = np.concatenate([[pn.start], pn.nodes, [pn.end]])
            check.extend(0.5 * (pts[:-1] + pts[1:]))
        check_times = np.array(check)
    worst = 0.0
    for sign in (1, -1):
        side = [pn for pn in traj.panels if np.sign(pn.h) == sign]
        acc = [np.zeros(len(table), dtype=complex)]
        for pn in side:
            acc.append(acc[-1] + integral(pn.start, pn.end))
        for t in np.atleast_1d(check_times):
            if np.sign(t) != sign:
                continue
            for k, pn in enumerate(side):
                if pn.contains(t):
                    total = acc[k] + integral(pn.start, t)
                    a_t = traj.interaction_at([t])[0]
                    res = a_t - traj.u0 - total
                    worst = max(worst, float(np.sqrt(np.abs(res) ** 2 @ hw)))
                    break
    return worst


@dataclass
class ScatteringResult:
    L_plus: SpectralField
    times: np.ndarray
    cauchy_curve: np.ndarray

    @property
    def decreasing(self):
        c = self.cauchy_curve
        return bool(np.all(np.diff(c) <= 1e-15 * max(c.max(), 1e-300)))


def scattering_limit(traj, config=None, levels=24, s=None):
    """F(t) = a(t) - u0 along t_k = T - (T/2) 2^{-k} and its distance to F(T)."""
    config = _config_from(traj, config)
    s = config.norm_s if s is None else s
    hw = _hs_weights(traj.table, s)
    T = config.T
    tk = T - 0.5 * T * 2.0 ** (-np.arange(levels))
    F_T = traj.end_value(1) - traj.u0
    F = traj.interaction_at(tk) - traj.u0
    curve = np.sqrt(np.abs(F - F_T) ** 2 @ hw)
    res = ScatteringResult(SpectralField(traj.table, F_T), tk, curve)
    if not res.decreasing:
        warnings.warn("scattering Cauchy curve is not monotonically decreasing", RuntimeWarning)
    return res


def nonlinear_order(u0, config, alphas=(1.0, 0.5)):
    """Exponent of sup_t ||u_alpha - e^{-itH} alpha u0|| in alpha (two-scale fit)."""
    devs = []
    for al in alphas:
        traj, _ = picard_solve(u0 * al, config)
        free = al * u0.coeffs[None, :] * np.exp(-1j * np.outer(traj.times, traj.table.lambda_sq))
        devs.append(float(np.max(np.linalg.norm(traj.coeffs - free, axis=1))))
    return float(np.log(devs[0] / devs[1]) / np.log(alphas[0] / alphas[1])), devs


# ---------------------------------------------------------------------------
# free frame


@dataclass
class FreeTrajectory:
    """Free-frame samples U(s_k, y) on per-time tensor grids y = x sqrt(1 + 4 s_k^2)."""

    s: np.ndarray
    x: np.ndarray
    stretch: np.ndarray
    values: np.ndarray
    dimension: int

    def y_axis(self, k):
        return self.x * self.stretch[k]


def to_free_nls(traj, x, times=None):
    """Map harmonic-frame samples to the free frame by the lens transform.

    U(s, y) = (1 + 4s^2)^{-d/4} u(t, y / sqrt(1 + 4s^2)) exp(i |y|^2 s / (1 + 4s^2))
    with s = tan(2t)/2.  Evaluating u on the fixed grid ``x`` makes the
    matching y-grid the stretched copy of ``x``; this keeps the map an exact
    L^2 isometry between the two discretisations.
    """
    t = traj.times if times is None else np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(np.abs(t) >= np.pi / 4):
        raise ValueError("lens transform needs |t| < pi/4")
    d = traj.table.dimension
    x = np.asarray(x, dtype=float)
    states = traj.coeffs if times is None else traj.state_at(t)
    s = np.tan(2 * t) / 2
    q = 1 + 4 * s**2
    mesh = np.meshgrid(*([x] * d), indexing="ij")
    x2 = sum(m**2 for m in mesh)
    vals = []
    for k in range(t.size):
        u = evaluate(SpectralField(traj.table, states[k]), [x] * d)
        # |y|^2 s / q with y = x sqrt(q)
        vals.append(q[k] ** (-d / 4) * u * np.exp(1j * x2 * s[k]))
    return FreeTrajectory(s, x, np.sqrt(q), np.array(vals), d)


def free_mass(ftraj, k):
    """int |U(s_k, y)|^2 dy on the stretched trapezoid grid."""
    h = (ftraj.x[1] - ftraj.x[0]) * ftraj.stretch[k]
    return float(np.sum(np.abs(ftraj.values[k]) ** 2) * h**ftraj.dimension)
