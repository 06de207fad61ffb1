"""Spectral multipliers of the harmonic oscillator and the lens transform."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .basis import SpectralField, evaluate, hermite_table_1d


def _f(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    """C-infinity transition: 0 for t <= 0, 1 for t >= 1."""
    a, b = _f(t), _f(1.0 - np.asarray(t, dtype=float))
    return a / (a + b)


def standard_eta(x):
    """1 on [0, 1], 0 on [2, inf), smooth in between."""
    x = np.asarray(x, dtype=float)
    a, b = _f(2.0 - x), _f(x - 1.0)
    return a / (a + b)


def plateau_free_eta(x):
    """A decreasing bump with no plateau, for negative controls."""
    x = np.asarray(x, dtype=float)
    return np.where(x < 2.0, 1.0 - smooth_step(x / 2.0), 0.0)


def make_phi(r=0.05):
    """1 on [1/4, 2], 0 outside [1/4 - r, 2 + r]."""
    lo, hi = 0.25, 2.0

    def phi(x):
        x = np.asarray(x, dtype=float)
        up = smooth_step((x - (lo - r)) / r)
        down = smooth_step(((hi + r) - x) / r)
        return np.where((x >= lo) & (x <= hi), 1.0, up * down)

    return phi


@dataclass(frozen=True)
class DyadicCutoffs:
    eta: Callable = standard_eta
    phi: Callable = field(default_factory=make_phi)
    r: float = 0.05

    def psi(self, x):
        x = np.asarray(x, dtype=float)
        return self.eta(x) - self.eta(4.0 * x)

    @classmethod
    def tampered(cls):
        return cls(eta=plateau_free_eta)

    def check(self, samples=200001, hi=3.0):
        """Sampled violations of the support and phi * psi = psi identities."""
        x = np.linspace(0.0, hi, samples)
        psi = self.psi(x)
        outside = (x < 0.25) | (x > 2.0)
        return {
            "psi_outside_support": float(np.max(np.abs(psi[outside]))),
            "phi_psi_defect": float(np.max(np.abs(self.phi(x) * psi - psi))),
        }


DEFAULT_CUTOFFS = DyadicCutoffs()


def _check_dyadic(N):
    if N < 1 or (int(N) & (int(N) - 1)) or int(N) != N:
        raise ValueError(f"N must be a power of two >= 1, got {N}")


def dyadic_multiplier(table, N, kind="sharp", cutoffs=DEFAULT_CUTOFFS):
    _check_dyadic(N)
    x = table.lambda_sq / float(N) ** 2
    if kind == "sharp":
        return cutoffs.psi(x)
    if kind == "wide":
        return cutoffs.phi(x)
    raise ValueError(f"kind must be 'sharp' or 'wide', got {kind!r}")


def dyadic_project(field, N, kind="sharp", cutoffs=DEFAULT_CUTOFFS):
    """Delta_N (sharp, psi(H/N^2)) or Delta'_N (wide, phi(H/N^2))."""
    return field.with_coeffs(field.coeffs * dyadic_multiplier(field.table, N, kind, cutoffs))


def dyadic_range(cutoff):
    """Dyadic N = 1, 2, 4, ... whose blocks meet eigenvalues <= cutoff."""
    Ns = [1]
    while Ns[-1] ** 2 < 4 * cutoff:
        Ns.append(2 * Ns[-1])
    return Ns


def harmonic_propagate(field, t):
    """e^{-itH}: c_n -> exp(-i t lambda_n^2) c_n."""
    return field.with_coeffs(field.coeffs * np.exp(-1j * t * field.table.lambda_sq))


def sobolev_H_norm(field, s):
    """Harmonic Sobolev norm (sum lambda_n^{2s} |c_n|^2)^{1/2}."""
    w = field.table.lambda_sq.astype(float) ** s
    return float(np.sqrt(np.sum(w * np.abs(field.coeffs) ** 2)))


# ---------------------------------------------------------------------------
# flat Sobolev and weighted norms on the dense grid


def _dense_axes(grid, d):
    x = grid.dense_points
    return [x] * d, grid.dense_step


def split_norms(field, s, grid):
    """(||(-Delta)^{s/2} u||_{L^2}, ||<x>^s u||_{L^2}) on the dense grid.

    The Laplacian power is a Fourier multiplier |xi|^s applied with the FFT of
    the synthesised values; the grid must extend to where u is negligible.
    """
    if s < 0:
        raise ValueError("s must be non-negative")
    d = field.table.dimension
    axes, h = _dense_axes(grid, d)
    vals = evaluate(field, axes)
    cell = h**d
    mesh = np.meshgrid(*axes, indexing="ij")
    r2 = sum(m**2 for m in mesh)
    weight_norm = np.sqrt(np.sum((1.0 + r2) ** s * np.abs(vals) ** 2) * cell)
    if s == 0:
        lap_norm = np.sqrt(np.sum(np.abs(vals) ** 2) * cell)
    else:
        xi = [2 * np.pi * np.fft.fftfreq(len(a), d=h) for a in axes]
        kmesh = np.meshgrid(*xi, indexing="ij")
        k2 = sum(k**2 for k in kmesh)
        F = np.fft.fftn(vals)
        # Parseval for the unnormalised DFT
        lap_norm = np.sqrt(np.sum(k2**s * np.abs(F) ** 2) * cell / vals.size)
    return float(lap_norm), float(weight_norm)


def fourier_phases(table):
    """Eigenvalues (-i)^{|n|} of the unitary Fourier transform on h_n."""
    return (-1j) ** (table.indices.sum(axis=1) % 4)


def flat_sobolev_gram(table, s, grid):
    """Gram matrix G with ||u||_{H^s}^2 = c^* G c for u = sum c_n h_n.

    Uses that h_n is an eigenfunction of the Fourier transform, so the
    multiplier <xi>^{2s} becomes a weight on the dense grid.
    """
    d = table.dimension
    x = grid.dense_points
    h = grid.dense_step
    nmax = table.max_index
    E = hermite_table_1d(nmax, x)
    if d == 1:
        rows = E[table.indices[:, 0]]
        G = (rows * ((1.0 + x**2) ** s * h)) @ rows.T
    else:
        mesh = np.meshgrid(*([x] * d), indexing="ij")
        w = (1.0 + sum(m**2 for m in mesh)) ** s * h**d
        rows = np.ones((len(table),) + (x.size,) * d)
        for j in range(d):
            shape = [1] * (d + 1)
            shape[0], shape[j + 1] = len(table), x.size
            rows = rows * E[table.indices[:, j]].reshape(shape)
        flat = rows.reshape(len(table), -1)
        G = (flat * w.reshape(1, -1)) @ flat.T
    ph = fourier_phases(table)
    return np.conj(ph)[:, None] * G * ph[None, :]


def flat_sobolev_norm(field, s, grid, gram=None):
    G = flat_sobolev_gram(field.table, s, grid) if gram is None else gram
    c = field.coeffs
    return float(np.sqrt(np.real(np.conj(c) @ G @ c)))


# ---------------------------------------------------------------------------
# lens transform


def _as_points(points, d):
    pts = np.asarray(points, dtype=float)
    if d == 1 and pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[-1] != d:
        raise ValueError(f"points must have trailing dimension {d}")
    return pts


def lens_pullback(U, t, x_points, d=1):
    """Harmonic-frame values u(t, x) from a free-frame solution U(s, y).

    u(t,x) = cos(2t)^{-d/2} U(tan(2t)/2, x / cos(2t)) exp(-i |x|^2 tan(2t) / 2).
    ``U(s, y)`` receives points of shape (P, d).
    """
    if abs(t) >= np.pi / 4:
        raise ValueError("lens transform needs |t| < pi/4")
    x = _as_points(x_points, d)
    c = np.cos(2 * t)
    s = np.tan(2 * t) / 2
    r2 = np.sum(x**2, axis=-1)
    return c ** (-d / 2) * U(s, x / c) * np.exp(-0.5j * r2 * np.tan(2 * t))


def lens_pushforward(u, s, y_points, d=1):
    """Free-frame values U(s, y) from a harmonic-frame solution u(t, x).

    U(s,y) = (1+4s^2)^{-d/4} u(arctan(2s)/2, y / sqrt(1+4s^2)) exp(i |y|^2 s / (1+4s^2)).
    """
    y = _as_points(y_points, d)
    q = 1.0 + 4.0 * s * s
    t = np.arctan(2 * s) / 2
    r2 = np.sum(y**2, axis=-1)
    return q ** (-d / 4) * u(t, y / np.sqrt(q)) * np.exp(1j * r2 * s / q)


class FreeFlowOracle:
    """Free Schrodinger flow e^{is Delta} on R by a periodised Fourier sum.

    Built from samples of the initial datum on a uniform grid; the domain is
    padded with zeros to ``pad`` times its width so that the evolved wave
    does not wrap around for the times of interest.  Values at arbitrary
    (s, y) come from the exact trigonometric sum, not interpolation.
    """

    def __init__(self, x, values, pad=2.0):
        x = np.asarray(x, dtype=float)
        h = x[1] - x[0]
        n = x.size
        total = int(2 ** np.ceil(np.log2(pad * n)))
        start = x[0] - h * ((total - n) // 2)
        buf = np.zeros(total, dtype=complex)
        off = (total - n) // 2
        buf[off : off + n] = values
        self.x0 = start
        self.h = h
        self.n = total
        self.coeffs = np.fft.fft(buf) / total
        self.xi = 2 * np.pi * np.fft.fftfreq(total, d=h)

    @property
    def period(self):
        return self.n * self.h

    def __call__(self, s, y, chunk=2048):
        y = np.asarray(y, dtype=float).reshape(-1)
        amp = self.coeffs * np.exp(-1j * s * self.xi**2)
        out = np.empty(y.size, dtype=complex)
        for i in range(0, y.size, chunk):
            yy = y[i : i + chunk] - self.x0
            out[i : i + chunk] = np.exp(1j * np.outer(yy, self.xi)) @ amp
        return out

    def on_grid(self, s):
        """Evolved values on the (padded) sampling grid via one FFT."""
        vals = np.fft.ifft(self.coeffs * np.exp(-1j * s * self.xi**2)) * self.n
        return self.x0 + self.h * np.arange(self.n), vals


def free_flow_1d(x, values, s, pad=2.0):
    """Apply e^{is Delta} to samples on a uniform grid, returned on the same points."""
    oracle = FreeFlowOracle(x, values, pad)
    return oracle(s, x)


# ---------------------------------------------------------------------------
# Bourgain norm


def default_window(t):
    """1 on |t| <= pi/4, 0 for |t| >= pi/2."""
    a = np.pi / 4
    return smooth_step((np.pi / 2 - np.abs(np.asarray(t, dtype=float))) / a)


@dataclass
class XsbParams:
    s: float
    b: float
    time_grid: np.ndarray
    window: Callable = default_window

    def __post_init__(self):
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("b must lie in [0, 1]")
        n = len(self.time_grid)
        if n & (n - 1):
            raise ValueError("time grid length must be a power of two")

    @classmethod
    def on_interval(cls, s, b, n=1024, half_width=np.pi, window=default_window):
        t = -half_width + 2 * half_width * np.arange(n) / n
        return cls(s, b, t, window)


def xsb_norm(traj, params):
    """Windowed discrete X^{s,b} norm.

    Each mode's windowed coefficient series is transformed in time and
    weighted by <tau + lambda_n^2>^b lambda_n^s, with tau the frequency dual
    to t under the convention hat f(tau) = int e^{-it tau} f(t) dt.
    """
    t = np.asarray(traj.times, dtype=float)
    if t.shape != np.shape(params.time_grid) or not np.allclose(t, params.time_grid):
        raise ValueError("trajectory is not sampled on the parameter time grid")
    dt = np.diff(t)
    if not np.allclose(dt, dt[0], rtol=1e-12, atol=0):
        raise ValueError("xsb_norm requires a uniform time grid")
    dt = dt[0]
    n = t.size
    coeffs = np.asarray(traj.coeffs)  # (T, M)
    windowed = coeffs * params.window(t)[:, None]
    C = np.fft.fft(windowed, axis=0)
    # phase of the grid origin does not affect moduli
    tau = 2 * np.pi * np.fft.fftfreq(n, d=dt)
    lam2 = traj.table.lambda_sq.astype(float)
    weight = (1.0 + (tau[:, None] + lam2[None, :]) ** 2) ** params.b * lam2[None, :] ** params.s
    return float(np.sqrt(np.sum(weight * np.abs(C) ** 2) * dt / n))
