"""Hermite functions, tensor mode tables and Gauss-Hermite transforms.

The 1D Hermite functions are evaluated with the normalised three-term
recurrence

    e_0(x) = pi^{-1/4} exp(-x^2/2),   e_1(x) = sqrt(2) x e_0(x),
    e_{n+1}(x) = x sqrt(2/(n+1)) e_n(x) - sqrt(n/(n+1)) e_{n-1}(x),

run on the polynomial part only and rescaled in log-space, so that neither the
Gaussian factor nor the polynomial growth under/overflows before the final
multiplication.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import logsumexp

LOG_PI_QUARTER = -0.25 * np.log(np.pi)
_RESCALE = 1e150
_LOG_RESCALE = np.log(_RESCALE)


def _scaled_rows(nmax, x):
    """Yield (n, p_n, logscale) with e_n(x) = p_n * exp(logscale - x^2/2 - log(pi)/4)."""
    x = np.asarray(x, dtype=float)
    logscale = np.zeros_like(x)
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    yield 0, cur, logscale
    if nmax == 0:
        return
    prev, cur = cur, np.sqrt(2.0) * x
    yield 1, cur, logscale
    for n in range(1, nmax):
        nxt = x * np.sqrt(2.0 / (n + 1)) * cur - np.sqrt(n / (n + 1)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE
        if big.any():
            cur = np.where(big, cur / _RESCALE, cur)
            prev = np.where(big, prev / _RESCALE, prev)
            logscale = logscale + big * _LOG_RESCALE
        yield n + 1, cur, logscale


def hermite_eval_1d(n, points):
    """Values of the L^2-normalised Hermite function e_n at ``points``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    x = np.asarray(points, dtype=float)
    for k, p, logscale in _scaled_rows(n, x):
        if k == n:
            with np.errstate(under="ignore"):
                return p * np.exp(logscale - 0.5 * x * x + LOG_PI_QUARTER)
    raise AssertionError("unreachable")


def hermite_log_abs_1d(n, points):
    """log|e_n(x)|, finite far beyond the range where e_n underflows."""
    x = np.asarray(points, dtype=float)
    for k, p, logscale in _scaled_rows(n, x):
        if k == n:
            with np.errstate(divide="ignore"):
                return np.log(np.abs(p)) + logscale - 0.5 * x * x + LOG_PI_QUARTER
    raise AssertionError("unreachable")


def hermite_table_1d(nmax, points):
    """Matrix ``E[k, i] = e_k(points[i])`` for ``0 <= k <= nmax``."""
    x = np.asarray(points, dtype=float)
    out = np.empty((nmax + 1, x.size))
    gauss = -0.5 * x * x + LOG_PI_QUARTER
    with np.errstate(under="ignore"):
        for k, p, logscale in _scaled_rows(nmax, x):
            out[k] = p * np.exp(logscale + gauss)
    return out


def hermite_derivative_table_1d(nmax, points):
    """Matrix of e_k'(x), using e_k' = sqrt(k/2) e_{k-1} - sqrt((k+1)/2) e_{k+1}."""
    E = hermite_table_1d(nmax + 1, points)
    k = np.arange(nmax + 1)[:, None]
    D = -np.sqrt((k + 1) / 2.0) * E[1:]
    D[1:] += np.sqrt(k[1:] / 2.0) * E[: nmax]
    return D


# ---------------------------------------------------------------------------
# mode tables


@dataclass(frozen=True, eq=False)
class ModeTable:
    """Tensor Hermite modes of H = -Delta + |x|^2 with 2|n| + d <= cutoff.

    Entries are sorted by eigenvalue, ties broken lexicographically on the
    multi-index; ``rank`` is the position in that order.
    """

    dimension: int
    cutoff: int
    indices: np.ndarray  # (M, d) int
    lambda_sq: np.ndarray  # (M,) int

    def __len__(self):
        return len(self.lambda_sq)

    @property
    def entries(self):
        return [
            (tuple(int(v) for v in idx), int(l2), r)
            for r, (idx, l2) in enumerate(zip(self.indices, self.lambda_sq))
        ]

    @cached_property
    def _rank_lookup(self):
        return {tuple(int(v) for v in idx): r for r, idx in enumerate(self.indices)}

    def rank(self, multi_index):
        if np.isscalar(multi_index):
            multi_index = (multi_index,)
        return self._rank_lookup[tuple(int(v) for v in multi_index)]

    @property
    def lam(self):
        return np.sqrt(self.lambda_sq.astype(float))

    @property
    def max_index(self):
        """Largest 1D index appearing on any axis."""
        return (self.cutoff - self.dimension) // 2

    def eigenvalues(self):
        """Distinct eigenvalues in increasing order."""
        return np.unique(self.lambda_sq)


def build_mode_table(dimension, cutoff_lambda_sq):
    if dimension not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {dimension}")
    if cutoff_lambda_sq < dimension:
        raise ValueError("cutoff_lambda_sq must be at least the dimension")
    total_max = (cutoff_lambda_sq - dimension) // 2
    idx = [
        t
        for t in itertools.product(range(total_max + 1), repeat=dimension)
        if sum(t) <= total_max
    ]
    idx.sort(key=lambda t: (sum(t), t))
    indices = np.array(idx, dtype=np.int64).reshape(-1, dimension)
    lambda_sq = 2 * indices.sum(axis=1) + dimension
    return ModeTable(dimension, int(cutoff_lambda_sq), indices, lambda_sq)


@dataclass(eq=False)
class SpectralField:
    """Hermite coefficients of a function over a fixed mode table."""

    table: ModeTable
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (len(self.table),):
            raise ValueError(
                f"expected {len(self.table)} coefficients, got {self.coeffs.shape}"
            )

    def with_coeffs(self, coeffs):
        return SpectralField(self.table, coeffs)

    def copy(self):
        return SpectralField(self.table, self.coeffs.copy())

    def __add__(self, other):
        _check_same_table(self, other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same_table(self, other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__

    def norm(self):
        return float(np.linalg.norm(self.coeffs))

    @classmethod
    def zeros(cls, table):
        return cls(table, np.zeros(len(table), dtype=complex))

    @classmethod
    def mode(cls, table, multi_index, value=1.0):
        c = np.zeros(len(table), dtype=complex)
        c[table.rank(multi_index)] = value
        return cls(table, c)


def _check_same_table(a, b):
    if a.table is not b.table:
        raise ValueError("fields live on different mode tables")


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Gauss-Hermite rule for weight exp(-y^2), optionally rescaled.

    Physical nodes are ``scale * y_i``.  ``int f(x) dx`` over R^d is
    approximated by ``sum f(x_i) * unit_weights_i`` (tensorised), where the
    unit weight is ``scale * w_i * exp(y_i^2)``.  With ``scale = 1/sqrt(k)``
    integrands of the form polynomial * exp(-k |x|^2) are integrated exactly.
    """

    nodes_1d: np.ndarray
    log_weights_1d: np.ndarray
    order: int
    scale: float = 1.0
    dense_halfwidth: float | None = None
    dense_step: float | None = None

    @property
    def weights_1d(self):
        return np.exp(self.log_weights_1d)

    @property
    def points(self):
        return self.scale * self.nodes_1d

    @cached_property
    def unit_weights(self):
        """Weights for plain ``dx`` integration at the physical points."""
        return self.scale * np.exp(self.log_weights_1d + self.nodes_1d**2)

    @cached_property
    def dense_points(self):
        if self.dense_halfwidth is None or self.dense_step is None:
            raise ValueError("grid has no dense component")
        n = int(np.ceil(self.dense_halfwidth / self.dense_step))
        return self.dense_step * np.arange(-n, n + 1)

    def with_dense(self, halfwidth, step):
        return QuadratureGrid(
            self.nodes_1d, self.log_weights_1d, self.order, self.scale, halfwidth, step
        )


def _gh_nodes(order):
    k = np.arange(1, order)
    nodes = eigh_tridiagonal(np.zeros(order), np.sqrt(k / 2.0), eigvals_only=True)
    # Newton polish on e_order(x) = 0 using e_m' = -x e_m + sqrt(2m) e_{m-1}
    for _ in range(100):
        for n, p, logscale in _scaled_rows(order, nodes):
            if n == order - 1:
                below, below_scale = p, logscale
            if n == order:
                top, top_scale = p, logscale
        step = top / (np.sqrt(2.0 * order) * below) * np.exp(top_scale - below_scale)
        nodes = nodes - step
        if np.max(np.abs(step)) < 1e-15 * max(1.0, np.max(np.abs(nodes))):
            break
    else:
        raise RuntimeError(f"Gauss-Hermite node iteration failed for order {order}")
    nodes = np.sort(nodes)
    nodes = 0.5 * (nodes - nodes[::-1])
    if order % 2:
        nodes[order // 2] = 0.0
    return nodes


def gauss_hermite_grid(order, dense_halfwidth=None, dense_step=None, scale=1.0):
    """Order-``order`` Gauss-Hermite rule for the weight exp(-x^2).

    Weights come from the Christoffel identity
    ``w_i exp(y_i^2) = 1 / sum_{k<m} e_k(y_i)^2``, evaluated in log-space.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    if order == 1:
        nodes = np.zeros(1)
    else:
        nodes = _gh_nodes(order)
    logs = np.empty((order, nodes.size))
    for n, p, logscale in _scaled_rows(order - 1, nodes):
        with np.errstate(divide="ignore"):
            logs[n] = 2.0 * (np.log(np.abs(p)) + logscale + LOG_PI_QUARTER)
    # logs[k] = log p_k(y)^2 for the orthonormal polynomials p_k = e_k exp(y^2/2)
    log_weights = -logsumexp(logs, axis=0)
    return QuadratureGrid(
        nodes, log_weights, order, float(scale), dense_halfwidth, dense_step
    )


def product_grid(max_index, factors, dense_halfwidth=None, dense_step=None):
    """Grid integrating products of ``factors`` Hermite functions exactly.

    A product of ``factors`` Hermite functions of index <= ``max_index`` times
    one more (the analysis test function) is a polynomial of degree
    ``(factors + 1) * max_index`` times ``exp(-(factors + 1) x^2 / 2)``.
    """
    k = (factors + 1) / 2.0
    order = ((factors + 1) * max_index) // 2 + 1
    return gauss_hermite_grid(order, dense_halfwidth, dense_step, scale=1.0 / np.sqrt(k))


def default_dense(table, step=0.02):
    """Dense uniform grid covering 1.5 * lambda_max, resolving lambda_max."""
    lam_max = float(np.sqrt(table.cutoff))
    step = min(step, 2.0 * np.pi / (8.0 * lam_max))
    return 1.5 * lam_max + 4.0, step


# ---------------------------------------------------------------------------
# synthesis / analysis


def _coeff_tensor(table, coeffs, nmax):
    d = table.dimension
    C = np.zeros((nmax + 1,) * d, dtype=complex)
    C[tuple(table.indices.T)] = coeffs
    return C


def _contract_axes(C, mats):
    """Apply ``mats[j]`` (shape (k_j, n_j)) along every axis j of C."""
    out = C
    for axis, M in enumerate(mats):
        out = np.moveaxis(np.tensordot(M, out, axes=([1], [axis])), 0, axis)
    return out


def evaluate(field, axes_points):
    """Values of ``field`` on the tensor product of per-axis point sets."""
    table = field.table
    d = table.dimension
    if isinstance(axes_points, np.ndarray) and axes_points.ndim == 1:
        axes_points = [axes_points] * d
    nmax = int(table.indices.max()) if len(table) else 0
    C = _coeff_tensor(table, field.coeffs, nmax)
    mats = [hermite_table_1d(nmax, pts).T for pts in axes_points]
    return _contract_axes(C, mats)


def synthesize(field, grid):
    """Values of ``field`` at the tensor quadrature nodes of ``grid``."""
    return evaluate(field, grid.points)


def synthesize_many(table, coeffs, axes_points):
    """Batch synthesis: ``coeffs`` has shape (B, M); returns (B, *grid)."""
    d = table.dimension
    if isinstance(axes_points, np.ndarray) and axes_points.ndim == 1:
        axes_points = [axes_points] * d
    nmax = int(table.indices.max()) if len(table) else 0
    coeffs = np.atleast_2d(coeffs)
    C = np.zeros((coeffs.shape[0],) + (nmax + 1,) * d, dtype=complex)
    C[(slice(None),) + tuple(table.indices.T)] = coeffs
    out = C
    for axis, pts in enumerate(axes_points):
        M = hermite_table_1d(nmax, pts).T
        out = np.moveaxis(np.tensordot(M, out, axes=([1], [axis + 1])), 0, axis + 1)
    return out


def analyze(values, grid, table, check_exactness=True):
    """Hermite coefficients ``c_n = int u h_n dx`` by tensor quadrature."""
    nmax = table.max_index
    if check_exactness and grid.scale == 1.0 and grid.order < nmax + 1:
        raise ValueError(
            f"grid order {grid.order} too low for max index {nmax} (need {nmax + 1})"
        )
    d = table.dimension
    values = np.asarray(values)
    if values.shape != (grid.order,) * d:
        raise ValueError(f"values shape {values.shape} does not match grid")
    W = grid.unit_weights
    E = hermite_table_1d(nmax, grid.points) * W[None, :]
    C = _contract_axes(values, [E] * d)
    return SpectralField(table, C[tuple(table.indices.T)])


def analyze_many(values, grid, table):
    """Batch analysis for values of shape (B, *grid)."""
    nmax = table.max_index
    d = table.dimension
    W = grid.unit_weights
    E = hermite_table_1d(nmax, grid.points) * W[None, :]
    out = values
    for axis in range(d):
        out = np.moveaxis(np.tensordot(E, out, axes=([1], [axis + 1])), 0, axis + 1)
    return out[(slice(None),) + tuple(table.indices.T)]


def integrate(values, grid):
    """``int f dx`` for tensor-node samples ``values`` of f."""
    d = values.ndim
    W = grid.unit_weights
    return _contract_axes(values, [W[None, :]] * d).reshape(())[()]
