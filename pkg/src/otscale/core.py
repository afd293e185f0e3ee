"""Domain types and dense primitives for entropic optimal transport.

The regularized problem

.. math::
    \\min_{T \\in U_{r,c}} \\langle T, C \\rangle - \\frac{1}{\\lambda} E(T)

is solved by diagonal scaling of the kernel :math:`A = e^{-\\lambda C}`: the
optimal plan is :math:`D(u) A D(v)` for positive scaling vectors ``u, v``.

Cost matrices and transport plans are plain 2-D float arrays; histograms,
kernels and scaling pairs carry invariants and get small wrapper types.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError, UnderflowError

#: Default zero-pixel replacement, relative to the total mass of a histogram.
DEFAULT_SMOOTHING = 1e-6


def _as_vector(x, name):
    arr = np.asarray(getattr(x, "weights", x), dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def _as_square(x, name):
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be a square matrix, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class Histogram:
    """Nonnegative weights on the probability simplex.

    The constructor validates; use :meth:`from_mass` to normalize raw
    masses (optionally smoothing zero entries first).
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise DimensionError("histogram weights must be a non-empty 1-D array")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise DomainError("histogram weights must be finite and nonnegative")
        total = float(np.sum(w))
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"histogram weights sum to {total!r}, expected 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_mass(cls, mass, smoothing=None):
        """Normalize nonnegative ``mass`` onto the simplex.

        Parameters
        ----------
        mass : array-like, shape (n,)
            Raw nonnegative masses (e.g. pixel intensities).
        smoothing : float or None
            If given, every zero entry is replaced by ``smoothing * mass.sum()``
            before normalizing. Keeps every marginal strictly positive.
        """
        m = np.array(getattr(mass, "weights", mass), dtype=np.float64).ravel()
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise DomainError("mass must be finite and nonnegative")
        total = float(np.sum(m))
        if total <= 0:
            raise DomainError("cannot normalize a histogram with zero total mass")
        if smoothing is not None:
            if smoothing <= 0:
                raise DomainError("smoothing must be positive")
            m = np.where(m == 0, smoothing * total, m)
        m = m / np.sum(m)
        # one more pass absorbs the rounding of the first division
        return cls(m / np.sum(m))

    @classmethod
    def uniform(cls, n):
        return cls(np.full(n, 1.0 / n))

    @property
    def n(self):
        return self.weights.size

    def __len__(self):
        return self.weights.size

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.weights
        return self.weights.astype(dtype)


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """Strictly positive square kernel with cached total mass and minimum.

    ``entries_t`` is a C-contiguous copy of the transpose so that reading a
    column costs the same as reading a row.
    """

    entries: np.ndarray
    lam: float | None = None
    total_mass: float = field(init=False)
    min_entry: float = field(init=False)
    entries_t: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        a = np.array(self.entries, dtype=np.float64, order="C")
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"kernel must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise DomainError("kernel entries must be finite")
        if np.any(a <= 0):
            raise UnderflowError(
                "kernel has nonpositive entries; lambda is too large for this cost scale"
            )
        a.setflags(write=False)
        at = np.ascontiguousarray(a.T)
        at.setflags(write=False)
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "entries_t", at)
        object.__setattr__(self, "total_mass", float(np.sum(a)))
        object.__setattr__(self, "min_entry", float(np.min(a)))

    @property
    def n(self):
        return self.entries.shape[0]

    @property
    def log_condition(self):
        """``log(s / l)``, the quantity that controls the iteration bound."""
        return float(np.log(self.total_mass / self.min_entry))

    def row(self, i):
        return self.entries[i]

    def col(self, j):
        return self.entries_t[j]

    def matvec(self, v):
        """``A @ v`` with pairwise summation along each row."""
        return np.sum(self.entries * v, axis=1)

    def rmatvec(self, u):
        """``A.T @ u`` with pairwise summation along each column."""
        return np.sum(self.entries_t * u, axis=1)

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)


@dataclass(eq=False)
class ScalingPair:
    """Positive scaling vectors ``(u, v)``; the iterate is ``D(u) A D(v)``.

    Mutable: coordinate updates overwrite single entries in place. The dual
    variables are ``x = log u`` and ``y = log v``.
    """

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.u = np.array(self.u, dtype=np.float64)
        self.v = np.array(self.v, dtype=np.float64)
        if self.u.ndim != 1 or self.u.shape != self.v.shape:
            raise DimensionError("u and v must be 1-D arrays of equal length")
        self.validate()

    @classmethod
    def ones(cls, n):
        return cls(np.ones(n), np.ones(n))

    def validate(self):
        for name, vec in (("u", self.u), ("v", self.v)):
            if not np.all(np.isfinite(vec)) or np.any(vec <= 0):
                raise DomainError(f"scaling vector {name} must be finite and strictly positive")

    def copy(self):
        return ScalingPair(self.u.copy(), self.v.copy())

    @property
    def n(self):
        return self.u.size

    def dual_variables(self):
        return np.log(self.u), np.log(self.v)


def grid_cost_matrix(side):
    """Manhattan distances between the pixels of a ``side x side`` grid.

    Pixels are indexed row-major from 0, so pixel ``p`` sits at
    ``(p // side, p % side)``.

    >>> grid_cost_matrix(2)
    array([[0., 1., 1., 2.],
           [1., 0., 2., 1.],
           [1., 2., 0., 1.],
           [2., 1., 1., 0.]])
    """
    side = int(side)
    if side < 1:
        raise ValueError("side must be a positive integer")
    idx = np.arange(side * side)
    rows, cols = idx // side, idx % side
    dist = np.abs(rows[:, None] - rows[None, :]) + np.abs(cols[:, None] - cols[None, :])
    return dist.astype(np.float64)


def make_kernel(cost, lam):
    """Element-wise Gibbs kernel ``exp(-lam * cost)``.

    Raises
    ------
    UnderflowError
        If any entry rounds to zero in double precision.
    """
    c = _as_square(cost, "cost")
    if not np.all(np.isfinite(c)) or np.any(c < 0):
        raise DomainError("cost entries must be finite and nonnegative")
    lam = float(lam)
    if not (lam > 0 and np.isfinite(lam)):
        raise DomainError("lambda must be a positive finite number")
    a = np.exp(-lam * c)
    if np.any(a == 0):
        raise UnderflowError(
            f"exp(-{lam:g} * {c.max():g}) underflows to zero; reduce lambda or rescale the cost"
        )
    return KernelMatrix(a, lam=lam)


def _gap(a, b):
    # q - 1 - log(q) for q = b / a, accurate across the whole range: log1p
    # near q = 1, log(q) when q is far from 1, a short series when the
    # difference itself cancels
    x = (b - a) / a
    ax = np.abs(x)
    near = ax < 0.5
    if near.all():
        lg = np.log1p(x)
    else:
        lg = np.log(b / a)
        lg[near] = np.log1p(x[near])
    out = x - lg
    small = ax < 1e-3
    if small.any():
        xs = x[small]
        out[small] = xs * xs * (0.5 - xs * (1 / 3 - xs * (0.25 - xs * (0.2 - xs / 6))))
    return out


def _rho(a, b):
    # unchecked vector kernel shared with the violation bookkeeping;
    # b - a + a log(a / b) rewritten as a * (q - 1 - log q), rho(0, b) = b
    if a.min() > 0:
        return a * _gap(a, b)
    out = np.array(b, dtype=np.float64, copy=True)
    pos = a > 0
    if pos.any():
        out[pos] = a[pos] * _gap(a[pos], b[pos])
    return out


def rho(a, b):
    """Scalar discrepancy ``b - a + a log(a / b)``, with ``rho(0, b) = b``.

    Works element-wise on arrays. The result is nonnegative and vanishes
    exactly when ``a == b``.
    """
    a_arr = np.asarray(a, dtype=np.float64)
    b_arr = np.asarray(b, dtype=np.float64)
    if np.any(b_arr <= 0) or np.any(np.isnan(b_arr)):
        raise DomainError("rho requires b > 0")
    if np.any(a_arr < 0) or np.any(np.isnan(a_arr)):
        raise DomainError("rho requires a >= 0")
    out = _rho(np.atleast_1d(a_arr), np.atleast_1d(b_arr))
    if a_arr.ndim == 0 and b_arr.ndim == 0:
        return float(out[0])
    return out.reshape(np.broadcast_shapes(a_arr.shape, b_arr.shape))


def d_rho(u, v):
    """Generalized Kullback-Leibler divergence ``sum_i rho(u_i, v_i)``."""
    u = _as_vector(u, "u")
    v = _as_vector(v, "v")
    if u.shape != v.shape:
        raise DomainError(f"length mismatch: {u.size} vs {v.size}")
    return float(np.sum(rho(u, v)))


def dist_l1(state, r, c):
    """``||r(A^k) - r||_1 + ||c(A^k) - c||_1`` from cached marginals."""
    r = getattr(r, "weights", r)
    c = getattr(c, "weights", c)
    return float(np.abs(state.row_sums - r).sum() + np.abs(state.col_sums - c).sum())


def dual_objective(kernel, scaling, r, c):
    """Dual value ``sum_ij A_ij u_i v_j - <r, log u> - <c, log v>``.

    Costs O(n^2); solvers use the O(n) cached form in
    :func:`otscale.violations.cached_dual` instead.
    """
    r = _as_vector(r, "r")
    c = _as_vector(c, "c")
    u, v = scaling.u, scaling.v
    mass = np.sum((u[:, None] * kernel.entries) * v[None, :])
    return float(mass - np.dot(r, np.log(u)) - np.dot(c, np.log(v)))


def plan_from_scaling(kernel, scaling):
    """Materialize ``D(u) A D(v)``. O(n^2) memory; for output and oracles."""
    return (scaling.u[:, None] * kernel.entries) * scaling.v[None, :]


def entropy(plan):
    """``-sum T_ij log T_ij`` with ``0 log 0 = 0``."""
    t = np.asarray(plan, dtype=np.float64)
    if np.any(t < 0):
        raise DomainError("plan entries must be nonnegative")
    lg = np.zeros_like(t)
    np.log(t, out=lg, where=t > 0)
    return float(-np.sum(t * lg))


def transport_cost(plan, cost):
    """Frobenius inner product ``<T, C>``."""
    t = np.asarray(plan, dtype=np.float64)
    c = np.asarray(cost, dtype=np.float64)
    if t.shape != c.shape:
        raise DimensionError(f"plan shape {t.shape} does not match cost shape {c.shape}")
    return float(np.sum(t * c))


def regularized_cost(plan, cost, lam):
    """``<T, C> - E(T) / lam``, the entropic objective being minimized."""
    return transport_cost(plan, cost) - entropy(plan) / float(lam)
