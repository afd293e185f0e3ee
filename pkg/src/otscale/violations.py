"""Incremental maintenance of marginals and marginal violations.

A :class:`ViolationState` caches the row sums ``r(A^k)``, the column sums
``c(A^k)`` and the ``2n`` violation vector (rows first, then columns) of the
implicit iterate ``A^k = D(u) A D(v)``. Updating one scaling coordinate
touches exactly one kernel row or column, so each update is Theta(n).

All ``apply_*`` functions mutate ``state`` and ``scaling`` in place and
return them for convenience.
"""

from dataclasses import dataclass

import numpy as np

from .core import _rho
from .errors import DimensionError, NumericalError


@dataclass(eq=False)
class ViolationState:
    row_sums: np.ndarray
    col_sums: np.ndarray
    violations: np.ndarray
    epoch: int = 0
    synced_at: int = 0

    @property
    def n(self):
        return self.row_sums.size

    @property
    def row_violations(self):
        return self.violations[: self.n]

    @property
    def col_violations(self):
        return self.violations[self.n :]

    def copy(self):
        return ViolationState(
            self.row_sums.copy(),
            self.col_sums.copy(),
            self.violations.copy(),
            self.epoch,
            self.synced_at,
        )


def _w(h):
    return getattr(h, "weights", h)


def init_state(kernel, scaling, r, c, epoch=0):
    """Full O(n^2) computation of the marginals and violations."""
    r, c = _w(r), _w(c)
    n = kernel.n
    if scaling.n != n or len(r) != n or len(c) != n:
        raise DimensionError("kernel, scaling and histograms must share dimension n")
    row_sums = scaling.u * kernel.matvec(scaling.v)
    col_sums = scaling.v * kernel.rmatvec(scaling.u)
    violations = np.concatenate([_rho(r, row_sums), _rho(c, col_sums)])
    return ViolationState(row_sums, col_sums, violations, epoch, epoch)


def resync(state, kernel, scaling, r, c):
    """Recompute ``state`` from scratch in place, keeping its epoch."""
    fresh = init_state(kernel, scaling, r, c, epoch=state.epoch)
    state.row_sums[:] = fresh.row_sums
    state.col_sums[:] = fresh.col_sums
    state.violations[:] = fresh.violations
    state.synced_at = state.epoch
    return state


def maybe_resync(state, kernel, scaling, r, c, every):
    """Resync when ``every`` updates have passed since the last full recompute.

    ``every`` of ``None`` or ``0`` disables periodic resynchronization.
    Returns True if a resync happened.
    """
    if every and state.epoch - state.synced_at >= every:
        resync(state, kernel, scaling, r, c)
        return True
    return False


def cached_dual(state, scaling, r, c):
    """O(n) dual value; ``sum_ij u_i A_ij v_j`` equals the sum of cached row sums."""
    r, c = _w(r), _w(c)
    return float(
        np.sum(state.row_sums) - np.dot(r, np.log(scaling.u)) - np.dot(c, np.log(scaling.v))
    )


def _check_scalar(value, what, index):
    if not 0.0 < value < np.inf:
        raise NumericalError(f"{what} is nonpositive or not finite", index=int(index), value=float(value))


def _check_positive(values, what, offset, index):
    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        bad = np.flatnonzero(~(np.isfinite(values) & (values > 0)))[0]
        raise NumericalError(
            f"{what} is nonpositive or not finite",
            index=int(offset + np.atleast_1d(index)[bad]),
            value=float(np.atleast_1d(values)[bad]),
        )


def _fix_drift(sums, recompute):
    # cancellation can drive a cached sum to <= 0; fall back to a full recompute
    if sums.min() <= 0:
        sums[:] = recompute()


def apply_row_update(state, kernel, scaling, i, r, c):
    """Rescale row ``i`` so that its sum matches ``r[i]``.

    ``(A v)_i`` is recovered as ``row_sums[i] / u_i`` instead of a fresh dot
    product; the column sums absorb ``(u_i' - u_i) * A[i, :] * v``.
    """
    r, c = _w(r), _w(c)
    u, v = scaling.u, scaling.v
    old = u[i]
    av = state.row_sums[i] / old
    _check_scalar(av, "(A v)_I", i)
    new = r[i] / av
    _check_scalar(new, "updated u_I (zero target marginal?)", i)
    delta = new - old
    u[i] = new
    state.row_sums[i] = r[i]
    state.col_sums += (delta * kernel.row(i)) * v
    _fix_drift(state.col_sums, lambda: v * kernel.rmatvec(u))
    n = state.n
    state.violations[i] = 0.0
    state.violations[n:] = _rho(c, state.col_sums)
    state.epoch += 1
    return state, scaling


def apply_col_update(state, kernel, scaling, j, r, c):
    """Mirror of :func:`apply_row_update` for column ``j`` (``v_j = c_j / (A^T u)_j``)."""
    r, c = _w(r), _w(c)
    u, v = scaling.u, scaling.v
    n = state.n
    old = v[j]
    atu = state.col_sums[j] / old
    _check_scalar(atu, "(A^T u)_J", n + j)
    new = c[j] / atu
    _check_scalar(new, "updated v_J (zero target marginal?)", n + j)
    delta = new - old
    v[j] = new
    state.col_sums[j] = c[j]
    state.row_sums += (delta * kernel.col(j)) * u
    _fix_drift(state.row_sums, lambda: u * kernel.matvec(v))
    state.violations[n + j] = 0.0
    state.violations[:n] = _rho(r, state.row_sums)
    state.epoch += 1
    return state, scaling


def apply_index_update(state, kernel, scaling, index, r, c):
    """Dispatch a combined index in ``[0, 2n)`` to a row or column update."""
    n = state.n
    if index < n:
        return apply_row_update(state, kernel, scaling, index, r, c)
    return apply_col_update(state, kernel, scaling, index - n, r, c)


def apply_block_update(state, kernel, scaling, indices, r, c):
    """Update a block of distinct combined indices in O(d n).

    Selected rows are rescaled simultaneously against the current ``v``,
    then selected columns against the freshly updated ``u``. Column-sum
    (row-sum) deltas are accumulated per selected row (column) in ascending
    index order, so the result does not depend on how ``indices`` was
    ordered. A singleton block reproduces :func:`apply_row_update` /
    :func:`apply_col_update` bit for bit.
    """
    r, c = _w(r), _w(c)
    n = state.n
    idx = np.asarray(indices, dtype=np.int64).ravel()
    if idx.size == 0:
        raise ValueError("block must contain at least one index")
    uniq = np.unique(idx)
    if uniq.size != idx.size:
        raise ValueError("block indices must be distinct")
    if uniq[0] < 0 or uniq[-1] >= 2 * n:
        raise IndexError(f"block indices must lie in [0, {2 * n})")
    rows = uniq[uniq < n]
    cols = uniq[uniq >= n] - n
    u, v = scaling.u, scaling.v

    if rows.size:
        av = state.row_sums[rows] / u[rows]
        _check_positive(av, "(A v)_I", 0, rows)
        new = r[rows] / av
        _check_positive(new, "updated u_I (zero target marginal?)", 0, rows)
        delta = new - u[rows]
        u[rows] = new
        state.row_sums[rows] = r[rows]
        acc = np.zeros(n)
        for k, i in enumerate(rows):
            acc += delta[k] * kernel.row(i)
        state.col_sums += acc * v
        _fix_drift(state.col_sums, lambda: v * kernel.rmatvec(u))

    if cols.size:
        atu = state.col_sums[cols] / v[cols]
        _check_positive(atu, "(A^T u)_J", n, cols)
        new = c[cols] / atu
        _check_positive(new, "updated v_J (zero target marginal?)", n, cols)
        delta = new - v[cols]
        v[cols] = new
        state.col_sums[cols] = c[cols]
        acc = np.zeros(n)
        for k, j in enumerate(cols):
            acc += delta[k] * kernel.col(j)
        state.row_sums += acc * u
        _fix_drift(state.row_sums, lambda: u * kernel.matvec(v))

    if rows.size and not cols.size:
        state.violations[rows] = 0.0
        state.violations[n:] = _rho(c, state.col_sums)
    elif cols.size and not rows.size:
        state.violations[n + cols] = 0.0
        state.violations[:n] = _rho(r, state.row_sums)
    else:
        state.violations[:n] = _rho(r, state.row_sums)
        state.violations[n:] = _rho(c, state.col_sums)
    state.epoch += int(uniq.size)
    return state, scaling
