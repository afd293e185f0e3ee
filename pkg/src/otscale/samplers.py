"""Increasing probability functions over the violation vector, and seeded sampling.

Random numbers come from numpy's ``PCG64`` bit generator wrapped in
:class:`numpy.random.Generator`. Sub-streams for parallel runs are derived
with :class:`numpy.random.SeedSequence`, never by sharing a generator.
"""

import zlib
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, NumericalError

KINDS = ("uniform", "polynomial", "softmax", "greedy")

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ProbabilityFunction:
    """Map a nonnegative violation vector to a selection distribution.

    ``param`` is the exponent for ``polynomial`` and the temperature for
    ``softmax``; it is unused for ``uniform`` and ``greedy``.
    """

    kind: str
    param: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown probability function kind {self.kind!r}")
        if self.kind in ("polynomial", "softmax"):
            if self.param is None or not (float(self.param) > 0 and np.isfinite(self.param)):
                raise ValueError(f"{self.kind} requires a positive finite parameter")
            object.__setattr__(self, "param", float(self.param))
        elif self.param is not None:
            raise ValueError(f"{self.kind} takes no parameter")

    @classmethod
    def uniform(cls):
        return cls("uniform")

    @classmethod
    def polynomial(cls, alpha):
        return cls("polynomial", alpha)

    @classmethod
    def softmax(cls, temperature):
        return cls("softmax", temperature)

    @classmethod
    def greedy(cls):
        return cls("greedy")

    @classmethod
    def parse(cls, text):
        """Parse ``uniform``, ``poly:ALPHA``, ``softmax:TEMP`` or ``greedy``."""
        if isinstance(text, cls):
            return text
        name, _, arg = str(text).strip().partition(":")
        name = name.lower()
        try:
            if name == "uniform" and not arg:
                return cls.uniform()
            if name == "greedy" and not arg:
                return cls.greedy()
            if name in ("poly", "polynomial") and arg:
                return cls.polynomial(float(arg))
            if name == "softmax" and arg:
                return cls.softmax(float(arg))
        except ValueError as exc:
            raise ValueError(f"invalid probability function {text!r}: {exc}") from None
        raise ValueError(
            f"invalid probability function {text!r}; expected uniform, poly:A, softmax:T or greedy"
        )

    def __str__(self):
        if self.kind == "polynomial":
            return f"poly:{self.param:g}"
        if self.kind == "softmax":
            return f"softmax:{self.param:g}"
        return self.kind


def evaluate_psi(fn, violations):
    """Selection probabilities for each of the ``2n`` coordinates.

    Polynomial weights are computed as ``(h / max h) ** alpha`` and softmax
    weights with the maximum subtracted, which leaves the distribution
    unchanged but avoids overflow and underflow.

    Raises
    ------
    DegenerateError
        If every violation is zero (the iterate has converged). The uniform
        kind is exempt.
    NumericalError
        If ``violations`` contains non-finite entries.
    """
    h = np.asarray(violations, dtype=np.float64)
    if not np.isfinite(h.sum()):
        raise NumericalError("violation vector contains non-finite entries")
    m = h.size
    if fn.kind == "uniform":
        return np.full(m, 1.0 / m)
    h = np.maximum(h, 0.0)
    top = int(np.argmax(h))
    hmax = h[top]
    if hmax <= 0:
        raise DegenerateError("all violations are zero; nothing to sample")
    if fn.kind == "greedy":
        p = np.zeros(m)
        p[top] = 1.0
        return p
    if fn.kind == "polynomial":
        w = h / hmax
        if fn.param != 1.0:
            w = np.power(w, fn.param, out=w)
    else:
        w = np.exp((h - hmax) / fn.param)
    return w / w.sum()


def sample_index(p, rng):
    """Inverse-CDF draw of one index from ``p`` using a single uniform.

    The cumulative scan is linear in ``len(p)``. Zero-mass entries are never
    returned.
    """
    cdf = np.cumsum(p)
    x = rng.random() * cdf[-1]
    i = int(np.searchsorted(cdf, x, side="right"))
    if i >= cdf.size:
        i = int(np.flatnonzero(np.asarray(p) > 0)[-1])
    return i


def sample_block(p, d, rng):
    """Draw ``min(d, support)`` distinct indices sequentially without replacement.

    After each draw the chosen index loses its mass and the remainder is
    renormalized, so ``d == 1`` consumes the generator exactly like
    :func:`sample_index`. Indices are returned in draw order.
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    q = np.array(p, dtype=np.float64)
    k = min(int(d), int(np.count_nonzero(q > 0)))
    chosen = np.empty(k, dtype=np.int64)
    for t in range(k):
        i = sample_index(q, rng)
        chosen[t] = i
        q[i] = 0.0
    return chosen


def top_d_indices(violations, d):
    """Indices of the ``d`` largest violations, ties to the lowest index."""
    h = np.asarray(violations)
    if not 1 <= d <= h.size:
        raise ValueError(f"d must lie in [1, {h.size}]")
    return np.argsort(-h, kind="stable")[:d]


def make_rng(seed):
    """PCG64 generator seeded from a 64-bit integer."""
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK64))


def derive_seed(master_seed, *keys):
    """Deterministic 64-bit seed from a master seed and integer/string keys.

    Strings are folded in through CRC-32, so the result does not depend on
    Python's per-process hash randomization.
    """
    entropy = [int(master_seed) & _MASK64]
    for key in keys:
        if isinstance(key, str):
            entropy.append(zlib.crc32(key.encode("utf-8")))
        else:
            entropy.append(int(key) & _MASK64)
    words = np.random.SeedSequence(entropy).generate_state(2, np.uint64)
    return int(words[0])
