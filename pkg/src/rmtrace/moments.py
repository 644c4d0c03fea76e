"""Mergeable accumulation of the ensemble moments ``P_n(k) = <Prob(k)^n>``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InsufficientDataError, InsufficientShotsError


class _CompensatedSum:
    """Elementwise Neumaier summation of arrays of a fixed shape."""

    __slots__ = ("hi", "lo")

    def __init__(self, shape):
        self.hi = np.zeros(shape)
        self.lo = np.zeros(shape)

    def add(self, x):
        t = self.hi + x
        big = np.abs(self.hi) >= np.abs(x)
        self.lo += np.where(big, (self.hi - t) + x, (x - t) + self.hi)
        self.hi = t

    @property
    def value(self):
        return self.hi + self.lo

    def merged(self, other):
        out = _CompensatedSum(self.hi.shape)
        t = self.hi + other.hi
        big = np.abs(self.hi) >= np.abs(other.hi)
        err = np.where(big, (self.hi - t) + other.hi, (other.hi - t) + self.hi)
        out.hi = t
        out.lo = (self.lo + other.lo) + err
        return out

    def to_list(self):
        return [self.hi.tolist(), self.lo.tolist()]

    @classmethod
    def from_list(cls, data):
        hi = np.array(data[0], dtype=float)
        out = cls(hi.shape)
        out.hi = hi
        out.lo = np.array(data[1], dtype=float)
        return out


def factorial_moments(counts, shots: int, max_n: int) -> np.ndarray:
    """Unbiased estimates of ``Prob^n`` (n = 1..max_n) from multinomial counts.

    Row ``n-1`` holds ``c(c-1)...(c-n+1) / (S(S-1)...(S-n+1))``.
    """
    c = np.asarray(counts, dtype=float)
    out = np.empty((max_n,) + c.shape)
    num = np.ones_like(c)
    den = 1.0
    for j in range(max_n):
        num = num * (c - j)
        den *= shots - j
        out[j] = num / den
    return out


class MomentAccumulator:
    """Running sums of per-outcome moment contributions over random unitaries.

    Besides the per-outcome sums and sums of squares, the accumulator keeps
    the sums and cross-products of the outcome-averaged contribution vector
    ``y_n = mean_k x_n(k)``. Those give the covariance of the pooled moments
    that error propagation through the inversion formulas needs.

    All sums are taken about a reference shift (the first absorbed value), so
    a stream of identical contributions has exactly zero spread.
    """

    def __init__(self, M: int, max_n: int = 4):
        if M < 1:
            raise DimensionError("M must be at least 1")
        if not 1 <= max_n <= 8:
            raise ValueError("max_n must be in 1..8")
        self.M = M
        self.max_n = max_n
        self.count = 0
        self._shift = np.zeros((max_n, M))
        self._pshift = np.zeros(max_n)
        self._sums = _CompensatedSum((max_n, M))
        self._sumsq = _CompensatedSum((max_n, M))
        self._pooled = _CompensatedSum((max_n,))
        self._cross = _CompensatedSum((max_n, max_n))

    @property
    def sums(self) -> np.ndarray:
        """Raw sums of contributions, ``sum_u x_n(k)``."""
        return self._sums.value + self.count * self._shift

    @property
    def sumsq(self) -> np.ndarray:
        s = self._sums.value
        return self._sumsq.value + 2 * self._shift * s + self.count * self._shift ** 2

    def _absorb(self, x):
        # x: (batch, max_n, M) contributions
        if x.shape[-1] != self.M:
            raise DimensionError(f"expected {self.M} outcomes, got {x.shape[-1]}")
        if x.shape[0] == 0:
            return self
        y = x.mean(axis=2)
        if self.count == 0:
            self._shift = x[0].copy()
            self._pshift = y[0].copy()
        dx = x - self._shift
        dy = y - self._pshift
        self._sums.add(dx.sum(axis=0))
        self._sumsq.add((dx * dx).sum(axis=0))
        self._pooled.add(dy.sum(axis=0))
        self._cross.add(dy.T @ dy)
        self.count += x.shape[0]
        return self

    def absorb_exact(self, probs) -> "MomentAccumulator":
        """Add exact outcome probabilities from one unitary, or a ``(count, M)`` stack."""
        v = getattr(probs, "values", probs)
        v = np.asarray(v, dtype=float)
        if v.ndim == 1:
            v = v[None]
        powers = v[:, None, :] ** np.arange(1, self.max_n + 1)[None, :, None]
        return self._absorb(powers)

    def absorb_counts(self, counts, shots: int) -> "MomentAccumulator":
        """Add finite-shot counts (length ``M`` or ``M + 1`` with residual bucket).

        Each contribution is the factorial-moment estimator, which is unbiased
        for ``Prob(k)^n`` under multinomial sampling.
        """
        if shots < self.max_n:
            raise InsufficientShotsError(f"need at least {self.max_n} shots, got {shots}")
        c = np.asarray(counts, dtype=float)
        if c.ndim == 1:
            c = c[None]
        c = c[:, : self.M]
        f = factorial_moments(c, shots, self.max_n)  # (max_n, batch, M)
        return self._absorb(np.transpose(f, (1, 0, 2)))

    def copy(self) -> "MomentAccumulator":
        return MomentAccumulator.from_dict(self.to_dict())

    def _reshifted(self, shift, pshift):
        """Copy of self with sums re-expressed about new reference shifts."""
        out = self.copy()
        n = self.count
        d = self._shift - shift
        if np.any(d != 0):
            s = self._sums.value
            out._sumsq.add(2 * d * s + n * d * d)
            out._sums.add(n * d)
            out._shift = shift.copy()
        dp = self._pshift - pshift
        if np.any(dp != 0):
            s = self._pooled.value
            out._cross.add(np.outer(s, dp) + np.outer(dp, s) + n * np.outer(dp, dp))
            out._pooled.add(n * dp)
            out._pshift = pshift.copy()
        return out

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        if (self.M, self.max_n) != (other.M, other.max_n):
            raise DimensionError("cannot merge accumulators of different shape")
        if other.count == 0:
            return self.copy()
        if self.count == 0:
            return other.copy()
        # elementwise min keeps the result independent of argument order
        shift = np.minimum(self._shift, other._shift)
        pshift = np.minimum(self._pshift, other._pshift)
        a = self._reshifted(shift, pshift)
        b = other._reshifted(shift, pshift)
        out = MomentAccumulator(self.M, self.max_n)
        out.count = a.count + b.count
        out._shift, out._pshift = shift, pshift
        out._sums = a._sums.merged(b._sums)
        out._sumsq = a._sumsq.merged(b._sumsq)
        out._pooled = a._pooled.merged(b._pooled)
        out._cross = a._cross.merged(b._cross)
        return out

    __add__ = merge

    def to_dict(self) -> dict:
        return {"M": self.M, "max_n": self.max_n, "count": self.count,
                "shift": self._shift.tolist(), "pooled_shift": self._pshift.tolist(),
                "sums": self._sums.to_list(), "sumsq": self._sumsq.to_list(),
                "pooled": self._pooled.to_list(), "cross": self._cross.to_list()}

    @classmethod
    def from_dict(cls, d: dict) -> "MomentAccumulator":
        acc = cls(int(d["M"]), int(d["max_n"]))
        acc.count = int(d["count"])
        acc._shift = np.array(d["shift"], dtype=float)
        acc._pshift = np.array(d["pooled_shift"], dtype=float)
        acc._sums = _CompensatedSum.from_list(d["sums"])
        acc._sumsq = _CompensatedSum.from_list(d["sumsq"])
        acc._pooled = _CompensatedSum.from_list(d["pooled"])
        acc._cross = _CompensatedSum.from_list(d["cross"])
        return acc

    def table(self) -> "MomentTable":
        return moment_table(self)


def merge(a: MomentAccumulator, b: MomentAccumulator) -> MomentAccumulator:
    return a.merge(b)


@dataclass(frozen=True)
class MomentTable:
    count: int
    per_k: np.ndarray  # (max_n, M)
    per_k_se: np.ndarray
    pooled: np.ndarray  # (max_n,)
    pooled_se: np.ndarray
    pooled_cov: np.ndarray  # covariance of the pooled means, (max_n, max_n)

    @property
    def M(self) -> int:
        return self.per_k.shape[1]

    def column(self, k: int) -> np.ndarray:
        return self.per_k[:, k]


def moment_table(acc: MomentAccumulator) -> MomentTable:
    n = acc.count
    if n < 2:
        raise InsufficientDataError(f"need at least 2 unitaries, have {n}")
    ds = acc._sums.value / n
    per_k = acc._shift + ds
    var_k = np.maximum(acc._sumsq.value - n * ds * ds, 0.0) / (n - 1)
    dp = acc._pooled.value / n
    pooled = acc._pshift + dp
    cov = (acc._cross.value - n * np.outer(dp, dp)) / (n - 1)
    cov = 0.5 * (cov + cov.T)
    d = np.diag(cov).copy()
    d[d < 0] = 0.0
    np.fill_diagonal(cov, d)
    return MomentTable(count=n, per_k=per_k, per_k_se=np.sqrt(var_k / n),
                       pooled=pooled, pooled_se=np.sqrt(d / n), pooled_cov=cov / n)
