"""Haar-random unitaries and the statistical checks that certify them."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy import stats

from .errors import DimensionError

UNITARITY_TOL = 1e-10


def seeded_rng(seed: int, *stream: int) -> np.random.Generator:
    """Return a PCG64 generator for ``(seed, stream...)``.

    Distinct stream keys give statistically independent generators, so
    workers can be keyed by trial index instead of by execution order.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(ss))


def _check_dim(dim):
    if int(dim) != dim or dim < 1:
        raise DimensionError(f"dimension must be a positive integer, got {dim!r}")


def sample_ginibre(dim: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Complex matrix with independent standard-normal real and imaginary parts.

    With ``size`` given, returns a stack of shape ``(size, dim, dim)``.
    """
    _check_dim(dim)
    shape = (dim, dim) if size is None else (size, dim, dim)
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _orthogonalize(z: np.ndarray, phase_fix: bool) -> np.ndarray:
    q, r = np.linalg.qr(z)
    if phase_fix:
        # QR leaves each column with an input-dependent phase; dividing out
        # the phase of diag(R) makes the result Haar distributed.
        d = np.diagonal(r, axis1=-2, axis2=-1)
        q = q * (d / np.abs(d))[..., None, :]
    return q


def sample_haar_unitary(dim: int, rng: np.random.Generator, phase_fix: bool = True) -> np.ndarray:
    """Draw one ``dim x dim`` Haar unitary.

    ``phase_fix=False`` skips the column phase correction and is only meant
    for demonstrating the resulting bias.
    """
    _check_dim(dim)
    return _orthogonalize(sample_ginibre(dim, rng), phase_fix)


def sample_haar_batch(dim: int, count: int, rng: np.random.Generator, phase_fix: bool = True) -> np.ndarray:
    """Draw ``count`` independent Haar unitaries as an array ``(count, dim, dim)``."""
    _check_dim(dim)
    if count < 0:
        raise ValueError("count must be non-negative")
    if count == 0:
        return np.empty((0, dim, dim), dtype=complex)
    return _orthogonalize(sample_ginibre(dim, rng, size=count), phase_fix)


def unitarity_error(u: np.ndarray) -> float:
    """Max-abs entry of ``U^dagger U - I`` (over a stack if given one)."""
    u = np.asarray(u)
    eye = np.eye(u.shape[-1])
    return float(np.max(np.abs(np.conj(np.swapaxes(u, -1, -2)) @ u - eye)))


@dataclass
class InvarianceReport:
    dim: int
    n_samples: int
    threshold: float
    moments: np.ndarray  # (4, dim): mean |U_{0k}|^{2n}, n = 1..4
    stderr: np.ndarray
    pairwise_z: np.ndarray  # (4,): max over column pairs, per moment order
    phase_z: np.ndarray  # (dim,): |<U_{0k}>| / stderr, Haar mean is 0
    failures: list = field(default_factory=list)

    @property
    def max_z(self) -> float:
        vals = [self.pairwise_z.max(initial=0.0), self.phase_z.max(initial=0.0)]
        return float(max(vals))

    @property
    def passed(self) -> bool:
        return not self.failures

    def lines(self):
        yield f"haar invariance test: dim={self.dim} samples={self.n_samples} threshold={self.threshold}"
        for n in range(4):
            row = " ".join(f"{m:.6f}" for m in self.moments[n])
            yield f"  <|U_0k|^{2 * (n + 1)}>: {row}  max pairwise z={self.pairwise_z[n]:.2f}"
        yield "  phase z (mean of U_0k vs 0): " + " ".join(f"{z:.2f}" for z in self.phase_z)
        yield "  result: " + ("PASS" if self.passed else "FAIL: " + "; ".join(self.failures))


def haar_invariance_test(dim: int, n_samples: int, rng: np.random.Generator,
                         threshold: float = 4.0, phase_fix: bool = True,
                         batch: int = 20000) -> InvarianceReport:
    """Check that first-row statistics of sampled unitaries do not depend on the column.

    Two families of statistics are compared:

    * moments ``<|U_{0k}|^{2n}>`` for n = 1..4 (these are the outcome-probability
      moments of a pure input state); every pair of columns must agree;
    * the complex mean ``<U_{0k}>``, which must vanish under invariance by
      diagonal phase unitaries. Modulus moments are blind to column phases, so
      this is the statistic that exposes a missing phase correction.
    """
    _check_dim(dim)
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    s = np.zeros((4, dim))
    ss = np.zeros((4, dim))
    z1 = np.zeros(dim, dtype=complex)
    z2 = np.zeros(dim)
    zr2 = np.zeros(dim)
    zi2 = np.zeros(dim)
    done = 0
    while done < n_samples:
        b = min(batch, n_samples - done)
        u = sample_haar_batch(dim, b, rng, phase_fix=phase_fix)
        row = u[:, 0, :]
        p = np.abs(row) ** 2
        for n in range(4):
            x = p ** (n + 1)
            s[n] += x.sum(axis=0)
            ss[n] += (x * x).sum(axis=0)
        z1 += row.sum(axis=0)
        zr2 += (row.real ** 2).sum(axis=0)
        zi2 += (row.imag ** 2).sum(axis=0)
        done += b
    m = s / n_samples
    var = np.maximum(ss / n_samples - m * m, 0.0) * n_samples / (n_samples - 1)
    se = np.sqrt(var / n_samples)

    pairwise = np.zeros(4)
    for n in range(4):
        for a, b in combinations(range(dim), 2):
            den = np.hypot(se[n, a], se[n, b])
            z = 0.0 if den == 0 else abs(m[n, a] - m[n, b]) / den
            pairwise[n] = max(pairwise[n], z)

    mean = z1 / n_samples
    se_re = np.sqrt(np.maximum(zr2 / n_samples - mean.real ** 2, 0.0) / (n_samples - 1))
    se_im = np.sqrt(np.maximum(zi2 / n_samples - mean.imag ** 2, 0.0) / (n_samples - 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        phase_z = np.maximum(np.nan_to_num(np.abs(mean.real) / se_re),
                             np.nan_to_num(np.abs(mean.imag) / se_im))

    failures = []
    for n in range(4):
        if pairwise[n] > threshold:
            failures.append(f"moment order {n + 1} differs across columns (z={pairwise[n]:.1f})")
    bad = np.flatnonzero(phase_z > threshold)
    if bad.size:
        failures.append(f"nonzero mean entry in columns {bad.tolist()} (z={phase_z.max():.1f})")
    return InvarianceReport(dim, n_samples, threshold, m, se, pairwise, phase_z, failures)


def first_row_ks_test(dim: int, n_samples: int, rng: np.random.Generator, phase_fix: bool = True):
    """KS test of ``|U_{00}|^2`` against the density ``(N-1)(1-p)^(N-2)``.

    Returns the ``scipy.stats`` result; for ``dim == 1`` the value is
    identically 1 and the test is skipped (returns ``None``).
    """
    _check_dim(dim)
    if dim == 1:
        return None
    u = sample_haar_batch(dim, n_samples, rng, phase_fix=phase_fix)
    p = np.abs(u[:, 0, 0]) ** 2
    return stats.kstest(p, lambda x: 1.0 - (1.0 - np.clip(x, 0.0, 1.0)) ** (dim - 1))
