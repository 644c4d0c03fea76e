"""Independent brute-force checks for the moment formulas.

Nothing here imports the estimator: these are the reference paths the
closed-form moments are tested against.
"""
from __future__ import annotations

import itertools
import math
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import DimensionError, UnsupportedOrderError
from .haar import sample_ginibre, sample_haar_batch
from .measurement import probabilities_batch
from .states import DensityMatrix


def isserlis_average(k: Sequence[int], l: Sequence[int], m: Sequence[int], n: Sequence[int],
                     N: int) -> float:
    """``<V_{k1 l1}..V_{kK lK} V*_{m1 n1}..V*_{mK nK}>`` for Gaussian ``V`` with variance ``1/N``.

    Enumerates all ``K!`` pairings of ``V`` factors with ``V*`` factors.
    """
    K = len(k)
    if not (len(l) == len(m) == len(n) == K):
        raise ValueError("index lists must have equal length")
    if K > 4:
        raise UnsupportedOrderError(f"order K={K} not supported (max 4)")
    total = 0
    for perm in itertools.permutations(range(K)):
        if all(k[i] == m[perm[i]] and l[i] == n[perm[i]] for i in range(K)):
            total += 1
    return total / N ** K


def gaussian_moment_mc(k, l, m, n, N: int, n_samples: int, rng: np.random.Generator,
                       batch: int = 50000):
    """Monte Carlo of the same product over Ginibre matrices scaled to ``<|V|^2> = 1/N``.

    Returns ``(mean, stderr)``; the product is complex, only the real part is kept.
    """
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    dim = max(max(k), max(l), max(m), max(n)) + 1
    scale = 1.0 / math.sqrt(2 * N)
    s = ss = 0.0
    done = 0
    while done < n_samples:
        b = min(batch, n_samples - done)
        v = sample_ginibre(dim, rng, size=b) * scale
        prod = np.ones(b, dtype=complex)
        for a, c in zip(k, l):
            prod = prod * v[:, a, c]
        for a, c in zip(m, n):
            prod = prod * v[:, a, c].conj()
        x = prod.real
        s += x.sum()
        ss += (x * x).sum()
        done += b
    mean = s / n_samples
    var = max(ss / n_samples - mean * mean, 0.0) * n_samples / (n_samples - 1)
    return mean, math.sqrt(var / n_samples)


def pairing_moment_numerator(rho, order: int, N: int = 1) -> float:
    """``N^K <Prob(k)^K>`` under the Gaussian approximation, by brute-force index sums.

    Expands ``Prob(k)^K = sum rho_{m1 n1}..rho_{mK nK} V_{m1 k}..V*_{nK k}`` and
    evaluates each average with :func:`isserlis_average`. Cost is ``M^(2K) K!``;
    keep ``M <= 3``.
    """
    rho = np.asarray(rho)
    M = rho.shape[0]
    kk = [0] * order
    total = 0.0 + 0.0j
    for ms in itertools.product(range(M), repeat=order):
        for ns in itertools.product(range(M), repeat=order):
            w = isserlis_average(ms, kk, ns, kk, N)
            if w:
                total += w * reduce(lambda a, b: a * b, (rho[a, b] for a, b in zip(ms, ns)))
    return float(total.real) * N ** order


def haar_moment_mc(rho: DensityMatrix, n: int, N: int, n_samples: int, rng: np.random.Generator,
                   outcome: int = 0, batch: int = 20000):
    """Monte Carlo ``<Prob(k)^n>`` over Haar unitaries of size ``N``. Returns ``(mean, stderr)``."""
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    if not 1 <= n <= 4:
        raise UnsupportedOrderError("n must be in 1..4")
    res = haar_moments_mc(rho, N, n_samples, rng, outcome=outcome, batch=batch)
    return res[0][n - 1], res[1][n - 1]


def haar_moments_mc(rho: DensityMatrix, N: int, n_samples: int, rng: np.random.Generator,
                    outcome: int = 0, batch: int = 20000):
    """All four moments ``<Prob(k)^n>``, n = 1..4, from one set of unitaries."""
    if rho.dim > N:
        raise DimensionError(f"state of dim {rho.dim} does not fit in N={N}")
    s = np.zeros(4)
    ss = np.zeros(4)
    done = 0
    powers = np.arange(1, 5)
    while done < n_samples:
        b = min(batch, n_samples - done)
        u = sample_haar_batch(N, b, rng)
        p = probabilities_batch(rho.data, u)[:, outcome]
        x = p[:, None] ** powers
        s += x.sum(axis=0)
        ss += (x * x).sum(axis=0)
        done += b
    mean = s / n_samples
    var = np.maximum(ss / n_samples - mean * mean, 0.0) * n_samples / (n_samples - 1)
    return mean, np.sqrt(var / n_samples)


def cyclic_shift_matrix(dim: int, n: int) -> np.ndarray:
    """Permutation matrix with ``S|a1 a2 .. an> = |a2 .. an a1>``."""
    size = dim ** n
    S = np.zeros((size, size))
    for idx in range(size):
        digits = np.unravel_index(idx, (dim,) * n)
        shifted = digits[1:] + digits[:1]
        S[np.ravel_multi_index(shifted, (dim,) * n), idx] = 1.0
    return S


def shift_operator_value(states: Sequence[DensityMatrix]) -> float:
    """``Tr(S rho_1 x .. x rho_n) = Tr(rho_1 rho_2 .. rho_n)``: what a joint
    cyclic-shift measurement on a product of the listed copies returns."""
    if not 2 <= len(states) <= 4:
        raise ValueError("need between 2 and 4 states")
    if len({s.dim for s in states}) != 1:
        raise DimensionError("states must share a dimension")
    prod = reduce(np.matmul, (s.data for s in states))
    return float(np.trace(prod).real)
