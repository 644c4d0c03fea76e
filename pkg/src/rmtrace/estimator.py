"""Inversion of Haar-averaged moments into estimates of ``p_n = Tr rho^n``.

Forward map (exact, finite ``N``)::

    P_1 = 1 / N
    P_2 = (1 + p2) / D_2
    P_3 = (1 + 3 p2 + 2 p3) / D_3
    P_4 = (1 + 3 p2^2 + 6 p2 + 8 p3 + 6 p4) / D_4

with ``D_n = N (N+1) ... (N+n-1) = N^n C_n``. The Gaussian approximation
replaces ``D_n`` by ``N^n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMomentError, InsufficientDataError, RMTraceError
from .moments import MomentTable

VARIANTS = ("bar-exact", "tilde-exact", "bar-gaussian", "tilde-gaussian")


@dataclass(frozen=True)
class CorrectionFactors:
    N: float
    C: tuple  # C[n-1] for n = 1..4
    D: tuple

    def c(self, n: int) -> float:
        return self.C[n - 1]

    def d(self, n: int) -> float:
        return self.D[n - 1]


def correction_factors(N: float, max_n: int = 4) -> CorrectionFactors:
    """``C_n = prod_{j<n} (1 + j/N)`` and ``D_n = prod_{j<n} (N + j)``.

    ``N`` may be real (the tilde estimator uses ``N = 1/P_1``).
    """
    if not N > 0:
        raise RMTraceError(f"N must be positive, got {N!r}")
    c, d = [1.0], [float(N)]
    for j in range(1, max_n):
        c.append(c[-1] * (1.0 + j / N))
        d.append(d[-1] * (N + j))
    return CorrectionFactors(N, tuple(c), tuple(d))


def _denominators(N, exact):
    if exact:
        return correction_factors(N).D
    return tuple(float(N) ** n for n in range(1, 5))


def forward_moments(p2: float, p3: float, p4: float, N: float, exact: bool = True) -> np.ndarray:
    """Haar-averaged moments ``(P_1, .., P_4)`` of a state with the given trace powers."""
    D = _denominators(N, exact)
    return np.array([
        1.0 / N,
        (1 + p2) / D[1],
        (1 + 3 * p2 + 2 * p3) / D[2],
        (1 + 3 * p2 ** 2 + 6 * p2 + 8 * p3 + 6 * p4) / D[3],
    ])


def _invert(P, N, exact):
    D = _denominators(N, exact)
    p2 = D[1] * P[1] - 1
    p3 = 0.5 * (D[2] * P[2] - 1 - 3 * p2)
    p4 = (D[3] * P[3] - 1 - 3 * p2 ** 2 - 6 * p2 - 8 * p3) / 6
    return np.array([p2, p3, p4])


def invert_moments(P, N: float | None = None, exact: bool = True) -> np.ndarray:
    """Point estimates ``(p2, p3, p4)`` from moments ``P = (P_1, .., P_4)``.

    ``N=None`` selects the tilde form, which uses ``N = 1/P_1``. Lower-order
    estimates are plugged into the higher-order formulas.
    """
    P = np.asarray(P, dtype=float)
    if P.shape[0] < 4:
        raise RMTraceError("need moments P_1..P_4")
    if N is None:
        if not P[0] > 0:
            raise DegenerateMomentError(f"P_1 must be positive, got {P[0]}")
        N = 1.0 / P[0]
    return _invert(P, N, exact)


def _jacobian(f, x, rel=1e-6):
    x = np.asarray(x, dtype=float)
    f0 = f(x)
    jac = np.zeros((f0.shape[0], x.shape[0]))
    for i in range(x.shape[0]):
        h = rel * max(abs(x[i]), 1e-300)
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        jac[:, i] = (f(xp) - f(xm)) / (2 * h)
    return jac


@dataclass
class EstimateReport:
    variant: str
    p_hat: np.ndarray  # (p2, p3, p4)
    empirical_err: np.ndarray
    predicted_err_p2: float
    N_used: float
    n_rand: int
    M: int | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def p2(self):
        return float(self.p_hat[0])

    @property
    def p3(self):
        return float(self.p_hat[1])

    @property
    def p4(self):
        return float(self.p_hat[2])

    @property
    def in_physical_range(self) -> tuple:
        """Per-estimate flag for ``M^(1-n) <= p_n <= 1`` (lower bound 0 if M unknown)."""
        out = []
        for i, n in enumerate((2, 3, 4)):
            lo = self.M ** (1 - n) if self.M else 0.0
            out.append(bool(lo <= self.p_hat[i] <= 1.0))
        return tuple(out)

    def to_dict(self) -> dict:
        return {"variant": self.variant, "p_hat": [float(x) for x in self.p_hat],
                "empirical_err": [float(x) for x in self.empirical_err],
                "predicted_err_p2": float(self.predicted_err_p2), "N_used": float(self.N_used),
                "n_rand": int(self.n_rand), "M": self.M,
                "in_physical_range": list(self.in_physical_range), "metadata": dict(self.metadata)}


def _parse_variant(variant):
    if variant not in VARIANTS:
        raise RMTraceError(f"unknown variant {variant!r}; choose from {VARIANTS}")
    tilde, kind = variant.split("-")
    return tilde == "tilde", kind == "exact"


def estimate(table: MomentTable | np.ndarray, variant: str = "tilde-exact", N: float | None = None,
             M: int | None = None, n_rand: int | None = None, cov=None,
             metadata: dict | None = None) -> EstimateReport:
    """Invert a moment table (or bare pooled moments) with one of the four variants.

    ``empirical_err`` propagates the covariance of the pooled moments through
    the inversion (delta method); it is NaN when no covariance is available.
    """
    tilde, exact = _parse_variant(variant)
    if isinstance(table, MomentTable):
        P = table.pooled
        cov = table.pooled_cov if cov is None else cov
        n_rand = table.count if n_rand is None else n_rand
        M = table.M if M is None else M
    else:
        P = np.asarray(table, dtype=float)
    if n_rand is not None and n_rand < 2:
        raise InsufficientDataError("need moments from at least 2 unitaries")
    if not tilde and N is None:
        raise RMTraceError(f"{variant} needs the dimension N")
    if tilde:
        if not P[0] > 0:
            raise DegenerateMomentError(f"P_1 must be positive, got {P[0]}")

        def f(x):
            return _invert(x, 1.0 / x[0], exact)
        n_used = 1.0 / P[0]
    else:
        def f(x):
            return _invert(x, N, exact)
        n_used = float(N)
    p_hat = f(P)
    if cov is not None:
        J = _jacobian(f, P[:4])
        var = np.einsum("ij,jk,ik->i", J, np.asarray(cov)[:4, :4], J)
        emp = np.sqrt(np.maximum(var, 0.0))
    else:
        emp = np.full(3, np.nan)
    if n_rand is not None and n_rand >= 2:
        q = np.clip(p_hat, 0.0, 1.0)
        pred = predicted_error_p2(q[0], q[1], q[2], n_rand, n_used if exact else None)
    else:
        pred = float("nan")
    return EstimateReport(variant, p_hat, emp, pred, n_used, int(n_rand or 0), M, dict(metadata or {}))


def invert_bar(P, N: float, **kw) -> EstimateReport:
    return estimate(P, "bar-exact", N=N, **kw)


def invert_tilde(P, **kw) -> EstimateReport:
    return estimate(P, "tilde-exact", **kw)


def invert_gaussian(P, N: float | None = None, **kw) -> EstimateReport:
    """Gaussian-approximation inversion; ``N=None`` gives the tilde form."""
    return estimate(P, "bar-gaussian" if N is not None else "tilde-gaussian", N=N, **kw)


def single_outcome_variance_p2(p2: float, p3: float, p4: float, N: float | None = None) -> float:
    """Variance of one unitary's contribution ``D_2 Prob(k)^2 - 1``.

    Uses ``Var = D_2^2 P_4 - (1 + p2)^2``. With ``N=None`` (Gaussian regime)
    this is ``4 p2 + 2 p2^2 + 8 p3 + 6 p4``; for a pure state at finite ``N``
    it is ``24 (1+1/N) / ((1+2/N)(1+3/N)) - 4``.
    """
    num4 = 1 + 3 * p2 ** 2 + 6 * p2 + 8 * p3 + 6 * p4
    if N is None:
        return 4 * p2 + 2 * p2 ** 2 + 8 * p3 + 6 * p4
    cf = correction_factors(N)
    return cf.c(2) ** 2 / cf.c(4) * num4 - (1 + p2) ** 2


def predicted_error_p2(p2: float, p3: float, p4: float, n_rand: int,
                       N: float | None = None) -> float:
    """Predicted statistical error of the known-``N`` purity estimate from one outcome.

    The single-unitary standard deviation is divided by ``sqrt(n_rand - 1)``.
    """
    if n_rand < 2:
        raise InsufficientDataError("n_rand must be at least 2")
    return math.sqrt(max(single_outcome_variance_p2(p2, p3, p4, N), 0.0) / (n_rand - 1))


def pure_state_error_bound(N: float | None = None) -> float:
    """``sqrt(n_rand - 1)`` times the purity error for a pure state.

    ``N=None`` gives the large-``N`` limit ``sqrt(20)``.
    """
    if N is None:
        return math.sqrt(20.0)
    return math.sqrt(24 * (1 + 1 / N) / ((1 + 2 / N) * (1 + 3 / N)) - 4)
