"""Random measurements: rotate the embedded state and read out a fixed outcome subset."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, RMTraceError
from .states import DensityMatrix

SCENARIO_KINDS = ("photon-modes", "qubits-with-ancilla", "bare-qubits")
_ALIASES = {"i": "photon-modes", "ii": "qubits-with-ancilla", "ii'": "bare-qubits",
            "photon": "photon-modes", "ancilla": "qubits-with-ancilla", "qubits": "bare-qubits"}


def _log2_int(x):
    q = int(x).bit_length() - 1
    return q if x >= 1 and 1 << q == x else None


@dataclass(frozen=True)
class MeasurementScenario:
    """Outcome subset size ``M``, rotated dimension ``N`` and shot count (0 = exact).

    For ``qubits-with-ancilla`` the ancilla qubits are taken as the most
    significant ones, so "ancilla in |0>" is exactly the first ``M`` basis
    states of the ``N``-dimensional space.
    """

    kind: str
    M: int
    N: int
    shots: int = 0

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ConfigError(f"unknown scenario {self.kind!r}")
        if not (self.N >= self.M >= 1):
            raise ConfigError(f"need N >= M >= 1, got M={self.M}, N={self.N}")
        if self.shots < 0:
            raise ConfigError("shots must be non-negative")
        qm, qn = _log2_int(self.M), _log2_int(self.N)
        if self.kind == "bare-qubits" and not (self.M == self.N and qm is not None and qm >= 1):
            raise ConfigError(f"bare-qubits needs N = M = 2^Q with Q >= 1, got M={self.M}, N={self.N}")
        if self.kind == "qubits-with-ancilla" and not (
                qm is not None and qn is not None and qm >= 1 and qn > qm):
            raise ConfigError(f"qubits-with-ancilla needs M = 2^Q, N = 2^(Q+A), A >= 1; got M={self.M}, N={self.N}")

    @property
    def qubits(self) -> int | None:
        return _log2_int(self.M) if self.kind != "photon-modes" else None

    @property
    def ancillas(self) -> int:
        if self.kind != "qubits-with-ancilla":
            return 0
        return _log2_int(self.N) - _log2_int(self.M)


def build_scenario(kind: str, *, qubits: int | None = None, dim: int | None = None,
                   ancillas: int | None = None, embed: int | None = None,
                   shots: int = 0) -> MeasurementScenario:
    kind = _ALIASES.get(kind, kind)
    if kind == "bare-qubits":
        if qubits is None or qubits < 1:
            raise ConfigError("bare-qubits needs qubits >= 1")
        return MeasurementScenario(kind, 2 ** qubits, 2 ** qubits, shots)
    if kind == "qubits-with-ancilla":
        if qubits is None or qubits < 1 or ancillas is None or ancillas < 1:
            raise ConfigError("qubits-with-ancilla needs qubits >= 1 and ancillas >= 1")
        return MeasurementScenario(kind, 2 ** qubits, 2 ** (qubits + ancillas), shots)
    if kind == "photon-modes":
        if dim is None:
            raise ConfigError("photon-modes needs the number of input modes M")
        return MeasurementScenario(kind, dim, dim if embed is None else embed, shots)
    raise ConfigError(f"unknown scenario {kind!r}")


@dataclass(frozen=True)
class OutcomeProbabilities:
    values: np.ndarray
    shots_used: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise RMTraceError("outcome probabilities must be one-dimensional")
        if np.any(v < -1e-12) or np.any(v > 1 + 1e-12) or v.sum() > 1 + 1e-10:
            raise RMTraceError("outcome probabilities out of range")
        object.__setattr__(self, "values", np.clip(v, 0.0, 1.0))

    @property
    def M(self) -> int:
        return self.values.shape[0]


def probabilities_batch(rho, unitaries: np.ndarray) -> np.ndarray:
    """Outcome probabilities for a stack of unitaries, shape ``(count, M)``.

    ``Prob(k) = sum_{m,n} rho_{mn} V_{mk} V*_{nk}`` with ``V`` the first ``M``
    rows of ``U`` and ``k`` running over the first ``M`` columns. This is the
    readout ``<k|W^dagger rho W|k>`` after rotating by ``W = conj(U)``, itself
    Haar distributed.
    """
    rho = np.asarray(rho)
    m = rho.shape[0]
    u = np.asarray(unitaries)
    if u.ndim == 2:
        u = u[None]
    if u.shape[-1] < m:
        raise DimensionError(f"unitary of size {u.shape[-1]} cannot act on a state of dimension {m}")
    v = u[:, :m, :m]
    return np.einsum("bmk,mn,bnk->bk", v, rho, v.conj(), optimize=True).real


def outcome_probabilities(rho: DensityMatrix, u: np.ndarray) -> OutcomeProbabilities:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DimensionError("U must be a square matrix")
    vals = probabilities_batch(rho.data, u)[0]
    return OutcomeProbabilities(np.clip(vals, 0.0, None))


def sample_counts(probs: OutcomeProbabilities | np.ndarray, shots: int,
                  rng: np.random.Generator) -> np.ndarray:
    """Multinomial counts over the ``M`` outcomes plus a trailing residual bucket."""
    if shots < 1:
        raise RMTraceError("shots must be at least 1")
    v = probs.values if isinstance(probs, OutcomeProbabilities) else np.asarray(probs, dtype=float)
    if v.ndim == 1:
        return _counts_1d(v, shots, rng)
    return np.stack([_counts_1d(row, shots, rng) for row in v])


def _counts_1d(v, shots, rng):
    v = np.clip(np.asarray(v, dtype=float), 0.0, 1.0)
    total = v.sum()
    if total > 1 + 1e-10:
        raise RMTraceError(f"probabilities sum to {total} > 1")
    pvals = np.append(v, max(0.0, 1.0 - total))
    return rng.multinomial(shots, pvals / pvals.sum())
