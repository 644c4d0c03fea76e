"""Density matrices, the state ensembles used in the experiments, and trace powers."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DimensionError, EmbeddingError, InvalidStateError
from .haar import sample_haar_unitary

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10


class DensityMatrix:
    """Validated, immutable density matrix."""

    __slots__ = ("_data",)

    def __init__(self, data):
        a = np.array(data, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise DimensionError(f"density matrix must be square and non-empty, got shape {a.shape}")
        if np.max(np.abs(a - a.conj().T)) > HERMITIAN_TOL:
            raise InvalidStateError("matrix is not Hermitian")
        tr = np.trace(a)
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"trace is {tr.real:.15g}, expected 1")
        lam = np.linalg.eigvalsh(a)
        if lam.min() < -PSD_TOL:
            raise InvalidStateError(f"matrix has negative eigenvalue {lam.min():.3g}")
        a.setflags(write=False)
        self._data = a

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def dim(self) -> int:
        return self._data.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self._data)

    def __array__(self, dtype=None, copy=None):
        return self._data if dtype is None else self._data.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, DensityMatrix):
            return NotImplemented
        return self._data.shape == other._data.shape and bool(np.all(self._data == other._data))

    def __hash__(self):
        return hash(self._data.tobytes())

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim})"


def _check_dim(dim):
    if int(dim) != dim or dim < 1:
        raise DimensionError(f"dimension must be a positive integer, got {dim!r}")


def make_pure_random(dim: int, rng: np.random.Generator) -> DensityMatrix:
    """Projector onto the first column of a Haar unitary."""
    _check_dim(dim)
    psi = sample_haar_unitary(dim, rng)[:, 0]
    return DensityMatrix(np.outer(psi, psi.conj()))


def make_pure(vector) -> DensityMatrix:
    psi = np.asarray(vector, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return DensityMatrix(np.outer(psi, psi.conj()))


def basis_state(dim: int, index: int) -> DensityMatrix:
    _check_dim(dim)
    rho = np.zeros((dim, dim), dtype=complex)
    rho[index, index] = 1.0
    return DensityMatrix(rho)


def make_footnote_state(dim: int, exponent: float, rng: np.random.Generator) -> DensityMatrix:
    """Diagonal state ``diag(z_i^E) / sum_j z_j^E`` with ``z_i ~ U(0, 1)``."""
    _check_dim(dim)
    if not exponent > 0:
        raise InvalidStateError(f"exponent must be positive, got {exponent!r}")
    z = rng.random(dim)
    w = z ** exponent
    return DensityMatrix(np.diag(w / w.sum()))


def make_maximally_mixed(dim: int) -> DensityMatrix:
    _check_dim(dim)
    return DensityMatrix(np.eye(dim) / dim)


def embed(rho: DensityMatrix, n: int) -> DensityMatrix:
    """Zero-pad ``rho`` into the top-left block of an ``n x n`` matrix."""
    m = rho.dim
    if n < m:
        raise EmbeddingError(f"cannot embed dimension {m} into {n}")
    if n == m:
        return rho
    big = np.zeros((n, n), dtype=complex)
    big[:m, :m] = rho.data
    return DensityMatrix(big)


def trace_powers(rho: DensityMatrix, max_n: int = 4) -> list[float]:
    """``[Tr rho^2, ..., Tr rho^max_n]`` by repeated matrix multiplication."""
    if not 2 <= max_n <= 8:
        raise ValueError(f"max_n must be in 2..8, got {max_n}")
    a = rho.data
    out = []
    power = a
    for n in range(2, max_n + 1):
        power = power @ a
        p = float(np.trace(power).real)
        lo = rho.dim ** (1 - n)
        if not lo - 1e-9 <= p <= 1 + 1e-9:
            raise InvalidStateError(f"Tr rho^{n} = {p} outside [{lo}, 1]")
        out.append(p)
    return out


def trace_powers_spectral(rho: DensityMatrix, max_n: int = 4) -> list[float]:
    """Same quantity as :func:`trace_powers` computed from the spectrum."""
    lam = np.clip(rho.eigenvalues(), 0.0, None)
    return [float(np.sum(lam ** n)) for n in range(2, max_n + 1)]


def mean_state(states: Sequence[DensityMatrix]) -> DensityMatrix:
    if len(states) == 0:
        raise ValueError("mean_state needs at least one state")
    dims = {s.dim for s in states}
    if len(dims) != 1:
        raise DimensionError(f"states have different dimensions {sorted(dims)}")
    if len(states) == 1:
        return states[0]
    acc = np.zeros_like(states[0].data)
    for s in states:
        acc = acc + s.data
    acc = acc / len(states)
    # restore exact Hermiticity lost to rounding
    return DensityMatrix(0.5 * (acc + acc.conj().T))


# -- file format ------------------------------------------------------------

def state_to_dict(rho: DensityMatrix) -> dict:
    flat = rho.data.reshape(-1)
    return {"dim": rho.dim, "entries": [[float(z.real), float(z.imag)] for z in flat]}


def state_from_dict(d: dict) -> DensityMatrix:
    try:
        dim = int(d["dim"])
        entries = d["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidStateError(f"malformed state record: {exc}") from None
    if dim < 1 or len(entries) != dim * dim:
        raise InvalidStateError(f"expected {dim * dim} entries for dim {dim}, got {len(entries)}")
    vals = np.array([complex(float(re), float(im)) for re, im in entries]).reshape(dim, dim)
    return DensityMatrix(vals)


def save_state(rho: DensityMatrix, path) -> None:
    Path(path).write_text(json.dumps(state_to_dict(rho), indent=1) + "\n")


def load_state(path) -> DensityMatrix:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidStateError(f"{path}: not valid JSON ({exc})") from None
    return state_from_dict(d)


# -- ensembles ----------------------------------------------------------------

STATE_KINDS = ("pure-random", "footnote-diagonal", "maximally-mixed", "explicit", "alternating-source")


@dataclass(frozen=True)
class StateEnsembleSpec:
    kind: str
    exponent: float | None = None
    components: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in STATE_KINDS:
            raise InvalidStateError(f"unknown state kind {self.kind!r}; choose from {STATE_KINDS}")
        if self.kind == "footnote-diagonal" and not (self.exponent is not None and self.exponent > 0):
            raise InvalidStateError("footnote-diagonal states need an exponent E > 0")
        if self.kind == "explicit" and len(self.components) != 1:
            raise InvalidStateError("explicit states need exactly one component")
        if self.kind == "alternating-source" and len(self.components) < 1:
            raise InvalidStateError("alternating-source needs at least one component state")

    @property
    def random(self) -> bool:
        return self.kind in ("pure-random", "footnote-diagonal")

    def draw(self, dim: int, rng: np.random.Generator) -> list[DensityMatrix]:
        """Return the source states; more than one only for alternating sources."""
        if self.kind == "pure-random":
            return [make_pure_random(dim, rng)]
        if self.kind == "footnote-diagonal":
            return [make_footnote_state(dim, self.exponent, rng)]
        if self.kind == "maximally-mixed":
            return [make_maximally_mixed(dim)]
        comps = list(self.components)
        for c in comps:
            if c.dim != dim:
                raise DimensionError(f"component state has dim {c.dim}, scenario expects {dim}")
        return comps
