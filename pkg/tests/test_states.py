import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rmtrace.errors import DimensionError, EmbeddingError, InvalidStateError
from rmtrace.haar import seeded_rng
from rmtrace.states import (DensityMatrix, StateEnsembleSpec, basis_state, embed, load_state,
                            make_footnote_state, make_maximally_mixed, make_pure_random, mean_state,
                            save_state, trace_powers, trace_powers_spectral)


def test_pure_dim1(rng):
    rho = make_pure_random(1, rng)
    np.testing.assert_allclose(rho.data, [[1.0]], atol=1e-12)


@pytest.mark.parametrize("dim", [2, 4, 16])
def test_pure_is_rank_one(dim, rng):
    rho = make_pure_random(dim, rng)
    assert abs(trace_powers(rho)[0] - 1) < 1e-10
    lam = np.sort(rho.eigenvalues())
    np.testing.assert_allclose(lam, [0] * (dim - 1) + [1], atol=1e-10)


def test_footnote_normalized(rng):
    rho = make_footnote_state(4, 2.0, rng)
    assert abs(np.trace(rho.data) - 1) < 1e-12
    assert np.count_nonzero(rho.data - np.diag(np.diag(rho.data))) == 0


def test_footnote_small_exponent_is_nearly_mixed(rng):
    rho = make_footnote_state(4, 1e-9, rng)
    np.testing.assert_allclose(np.diag(rho.data).real, 0.25, atol=1e-8)


def test_footnote_bad_exponent(rng):
    with pytest.raises(InvalidStateError):
        make_footnote_state(4, 0.0, rng)
    with pytest.raises(DimensionError):
        make_footnote_state(0, 2.0, rng)


def test_larger_exponent_is_purer():
    def mean_p2(e):
        rng = seeded_rng(4, int(e))
        return np.mean([trace_powers(make_footnote_state(4, e, rng))[0] for _ in range(10_000)])
    assert mean_p2(8.0) > mean_p2(2.0)


@pytest.mark.parametrize("dim,expected", [
    (4, [0.25, 0.0625, 0.015625]),
    (2, [0.5, 0.25, 0.125]),
    (1, [1.0, 1.0, 1.0]),
])
def test_maximally_mixed(dim, expected):
    np.testing.assert_allclose(trace_powers(make_maximally_mixed(dim)), expected, atol=1e-15)


def test_trace_powers_two_equal_eigenvalues():
    rho = DensityMatrix(np.diag([0.5, 0.5, 0, 0]))
    np.testing.assert_allclose(trace_powers(rho), [0.5, 0.25, 0.125])


def test_trace_powers_range():
    with pytest.raises(ValueError):
        trace_powers(make_maximally_mixed(2), 9)
    assert len(trace_powers(make_maximally_mixed(2), 8)) == 7


def test_embed_identity_and_padding(rng):
    rho = make_footnote_state(4, 2.0, rng)
    assert embed(rho, 4) is rho
    big = embed(make_maximally_mixed(4), 8)
    assert abs(np.trace(big.data) - 1) < 1e-12
    assert np.linalg.matrix_rank(big.data) == 4
    with pytest.raises(EmbeddingError):
        embed(rho, 3)


def test_mean_state():
    a, b = basis_state(2, 0), basis_state(2, 1)
    m = mean_state([a, b])
    np.testing.assert_allclose(m.data, np.eye(2) / 2)
    assert trace_powers(m)[0] == pytest.approx(0.5)
    assert mean_state([a]) is a
    np.testing.assert_allclose(mean_state([m, m, m]).data, m.data, atol=1e-15)
    with pytest.raises(ValueError):
        mean_state([])
    with pytest.raises(DimensionError):
        mean_state([a, basis_state(3, 0)])


def test_invalid_matrices():
    with pytest.raises(InvalidStateError):
        DensityMatrix([[0.5, 0.1], [0.2, 0.5]])
    with pytest.raises(InvalidStateError):
        DensityMatrix([[0.6, 0], [0, 0.6]])
    with pytest.raises(InvalidStateError):
        DensityMatrix([[1.5, 0], [0, -0.5]])


def test_immutable(rng):
    rho = make_pure_random(3, rng)
    with pytest.raises(ValueError):
        rho.data[0, 0] = 0


def test_state_file_round_trip(tmp_path, rng):
    rho = make_pure_random(3, rng)
    path = tmp_path / "rho.json"
    save_state(rho, path)
    back = load_state(path)
    np.testing.assert_array_equal(back.data, rho.data)


def test_state_file_rejects_bad_input(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"dim": 2, "entries": [[1, 0], [0, 0], [0, 0], [1, 0]]}))
    with pytest.raises(InvalidStateError):
        load_state(bad)
    bad.write_text(json.dumps({"dim": 2, "entries": [[1, 0]]}))
    with pytest.raises(InvalidStateError):
        load_state(bad)


def test_ensemble_spec_validation():
    with pytest.raises(InvalidStateError):
        StateEnsembleSpec("footnote-diagonal")
    with pytest.raises(InvalidStateError):
        StateEnsembleSpec("alternating-source")
    with pytest.raises(InvalidStateError):
        StateEnsembleSpec("nonsense")


@st.composite
def density_matrices(draw):
    dim = draw(st.integers(1, 5))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    a = a @ a.conj().T
    a = 0.5 * (a + a.conj().T) / np.trace(a).real
    return DensityMatrix(0.5 * (a + a.conj().T))


@settings(max_examples=60, deadline=None)
@given(density_matrices(), st.integers(0, 4))
def test_trace_powers_match_spectrum_and_padding(rho, pad):
    direct = trace_powers(rho)
    np.testing.assert_allclose(direct, trace_powers_spectral(rho), atol=1e-10)
    np.testing.assert_allclose(trace_powers(embed(rho, rho.dim + pad)), direct, atol=1e-12)
