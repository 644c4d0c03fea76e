import numpy as np
import pytest
from scipy import stats

from rmtrace.errors import DimensionError
from rmtrace.haar import (first_row_ks_test, haar_invariance_test, sample_ginibre, sample_haar_batch,
                          sample_haar_unitary, seeded_rng, unitarity_error)


def test_ginibre_deterministic_dim1():
    a = sample_ginibre(1, seeded_rng(3, 0))
    b = sample_ginibre(1, seeded_rng(3, 0))
    assert a.shape == (1, 1)
    assert a[0, 0] == b[0, 0]


def test_streams_differ():
    a = sample_ginibre(4, seeded_rng(3, 0))
    b = sample_ginibre(4, seeded_rng(3, 1))
    assert not np.allclose(a, b)


@pytest.mark.parametrize("dim", [0, -2])
def test_invalid_dimension(dim, rng):
    with pytest.raises(DimensionError):
        sample_ginibre(dim, rng)
    with pytest.raises(DimensionError):
        sample_haar_unitary(dim, rng)


def test_ginibre_entry_distribution(rng):
    z = sample_ginibre(64, rng, size=10_000)[:, 0, 0]
    assert abs(z.real.mean()) < 4 / np.sqrt(10_000)
    assert abs(z.real.var(ddof=1) - 1) < 0.1
    assert abs(z.imag.var(ddof=1) - 1) < 0.1


def test_ginibre_entries_uncorrelated(rng):
    z = sample_ginibre(8, rng, size=10_000)
    x = z.reshape(10_000, -1).real
    c = np.corrcoef(x[:, 0], x[:, 9])[0, 1]
    d = np.corrcoef(z[:, 0, 0].real, z[:, 0, 0].imag)[0, 1]
    assert abs(c) < 0.05 and abs(d) < 0.05


@pytest.mark.parametrize("dim", [1, 2, 4, 17, 64])
def test_unitarity(dim, rng):
    u = sample_haar_batch(dim, 20, rng)
    assert unitarity_error(u) < 1e-10


def test_dim1_is_phase(rng):
    u = sample_haar_unitary(1, rng)
    assert abs(abs(u[0, 0]) - 1) < 1e-12


def test_bit_identical_sequences():
    a = sample_haar_batch(6, 5, seeded_rng(11, 4))
    b = sample_haar_batch(6, 5, seeded_rng(11, 4))
    assert np.array_equal(a, b)


def test_first_and_second_moment(rng):
    u = sample_haar_batch(4, 100_000, rng)
    x = np.abs(u[:, 0, 0]) ** 2
    se = x.std(ddof=1) / np.sqrt(x.size)
    assert abs(x.mean() - 0.25) < 3 * se
    y = x ** 2
    se = y.std(ddof=1) / np.sqrt(y.size)
    assert abs(y.mean() - 0.1) < 3 * se


def test_phase_fix_is_invisible_to_moduli():
    # Column phases drop out of |U_ij|, so both samplers share modulus statistics
    # draw for draw; only phase-sensitive statistics tell them apart.
    a = sample_haar_batch(4, 50, seeded_rng(5, 0), phase_fix=True)
    b = sample_haar_batch(4, 50, seeded_rng(5, 0), phase_fix=False)
    np.testing.assert_allclose(np.abs(a), np.abs(b), atol=1e-12)
    assert not np.allclose(a, b)


def test_naive_sampler_has_biased_diagonal_phase():
    u = sample_haar_batch(4, 20_000, seeded_rng(5, 1), phase_fix=False)
    m = u[:, 0, 0].real
    assert abs(m.mean()) > 10 * m.std() / np.sqrt(m.size)


def test_invariance_passes(rng):
    rep = haar_invariance_test(4, 100_000, rng)
    assert rep.passed, rep.failures
    assert rep.max_z < 4
    np.testing.assert_allclose(rep.moments[0], 0.25, atol=4 * rep.stderr[0].max())


def test_invariance_fails_without_phase_fix(rng):
    rep = haar_invariance_test(4, 100_000, rng, phase_fix=False)
    assert not rep.passed
    assert rep.phase_z[0] > 4


def test_invariance_dim1(rng):
    rep = haar_invariance_test(1, 1000, rng)
    assert rep.passed


def test_invariance_needs_samples(rng):
    with pytest.raises(ValueError):
        haar_invariance_test(4, 50, rng)


def test_left_permutation_invariance(rng):
    u = sample_haar_batch(4, 100_000, rng)
    perm = np.eye(4)[[2, 0, 3, 1]]
    pu = perm @ u
    for n in (1, 2):
        a = np.abs(u[:, 0, :]) ** (2 * n)
        b = np.abs(pu[:, 0, :]) ** (2 * n)
        se = np.hypot(a.std(0) / np.sqrt(len(a)), b.std(0) / np.sqrt(len(b)))
        assert np.all(np.abs(a.mean(0) - b.mean(0)) < 4 * se)


@pytest.mark.parametrize("dim", [2, 4, 8])
def test_first_row_ks(dim):
    res = first_row_ks_test(dim, 10_000, seeded_rng(8, dim))
    assert res.pvalue > 0.01


def test_ks_oracle_by_histogram():
    # Independent check of the same law: Beta(1, N-1) has this density.
    u = sample_haar_batch(5, 10_000, seeded_rng(9, 0))
    p = np.abs(u[:, 0, 0]) ** 2
    assert stats.kstest(p, stats.beta(1, 4).cdf).pvalue > 0.01
