import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import polynomial as P

from bergzeros import model, zeros
from bergzeros.experiments import _eta_rows
from bergzeros.model import ModelSpace
from bergzeros.randgauss import RngStream, sample_section, section_from_coefficients


def _from_monomials(space, a):
    """Basis coefficients of the frame polynomial ``sum a_k z^k``."""
    logc = model.log_basis_coefficients(space, len(a) - 1)
    return np.asarray(a, dtype=complex) / np.exp(logc)


def test_linear_section():
    s = section_from_coefficients(ModelSpace.fock(1), [1, -1], radius=2.0)
    zs = zeros.roots_in_disk(s, 2.0)
    assert zs.status == zeros.VALID
    np.testing.assert_allclose(zs.positions, [1.0], atol=1e-12)
    assert list(zs.multiplicities) == [1]
    assert zeros.count_zeros_argument(s, 2.0) == 1
    assert zeros.count_zeros_argument(s, 0.5) == 0
    assert zeros.hole_indicator(s, 0.5)


def test_double_root_multiplicity():
    space = ModelSpace.fock(1)
    a = P.polyfromroots([0.3, 0.3, -0.4])
    s = section_from_coefficients(space, _from_monomials(space, a), radius=1.0)
    zs = zeros.roots_in_disk(s, 1.0)
    assert zs.status == zeros.VALID
    order = np.argsort(zs.positions.real)
    np.testing.assert_allclose(zs.positions[order], [-0.4, 0.3], atol=1e-7)
    assert list(zs.multiplicities[order]) == [1, 2]
    assert zeros.volume_codim1(zs, 0.35) == 2


def test_disc_linear_root():
    space = ModelSpace.disc()
    s = section_from_coefficients(space, _from_monomials(space, [1.0, -2.0]), radius=0.8)
    zs = zeros.roots_in_disk(s, 0.8)
    np.testing.assert_allclose(zs.positions, [0.5], atol=1e-12)


def test_zero_at_origin():
    s = section_from_coefficients(ModelSpace.fock(1), [0, 1])
    assert not zeros.hole_indicator(s, 0.5)
    zs = zeros.roots_in_disk(s, 0.5)
    assert zs.total == 1 and zs.positions[0] == 0


def test_argument_matches_roots():
    space = ModelSpace.fock(1)
    cert = model.truncation_order(space, 1.5, 1e-12)
    agree = 0
    for i in range(1000):
        s = sample_section(space, cert, RngStream(4, i))
        zs = zeros.roots_in_disk(s, 1.5)
        if zs.status == zeros.VALID:
            agree += zs.total == zeros.count_zeros_argument(s, 1.5)
    assert agree >= 998


def test_pair_divisor():
    form = zeros.TestForm.bump(3.0)
    assert zeros.pair_divisor(zeros.ZeroSet.empty(3.0), form) == 0.0
    zs = zeros.ZeroSet(np.array([1.0 + 0j]), np.array([2]), 3.0)
    assert zeros.pair_divisor(zs, form) == pytest.approx(2 * 64 / 81)
    assert zeros.pair_divisor(zs, zeros.TestForm.zero(3.0)) == 0.0


def test_truncated_support_warning():
    zs = zeros.ZeroSet(np.array([0.5 + 0j]), np.array([1]), 1.0)
    with pytest.warns(zeros.TruncatedSupportWarning):
        zeros.pair_divisor(zs, zeros.TestForm.bump(3.0))


def test_small_disc_hole_frequency():
    space = ModelSpace.fock(1)
    N = model.truncation_order(space, 0.1, 1e-12).order
    counts, status, _ = zeros.count_zeros_batch(space, _eta_rows(6, range(100_000), N + 1), 0.1)
    assert np.all(status == 0)
    assert np.mean(counts == 0) >= 0.98


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(-1.2, 1.2), st.floats(-1.2, 1.2)), min_size=1, max_size=12))
def test_aberth_recovers_roots(pts):
    roots = np.array([complex(x, y) for x, y in pts])
    if len(roots) > 1:
        d = np.abs(roots[:, None] - roots[None, :]) + np.eye(len(roots))
        if d.min() < 1e-2:
            return
    a = P.polyfromroots(roots)
    if abs(a[0]) < 1e-12:
        return
    got, _, conv = zeros.aberth(a)
    assert conv
    dist = np.abs(got[:, None] - roots[None, :])
    assert np.max(np.min(dist, axis=0)) < 1e-6


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.3, 2.0))
def test_conjugation_equivariance(seed, r):
    space = ModelSpace.fock(1)
    cert = model.truncation_order(space, r, 1e-12)
    s = sample_section(space, cert, RngStream(seed, 0))
    conj = section_from_coefficients(space, np.conj(s.coefficients), r)
    a = zeros.roots_in_disk(s, r)
    b = zeros.roots_in_disk(conj, r)
    if a.status == zeros.VALID and b.status == zeros.VALID:
        assert a.total == b.total
        np.testing.assert_allclose(np.sort_complex(np.conj(a.positions)), np.sort_complex(b.positions), atol=1e-8)


def test_batch_counts_rotation_invariant():
    space = ModelSpace.fock(2)
    N = model.truncation_order(space, 1.0, 1e-12).order
    eta = _eta_rows(1, range(200), N + 1)
    rot = eta * np.exp(1j * 0.7 * np.arange(N + 1))
    c1, _, _ = zeros.count_zeros_batch(space, eta, 1.0)
    c2, _, _ = zeros.count_zeros_batch(space, rot, 1.0)
    np.testing.assert_array_equal(c1, c2)
