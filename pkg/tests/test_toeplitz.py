import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bergzeros import model, symbols, toeplitz
from bergzeros.errors import ArgumentError, SplitAmbiguous
from bergzeros.model import ModelSpace
from bergzeros.randgauss import RngStream, complex_gaussians


@pytest.fixture(scope="module")
def gauss_op():
    return toeplitz.spectrum(toeplitz.build_toeplitz(ModelSpace.fock(1), symbols.gaussian(), 20))


def test_gaussian_diagonal(gauss_op):
    np.testing.assert_allclose(gauss_op.eigenvalues, 2.0 ** -(np.arange(21) + 1.0), rtol=1e-12)


@pytest.mark.parametrize("p", [1.0, 3.0, 7.0])
def test_quadratic_gaussian_diagonal(p):
    op = toeplitz.build_toeplitz(ModelSpace.fock(int(p)), symbols.quadratic_gaussian(), 30)
    a = np.arange(31)
    np.testing.assert_allclose(op.matrix.diagonal().real, (a + 1) * p ** (a + 1) / (p + 1) ** (a + 2), rtol=1e-10)


def test_constant_symbol_identity():
    op = toeplitz.build_toeplitz(ModelSpace.fock(2), symbols.constant(1.0), 15)
    np.testing.assert_allclose(op.matrix, np.eye(16), atol=1e-12)


def test_general_path_matches_radial():
    g = symbols.gaussian()
    generic = symbols.SymbolDescriptor("gauss_generic", g.func, radial=False, support_radius=g.support_radius,
                                       tail_bound=g.tail_bound, sup_bound=1.0, nonnegative=True, expr=g.expr)
    a = toeplitz.build_toeplitz(ModelSpace.fock(2), g, 12).matrix
    b = toeplitz.build_toeplitz(ModelSpace.fock(2), generic, 12).matrix
    np.testing.assert_allclose(b, a, atol=1e-13)


def test_trace_and_hs_geometric(gauss_op):
    rep = toeplitz.trace_and_hs(gauss_op)
    assert rep.trace == pytest.approx(1 - 2.0**-21, rel=1e-12)
    assert rep.independent_trace == pytest.approx(1.0, rel=1e-10)
    assert rep.hs_norm**2 == pytest.approx(1 / 3 - 4.0**-21 / 3, rel=1e-12)


def test_zero_symbol():
    op = toeplitz.build_toeplitz(ModelSpace.fock(1), symbols.constant(0.0), 5)
    rep = toeplitz.trace_and_hs(op)
    assert (rep.trace, rep.hs_norm) == (0.0, 0.0)


def test_quadratic_trace_tends_to_p():
    op = toeplitz.build_toeplitz(ModelSpace.fock(3), symbols.quadratic_gaussian(), 150)
    rep = toeplitz.trace_and_hs(op)
    assert rep.independent_trace == pytest.approx(3.0, rel=1e-10)
    assert rep.trace == pytest.approx(3.0, rel=1e-9)


def test_disc_symbol():
    op = toeplitz.build_toeplitz(ModelSpace.disc(), symbols.constant(1.0), 10)
    np.testing.assert_allclose(op.matrix, np.eye(11), atol=1e-10)


def test_custom_space_refused():
    with pytest.warns(RuntimeWarning):
        space = ModelSpace.custom([0.0, 1.0])
    with pytest.raises(ArgumentError):
        toeplitz.build_toeplitz(space, symbols.gaussian(), 3)


@pytest.mark.parametrize("p", [2.0, 10.0])
def test_t2_at_origin(p):
    q = toeplitz.spectrum(toeplitz.build_toeplitz(ModelSpace.fock(int(p)), symbols.quadratic_gaussian(), 40))
    assert toeplitz.t2_diag(q, 0.0) == pytest.approx(p**3 / (p + 1) ** 4, rel=1e-12)
    g = toeplitz.spectrum(toeplitz.build_toeplitz(ModelSpace.fock(int(p)), symbols.gaussian(), 40))
    assert toeplitz.t2_diag(g, 0.0) == pytest.approx(p**3 / (p + 1) ** 2, rel=1e-12)


def test_t2_of_identity_is_kernel():
    op = toeplitz.spectrum(toeplitz.build_toeplitz(ModelSpace.fock(2), symbols.constant(1.0), 30))
    z = np.array([0.0, 0.5 + 0.5j, 1.2])
    np.testing.assert_allclose(toeplitz.t2_diag(op, z), model.kernel_diag(ModelSpace.fock(2), z, 30), rtol=1e-12)


def test_gamma_density_of_identity():
    op = toeplitz.spectrum(toeplitz.build_toeplitz(ModelSpace.fock(3), symbols.constant(1.0), 80))
    z = np.array([0.0, 0.3 + 0.2j, -0.6j])
    # frame weight and curvature cancel: the result is the standard density p/pi
    np.testing.assert_allclose(toeplitz.gamma_f_density(op, z), 3 / math.pi, atol=1e-5)


def test_wiener_section_identity_law():
    op = toeplitz.spectrum(toeplitz.build_toeplitz(ModelSpace.fock(1), symbols.constant(1.0), 10))
    s = toeplitz.sample_wiener_section(op, RngStream(4, 2))
    # equal eigenvalues: the eigenbasis is a permutation of the model basis
    eta = complex_gaussians(RngStream(4, 2), 11)
    np.testing.assert_allclose(np.sort(np.abs(s.coefficients)), np.sort(np.abs(eta)), atol=1e-12)


def test_spectrum_of_sign_changing_symbol():
    op = toeplitz.spectrum(toeplitz.build_toeplitz(ModelSpace.fock(1), symbols.re_gaussian(), 20))
    rep = toeplitz.trace_and_hs(op)
    assert abs(rep.trace) < 1e-14 and abs(rep.independent_trace) < 1e-12
    assert op.eigenvalues[0] > 0 > op.eigenvalues[-1]
    w = op.eigenvalues
    np.testing.assert_allclose(np.sort(w), np.sort(-w), atol=1e-12)


def test_kernel_split_nonnegative_injective():
    ks = toeplitz.kernel_split(ModelSpace.fock(1), symbols.gaussian(), 10)
    assert ks.null_rank == 0 and ks.sandwich_ok


def test_kernel_split_odd_symbol():
    ks = toeplitz.kernel_split(ModelSpace.fock(1), symbols.re_gaussian(), 20)
    assert ks.null_rank == 1
    assert ks.sandwich_ok
    assert np.isfinite(ks.density(0.3 + 0.1j))


def test_kernel_split_ambiguous():
    op = toeplitz.spectrum(toeplitz.build_toeplitz(ModelSpace.fock(1), symbols.gaussian(), 20))
    with pytest.raises(SplitAmbiguous):
        toeplitz.kernel_split(ModelSpace.fock(1), symbols.gaussian(), 20, eps_null=1.5 * 2.0**-12, op=op)


def test_operator_json():
    op = toeplitz.spectrum(toeplitz.build_toeplitz(ModelSpace.fock(1), symbols.re_gaussian(), 4))
    d = json.loads(op.to_json())
    assert d["N"] == 4 and len(d["spectrum"]["eigenvalues"]) == 5


def test_odd_symbol_couples_neighbours_only():
    op = toeplitz.build_toeplitz(ModelSpace.fock(1), symbols.re_gaussian(), 8)
    assert np.array_equal(op.matrix, op.matrix.conj().T)
    mask = np.abs(np.subtract.outer(np.arange(9), np.arange(9))) != 1
    assert np.max(np.abs(op.matrix[mask])) < 1e-14


@settings(max_examples=8, deadline=None)
@given(st.floats(0.0, 2 * math.pi))
def test_rotation_covariance(theta):
    import sympy as sp

    Z, ZB = symbols.Z, symbols.ZB
    u = sp.exp(sp.I * sp.Float(theta))
    rotated = symbols.from_expression((u * Z + ZB / u) / 2 * sp.exp(-Z * ZB), "re_gauss_rot", sup_bound=1.0)
    rotated.support_radius = symbols.re_gaussian().support_radius
    T = toeplitz.build_toeplitz(ModelSpace.fock(2), symbols.re_gaussian(), 8).matrix
    Tr = toeplitz.build_toeplitz(ModelSpace.fock(2), rotated, 8).matrix
    k = np.arange(9)
    phase = np.exp(1j * theta * np.subtract.outer(k, k))
    np.testing.assert_allclose(Tr, phase * T, atol=1e-13)
