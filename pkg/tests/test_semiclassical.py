import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from bergzeros import semiclassical as sc
from bergzeros import symbols
from bergzeros.errors import ArgumentError, NotOrder2
from bergzeros.model import ModelSpace


def test_b_coefficients_gaussian_origin():
    b = sc.b_coefficients(symbols.gaussian(), 0.0)
    assert (b.b0, b.b1, b.b2) == pytest.approx((1.0, -2.0, 3.0), abs=1e-12)


def test_b_coefficients_constant():
    assert tuple(sc.b_coefficients(symbols.constant(2.0), 0.3j)) == pytest.approx((4.0, 0.0, 0.0))


def test_b_coefficients_order2():
    b = sc.b_coefficients(symbols.quadratic_gaussian(), 0.0)
    assert (b.b0, b.b1, b.b2) == pytest.approx((0.0, 0.0, 1.0), abs=1e-12)


@pytest.mark.parametrize("x", [0.5, 0.3 - 0.8j, 1.2j])
def test_b_coefficients_off_origin(x):
    # exact p^{-1} T^2(x,x) = s^2 exp(p t (s^2 - 1)) with s = p/(p+1), expanded in 1/p
    t = abs(x) ** 2
    e = math.exp(-2 * t)
    b = sc.b_coefficients(symbols.gaussian(), x)
    assert (b.b0, b.b1, b.b2) == pytest.approx((e, e * (3 * t - 2), e * (4.5 * t * t - 10 * t + 3)), abs=1e-10)


def test_b_coefficients_off_origin_against_quadrature():
    x = 0.4 + 0.2j
    b = sc.b_coefficients(symbols.gaussian(), x)
    for p in (100, 200):
        exact = float(sc.t2_at(symbols.gaussian(), p, x)) / p
        assert abs(p * (exact - b.b0) - b.b1 - b.b2 / p) <= 10 / p**2


def test_b_coefficients_refuse_disc():
    with pytest.raises(ArgumentError):
        sc.b_coefficients(symbols.gaussian(), 0.0, space=ModelSpace.disc())


def test_order2_example():
    data = sc.order2_data(symbols.quadratic_gaussian(), 0.0)
    assert data.A[0, 0] == pytest.approx(1.0) and abs(data.B[0, 0]) < 1e-14
    assert data.mu == pytest.approx(1 / math.pi**2)
    z = 0.7 - 0.2j
    t = abs(z) ** 2
    assert data.F(z) == pytest.approx(t * t + 3 * t / math.pi + 1 / math.pi**2, rel=1e-14)
    assert np.isfinite(data.taylor_constant) and data.semipositive()


def test_not_order2():
    with pytest.raises(NotOrder2):
        sc.order2_data(symbols.gaussian(), 0.0)
    with pytest.raises(NotOrder2):
        sc.order2_data(symbols.re_gaussian(), 0.0)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_identity_density_general_n(n):
    # i ddbar log F against omega^n/n!: n G'(t) + t G''(t) with G = log F(t)
    t = sp.symbols("t", positive=True)
    F = t**2 + (2 * n + 1) / sp.pi * t + sp.Integer(n) ** 2 / sp.pi**2
    G = sp.log(F)
    oracle = sp.lambdify(t, n * sp.diff(G, t) + t * sp.diff(G, t, 2))
    data = sc.Order2Data.from_matrices(np.eye(n))
    for tv in (0.0, 0.3, 2.0):
        z = np.zeros(n, complex)
        z[0] = math.sqrt(tv)
        got = sc.F_log_density(data, z, n=n, method="analytic")
        assert got == pytest.approx(oracle(tv), rel=1e-12)


def test_log_density_values():
    data = sc.order2_data(symbols.quadratic_gaussian(), 0.0)
    assert sc.F_log_density(data, 0.0) == pytest.approx(3 * math.pi, abs=1e-12)
    an = sc.F_log_density(data, 0.5, method="analytic")
    assert sc.F_log_density(data, 0.5, method="fd", h=1e-3) == pytest.approx(an, abs=1e-5)
    big = sc.F_log_density(data, 30.0)
    assert big * 30.0**4 == pytest.approx(3 / math.pi, rel=0.01)


def test_growth_exponent_off_origin():
    fit = sc.t2_growth_exponent(range(20, 201, 60), symbols.gaussian(), 0.7 + 0.2j)
    assert fit.slope == pytest.approx(1.0, abs=0.05)


def test_pairing_monotone_in_radius():
    f = symbols.quadratic_gaussian()
    data = sc.order2_data(f, 0.0)
    res = [sc.planck_pairing(f, 0.0, R, 100, data=data) for R in (0.25, 0.5, 1.0, 2.0)]
    assert all(a.numeric < b.numeric for a, b in zip(res, res[1:]))
    assert all(a.predicted < b.predicted for a, b in zip(res, res[1:]))
    assert sc.planck_pairing(f, 0.0, 0.0, 100, data=data).numeric == 0.0


def test_pairing_positive_point_has_no_prediction():
    res = sc.planck_pairing(symbols.gaussian(), 0.0, 1.0, 25)
    assert math.isnan(res.predicted) and res.numeric < 0


def test_vanishing_labels():
    labels, kappa = sc.proper_vanishing_check(symbols.re_gaussian(), [0.0])
    assert labels == [sc.ORDER1]
    labels, kappa = sc.proper_vanishing_check(symbols.quadratic_gaussian(), [0.0, 0.5])
    assert labels == [sc.ORDER2_PROPER, sc.ORDER0] and kappa == 2
    labels, _ = sc.proper_vanishing_check(symbols.gaussian(), np.linspace(-2, 2, 5))
    assert set(labels) == {sc.ORDER0}
    x = (symbols.Z + symbols.ZB) / 2
    y = (symbols.Z - symbols.ZB) / (2 * sp.I)
    # 2y^2 - x^2 vanishes to order 2 at 0 but changes sign with a positive Laplacian
    improper = symbols.from_expression(2 * y**2 - x**2)
    labels, _ = sc.proper_vanishing_check(improper, [0.0])
    assert labels == [sc.IMPROPER]


def test_calibration_table_csv():
    rows = sc.calibration_table(symbols.gaussian(), 0.0, [10, 100])
    # p^{-1} T^2(0,0) = (p/(p+1))^2 against 1 - 2/p + 3/p^2
    assert rows[1]["residual"] == pytest.approx((100 / 101) ** 2 - (1 - 0.02 + 3e-4), rel=1e-6)
    text = sc.rows_to_csv(rows)
    assert text.splitlines()[0] == "p,exact,formula,residual"


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(-0.95, 0.95))
def test_F_positive_and_quadratic_growth(a, bre):
    # |b| = a/2 would make the quadratic part vanish on a line
    b = complex(bre * a / 2, 0.0)
    data = sc.Order2Data.from_matrices([[a]], [[b]])
    z = np.array([0.0, 0.5, 2.0j, 10.0])
    vals = data.F(z)
    assert np.all(vals > 0)
    assert vals[-1] > vals[1]
