import math

import numpy as np
import pytest

from bergzeros import model
from bergzeros.errors import ArgumentError
from bergzeros.model import ModelSpace
from bergzeros.randgauss import (
    RngStream,
    complex_gaussians,
    eval_section,
    sample_section,
    section_from_coefficients,
)


def test_gaussian_moments():
    eta = complex_gaussians(RngStream(11, 0), 10**6)
    assert abs(eta.real.mean()) < 0.005 and abs(eta.imag.mean()) < 0.005
    assert np.mean(np.abs(eta) ** 2) == pytest.approx(1.0, abs=0.01)
    assert abs(np.mean(eta**2)) < 0.005


def test_streams_are_deterministic_and_prefix_stable():
    a = complex_gaussians(RngStream(5, 3), 50)
    b = complex_gaussians(RngStream(5, 3), 50)
    c = complex_gaussians(RngStream(5, 3), 20)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(a[:20], c)
    assert not np.array_equal(a, complex_gaussians(RngStream(5, 4), 50))


def test_negative_seed_rejected():
    with pytest.raises(ArgumentError):
        RngStream(-1)


def test_sample_matches_certificate():
    cert = model.truncation_order(ModelSpace.fock(1), 1.0, 1e-12)
    s = sample_section(ModelSpace.fock(1), cert, RngStream(0, 7))
    assert len(s.coefficients) == cert.order + 1
    assert s.provenance == {"seed": 0, "stream": 7}


def test_coefficient_variance():
    cert = model.truncation_order(ModelSpace.fock(1), 1.0, 1e-6)
    eta3 = np.array([sample_section(ModelSpace.fock(1), cert, RngStream(2, i)).coefficients[3] for i in range(100_000)])
    assert np.var(eta3) == pytest.approx(1.0, abs=0.02)


def test_eval_section_values():
    v = eval_section(section_from_coefficients(ModelSpace.fock(1), [1, 0, 0]), 2.0)
    assert v.frame_value == pytest.approx(1.0)
    assert v.metric_norm == pytest.approx(math.exp(-2))
    v = eval_section(section_from_coefficients(ModelSpace.fock(4), [0, 1, 0]), 1.0)
    assert v.frame_value == pytest.approx(4.0)
    assert v.metric_norm == pytest.approx(4 * math.exp(-2))


def test_rescaling_law():
    eta = complex_gaussians(RngStream(9, 0), 40)
    p = 4
    z = np.linspace(-1, 1, 7)[:, None] + 1j * np.linspace(-1, 1, 7)[None, :]
    lvl_p = eval_section(section_from_coefficients(ModelSpace.fock(p), eta, 1.5), z).frame_value
    lvl_1 = eval_section(section_from_coefficients(ModelSpace.fock(1), eta, 3.0), math.sqrt(p) * z).frame_value
    np.testing.assert_allclose(lvl_p, math.sqrt(p) * lvl_1, rtol=1e-12)


def test_large_argument_log_norm_finite():
    eta = complex_gaussians(RngStream(1, 0), 400)
    v = eval_section(section_from_coefficients(ModelSpace.fock(1), eta, 30.0), 25.0)
    assert np.isfinite(v.log_metric_norm)


def test_partial_sums_grow_linearly():
    eta = complex_gaussians(RngStream(3, 0), 10_000)
    s = np.cumsum(np.abs(eta) ** 2)
    n = np.arange(1000, 10_001)
    slope = np.polyfit(n, s[n - 1], 1)[0]
    assert slope == pytest.approx(1.0, abs=0.05)
