"""Complex Gaussian randomness and standard Gaussian sections.

Streams are Philox counter-based generators keyed directly by
``(master_seed, stream_index)``: distinct keys give independent streams, equal
keys reproduce the same draws bit for bit, and no coordination between
workers is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import model
from .errors import ArgumentError
from .model import ModelSpace, TruncationCertificate

__all__ = [
    "RngStream",
    "SectionSample",
    "SectionValue",
    "complex_gaussian",
    "complex_gaussians",
    "sample_section",
    "section_from_coefficients",
    "eval_section",
    "frame_coefficients",
]

_MASK64 = (1 << 64) - 1


class RngStream:
    """A single-owner random stream identified by ``(master_seed, stream_index)``."""

    def __init__(self, master_seed: int, stream_index: int = 0):
        if master_seed < 0 or stream_index < 0:
            raise ArgumentError("seed and stream index must be nonnegative")
        self.master_seed = int(master_seed) & _MASK64
        self.stream_index = int(stream_index)
        hi, lo = divmod(self.stream_index, 1 << 64)
        if hi:
            raise ArgumentError("stream index must fit in 64 bits")
        self._gen = np.random.Generator(np.random.Philox(key=[self.master_seed, lo]))

    def spawn(self, stream_index: int) -> "RngStream":
        """A fresh stream with the same master seed and another index."""
        return RngStream(self.master_seed, stream_index)

    def normals(self, size) -> np.ndarray:
        return self._gen.standard_normal(size)

    @property
    def provenance(self) -> dict:
        return {"seed": self.master_seed, "stream": self.stream_index}

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed}, stream_index={self.stream_index})"


def complex_gaussians(stream: RngStream, size: int) -> np.ndarray:
    """``size`` i.i.d. standard complex Gaussians ``(X + iY)/sqrt(2)``.

    Real and imaginary parts are drawn interleaved, so a longer draw extends
    a shorter one: the first ``m`` values never depend on ``size``.
    """
    xy = stream.normals(2 * int(size))
    return (xy[0::2] + 1j * xy[1::2]) / math.sqrt(2.0)


def complex_gaussian(stream: RngStream) -> complex:
    return complex(complex_gaussians(stream, 1)[0])


@dataclass
class SectionSample:
    """Truncated random section ``sum_{k<=N} eta_k S_k``."""

    space: ModelSpace
    coefficients: np.ndarray
    certificate: TruncationCertificate
    provenance: dict = field(default_factory=dict)

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def to_dict(self) -> dict:
        return {
            "space": self.space.to_dict(),
            "coefficients": [[float(c.real), float(c.imag)] for c in self.coefficients],
            "certificate": self.certificate.to_dict(),
            "provenance": dict(self.provenance),
        }


def sample_section(space: ModelSpace, certificate: TruncationCertificate, stream: RngStream) -> SectionSample:
    """Draw ``N+1`` coefficients, in index order, from ``stream``."""
    eta = complex_gaussians(stream, certificate.order + 1)
    return SectionSample(space, eta, certificate, stream.provenance)


def section_from_coefficients(space: ModelSpace, coefficients, radius: float = 1.0) -> SectionSample:
    """Deterministic section with given basis coefficients (exact, zero tail)."""
    c = np.asarray(coefficients, dtype=complex)
    cert = TruncationCertificate(order=len(c) - 1, radius=float(radius), tail_bound=0.0, achieved_tail=0.0)
    return SectionSample(space, c, cert, {"seed": None, "stream": None})


def frame_coefficients(sample: SectionSample) -> np.ndarray:
    """Monomial coefficients ``a_k = eta_k c_k`` of the frame polynomial."""
    N = sample.order
    logc = model.log_basis_coefficients(sample.space, N)
    return sample.coefficients * np.exp(logc)


@dataclass
class SectionValue:
    frame_value: np.ndarray | complex
    metric_norm: np.ndarray | float
    log_metric_norm: np.ndarray | float
    outside_certificate: bool = False


def eval_section(sample: SectionSample, z) -> SectionValue:
    """Evaluate the section at ``z`` (scalar or array).

    The sum is formed in the log domain (shifted by the largest term) so the
    log metric norm stays finite even when the frame value overflows.  A
    vanishing value gives ``log_metric_norm = -inf``.
    """
    space = sample.space
    z = np.asarray(z, dtype=complex)
    space.check_domain(z)
    N = sample.order
    logt = model._log_modulus_terms(space, N, z)
    with np.errstate(divide="ignore"):
        logt = logt + np.log(np.abs(sample.coefficients))
    shift = np.max(np.where(np.isfinite(logt), logt, -np.inf), axis=-1)
    shift = np.where(np.isfinite(shift), shift, 0.0)
    k = np.arange(N + 1)
    phase = np.exp(1j * (k * np.angle(z)[..., None] + np.angle(sample.coefficients)))
    s = np.sum(np.exp(logt - shift[..., None]) * phase, axis=-1)
    with np.errstate(divide="ignore", over="ignore"):
        log_abs = np.log(np.abs(s)) + shift
        log_metric = log_abs - model.phi(space, z)
        frame = s * np.exp(shift)
        metric = np.exp(log_metric)
    outside = bool(np.any(np.abs(z) > sample.certificate.radius * (1 + 1e-12)))
    if z.ndim == 0:
        return SectionValue(complex(frame), float(metric), float(log_metric), outside)
    return SectionValue(frame, metric, log_metric, outside)
