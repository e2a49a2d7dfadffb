"""Model Bergman spaces in one complex variable.

Three geometries are supported:

* ``fock``   -- the level-``p`` Bargmann-Fock space on C with weight
  ``exp(-p|z|^2)`` and volume ``dA/pi``; orthonormal basis
  ``p^{(k+1)/2} z^k / sqrt(k!)`` and constant Bergman kernel function ``p``.
* ``disc``   -- the Bergman space of the unit disc with Lebesgue measure and
  trivial weight; basis ``sqrt((k+1)/pi) z^k``.
* ``custom`` -- a finite span of monomials ``w_k z^k`` with trivial weight.

All evaluators are vectorised over ``z`` and work in the log domain wherever
the basis magnitudes can overflow.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ArgumentError, BaseLocusError, DomainError, NumericOverflow

__all__ = [
    "ModelSpace",
    "TruncationCertificate",
    "basis_eval",
    "frame_weight",
    "phi",
    "log_basis_coefficients",
    "weighted_basis",
    "kernel_diag",
    "kernel_offdiag",
    "normalized_kernel",
    "ek_density",
    "fd_laplacian",
    "truncation_order",
]

_LOG_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class ModelSpace:
    """A weighted Bergman space with an explicit orthonormal basis."""

    kind: str
    p: int = 1
    weights: tuple = ()
    n: int = 1

    def __post_init__(self):
        if self.kind not in ("fock", "disc", "custom"):
            raise ArgumentError(f"unknown model kind {self.kind!r}")
        if self.kind == "fock" and (int(self.p) != self.p or self.p < 1):
            raise ArgumentError("Fock level p must be a positive integer")
        if self.kind == "custom":
            w = tuple(float(x) for x in self.weights)
            if not w or any(x < 0 or not math.isfinite(x) for x in w):
                raise ArgumentError("custom weights must be finite and nonnegative")
            object.__setattr__(self, "weights", w)
            if w[0] == 0.0:
                warnings.warn(
                    "custom span with zero weight at index 0 has a base point at z=0",
                    RuntimeWarning,
                    stacklevel=3,
                )
        if self.n < 1:
            raise ArgumentError("complex dimension must be positive")

    @classmethod
    def fock(cls, p: int = 1) -> "ModelSpace":
        return cls("fock", p=int(p))

    @classmethod
    def disc(cls) -> "ModelSpace":
        return cls("disc", p=1)

    @classmethod
    def custom(cls, weights) -> "ModelSpace":
        return cls("custom", p=1, weights=tuple(weights))

    # curvature metadata; all flat in these models
    @property
    def scalar_curvature(self) -> float:
        return 0.0

    @property
    def bundle_curvature(self) -> float:
        """Eigenvalue of the curvature of the line bundle (2*pi*p for Fock)."""
        return 2.0 * math.pi * self.p if self.kind == "fock" else 0.0

    @property
    def chern_density(self) -> float:
        """Lebesgue density of the first Chern form."""
        return self.p / math.pi if self.kind == "fock" else 0.0

    @property
    def dimension(self):
        """Number of basis elements, or ``None`` when infinite."""
        return len(self.weights) if self.kind == "custom" else None

    def check_domain(self, z) -> None:
        if self.kind == "disc" and np.any(np.abs(z) >= 1.0):
            raise DomainError("point outside the unit disc", code="model.domain")

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "fock":
            d["p"] = self.p
        if self.kind == "custom":
            d["weights"] = list(self.weights)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpace":
        kind = d.get("kind", "fock")
        if kind == "fock":
            return cls.fock(d.get("p", 1))
        if kind == "disc":
            return cls.disc()
        return cls.custom(d["weights"])


@dataclass(frozen=True)
class TruncationCertificate:
    """``sup_{|z|<=radius}`` of the metric tail beyond ``order`` is ``<= tail_bound``."""

    order: int
    radius: float
    tail_bound: float
    achieved_tail: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "radius": self.radius,
            "tail_bound": self.tail_bound,
            "achieved_tail": self.achieved_tail,
        }


def log_basis_coefficients(space: ModelSpace, N: int) -> np.ndarray:
    """``log c_k`` for ``k = 0..N`` where ``f_k(z) = c_k z^k``."""
    k = np.arange(N + 1, dtype=float)
    if space.kind == "fock":
        return 0.5 * (k + 1.0) * math.log(space.p) - 0.5 * gammaln(k + 1.0)
    if space.kind == "disc":
        return 0.5 * np.log((k + 1.0) / math.pi)
    w = np.zeros(N + 1)
    m = min(N + 1, len(space.weights))
    w[:m] = space.weights[:m]
    with np.errstate(divide="ignore"):
        return np.log(w)


def phi(space: ModelSpace, z):
    """Frame potential: the metric norm of a frame value ``g`` is ``|g| e^{-phi}``."""
    z = np.asarray(z)
    if space.kind == "fock":
        return 0.5 * space.p * np.abs(z) ** 2
    return np.zeros(z.shape)


def frame_weight(space: ModelSpace, z):
    """``e^{-2 phi(z)}``: ``exp(-p|z|^2)`` for Fock, 1 otherwise."""
    out = np.exp(-2.0 * phi(space, z))
    return float(out) if np.ndim(out) == 0 else out


def _log_modulus_terms(space, N, z):
    """``log|f_k(z)|`` with shape ``z.shape + (N+1,)`` (``-inf`` where zero)."""
    z = np.asarray(z, dtype=complex)
    logc = log_basis_coefficients(space, N)
    k = np.arange(N + 1)
    r = np.abs(z)[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        logr = np.log(r)
        t = logc + k * logr
    # 0 * log 0 -> the constant term
    t = np.where((k == 0) & (r == 0), logc[0], t)
    return t


def basis_eval(space: ModelSpace, k: int, z):
    """Frame coefficient ``f_k(z)`` of the k-th orthonormal basis element.

    Evaluated as ``exp(log|c_k| + k log|z|) * exp(i k arg z)`` so that large
    levels and indices do not overflow before the final product.
    """
    if k < 0:
        raise ArgumentError("basis index must be nonnegative")
    if space.kind == "custom" and k >= len(space.weights):
        zz = np.asarray(z, dtype=complex)
        return complex(0) if zz.ndim == 0 else np.zeros(zz.shape, complex)
    zz = np.asarray(z, dtype=complex)
    logmag = _log_modulus_terms(space, k, zz)[..., k]
    if np.any(logmag > _LOG_MAX):
        raise NumericOverflow(
            f"|f_{k}(z)| exceeds the double range (log magnitude {np.max(logmag):.1f})"
        )
    val = np.exp(logmag) * np.exp(1j * k * np.angle(zz))
    val = np.where(zz == 0, np.exp(logmag) if k == 0 else 0.0, val)
    return complex(val) if zz.ndim == 0 else val


def weighted_basis(space: ModelSpace, N: int, z):
    """``f_k(z) e^{-phi(z)}`` for ``k = 0..N``; shape ``z.shape + (N+1,)``.

    These are the pointwise metric values of the basis sections and stay
    bounded by ``sqrt(P(z,z))``.
    """
    z = np.asarray(z, dtype=complex)
    t = _log_modulus_terms(space, N, z) - phi(space, z)[..., None]
    k = np.arange(N + 1)
    phase = np.exp(1j * k * np.angle(z)[..., None])
    return np.exp(t) * phase


def _truncated_diag(space, z, N):
    t = 2.0 * (_log_modulus_terms(space, N, z) - phi(space, z)[..., None])
    return np.exp(t).sum(axis=-1)


def kernel_diag(space: ModelSpace, z, N: int | None = None):
    """Bergman kernel function ``P(z,z)`` in the metric sense.

    ``N=None`` gives the closed form (Fock: ``p``; disc:
    ``1/(pi (1-|z|^2)^2)``; custom: the full finite sum).  An integer ``N``
    gives the partial sum over ``k <= N``.
    """
    z = np.asarray(z, dtype=complex)
    space.check_domain(z)
    if N is None:
        if space.kind == "fock":
            out = np.full(z.shape, float(space.p) ** space.n)
        elif space.kind == "disc":
            out = 1.0 / (math.pi * (1.0 - np.abs(z) ** 2) ** 2)
        else:
            out = _truncated_diag(space, z, len(space.weights) - 1)
    else:
        if space.kind == "custom":
            N = min(N, len(space.weights) - 1)
        out = _truncated_diag(space, z, int(N))
    return float(out) if out.ndim == 0 else out


def kernel_offdiag(space: ModelSpace, z, w, N: int | None = None):
    """Pointwise norm ``|P(z,w)|`` of the off-diagonal kernel."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    space.check_domain(z)
    space.check_domain(w)
    if N is None and space.kind == "fock":
        out = space.p * np.exp(-0.5 * space.p * np.abs(z - w) ** 2)
    elif N is None and space.kind == "disc":
        out = 1.0 / (math.pi * np.abs(1.0 - z * np.conj(w)) ** 2)
    else:
        if N is None:
            N = len(space.weights) - 1
        bz = weighted_basis(space, N, z)
        bw = weighted_basis(space, N, w)
        out = np.abs(np.sum(bz * np.conj(bw), axis=-1))
    return float(out) if np.ndim(out) == 0 else out


def normalized_kernel(space: ModelSpace, z, w, N: int | None = None):
    """``|P(z,w)| / sqrt(P(z,z) P(w,w))``, a number in [0, 1]."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if N is None and space.kind == "fock":
        space.check_domain(z)
        out = np.exp(-0.5 * space.p * np.abs(z - w) ** 2)
    elif N is None and space.kind == "disc":
        space.check_domain(z)
        space.check_domain(w)
        out = (1 - np.abs(z) ** 2) * (1 - np.abs(w) ** 2) / np.abs(1 - z * np.conj(w)) ** 2
    else:
        num = kernel_offdiag(space, z, w, N)
        out = num / np.sqrt(kernel_diag(space, z, N) * kernel_diag(space, w, N))
    out = np.minimum(out, 1.0)
    return float(out) if np.ndim(out) == 0 else out


def fd_laplacian(fun, z, h: float = 1e-3):
    """Five-point Euclidean Laplacian of a real function of a complex variable."""
    z = np.asarray(z, dtype=complex)
    c = fun(z)
    s = fun(z + h) + fun(z - h) + fun(z + 1j * h) + fun(z - 1j * h)
    return (s - 4.0 * c) / (h * h)


def _log_frame_kernel(space, N):
    """``z -> log sum_k |f_k(z)|^2`` (frame coefficients, no weight)."""

    def f(z):
        k = kernel_diag(space, z, N)
        if np.any(np.asarray(k) <= 0):
            raise BaseLocusError("frame kernel vanishes in the stencil", code="model.base_locus")
        return np.log(k) + 2.0 * phi(space, z)

    return f


def ek_density(space: ModelSpace, z, method: str = "closed_form", h: float = 1e-3):
    """Expected zero density of the standard Gaussian section (Lebesgue area).

    ``(1/4pi) Laplacian log K(z)`` with ``K`` the frame-coefficient kernel.
    ``method="fd"`` (automatic for custom spans) applies the five-point stencil
    to a truncated kernel sum, independently of the closed forms.
    """
    z = np.asarray(z, dtype=complex)
    space.check_domain(z)
    if method == "closed_form" and space.kind != "custom":
        if space.kind == "fock":
            out = np.full(z.shape, space.p / math.pi)
        else:
            out = 2.0 / (math.pi * (1.0 - np.abs(z) ** 2) ** 2)
        return float(out) if out.ndim == 0 else out
    if method not in ("closed_form", "fd"):
        raise ArgumentError(f"unknown method {method!r}")
    if space.kind == "custom":
        N = len(space.weights) - 1
    else:
        rmax = float(np.max(np.abs(z))) + 2 * h
        if space.kind == "disc":
            space.check_domain(np.array(rmax))
        N = truncation_order(space, max(rmax, 1e-3), 1e-15).order
    out = fd_laplacian(_log_frame_kernel(space, N), z, h) / (4.0 * math.pi)
    return float(out) if np.ndim(out) == 0 else out


def _radial_terms(space, r, kmax):
    """Metric terms ``|f_k(r)|^2 e^{-2 phi(r)}`` for ``k = 0..kmax``."""
    t = 2.0 * (_log_modulus_terms(space, kmax, np.asarray(r, dtype=complex)) - phi(space, r))
    return np.exp(t)


def truncation_order(space: ModelSpace, r: float, eps: float) -> TruncationCertificate:
    """Smallest ``N`` with ``sup_{|z|<=r} sum_{k>N} |f_k(z)|^2_h <= eps``.

    The tail is radial and increasing in ``|z|`` (a Poisson upper tail for
    Fock), so the supremum sits on the circle ``|z| = r``; it is summed from
    the far end.
    """
    if not eps > 0:
        raise ArgumentError("tail bound must be positive")
    if not r > 0:
        raise ArgumentError("radius must be positive")
    if space.kind == "disc" and r >= 1:
        raise DomainError("disc certificate radius must be < 1")
    if space.kind == "custom":
        kmax = len(space.weights) - 1
    elif space.kind == "fock":
        mean = space.p * r * r
        kmax = int(mean + 40.0 * math.sqrt(mean + 1.0) + 60)
    else:
        # (k+1) r^(2k) below 1e-40 * eps
        x = r * r
        kmax = 60
        while (kmax + 1) * x**kmax > 1e-40 * eps:
            kmax *= 2
    terms = _radial_terms(space, r, kmax)
    # tail[N] = sum_{k>N} terms[k]
    tail = np.concatenate([np.cumsum(terms[::-1])[::-1][1:], [0.0]])
    ok = np.nonzero(tail <= eps)[0]
    N = int(ok[0])
    return TruncationCertificate(order=N, radius=float(r), tail_bound=float(eps), achieved_tail=float(tail[N]))
