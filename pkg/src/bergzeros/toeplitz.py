"""Toeplitz operators ``T_f = P f P`` compressed to the first ``N+1`` basis elements.

Matrix entries ``T[j, k] = <f S_k, S_j>`` are computed with a polar tensor
rule: trapezoid in angle (via FFT, exact for the trigonometric degrees that
occur) times adaptive composite Gauss-Legendre in the radius.  Radial symbols
take a fast path where only the diagonal is integrated.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import model
from .errors import ArgumentError, BaseLocusError, QuadratureError, SplitAmbiguous
from .jacobi import jacobi_eigh
from .model import ModelSpace, TruncationCertificate
from .quadrature import panel_nodes
from .randgauss import RngStream, SectionSample, complex_gaussians
from .symbols import SymbolDescriptor

__all__ = [
    "ToeplitzOperator",
    "KernelSplit",
    "build_toeplitz",
    "spectrum",
    "trace_and_hs",
    "t2_diag",
    "log_t2_frame",
    "gamma_f_density",
    "sample_wiener_section",
    "kernel_split",
    "certificate_radius",
]

log = logging.getLogger(__name__)

MAX_N = 512
QUAD_ORDER = 32


def _volume_factor(space: ModelSpace) -> float:
    """Density of ``dV`` against Lebesgue area."""
    return 1.0 / math.pi if space.kind == "fock" else 1.0


def _basis_radius(space: ModelSpace, N: int) -> float:
    """Radius beyond which every weighted basis element up to ``N`` is negligible."""
    if space.kind == "disc":
        return 1.0
    x = (N + 1) + 14.0 * math.sqrt(N + 1) + 60.0
    return math.sqrt(x / space.p)


def _radial_magnitudes(space: ModelSpace, N: int, r: np.ndarray) -> np.ndarray:
    """``|f_k(r)| e^{-phi(r)}`` for nodes ``r``; shape ``(len(r), N+1)``."""
    r = np.asarray(r, dtype=float)
    t = model._log_modulus_terms(space, N, r.astype(complex)) - model.phi(space, r)[:, None]
    return np.exp(t)


def certificate_radius(space: ModelSpace, N: int, eps: float = 1e-12) -> float:
    """Largest radius whose truncation order at tail ``eps`` is at most ``N``."""
    if space.kind == "custom":
        return math.inf
    lo = 0.0
    hi = 1.0 - 1e-12 if space.kind == "disc" else _basis_radius(space, N)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if mid == 0 or model.truncation_order(space, mid, eps).order <= N:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass
class ToeplitzOperator:
    """Compressed Toeplitz operator with optional spectral data.

    ``eigenvalues`` are sorted decreasingly; column ``j`` of ``eigenvectors``
    holds the model-basis coefficients of the ``j``-th eigensection.
    """

    space: ModelSpace
    symbol: SymbolDescriptor
    N: int
    matrix: np.ndarray
    eigenvalues: np.ndarray | None = None
    eigenvectors: np.ndarray | None = None
    certificate: TruncationCertificate | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def has_spectrum(self) -> bool:
        return self.eigenvalues is not None

    def _require_spectrum(self):
        if not self.has_spectrum:
            spectrum(self)

    def to_dict(self) -> dict:
        d = {
            "space": self.space.to_dict(),
            "symbol": self.symbol.to_dict(),
            "N": self.N,
            "matrix": [[[float(v.real), float(v.imag)] for v in row] for row in self.matrix],
            "quadrature": dict(self.diagnostics),
        }
        if self.has_spectrum:
            d["spectrum"] = {
                "eigenvalues": [float(x) for x in self.eigenvalues],
                "eigenvectors": [[[float(v.real), float(v.imag)] for v in row] for row in self.eigenvectors],
            }
        if self.certificate is not None:
            d["certificate"] = self.certificate.to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _radial_diagonal(space, symbol, N, R, rtol, max_panels):
    width = 1.0 / math.sqrt(space.p) if space.kind == "fock" else 0.1
    panels = max(4, int(math.ceil(R / width)))
    prev = None
    while True:
        r, w = panel_nodes(0.0, R, panels, QUAD_ORDER)
        g = symbol(r.astype(complex))
        mag2 = _radial_magnitudes(space, N, r) ** 2
        lam = 2.0 * math.pi * _volume_factor(space) * ((w * r * g) @ mag2)
        if prev is not None:
            err = float(np.max(np.abs(lam - prev)))
            if err <= rtol * max(float(np.max(np.abs(lam))), 1e-300):
                return np.diag(lam).astype(complex), {"panels": panels, "error_estimate": err, "radius": R, "path": "radial"}
            if panels >= max_panels:
                raise QuadratureError(
                    f"radial quadrature did not converge (error estimate {err:.3g})",
                    estimate=lam.tolist(),
                    error=err,
                )
        prev = lam
        panels *= 2


def _general_matrix(space, symbol, N, R, rtol, max_panels):
    m = 4 * (N + 1)
    th = 2.0 * math.pi * np.arange(m) / m
    width = 1.0 / math.sqrt(space.p) if space.kind == "fock" else 0.1
    panels = max(4, int(math.ceil(R / width)))
    c = 2.0 * math.pi * _volume_factor(space)
    prev = None
    while True:
        r, w = panel_nodes(0.0, R, panels, QUAD_ORDER)
        vals = symbol(r[:, None] * np.exp(1j * th[None, :]))
        # F[:, d] = (1/2pi) int f e^{-i d theta} dtheta
        F = np.fft.fft(vals, axis=1) / m
        G = _radial_magnitudes(space, N, r) * np.sqrt(w * r)[:, None]
        T = np.zeros((N + 1, N + 1), dtype=complex)
        for d in range(N + 1):
            # T[k+d, k] = c sum_r G[r, k+d] G[r, k] F[r, d]
            col = c * np.einsum("rk,rk,r->k", G[:, d:], G[:, : N + 1 - d], F[:, d])
            idx = np.arange(N + 1 - d)
            T[idx + d, idx] = col
            if d:
                T[idx, idx + d] = np.conj(col)
        T[np.diag_indices(N + 1)] = T.diagonal().real
        if prev is not None:
            err = float(np.max(np.abs(T - prev)))
            if err <= rtol * max(float(np.max(np.abs(T))), 1e-300):
                return T, {"panels": panels, "angles": m, "error_estimate": err, "radius": R, "path": "tensor"}
            if panels >= max_panels:
                raise QuadratureError(
                    f"tensor quadrature did not converge (error estimate {err:.3g})",
                    estimate=float(np.max(np.abs(T))),
                    error=err,
                )
        prev = T
        panels *= 2


def build_toeplitz(
    space: ModelSpace,
    symbol: SymbolDescriptor,
    N: int | TruncationCertificate,
    rtol: float = 1e-10,
    margin: float | None = None,
    max_panels: int = 4096,
) -> ToeplitzOperator:
    """Assemble ``T[j, k] = int f f_k conj(f_j) e^{-2 phi} dV`` for ``j, k <= N``.

    Parameters
    ----------
    space : ModelSpace
        Fock or disc model.
    symbol : SymbolDescriptor
    N : int or TruncationCertificate
        Truncation order (at most 512).
    rtol : float
        Relative agreement required between two panel doublings.
    margin : float, optional
        Added to the symbol's support radius; defaults to six basis widths.
    """
    cert = N if isinstance(N, TruncationCertificate) else None
    N = cert.order if cert is not None else int(N)
    if not 0 <= N <= MAX_N:
        raise ArgumentError(f"truncation order must lie in [0, {MAX_N}]")
    if space.kind == "custom":
        raise ArgumentError("Toeplitz operators need an L2 model (Fock or disc)")
    if margin is None:
        margin = 6.0 / math.sqrt(space.p) if space.kind == "fock" else 0.0
    R = min(symbol.support_radius + margin, _basis_radius(space, N))
    if symbol.radial:
        T, diag = _radial_diagonal(space, symbol, N, R, rtol, max_panels)
    else:
        T, diag = _general_matrix(space, symbol, N, R, rtol, max_panels)
    if cert is None:
        cert = TruncationCertificate(order=N, radius=certificate_radius(space, N), tail_bound=1e-12, achieved_tail=math.nan)
    return ToeplitzOperator(space, symbol, N, T, certificate=cert, diagnostics=diag)


def spectrum(op: ToeplitzOperator, tol: float = 1e-12, max_sweeps: int = 100) -> ToeplitzOperator:
    """Fill in eigenvalues (descending) and orthonormal eigenvectors."""
    if op.symbol.radial and np.count_nonzero(op.matrix - np.diag(op.matrix.diagonal())) == 0:
        d = op.matrix.diagonal().real
        order = np.argsort(-d, kind="stable")
        w = d[order]
        V = np.eye(op.N + 1, dtype=complex)[:, order]
        op.diagnostics["sweeps"] = 0
    else:
        w, V = jacobi_eigh(op.matrix, tol=tol, max_sweeps=max_sweeps)
    if op.symbol.nonnegative and w.size and w[-1] < 0:
        if w[-1] < -1e-10:
            log.warning("nonnegative symbol %s has eigenvalue %.3g", op.symbol.name, w[-1])
        else:
            log.info("clamping %d small negative eigenvalues", int(np.sum(w < 0)))
            w = np.maximum(w, 0.0)
    op.eigenvalues = w
    op.eigenvectors = V
    return op


@dataclass(frozen=True)
class TraceReport:
    trace: float
    hs_norm: float
    independent_trace: float


def _independent_trace(space, symbol, rtol=1e-12):
    """``int f(z) P(z, z) dV`` with the closed-form kernel."""
    vol = _volume_factor(space)
    if space.kind == "fock":
        R = symbol.support_radius
        if not math.isfinite(R):
            return math.nan
    else:
        R = min(symbol.support_radius, 1.0)
    m = 1 if symbol.radial else 256
    th = 2.0 * math.pi * np.arange(m) / m
    prev = None
    panels = 16
    while True:
        r, w = panel_nodes(0.0, R, panels, QUAD_ORDER)
        zz = r[:, None] * np.exp(1j * th[None, :])
        if space.kind == "disc":
            zz = zz * (1 - 1e-15)
        fz = symbol(zz)
        kern = model.kernel_diag(space, r.astype(complex) * (1 - 1e-15 if space.kind == "disc" else 1))
        cur = 2.0 * math.pi * vol * float(np.sum(w * r * fz.mean(axis=1) * kern))
        # scale by int |f| P so symbols with zero mean still converge
        scale = 2.0 * math.pi * vol * float(np.sum(w * r * np.abs(fz).mean(axis=1) * kern))
        if prev is not None and abs(cur - prev) <= rtol * max(scale, 1e-300) + 1e-300:
            return cur
        if panels >= 4096:
            return cur
        prev = cur
        panels *= 2


def trace_and_hs(op: ToeplitzOperator) -> TraceReport:
    """Trace, Hilbert-Schmidt norm and the quadrature ``int f P dV``."""
    tr = float(np.real(np.trace(op.matrix)))
    hs = float(np.linalg.norm(op.matrix))
    return TraceReport(tr, hs, _independent_trace(op.space, op.symbol))


def _eigen_basis_values(op, z):
    """Metric values of the eigensections: ``z.shape + (N+1,)``."""
    B = model.weighted_basis(op.space, op.N, z)
    return B @ op.eigenvectors


def t2_diag(op: ToeplitzOperator, z):
    """``T_f^2(z, z) = sum_j lambda_j^2 |S_j(z)|_h^2`` (metric sense)."""
    op._require_spectrum()
    z = np.asarray(z, dtype=complex)
    U = _eigen_basis_values(op, z)
    out = np.sum(op.eigenvalues**2 * np.abs(U) ** 2, axis=-1)
    return float(out) if out.ndim == 0 else out


def log_t2_frame(op: ToeplitzOperator, z):
    """``log sum_j lambda_j^2 |f_j(z)|^2`` in frame coefficients.

    Equal to ``log T^2(z, z) + 2 phi(z)``; the frame weight is added back in
    the log domain so large ``|z|`` does not overflow.
    """
    z = np.asarray(z, dtype=complex)
    t2 = t2_diag(op, z)
    with np.errstate(divide="ignore"):
        return np.log(t2) + 2.0 * model.phi(op.space, z)


def gamma_f_density(op: ToeplitzOperator, z, fd_step: float = 1e-3):
    """Expected zero density (Lebesgue area) of the Wiener-randomized section.

    Five-point Laplacian of the log frame sum, divided by ``4 pi``.  In metric
    terms this is ``c_1 + (1/4pi) Lap log T^2``: the ``+2 phi`` hidden in the
    frame sum contributes exactly the curvature density, so the two terms
    combine with no separate ``c_1`` evaluation.
    """
    op._require_spectrum()
    z = np.asarray(z, dtype=complex)
    h = fd_step
    stencil = [z, z + h, z - h, z + 1j * h, z - 1j * h]
    vals = [np.asarray(t2_diag(op, s)) for s in stencil]
    if any(np.any(v <= 0) for v in vals):
        raise BaseLocusError("T^2 vanishes in the stencil", code="toeplitz.base_locus_near")
    L = [np.log(v) + 2.0 * model.phi(op.space, s) for v, s in zip(vals, stencil)]
    out = (L[1] + L[2] + L[3] + L[4] - 4.0 * L[0]) / (h * h) / (4.0 * math.pi)
    return float(out) if np.ndim(out) == 0 else out


def sample_wiener_section(op: ToeplitzOperator, stream: RngStream) -> SectionSample:
    """Coefficients of ``sum_j eta_j lambda_j S_j`` in the model basis."""
    op._require_spectrum()
    eta = complex_gaussians(stream, op.N + 1)
    c = op.eigenvectors @ (op.eigenvalues * eta)
    prov = dict(stream.provenance, symbol=op.symbol.name)
    return SectionSample(op.space, c, op.certificate, prov)


@dataclass
class KernelSplit:
    """Null cluster of a (possibly sign-changing) Toeplitz compression."""

    op: ToeplitzOperator
    null_rank: int
    eps_null: float
    gap_ratio: float
    null_mask: np.ndarray
    sandwich_ok: bool | None = None
    sandwich_violation: float = 0.0

    def p_ker(self, z):
        """``sum_{null j} |S_j(z)|_h^2``."""
        z = np.asarray(z, dtype=complex)
        if self.null_rank == 0:
            out = np.zeros(z.shape)
        else:
            U = _eigen_basis_values(self.op, z)[..., self.null_mask]
            out = np.sum(np.abs(U) ** 2, axis=-1)
        return float(out) if out.ndim == 0 else out

    def combined(self, z):
        """``T^2(z, z) + P_ker(z, z)`` (metric)."""
        return np.asarray(t2_diag(self.op, z)) + np.asarray(self.p_ker(z))

    def density(self, z, fd_step: float = 1e-3):
        """``(1/4pi) Lap log`` of the combined frame sum."""
        z = np.asarray(z, dtype=complex)
        h = fd_step
        pts = [z, z + h, z - h, z + 1j * h, z - 1j * h]
        vals = [self.combined(s) for s in pts]
        if any(np.any(v <= 0) for v in vals):
            raise BaseLocusError("combined kernel vanishes in the stencil", code="toeplitz.base_locus_near")
        L = [np.log(v) + 2.0 * model.phi(self.op.space, s) for v, s in zip(vals, pts)]
        out = (L[1] + L[2] + L[3] + L[4] - 4.0 * L[0]) / (h * h) / (4.0 * math.pi)
        return float(out) if np.ndim(out) == 0 else out


def kernel_split(
    space: ModelSpace,
    symbol: SymbolDescriptor,
    N: int,
    eps_null: float | None = None,
    op: ToeplitzOperator | None = None,
    grid_radius: float | None = None,
) -> KernelSplit:
    """Split off the numerical kernel of ``T_f``.

    ``eps_null`` defaults to ``1e-8 max|lambda|``.  The smallest ``|lambda|``
    above the threshold must exceed the largest one below it by a factor of
    at least 10, otherwise :class:`SplitAmbiguous` is raised.  The sandwich
    ``T^2 <= T^2 + P_ker <= max(sup|f|^2, 1) P`` is checked on a grid.
    """
    if op is None:
        op = spectrum(build_toeplitz(space, symbol, N))
    else:
        op._require_spectrum()
    lam = np.abs(op.eigenvalues)
    top = float(np.max(lam)) if lam.size else 0.0
    if eps_null is None:
        eps_null = 1e-8 * top
    null = lam <= eps_null
    above = lam[~null]
    below = lam[null]
    if above.size and below.size:
        lo_above = float(np.min(above))
        hi_below = float(np.max(below))
        gap = lo_above / hi_below if hi_below > 0 else math.inf
    else:
        gap = math.inf
        # nothing below: the nearest eigenvalue must still clear the threshold
        if above.size and eps_null > 0 and float(np.min(above)) < 10.0 * eps_null:
            gap = float(np.min(above)) / eps_null
    if gap < 10.0:
        raise SplitAmbiguous(
            f"no spectral gap at eps_null={eps_null:.3g} (ratio {gap:.3g})",
            code="toeplitz.split_ambiguous",
            gap_ratio=gap,
        )
    ks = KernelSplit(op, int(np.count_nonzero(null)), float(eps_null), float(gap), null)
    if grid_radius is None:
        grid_radius = 0.9 * op.certificate.radius if op.certificate else 1.0
        if space.kind == "disc":
            grid_radius = min(grid_radius, 0.9)
    x = np.linspace(-grid_radius, grid_radius, 21)
    zz = (x[:, None] + 1j * x[None, :]).ravel()
    zz = zz[np.abs(zz) <= grid_radius]
    t2 = np.asarray(t2_diag(op, zz))
    comb = t2 + np.asarray(ks.p_ker(zz))
    sup = symbol.sup_bound if math.isfinite(symbol.sup_bound) else float(np.max(np.abs(symbol(zz))))
    upper = max(sup**2, 1.0) * np.asarray(model.kernel_diag(space, zz))
    viol = float(max(np.max(t2 - comb), np.max(comb - upper * (1 + 1e-9)), 0.0))
    ks.sandwich_ok = viol == 0.0
    ks.sandwich_violation = viol
    return ks
