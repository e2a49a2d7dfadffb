"""Semiclassical quantities for Toeplitz squares on the flat Fock model.

Conventions: the positive Laplacian is ``Delta = -pi * Lap`` with ``Lap`` the
Euclidean Laplacian, and the pairing of ``dbar f`` with ``d g`` is
``2 pi f_zb g_z`` (second order: ``(2 pi)^2 f_zbzb g_zz``).  With these
constants the expansion

    p^{-1} T_{f,p}^2(z, z) = b0(z) + b1(z)/p + b2(z)/p^2 + O(p^{-3})

agrees with the exact diagonal Toeplitz computation; see
``calibration_table``.

Order-2 data at a vanishing point is read off in the coordinate ``z`` and
its model function ``F`` is a function of the normal coordinate ``u``; at
level ``p`` the two are related by ``u = sqrt(p / pi) (z - x0)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import model, toeplitz
from .errors import ArgumentError, NotOrder2
from .model import ModelSpace
from .quadrature import panel_nodes
from .symbols import SymbolDescriptor

__all__ = [
    "BCoefficients",
    "Order2Data",
    "GrowthFit",
    "PairingResult",
    "b_coefficients",
    "order2_data",
    "F_log_density",
    "t2_at",
    "default_order",
    "t2_growth_exponent",
    "planck_pairing",
    "proper_vanishing_check",
    "calibration_table",
    "expansion_check",
    "rows_to_csv",
    "ORDER0",
    "ORDER1",
    "ORDER2_PROPER",
    "IMPROPER",
]

ORDER0 = "ORDER0"
ORDER1 = "ORDER1"
ORDER2_PROPER = "ORDER2_PROPER"
IMPROPER = "IMPROPER"


@dataclass(frozen=True)
class BCoefficients:
    b0: float
    b1: float
    b2: float

    def __iter__(self):
        return iter((self.b0, self.b1, self.b2))

    def expansion(self, p):
        return self.b0 + self.b1 / p + self.b2 / p**2


def b_coefficients(f: SymbolDescriptor, x: complex, space: ModelSpace | None = None) -> BCoefficients:
    """First three coefficients of ``p^{-1} T_{f,p}^2(x, x)`` on flat Fock space.

    Curvature terms vanish on the flat model and are omitted, so any other
    model is refused.
    """
    if space is not None and space.kind != "fock":
        raise ArgumentError("the b-coefficient formulas are evaluated on the flat Fock model only")
    d = f.derivative
    f0 = float(np.real(d(0, 0, x)))
    fz = d(1, 0, x)
    fzb = d(0, 1, x)
    lap = 4.0 * d(1, 1, x)
    lap2 = 16.0 * d(2, 2, x)
    lap_z = 4.0 * d(2, 1, x)
    lap_zb = 4.0 * d(1, 2, x)
    fzz = d(2, 0, x)
    fzbzb = d(0, 2, x)
    b0 = f0 * f0
    b1 = 0.5 * f0 * lap + fzb * fz
    b2 = f0 * lap2 / 16.0 + lap * lap / 16.0 + 0.5 * fzbzb * fzz + 0.25 * (lap_zb * fz + fzb * lap_z)
    return BCoefficients(b0, float(np.real(b1)), float(np.real(b2)))


@dataclass(frozen=True)
class Order2Data:
    """Second-order model of a symbol at a vanishing point.

    ``f(x0 + z) = z^T A conj(z) + 2 Re(z^T B z) + O(|z|^3)``.

    Attributes
    ----------
    x0 : complex
    A : ndarray, (n, n) Hermitian, positive semidefinite
    B : ndarray, (n, n) complex symmetric
    laplacian_at_x0 : float
        ``-4 Tr A``.
    mu : float
        ``(Tr A)^2 / pi^2 + 2 Tr(B conj(B)^T) / pi^2``.
    K : ndarray
        ``(2/pi) Tr(A) A + (1/pi)(A^2 + 4 B conj(B))``.
    """

    x0: complex
    A: np.ndarray
    B: np.ndarray
    laplacian_at_x0: float
    mu: float
    K: np.ndarray
    taylor_constant: float = math.nan

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @classmethod
    def from_matrices(cls, A, B=None, x0: complex = 0.0) -> "Order2Data":
        A = np.atleast_2d(np.asarray(A, dtype=complex))
        n = A.shape[0]
        B = np.zeros((n, n), complex) if B is None else np.atleast_2d(np.asarray(B, dtype=complex))
        trA = float(np.real(np.trace(A)))
        mu = (trA**2 + 2.0 * float(np.real(np.trace(B @ B.conj().T)))) / math.pi**2
        K = (2.0 / math.pi) * trA * A + (A @ A + 4.0 * B @ B.conj()) / math.pi
        return cls(complex(x0), A, B, -4.0 * trA, mu, K)

    @property
    def is_identity_family(self) -> bool:
        return bool(np.allclose(self.A, np.eye(self.n), atol=1e-12) and np.allclose(self.B, 0, atol=1e-12))

    def _vec(self, z):
        z = np.asarray(z, dtype=complex)
        return z[..., None] if self.n == 1 and (z.ndim == 0 or z.shape[-1] != 1) else z

    def fhat(self, z):
        v = self._vec(z)
        quad = np.einsum("...i,ij,...j->...", v, self.A, np.conj(v)).real
        sym = np.einsum("...i,ij,...j->...", v, self.B, v)
        return quad + 2.0 * sym.real

    def F(self, z):
        """``fhat^2 - (1/2pi) Delta f(x0) fhat + (1/pi)|A zb + 2 B z|^2 + mu``."""
        v = self._vec(z)
        fh = self.fhat(z)
        w = np.einsum("ij,...j->...i", self.A, np.conj(v)) + 2.0 * np.einsum("ij,...j->...i", self.B, v)
        out = fh * fh - self.laplacian_at_x0 / (2.0 * math.pi) * fh + np.sum(np.abs(w) ** 2, axis=-1) / math.pi + self.mu
        return float(out) if np.ndim(out) == 0 else out

    def semipositive(self, directions: int = 1000, seed: int = 0) -> bool:
        """``z^T A zb >= 2 |Re(z^T B z)|`` on sampled unit vectors."""
        rng = np.random.default_rng(seed)
        v = rng.standard_normal((directions, self.n)) + 1j * rng.standard_normal((directions, self.n))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        quad = np.einsum("ki,ij,kj->k", v, self.A, np.conj(v)).real
        sym = np.einsum("ki,ij,kj->k", v, self.B, v).real
        return bool(np.all(quad >= 2.0 * np.abs(sym) - 1e-12))

    def to_dict(self) -> dict:
        def mat(M):
            return [[[float(x.real), float(x.imag)] for x in row] for row in M]

        return {
            "x0": [self.x0.real, self.x0.imag],
            "A": mat(self.A),
            "B": mat(self.B),
            "laplacian_at_x0": self.laplacian_at_x0,
            "mu": self.mu,
            "K": mat(self.K),
            "taylor_constant": self.taylor_constant,
        }


def order2_data(f: SymbolDescriptor, x0: complex, tol: float = 1e-10) -> Order2Data:
    """Extract ``A = f_zzb(x0)`` and ``B = f_zz(x0)/2`` at a vanishing point.

    Raises :class:`NotOrder2` unless ``f(x0) = 0``, ``df(x0) = 0`` (to
    ``tol``) and ``Lap f(x0) != 0``.  The fitted constant ``C`` in
    ``|f - fhat| <= C |z|^3`` on ``|z| <= 0.1`` is stored on the result.
    """
    val = abs(f(x0))
    grad = abs(f.derivative(1, 0, x0))
    if val > tol or grad > tol:
        raise NotOrder2(f"f or df does not vanish at {x0} (|f|={val:.3g}, |df|={grad:.3g})", code="semiclassical.not_order2")
    A = float(np.real(f.derivative(1, 1, x0)))
    if abs(A) <= tol:
        raise NotOrder2(f"Laplacian vanishes at {x0}", code="semiclassical.not_order2")
    B = complex(f.derivative(2, 0, x0)) / 2.0
    data = Order2Data.from_matrices([[A]], [[B]], x0)
    rng = np.random.default_rng(1)
    rad = 0.1 * np.sqrt(rng.uniform(0, 1, 400))
    zz = rad * np.exp(2j * math.pi * rng.uniform(0, 1, 400))
    resid = np.abs(f(x0 + zz) - data.fhat(zz))
    C = float(np.max(resid / np.maximum(np.abs(zz), 1e-12) ** 3))
    return Order2Data(data.x0, data.A, data.B, data.laplacian_at_x0, data.mu, data.K, C)


def _identity_density(t, n):
    pi = math.pi
    num = (
        (2 * n - 2) * pi**3 * t**3
        + (6 * n * n - n - 2) * pi**2 * t**2
        + (6 * n**3 + 2 * n * n - 3 * n - 1) * pi * t
        + 2 * n**4
        + n**3
    )
    den = (
        pi**4 * t**4
        + (4 * n + 2) * pi**3 * t**3
        + (6 * n * n + 4 * n + 1) * pi**2 * t**2
        + (4 * n**3 + 2 * n * n) * pi * t
        + n**4
    )
    return pi * num / den


def F_log_density(data: Order2Data, z, n: int | None = None, method: str = "auto", h: float = 1e-4):
    """Density of ``i ddbar log F`` against ``omega_0^n / n!``.

    ``method="analytic"`` evaluates the closed rational function of
    ``|z|^2`` valid for ``A = Id_n, B = 0`` (``n`` is then a free
    parameter).  ``method="fd"`` uses a five-point Laplacian of ``log F``
    divided by 4 and needs ``n = 1``.  ``"auto"`` picks analytic when it
    applies.
    """
    if n is None:
        n = data.n
    z = np.asarray(z, dtype=complex)
    if method == "auto":
        method = "analytic" if data.is_identity_family else "fd"
    if method == "analytic":
        if not (data.n == 1 or n == data.n):
            raise ArgumentError("dimension mismatch")
        if data.n == 1 and not (abs(data.A[0, 0] - 1) < 1e-12 and abs(data.B[0, 0]) < 1e-12):
            raise ArgumentError("analytic density needs A = Id, B = 0")
        t = np.abs(z) ** 2 if z.ndim == 0 or data.n == 1 else np.sum(np.abs(z) ** 2, axis=-1)
        out = _identity_density(t, n)
    elif method == "fd":
        if data.n != 1 or n != 1:
            raise ArgumentError("finite-difference density is implemented for n = 1")

        def logF(u):
            return np.log(data.F(u))

        out = model.fd_laplacian(logF, z, h) / 4.0
    else:
        raise ArgumentError(f"unknown method {method!r}")
    return float(out) if np.ndim(out) == 0 else out


def default_order(p: int, x: complex, extra: float = 10.0) -> int:
    """Truncation order resolving ``T^2`` near ``x`` at level ``p``."""
    space = ModelSpace.fock(p)
    r = abs(x) + extra / math.sqrt(p)
    return min(toeplitz.MAX_N, model.truncation_order(space, r, 1e-16).order)


def t2_at(f: SymbolDescriptor, p: int, x, N: int | None = None):
    """``T_{f,p}^2(x, x)`` (metric) from the compressed operator."""
    xs = np.atleast_1d(np.asarray(x, dtype=complex))
    if N is None:
        N = default_order(p, complex(xs[np.argmax(np.abs(xs))]))
    op = toeplitz.spectrum(toeplitz.build_toeplitz(ModelSpace.fock(p), f, N))
    out = toeplitz.t2_diag(op, x)
    return out


@dataclass(frozen=True)
class GrowthFit:
    """Growth of ``T_{f,p}^2(x0, x0)`` in ``p``.

    ``slope`` comes from ``log T^2 = slope log p + c + d/p``; ``plain_slope``
    from the straight line without the ``1/p`` term.  ``kappa = n - slope``.
    """

    slope: float
    plain_slope: float
    kappa: float
    p: tuple
    values: tuple

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "plain_slope": self.plain_slope,
            "kappa": self.kappa,
            "p": list(self.p),
            "values": list(self.values),
        }


def t2_growth_exponent(p_list, f: SymbolDescriptor, x0: complex = 0.0, N_rule=None, n: int = 1) -> GrowthFit:
    """Fit the power of ``p`` in ``T_{f,p}^2(x0, x0)``."""
    p_arr = np.asarray(sorted(p_list), dtype=float)
    if p_arr.size < 3:
        raise ArgumentError("need at least three levels")
    vals = []
    for p in p_arr:
        N = N_rule(int(p)) if N_rule is not None else None
        vals.append(float(t2_at(f, int(p), x0, N)))
    y = np.log(vals)
    lp = np.log(p_arr)
    plain = float(np.polyfit(lp, y, 1)[0])
    X = np.column_stack([lp, np.ones_like(lp), 1.0 / p_arr])
    coef = np.linalg.lstsq(X, y, rcond=None)[0]
    slope = float(coef[0])
    return GrowthFit(slope, plain, n - slope, tuple(int(p) for p in p_arr), tuple(vals))


@dataclass(frozen=True)
class PairingResult:
    numeric: float
    predicted: float
    p: int
    R: float
    N: int

    @property
    def ratio(self) -> float:
        return self.numeric / self.predicted if self.predicted else math.nan

    def to_dict(self) -> dict:
        return {"numeric": self.numeric, "predicted": self.predicted, "ratio": self.ratio, "p": self.p, "R": self.R, "N": self.N}


def _disc_rule(radius, radial_nodes=32, panels=2, angles=32):
    r, w = panel_nodes(0.0, radius, panels, radial_nodes)
    th = 2.0 * math.pi * np.arange(angles) / angles
    pts = r[:, None] * np.exp(1j * th[None, :])
    wts = (w * r)[:, None] * np.full(angles, 2.0 * math.pi / angles)[None, :]
    return pts.ravel(), wts.ravel()


def phi_R(data: Order2Data, R: float, phi_value: float = 1.0) -> float:
    """``(i/2pi) int_{|u|<R} ddbar log F`` times ``phi_value`` (n = 1)."""
    if data.n != 1:
        raise ArgumentError("pairing implemented for n = 1")
    if R == 0:
        return 0.0
    u, w = _disc_rule(R)
    dens = F_log_density(data, u)
    return phi_value * float(np.sum(w * dens)) / math.pi


def planck_pairing(
    f: SymbolDescriptor,
    x0: complex,
    R: float,
    p: int,
    phi_value: float = 1.0,
    N: int | None = None,
    data: Order2Data | None = None,
    fd_step: float | None = None,
) -> PairingResult:
    """Planck-scale mass of ``(i/2pi) ddbar log T_{f,p}^2`` near ``x0``.

    ``numeric`` integrates ``(1/4pi) Lap log T^2`` (metric ``T^2``, five-point
    differences) over the geodesic ball of radius ``R / sqrt(p)``, which is the
    Euclidean disc of radius ``sqrt(pi / p) R``.  ``predicted`` is
    ``phi_value * Phi^R`` from the model function ``F``; it is ``nan`` when
    ``x0`` is not an order-2 vanishing point.
    """
    if data is None:
        try:
            data = order2_data(f, x0)
        except NotOrder2:
            data = None
    rho = math.sqrt(math.pi / p) * R
    if N is None:
        N = default_order(p, complex(abs(x0) + rho))
    space = ModelSpace.fock(p)
    op = toeplitz.spectrum(toeplitz.build_toeplitz(space, f, N))
    h = fd_step if fd_step is not None else 1e-3 / math.sqrt(p)
    if R == 0:
        numeric = 0.0
    else:
        pts, w = _disc_rule(rho)
        pts = pts + x0
        vals = np.empty(pts.size)
        for blk in np.array_split(np.arange(pts.size), max(1, pts.size // 1024)):
            vals[blk] = model.fd_laplacian(lambda z: np.log(toeplitz.t2_diag(op, z)), pts[blk], h)
        numeric = phi_value * float(np.sum(w * vals)) / (4.0 * math.pi)
    predicted = phi_R(data, R, phi_value) if data is not None else math.nan
    return PairingResult(numeric, predicted, int(p), float(R), int(N))


def proper_vanishing_check(f: SymbolDescriptor, grid, tol: float = 1e-8, probe: float = 0.05):
    """Classify each grid point by the order of vanishing of ``f``.

    Returns ``(labels, kappa)`` where ``kappa`` is the largest order among
    properly classified points (``None`` if none) and labels are ``ORDER0``,
    ``ORDER1``, ``ORDER2_PROPER`` or ``IMPROPER``.  Proper order 2 requires
    ``f Delta f <= 0`` (positive Laplacian) on a small ring around the point.
    """
    grid = np.atleast_1d(np.asarray(grid, dtype=complex))
    labels = []
    ring = np.exp(2j * math.pi * np.arange(16) / 16)
    for x in grid:
        if abs(f(x)) > tol:
            labels.append(ORDER0)
        elif abs(f.derivative(1, 0, x)) > tol:
            labels.append(ORDER1)
        elif abs(f.laplacian(x)) > tol:
            pts = np.concatenate([x + s * probe * ring for s in (0.2, 0.5, 1.0)])
            sign = f(pts) * (-math.pi * f.laplacian(pts))
            labels.append(ORDER2_PROPER if np.all(sign <= tol) else IMPROPER)
        else:
            labels.append(IMPROPER)
    order = {ORDER0: 0, ORDER1: 1, ORDER2_PROPER: 2}
    proper = [order[l] for l in labels if l in order]
    return labels, (max(proper) if proper else None)


def calibration_table(f: SymbolDescriptor, x: complex, p_list, N_rule=None) -> list[dict]:
    """Rows ``p, exact, formula, residual`` comparing ``p^{-1} T^2`` with the expansion."""
    b = b_coefficients(f, x)
    rows = []
    for p in p_list:
        N = N_rule(int(p)) if N_rule is not None else None
        exact = float(t2_at(f, int(p), x, N)) / p
        formula = b.expansion(float(p))
        rows.append({"p": int(p), "exact": exact, "formula": formula, "residual": exact - formula})
    return rows


def expansion_check(f: SymbolDescriptor, x: complex, p_list=(50, 100, 200)) -> tuple[float, list[float]]:
    """Fitted ``C`` in ``|p (p^{-1} T^2 - b0) - b1| <= C / p`` over ``p_list``."""
    b = b_coefficients(f, x)
    devs = []
    for p in p_list:
        exact = float(t2_at(f, int(p), x)) / p
        devs.append(abs(p * (exact - b.b0) - b.b1))
    C = max(d * p for d, p in zip(devs, p_list))
    return float(C), devs


def rows_to_csv(rows: list[dict], path=None, columns=("p", "exact", "formula", "residual")) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(float(r[k])) if isinstance(r[k], float) else r[k]) for k in columns})
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
