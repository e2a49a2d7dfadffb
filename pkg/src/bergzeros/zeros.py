"""Zeros of sampled sections: Aberth-Ehrlich root finding, argument-principle
counts, divisor pairings with test functions.

The truncated section is the polynomial ``sum_k a_k z^k`` with
``a_k = eta_k c_k`` in the monomial frame.  Root locations come from Aberth's
simultaneous iteration; the count inside a disc is checked independently by
the discrete argument principle evaluated with an FFT on the contour.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numba import njit

from . import model
from .errors import ArgumentError, ContourError
from .randgauss import SectionSample, eval_section, frame_coefficients

__all__ = [
    "MAX_DEGREE",
    "ZeroSet",
    "TestForm",
    "TruncatedSupportWarning",
    "aberth",
    "roots_in_disk",
    "count_zeros_argument",
    "count_zeros_batch",
    "contour_size",
    "pair_divisor",
    "hole_indicator",
    "volume_codim1",
]

MAX_DEGREE = 512
_EPS = np.finfo(float).eps

VALID = "VALID"
BOUNDARY_AMBIGUOUS = "BOUNDARY_AMBIGUOUS"
NONCONVERGED = "NONCONVERGED"
COUNT_MISMATCH = "COUNT_MISMATCH"
RESIDUAL_FAIL = "RESIDUAL_FAIL"


class TruncatedSupportWarning(UserWarning):
    """The test function reaches beyond the disc where zeros were located."""


# --------------------------------------------------------------------------
# Aberth-Ehrlich iteration


@njit(cache=True)
def _newton_ratio(a, z):
    """Return (p/p', log|p|, log of the Horner rounding bound) at z.

    For ``|z| > 1`` the reversed polynomial is evaluated at ``1/z`` so that
    high degrees do not overflow; the logs are shifted back to ``p``'s scale.
    """
    n = a.shape[0] - 1
    if abs(z) <= 1.0:
        p = a[n]
        dp = 0j
        bound = abs(a[n])
        az = abs(z)
        for k in range(n - 1, -1, -1):
            dp = dp * z + p
            p = p * z + a[k]
            bound = bound * az + abs(a[k])
        lp = np.log(abs(p)) if p != 0 else -np.inf
        lb = np.log(bound)
        if dp == 0:
            return 0j, lp, lb
        return p / dp, lp, lb
    y = 1.0 / z
    q = a[0]
    dq = 0j
    bound = abs(a[0])
    ay = abs(y)
    for k in range(1, n + 1):
        dq = dq * y + q
        q = q * y + a[k]
        bound = bound * ay + abs(a[k])
    shift = n * np.log(abs(z))
    lq = np.log(abs(q)) + shift if q != 0 else -np.inf
    lb = np.log(bound) + shift
    den = n * q - y * dq
    if den == 0:
        return 0j, lq, lb
    return z * q / den, lq, lb


@njit(cache=True)
def _aberth_core(a, z, maxiter, tol):
    n = z.shape[0]
    done = np.zeros(n, dtype=np.bool_)
    it = 0
    for it in range(1, maxiter + 1):
        active = 0
        for i in range(n):
            if done[i]:
                continue
            active += 1
            ratio, lp, lb = _newton_ratio(a, z[i])
            if lp <= lb + np.log(8.0 * (n + 1) * 2.220446049250313e-16):
                done[i] = True
                continue
            s = 0j
            for j in range(n):
                if j != i:
                    s += 1.0 / (z[i] - z[j])
            w = ratio / (1.0 - ratio * s)
            z[i] -= w
            if abs(w) <= tol * max(abs(z[i]), 1e-300):
                done[i] = True
        if active == 0:
            return z, it, True
    conv = True
    for i in range(n):
        if not done[i]:
            conv = False
    return z, it, conv


def _polygon_start(a: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Starting points from the upper convex hull of ``(k, log|a_k|)``."""
    n = len(a) - 1
    with np.errstate(divide="ignore"):
        la = np.log(np.abs(a))
    hull = []
    for k in range(n + 1):
        if not np.isfinite(la[k]):
            continue
        while len(hull) >= 2:
            k1, k2 = hull[-2], hull[-1]
            # drop k2 when it lies on or below the chord k1 -> k
            if (la[k2] - la[k1]) * (k - k1) <= (la[k] - la[k1]) * (k2 - k1):
                hull.pop()
            else:
                break
        hull.append(k)
    z = np.empty(n, dtype=complex)
    pos = 0
    sigma = rng.uniform(0, 2 * np.pi)
    for k1, k2 in zip(hull[:-1], hull[1:]):
        m = k2 - k1
        u = math.exp((la[k1] - la[k2]) / m)
        ang = 2 * np.pi * np.arange(m) / m + 2 * np.pi * k1 / n + sigma
        z[pos : pos + m] = u * np.exp(1j * ang)
        pos += m
    return z


def _circle_start(a: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = len(a) - 1
    u = (abs(a[0]) / abs(a[n])) ** (1.0 / n)
    ang = 2 * np.pi * np.arange(n) / n + rng.uniform(0, 2 * np.pi) + rng.uniform(-0.1, 0.1, n) / n
    return u * np.exp(1j * ang)


def aberth(a, maxiter: int = 200, tol: float = 1e-13, init: str = "polygon", seed: int = 0):
    """All roots of ``sum_k a[k] z^k`` (ascending, ``a[-1] != 0``, ``a[0] != 0``).

    Returns ``(roots, iterations, converged)``.  ``init="polygon"`` places
    starting points on the circles of the Newton polygon of ``log|a_k|``;
    ``init="circle"`` uses a single circle of radius ``|a_0/a_n|^(1/n)``.
    A root stops moving once its correction is below ``tol`` relative or its
    residual reaches the rounding level of the Horner evaluation.
    """
    a = np.ascontiguousarray(a, dtype=complex)
    n = len(a) - 1
    if n < 1:
        return np.empty(0, complex), 0, True
    if n == 1:
        return np.array([-a[0] / a[1]]), 0, True
    rng = np.random.default_rng(seed)
    z0 = _polygon_start(a, rng) if init == "polygon" else _circle_start(a, rng)
    z, it, conv = _aberth_core(a, z0.copy(), maxiter, tol)
    return z, it, conv


@njit(cache=True)
def _polish(a, z, steps):
    """A few guarded Newton steps: a step is kept only if it lowers |p|."""
    for _ in range(steps):
        for i in range(z.shape[0]):
            ratio, lp, _ = _newton_ratio(a, z[i])
            cand = z[i] - ratio
            if not np.isfinite(cand.real) or not np.isfinite(cand.imag):
                continue
            _, lc, _ = _newton_ratio(a, cand)
            if lc <= lp:
                z[i] = cand
    return z


@njit(cache=True)
def _log_inclusion_radii(a, z):
    """log of ``n |p(z_i)| / |a_n prod_{j!=i}(z_i - z_j)|`` (Gershgorin-type)."""
    n = z.shape[0]
    out = np.empty(n)
    la = np.log(abs(a[n]))
    for i in range(n):
        _, lp, _ = _newton_ratio(a, z[i])
        s = 0.0
        for j in range(n):
            if j != i:
                s += np.log(abs(z[i] - z[j]))
        out[i] = np.log(n) + lp - la - s
    return out


def _cluster(z, radii, tol):
    """Groups of approximations closer than ``tol + r_i + r_j`` (single linkage)."""
    from scipy.sparse.csgraph import connected_components

    if len(z) == 0:
        return []
    adj = np.abs(z[:, None] - z[None, :]) <= tol + radii[:, None] + radii[None, :]
    ncomp, labels = connected_components(adj, directed=False)
    return [np.nonzero(labels == c)[0] for c in range(ncomp)]


# --------------------------------------------------------------------------
# argument principle


def contour_size(N: int) -> int:
    return max(256, 32 * int(N))


def _scaled_coefficients(space, eta, r):
    """``eta_k c_k r^k e^{-phi(r)}`` along the last axis, computed in logs."""
    N = eta.shape[-1] - 1
    logc = model.log_basis_coefficients(space, N)
    k = np.arange(N + 1)
    logs = logc + k * math.log(r) - float(model.phi(space, r))
    return eta * np.exp(logs)


def _winding(b, M):
    N = b.shape[1] - 1
    k = np.arange(N + 1)
    vals = np.fft.ifft(b, n=M, axis=1) * M
    dvals = np.fft.ifft(b * k, n=M, axis=1) * M
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        wind = np.mean(dvals / vals, axis=1)
        # Newton distance |psi / psi'| to the nearest zero, relative to r
        dist = np.min(np.abs(vals) / np.abs(dvals), axis=1)
    counts = np.rint(wind.real)
    dev = np.abs(wind - counts)
    dev = np.where(np.isfinite(dev), dev, np.inf)
    return counts, dev, dist


def count_zeros_batch(space, eta, r: float, M: int | None = None, max_nodes: int = 1 << 21):
    """Argument-principle counts for a batch of coefficient rows.

    Rows whose pre-rounding value is 0.1 or more away from an integer are
    recomputed with twice as many contour nodes, up to ``max_nodes``.
    Returns ``(counts, status, deviation)`` where ``status`` is 0 (ok),
    1 (a zero within ``1e-8 r`` of the contour) or 2 (still unresolved).
    """
    eta = np.atleast_2d(np.asarray(eta, dtype=complex))
    N = eta.shape[1] - 1
    M = contour_size(N) if M is None else int(M)
    if M <= N:
        raise ArgumentError("contour must have more nodes than the degree")
    b = _scaled_coefficients(space, eta, r)
    counts, dev, dist = _winding(b, M)
    todo = np.nonzero((dev >= 0.1) & (dist >= 1e-8))[0]
    while len(todo) and 2 * M <= max_nodes:
        M *= 2
        c2, d2, s2 = _winding(b[todo], M)
        counts[todo], dev[todo], dist[todo] = c2, d2, s2
        todo = todo[(d2 >= 0.1) & (s2 >= 1e-8)]
    status = np.zeros(len(eta), dtype=np.int8)
    status[dev >= 0.1] = 2
    status[~(dist >= 1e-8)] = 1
    counts = np.where(np.isfinite(counts), counts, -1).astype(np.int64)
    return counts, status, dev


def count_zeros_argument(sample: SectionSample, r: float, M: int | None = None) -> int:
    """Number of zeros of the truncated section in ``|z| < r``.

    ``(1/2 pi i) \\oint psi'/psi dz`` by the trapezoid rule on ``M`` nodes
    (default ``max(256, 32 N)``), rounded to the nearest integer.
    """
    if not r > 0:
        raise ArgumentError("radius must be positive")
    sample.space.check_domain(np.array(r))
    counts, status, dev = count_zeros_batch(sample.space, sample.coefficients[None, :], r, M)
    if status[0] == 1:
        raise ContourError("a zero lies within 1e-8 r of the contour", code="zeros.contour_near_zero")
    if status[0] == 2:
        raise ContourError(
            f"winding number not resolved (deviation {dev[0]:.3g})",
            code="zeros.contour_unresolved",
            deviation=float(dev[0]),
        )
    return int(counts[0])


# --------------------------------------------------------------------------
# zero sets


@dataclass
class ZeroSet:
    positions: np.ndarray
    multiplicities: np.ndarray
    domain_radius: float
    argument_count: int | None = None
    max_newton_residual: float = 0.0
    status: str = VALID
    diagnostics: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return int(np.sum(self.multiplicities))

    def to_dict(self) -> dict:
        return {
            "roots": [
                {"position": [float(z.real), float(z.imag)], "multiplicity": int(m)}
                for z, m in zip(self.positions, self.multiplicities)
            ],
            "domain_radius": self.domain_radius,
            "validation": {
                "argument_count": self.argument_count,
                "max_newton_residual": self.max_newton_residual,
                "status": self.status,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def empty(cls, r: float) -> "ZeroSet":
        return cls(np.empty(0, complex), np.empty(0, int), r, 0, 0.0, VALID)


def roots_in_disk(
    sample: SectionSample,
    r: float,
    maxiter: int = 200,
    tol: float = 1e-13,
    init: str = "polygon",
) -> ZeroSet:
    """Zeros of the truncated section in ``|z| <= r`` with multiplicities.

    The status is ``VALID`` only if the located multiplicities add up to the
    argument-principle count and every residual passes.
    """
    if r > sample.certificate.radius * (1 + 1e-5):
        raise ArgumentError("disc radius exceeds the truncation certificate radius")
    a = frame_coefficients(sample)
    nz = np.nonzero(a)[0]
    if len(nz) == 0:
        raise ArgumentError("section is identically zero")
    a = a[: nz[-1] + 1]
    m0 = int(nz[0])
    a = a[m0:]
    deg = len(a) - 1 + m0
    if deg > MAX_DEGREE:
        raise ArgumentError(f"degree {deg} exceeds the cap {MAX_DEGREE}", code="zeros.degree_cap")

    roots, it, conv = aberth(a, maxiter=maxiter, tol=tol, init=init)
    diagnostics = {"iterations": it, "degree": deg}
    if len(roots):
        roots = _polish(a, roots.copy(), 3)
        with np.errstate(over="ignore"):
            radii = np.exp(_log_inclusion_radii(a, roots))
        radii = np.where(np.isfinite(radii), radii, np.inf)
        # inclusion radii only serve as a clustering aid near the disc
        radii = np.minimum(radii, 1e-4 * r)
        near_disc = np.abs(roots) <= r * (1 + 1e-3)
        groups = _cluster(roots[near_disc], radii[near_disc], 1e-8 * r)
        roots = roots[near_disc]
    else:
        groups = []
    pos = [np.mean(roots[g]) for g in groups]
    mult = [len(g) for g in groups]
    if m0:
        pos.append(0j)
        mult.append(m0)
    pos = np.array(pos, dtype=complex)
    mult = np.array(mult, dtype=int)

    inside = np.abs(pos) <= r
    near = np.abs(np.abs(pos) - r) <= 1e-8 * r
    zs = ZeroSet(pos[inside], mult[inside], float(r), diagnostics=diagnostics)

    # residual relative to the size of the section on the circle
    ring = r * np.exp(2j * np.pi * np.arange(256) / 256)
    scale = float(np.max(np.abs(eval_section(sample, ring).frame_value)))
    if len(zs.positions):
        res = np.abs(eval_section(sample, zs.positions).frame_value) / scale
        zs.max_newton_residual = float(np.max(res))
    if not conv:
        zs.status = NONCONVERGED
        return zs
    if np.any(near):
        zs.status = BOUNDARY_AMBIGUOUS
        return zs
    try:
        zs.argument_count = count_zeros_argument(sample, r)
    except ContourError as exc:
        zs.status = BOUNDARY_AMBIGUOUS
        zs.diagnostics["contour"] = exc.code
        return zs
    if zs.argument_count != zs.total:
        zs.status = COUNT_MISMATCH
    elif zs.max_newton_residual > 1e-9:
        zs.status = RESIDUAL_FAIL
    return zs


@dataclass
class TestForm:
    """A real compactly supported function on C, vanishing for ``|z| >= support_radius``."""

    func: Callable
    support_radius: float
    name: str = "custom"

    __test__ = False  # not a pytest class

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        v = np.asarray(self.func(z), dtype=float)
        v = np.where(np.abs(z) < self.support_radius, v, 0.0)
        return float(v) if v.ndim == 0 else v

    @classmethod
    def bump(cls, R: float) -> "TestForm":
        """``(1 - |z|^2/R^2)^2`` on ``|z| <= R``."""
        return cls(lambda z: (1.0 - np.abs(z) ** 2 / R**2) ** 2, float(R), f"bump(R={R})")

    @classmethod
    def zero(cls, R: float = 1.0) -> "TestForm":
        return cls(lambda z: np.zeros(np.shape(z)), float(R), "zero")

    def bump_integral(self) -> float:
        """Exact ``int phi dA / pi`` for the bump: ``R^2/3``."""
        return self.support_radius**2 / 3.0


def pair_divisor(zs: ZeroSet, form: TestForm) -> float:
    """``sum_i m_i phi(z_i)``."""
    if zs.status != VALID:
        raise ArgumentError(f"zero set is not valid ({zs.status})", code="zeros.invalid_set")
    if form.support_radius > zs.domain_radius * (1 + 1e-12):
        warnings.warn(
            "TRUNCATED_SUPPORT: test function extends past the located disc",
            TruncatedSupportWarning,
            stacklevel=2,
        )
    if len(zs.positions) == 0:
        return 0.0
    return float(np.sum(zs.multiplicities * form(zs.positions)))


def hole_indicator(sample: SectionSample, r: float) -> bool:
    """True iff the section has no zero in ``|z| < r``."""
    return count_zeros_argument(sample, r) == 0


def volume_codim1(zs: ZeroSet, region_radius: float) -> float:
    """In one variable the codimension-one volume is the zero count in the region."""
    if zs.status != VALID:
        raise ArgumentError(f"zero set is not valid ({zs.status})", code="zeros.invalid_set")
    inside = np.abs(zs.positions) <= region_radius
    return float(np.sum(zs.multiplicities[inside]))
