"""Real symbols ``f(z)`` for Toeplitz operators.

A symbol carries its evaluator, Wirtinger derivative oracles up to total
order 4 and decay information used to cut off radial quadrature.  Symbols
built from a SymPy expression in the independent variables ``z`` and ``zb``
get exact derivatives; plain callables fall back to Richardson-extrapolated
central differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import sympy as sp

from .errors import ArgumentError

__all__ = [
    "SymbolDescriptor",
    "Z",
    "ZB",
    "REGISTRY",
    "get_symbol",
    "gaussian",
    "quadratic_gaussian",
    "re_gaussian",
    "constant",
    "from_expression",
    "fd_wirtinger",
]

Z, ZB = sp.symbols("z zb")
MAX_ORDER = 4

# tail level used to place effective support radii
_TAIL = 1e-17


def _stencil(order: int, npts: int) -> np.ndarray:
    """Central finite-difference weights for the ``order``-th derivative."""
    offs = np.arange(npts) - (npts - 1) // 2
    V = np.vander(offs, npts, increasing=True).T.astype(float)
    rhs = np.zeros(npts)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(V, rhs)


def _partial(func, z, i, j, h):
    """``d^i/dx^i d^j/dy^j`` of ``func`` at ``z`` by a tensor stencil."""
    ni = 2 * ((i + 1) // 2) + 1 if i else 1
    nj = 2 * ((j + 1) // 2) + 1 if j else 1
    wi = _stencil(i, ni) if i else np.ones(1)
    wj = _stencil(j, nj) if j else np.ones(1)
    oi = np.arange(ni) - (ni - 1) // 2
    oj = np.arange(nj) - (nj - 1) // 2
    acc = 0.0
    for a, wa in zip(oi, wi):
        for b, wb in zip(oj, wj):
            if wa * wb != 0.0:
                acc = acc + wa * wb * func(z + a * h + 1j * b * h)
    return acc / h ** (i + j)


def fd_wirtinger(func, a: int, b: int, z, h: float = 1e-3):
    """``d_z^a d_zb^b func`` by central differences with one Richardson step.

    Uses ``d_z = (d_x - i d_y)/2`` and ``d_zb = (d_x + i d_y)/2``; the
    extrapolation from steps ``h`` and ``h/2`` removes the ``h^2`` error.
    Higher orders use a larger step so rounding does not dominate.
    """
    z = np.asarray(z, dtype=complex)
    if a == b == 0:
        return np.asarray(func(z), dtype=complex)
    # (X - iY)^a (X + iY)^b expanded as sum c_ij X^i Y^j
    poly = {(0, 0): 1.0 + 0j}
    for sgn in [-1j] * a + [1j] * b:
        nxt: dict = {}
        for (i, j), c in poly.items():
            nxt[(i + 1, j)] = nxt.get((i + 1, j), 0) + c
            nxt[(i, j + 1)] = nxt.get((i, j + 1), 0) + c * sgn
        poly = nxt

    # balances h^4 truncation (after Richardson) against eps / h^(a+b) rounding
    step0 = max(h, np.finfo(float).eps ** (1.0 / (a + b + 4)))

    def est(step):
        return sum(c * _partial(func, z, i, j, step) for (i, j), c in poly.items() if c != 0)

    coarse = est(step0)
    fine = est(step0 / 2)
    return (4.0 * fine - coarse) / 3.0 / 2 ** (a + b)


@dataclass(eq=False)
class SymbolDescriptor:
    """A bounded real symbol with derivative oracles.

    Parameters
    ----------
    name : str
    func : callable
        Vectorized ``z -> f(z)`` (real values).
    radial : bool
        ``f(z)`` depends on ``|z|`` only.
    support_radius : float
        ``sup_{|z| > R_f} |f| <= tail_bound``.
    tail_bound : float
    sup_bound : float
        Declared bound on ``sup |f|``.
    nonnegative : bool
    expr : sympy expression in ``Z``, ``ZB``, optional
        Enables exact Wirtinger derivatives.
    """

    name: str
    func: Callable
    radial: bool = False
    support_radius: float = math.inf
    tail_bound: float = 0.0
    sup_bound: float = math.inf
    nonnegative: bool = False
    expr: sp.Expr | None = None
    fd_step: float = 1e-3
    _cache: dict = field(default_factory=dict, repr=False)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.real(np.broadcast_to(self.func(z), z.shape)).astype(float)
        return float(out) if out.ndim == 0 else out

    @property
    def analytic(self) -> bool:
        return self.expr is not None

    def derivative(self, a: int, b: int, z):
        """``d_z^a d_zb^b f`` at ``z`` (complex), total order at most 4."""
        if a < 0 or b < 0 or a + b > MAX_ORDER:
            raise ArgumentError(f"derivative order ({a}, {b}) not available")
        z = np.asarray(z, dtype=complex)
        if self.expr is None:
            out = fd_wirtinger(self.func, a, b, z, self.fd_step)
        else:
            key = (a, b)
            if key not in self._cache:
                d = sp.diff(self.expr, Z, a, ZB, b) if a + b else self.expr
                self._cache[key] = sp.lambdify((Z, ZB), d, "numpy")
            out = np.broadcast_to(self._cache[key](z, np.conj(z)), z.shape).astype(complex)
        return complex(out) if np.ndim(out) == 0 else out

    def laplacian(self, z):
        """Euclidean Laplacian ``4 d_z d_zb f``."""
        return np.real(4.0 * np.asarray(self.derivative(1, 1, z)))

    def check_bounded(self, radius: float | None = None, n: int = 201) -> bool:
        """Test the declared sup bound on an ``n x n`` grid."""
        if radius is None:
            radius = self.support_radius if math.isfinite(self.support_radius) else 10.0
        x = np.linspace(-radius, radius, n)
        vals = np.abs(self(x[:, None] + 1j * x[None, :]))
        return bool(np.max(vals) <= self.sup_bound * (1 + 1e-12))

    def check_integrable(self, space, rtol: float = 1e-8, max_angles: int = 1 << 15) -> tuple[bool, float, float]:
        """Whether ``int |f| P dV`` converges under refinement.

        Polar tensor rule on the effective support, doubling radial panels and
        angular nodes together until two successive values agree to ``rtol``.
        Returns ``(ok, value, relative_change)``.
        """
        from . import model
        from .quadrature import panel_nodes

        if space.kind == "disc":
            R = min(self.support_radius, 1.0)
        elif space.kind == "fock":
            R = self.support_radius
        else:
            raise ArgumentError("integrability needs a Fock or disc space")
        if not math.isfinite(R):
            return False, math.inf, math.inf
        vol = 1.0 / math.pi if space.kind == "fock" else 1.0

        def value(panels, m):
            r, w = panel_nodes(0.0, R, panels)
            th = 2 * math.pi * (np.arange(m) + 0.5) / m
            total = 0.0
            for rows in np.array_split(np.arange(r.size), max(1, r.size * m // (1 << 22))):
                zz = r[rows, None] * np.exp(1j * th[None, :])
                if space.kind == "disc":
                    zz = zz * (1 - 1e-15)
                g = np.abs(self(zz)) * model.kernel_diag(space, zz)
                total += np.sum(w[rows, None] * r[rows, None] * g)
            return vol * (2 * math.pi / m) * total

        panels, m = 8, 64
        prev = value(panels, m)
        while True:
            panels, m = min(2 * panels, 64), 2 * m
            cur = value(panels, m)
            change = abs(cur - prev) / max(abs(cur), 1e-300)
            if change <= rtol or m >= max_angles:
                return bool(change <= rtol), float(cur), float(change)
            prev = cur

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "radial": self.radial,
            "support_radius": self.support_radius if math.isfinite(self.support_radius) else None,
            "tail_bound": self.tail_bound,
            "sup_bound": self.sup_bound if math.isfinite(self.sup_bound) else None,
            "nonnegative": self.nonnegative,
            "expression": None if self.expr is None else str(self.expr),
        }


def _cutoff(profile, level: float = _TAIL, rmax: float = 200.0) -> float:
    """Smallest ``R`` past which the radial profile stays below ``level``."""
    r = np.linspace(0.0, rmax, 200001)
    big = np.nonzero(np.abs(profile(r)) > level)[0]
    return float(r[big[-1] + 1]) if big.size else 0.0


def from_expression(
    expr,
    name: str | None = None,
    radial: bool = False,
    support_radius: float | None = None,
    sup_bound: float | None = None,
    nonnegative: bool = False,
) -> SymbolDescriptor:
    """Symbol from a SymPy expression (or string) in ``z`` and ``zb``.

    For radial expressions the support radius is located numerically when
    not given.
    """
    if isinstance(expr, str):
        try:
            expr = sp.sympify(expr, locals={"z": Z, "zb": ZB})
        except (sp.SympifyError, SyntaxError, TypeError) as exc:
            raise ArgumentError(f"cannot parse symbol expression: {exc}") from None
    extra = expr.free_symbols - {Z, ZB}
    if extra:
        raise ArgumentError(f"symbol expression has free parameters {sorted(map(str, extra))}")
    f = sp.lambdify((Z, ZB), expr, "numpy")

    def func(z):
        return np.real(f(z, np.conj(z)))

    if support_radius is None:
        support_radius = _cutoff(lambda r: func(r + 0j)) if radial else math.inf
    if sup_bound is None:
        sup_bound = math.inf
    return SymbolDescriptor(
        name=name or str(expr),
        func=func,
        radial=radial,
        support_radius=support_radius,
        tail_bound=_TAIL if math.isfinite(support_radius) else 0.0,
        sup_bound=sup_bound,
        nonnegative=nonnegative,
        expr=expr,
    )


def gaussian() -> SymbolDescriptor:
    """``exp(-|z|^2)``."""
    return from_expression(sp.exp(-Z * ZB), "gauss", radial=True, sup_bound=1.0, nonnegative=True)


def quadratic_gaussian() -> SymbolDescriptor:
    """``|z|^2 exp(-|z|^2)``, vanishing to order 2 at the origin."""
    return from_expression(
        Z * ZB * sp.exp(-Z * ZB), "quad_gauss", radial=True, sup_bound=math.exp(-1.0), nonnegative=True
    )


def re_gaussian() -> SymbolDescriptor:
    """``Re(z) exp(-|z|^2)``, odd under ``z -> -z``."""
    s = from_expression((Z + ZB) / 2 * sp.exp(-Z * ZB), "re_gauss", sup_bound=math.exp(-0.5) / math.sqrt(2))
    s.support_radius = _cutoff(lambda r: r * np.exp(-r * r))
    s.tail_bound = _TAIL
    return s


def constant(c: float = 1.0) -> SymbolDescriptor:
    name = "one" if c == 1 else ("zero" if c == 0 else f"const({c})")
    return from_expression(sp.Float(c) if c not in (0, 1) else sp.Integer(int(c)), name, radial=True,
                           support_radius=math.inf, sup_bound=abs(c), nonnegative=c >= 0)


REGISTRY: dict[str, Callable[[], SymbolDescriptor]] = {
    "gauss": gaussian,
    "quad_gauss": quadratic_gaussian,
    "re_gauss": re_gaussian,
    "one": lambda: constant(1.0),
    "zero": lambda: constant(0.0),
}


def get_symbol(name: str) -> SymbolDescriptor:
    """Registered symbol by name, or ``"expr:<sympy expression>"``."""
    if name.startswith("expr:"):
        return from_expression(name[5:])
    try:
        return REGISTRY[name]()
    except KeyError:
        raise ArgumentError(f"unknown symbol {name!r}; known: {sorted(REGISTRY)}") from None
