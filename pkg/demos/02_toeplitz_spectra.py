# %% [markdown]
# Toeplitz operators T_f = P f P on the Fock model.
#
# Radial symbols are diagonal in the monomial basis.  The odd symbol
# Re(z) e^{-|z|^2} has a symmetric spectrum and, after truncation, an exact
# kernel vector.

# %%
import numpy as np

from bergzeros import symbols, toeplitz
from bergzeros.model import ModelSpace
from bergzeros.randgauss import RngStream

space = ModelSpace.fock(1)
for name in ("gauss", "quad_gauss", "re_gauss"):
    op = toeplitz.spectrum(toeplitz.build_toeplitz(space, symbols.get_symbol(name), 20))
    tr = toeplitz.trace_and_hs(op)
    print(f"{name:10s} trace {tr.trace:+.3e}  int f P dV {tr.independent_trace:+.3e}  hs {tr.hs_norm:.6f}")
    print("           top eigenvalues", np.round(op.eigenvalues[:4], 6))

# %% the null direction of the odd symbol
split = toeplitz.kernel_split(space, symbols.re_gaussian(), 20)
print("null rank", split.null_rank, "gap ratio", f"{split.gap_ratio:.3g}", "sandwich", split.sandwich_ok)

# %% a Wiener-randomized section and its expected zero density
op = toeplitz.spectrum(toeplitz.build_toeplitz(space, symbols.gaussian(), 40))
s = toeplitz.sample_wiener_section(op, RngStream(7, 0))
print("first coefficients", np.round(s.coefficients[:4], 4))
r = np.array([0.0, 0.5, 1.0, 2.0])
print("gamma_f density", toeplitz.gamma_f_density(op, r), "vs 1/(4 pi) =", 1 / (4 * np.pi))
