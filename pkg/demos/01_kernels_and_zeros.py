# %% [markdown]
# Bergman kernels and zeros of Gaussian sections on the Fock model.
#
# At level p the Fock space has the orthonormal basis p^{(k+1)/2} z^k / sqrt(k!)
# against the weight e^{-p|z|^2}.  The kernel function is constant, so the
# expected zero density of the Gaussian section is p/pi everywhere.

# %%
import numpy as np

from bergzeros import model, zeros
from bergzeros.experiments import ExperimentConfig, run_experiment
from bergzeros.model import ModelSpace
from bergzeros.randgauss import RngStream, sample_section

space = ModelSpace.fock(3)
z = np.array([0.0, 0.5 + 0.5j, 1.5 - 1.0j])
cert = model.truncation_order(space, 2.0, 1e-12)
print("order from the certificate:", cert.order)
print("closed form  :", model.kernel_diag(space, z))
print("partial sum  :", model.kernel_diag(space, z, cert.order))

# %% the disc model for comparison
disc = ModelSpace.disc()
print("disc kernel at 0.5:", model.kernel_diag(disc, 0.5), "density:", model.ek_density(disc, 0.5))

# %% one random section and its zeros in |z| <= 1.5
sample = sample_section(space, model.truncation_order(space, 1.5, 1e-12), RngStream(2024, 0))
zs = zeros.roots_in_disk(sample, 1.5)
print(zs.status, "zeros:", zs.total, "argument count:", zs.argument_count)
for pos in zs.positions:
    print(f"  {pos.real:+.6f} {pos.imag:+.6f}i")

# %% expected count p r^2 by Monte Carlo
rep = run_experiment(ExperimentConfig(kind="zero_count", p=3, radius=1.0, trials=5000, seed=1))
print(f"mean {rep.results['mean']:.4f} +- {rep.results['se']:.4f}, expected {rep.results['expected']}")
