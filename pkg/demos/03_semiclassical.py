# %% [markdown]
# Semiclassical behaviour of T_f^2(x, x) as p grows.
#
# Where f is positive, T^2 grows like p.  At a point where f vanishes to
# order two, T^2 decays like 1/p and the Planck-scale picture is governed by
# the model function F.

# %%
import math

from bergzeros import semiclassical as sc
from bergzeros import symbols

gauss = symbols.gaussian()
quad = symbols.quadratic_gaussian()

b = sc.b_coefficients(gauss, 0.0)
print("b coefficients of exp(-|z|^2) at 0:", tuple(b))
for row in sc.calibration_table(gauss, 0.0, [10, 50, 100]):
    print(f"  p={row['p']:4d} exact {row['exact']:.10f} expansion {row['formula']:.10f} residual {row['residual']:+.2e}")

# %% growth exponents
p_list = range(20, 201, 20)
for f in (gauss, quad):
    fit = sc.t2_growth_exponent(p_list, f, 0.0)
    print(f"{f.name:10s} slope {fit.slope:+.4f} (straight line {fit.plain_slope:+.4f})")

# %% the order-2 model at the origin
data = sc.order2_data(quad, 0.0)
print("mu =", data.mu, "= 1/pi^2:", math.isclose(data.mu, 1 / math.pi**2))
print("F(0.5) =", data.F(0.5), " density of i ddbar log F at 0 =", sc.F_log_density(data, 0.0), "= 3 pi")

# %% Planck-scale pairing at p = 100
for R in (0.5, 1.0, 2.0):
    res = sc.planck_pairing(quad, 0.0, R, 100, data=data)
    print(f"R={R}: numeric {res.numeric:.4f} predicted {res.predicted:.4f} ratio {res.ratio:.3f}")
