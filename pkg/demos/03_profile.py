# %% [markdown]
# # The limiting contour
#
# The rescaled contour converges to a deterministic curve built from the
# generating function of the degree law.

# %%
import numpy as np

from cmdfs import GenFun, DegreeDistribution, alpha_c, limit_profile, solve_rho

for law in [DegreeDistribution.poisson(3), DegreeDistribution.dirac(5), DegreeDistribution.geometric(0.4)]:
    gf = GenFun(law)
    prof = limit_profile(gf, 128)
    print(f"{law!r:20s} rho {solve_rho(gf):.4f}  alpha_c {alpha_c(gf):.4f}  "
          f"peak height {prof.h_max:.5f} at t={prof.peak_time:.4f}")

# %%
prof = limit_profile(GenFun(DegreeDistribution.poisson(3)), 128)
for t in np.linspace(0, 2, 9):
    print(f"t={t:.2f}  h={float(prof.h(t)):.4f}")
