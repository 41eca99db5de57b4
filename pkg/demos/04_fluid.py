# %% [markdown]
# # Fluid limit of the ladder process
#
# Between ladder times the densities of sleeping vertices of each degree
# follow an ODE. The primed system has a closed-form solution to compare with.

# %%
import numpy as np

from cmdfs import (
    DegreeDistribution,
    TruncationSpec,
    closed_form_coeffs,
    solve_system,
    solve_system_prime,
    time_change,
    verify_truncated_identity,
)

law = DegreeDistribution.poisson(3)
spec = TruncationSpec.for_distribution(law, 1e-4)
print("truncation degree", spec.delta_cap)

# %%
traj = solve_system(law, spec, 2.0, 1e-3)
print("stopped:", traj.stop_reason, "at ladder time", round(traj.t_max, 4))
change = time_change(traj)
print("explored fraction at the stop", round(change.alpha[-1], 4))

# %%
primed = solve_system_prime(law, spec, 0.5, 1e-3)
width = primed.states.shape[1] - 1
gap = max(np.abs(z - closed_form_coeffs(law, t, width)).max() for t, z in zip(primed.t, primed.states))
print("worst gap to the closed form", gap)

# %%
print(verify_truncated_identity(law, spec, 0.3).to_dict())
