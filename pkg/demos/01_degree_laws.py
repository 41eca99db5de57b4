# %% [markdown]
# # Degree laws and sequences
#
# Sample a degree sequence from a named law, check it against the law, and
# look at the moment assumptions that the rest of the package relies on.

# %%
import numpy as np

from cmdfs import DegreeDistribution, empirical_distribution, sample_degree_sequence, validate_assumptions

laws = [
    DegreeDistribution.poisson(3),
    DegreeDistribution.dirac(5),
    DegreeDistribution.geometric(0.4),
    DegreeDistribution.power_law(2.5, 2),
]

# %%
for law in laws:
    seq = sample_degree_sequence(law, 10**5, seed=1)
    emp = empirical_distribution(seq)
    report = validate_assumptions(seq, dist=law)
    print(f"{law!r:28s} mean {law.mean:6.3f}  empirical {emp.mean:6.3f}  "
          f"TV {law.tv_distance(emp):.4f}  assumptions ok: {report.ok}")

# %% [markdown]
# The power law with exponent 2.5 has an infinite second moment, so it fails
# the moment check by design.
#
# Sequences always have an even total, so the half-edges can be paired.

# %%
seq = sample_degree_sequence(DegreeDistribution.poisson(3), 11, seed=4)
print(seq.degrees, "total", seq.total)
print(np.bincount(seq.degrees))
