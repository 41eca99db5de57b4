# %% [markdown]
# # Depth-first exploration
#
# The graph is revealed while it is explored. The contour process is the
# height of the DFS stack; its longest stretch gives a path in the graph.

# %%
import numpy as np

from cmdfs import (
    DegreeDistribution,
    Exploration,
    classify_half_edges,
    explore_and_build,
    longest_path_lower_bound,
    sample_degree_sequence,
)

# %% [markdown]
# A small run, one step at a time, with the pure-Python reference walker.

# %%
ex = Exploration([3, 2, 2, 1, 2], seed=0)
while not ex.done:
    ex.step()
    print(f"height {ex.height}  sleeping {sorted(ex.sleeping)}")
print("contour", ex.contour)

# %% [markdown]
# A large run with the compiled kernel, plus snapshots of the sleeping-vertex
# degrees after a fraction alpha of the graph has been explored.

# %%
n = 10**5
seq = sample_degree_sequence(DegreeDistribution.poisson(3), n, seed=2)
trace, hists = explore_and_build(seq, 3, [0.1, 0.3])
print("giant component fraction", round(trace.giant_fraction(), 4))
print("max height / N", trace.contour.max() / n)
print("longest path lower bound / N", longest_path_lower_bound(trace) / n)
for h in hists:
    print(f"alpha={h.alpha}: sleeping-degree law {np.round(h.masses()[:6], 4)}")

# %% [markdown]
# Half-edges split into those in dangling trees and those in the 2-core-like part.

# %%
cls = classify_half_edges(trace.edges, n, 0.3, seq.degrees)
print("surviving fraction", round(cls.surv_fraction(), 4))
