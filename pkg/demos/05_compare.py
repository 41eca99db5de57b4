# %% [markdown]
# # Simulation against theory
#
# The harness runs seeded replicates and checks each quantity against its
# limit. The same thing is available as ``cmdfs compare`` on the command line.

# %%
from cmdfs import ExperimentConfig, run_experiment

cfg = ExperimentConfig(dist="poisson:3", N=10**4, reps=4, seed=1, alphas=[0.1, 0.3])
report = run_experiment(cfg)

# %%
for name, crit in sorted(report.criteria.items()):
    print(f"{name:16s} {crit['value']:.4f} vs {crit['threshold']}  ({crit['rule']})  {'pass' if crit['passed'] else 'FAIL'}")
print("flags:", report.flags)
print("all passed:", report.all_passed)
