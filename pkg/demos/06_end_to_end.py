"""
End to end: route, then design the code
=======================================

For each K, route as many distinct descriptions as possible, count what each
node receives, then fit the PET profile. Stop once the distortion no longer
drops. Finally alternate routing for the current code and refitting the code.
"""

import numpy as np

from jnsc.experiments import ExperimentConfig, run_jnsc, run_refinement, run_size_sweep

cfg = ExperimentConfig(n_nodes=50, in_degree_draws=3, c_max=3, k_max=8, seeds=[1, 2, 3], time_limit=3.0)
report = run_jnsc(cfg)
for seed in cfg.seeds:
    print(f"seed {seed}:", " ".join(f"{d:.4f}" for _, d in report.series(seed)),
          "| converged at K =", report.converged_at.get(seed))
last = max((c for c in report.cells if c.seed == 1), key=lambda c: c.K)
print("seed 1 profile:", np.round(last.y, 3))

# larger networks deliver a larger share of the descriptions
sweep = run_size_sweep(ExperimentConfig(seeds=[1, 2, 3], sizes=[50, 100, 200], time_limit=3.0), K=6)
for N, cdf in sorted(sweep.cdf.items()):
    print(f"N={N}: fraction with <= k descriptions", np.round(cdf, 3))

ref = run_refinement(ExperimentConfig(n_nodes=30, k_max=5, seeds=[1, 2], time_limit=3.0))
for seed, r in ref.refinement.items():
    print(f"refinement seed {seed}: rounds {r['rounds']}, trace {np.round(r['trace'], 6)}")
