"""How separation quality and constraint count depend on noise.

Runs the three-level study (1e-5, 1 and 3 percent) for a few seeds and
prints one row per run.  Higher noise permits a looser fit, so fewer
constraints are needed, at the price of a larger reconstruction error.
"""

import sys

from obliquesep import ExperimentConfig
from obliquesep.experiment import run_experiment

replicates = int(sys.argv[1]) if len(sys.argv) > 1 else 2
cfg = ExperimentConfig(replicates=replicates)
rows = run_experiment(cfg, jobs=4)

print("seed  noise%     K   linear err   sparse err")
for r in rows:
    print(f"{r['replicate']:4d}  {r['noise_percent']:<7g} {r['K_constraints']:4d}"
          f"   {r['rel_error_linear']:10.3g}   {r['rel_error_nonlinear']:10.3g}")
