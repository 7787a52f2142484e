"""Desk-scale end-to-end comparison of the three quantizer designs.

Sweeps the channel crossover probability at one operating point and
evaluates, per scheme, the Monte Carlo NMSE of the full pipeline
(sparse source -> measurements -> pursuit -> index -> noisy channel ->
decoder lookup). Writes the results table and a self-contained SVG chart
next to this script.

The channel-aware end-to-end design dominates; the channel-unaware design
collapses as the channel worsens because it never learned to protect
against index errors. At crossover 0 the two coincide exactly.
"""

import os
import time

from cscovq import ExperimentConfig, run_epsilon_sweep, write_chart, write_results_csv

config = ExperimentConfig(
    B=6,
    trials=5_000,
    training_size=30_000,
    epsilons=(0.0, 0.005, 0.02, 0.05, 0.1),
    seed=42,
)

t0 = time.perf_counter()
rows = run_epsilon_sweep(config)
print(f"swept {len(rows)} cells in {time.perf_counter() - t0:.1f}s\n")

print("crossover   " + "".join(f"{s:>12}" for s in config.schemes))
for eps in config.epsilons:
    cells = {r.scheme: r.nmse_db for r in rows if r.epsilon == eps}
    print(f"  {eps:<9g}" + "".join(f"{cells[s]:12.3f}" for s in config.schemes))

out_dir = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(out_dir, exist_ok=True)
write_results_csv(os.path.join(out_dir, "crossover_sweep.csv"), rows)
write_chart(os.path.join(out_dir, "crossover_sweep.svg"), rows, title="NMSE vs channel crossover")
print(f"\nwrote {out_dir}/crossover_sweep.csv and .svg")

at_zero = {r.scheme: r.nmse_db for r in rows if r.epsilon == 0.0}
print("\nerror-free channel: aware and unaware designs coincide:",
      at_zero["COVQ-E2E"] == at_zero["CUVQ-E2E"])
