"""Memory- and energy-constrained model sizing.

The search walks network sizes in fixed increments while the analytic
memory model stays inside the budget, calibrates per-sample energy with
one probe run per phase, extrapolates to the full workload, and keeps
the largest candidate that fits every constraint.
"""

import numpy as np

from driftsnn.datasets import render_digit
from driftsnn.encoding import ImageSample
from driftsnn.network import NetworkConfig
from driftsnn.search import CostModel, SearchConfig, memory_estimate, search

rng = np.random.default_rng(1)
probe = ImageSample(pixels=render_digit(5, rng).ravel(), label=5)

base = NetworkConfig(n_exc=100, seed=0)
cost_model = CostModel()  # op-count proxy; weights are configurable

# memory budget admits up to 300 neurons; train/infer budgets are generous
cfg = SearchConfig(
    mem_c=memory_estimate(300, base.n_syn, 32),
    e_ct=3e13,
    e_ci=1e11,
    n_add=100,
    n_train=60000,
    n_inf=10000,
    bp=32,
    base=base,
)

result = search(cfg, cost_model, probe)

print(f"{'n_exc':>6} {'mem (bytes)':>12} {'E_1 train':>12} {'E train':>12} "
      f"{'E_1 infer':>12} {'E infer':>12}  feasible")
for c in result.candidates:
    print(f"{c.n_exc:>6} {c.mem:>12.0f} {c.e_1t:>12.3e} {c.e_t:>12.3e} "
          f"{c.e_1i if c.e_1i is not None else float('nan'):>12.3e} "
          f"{c.e_i if c.e_i is not None else float('nan'):>12.3e}  {c.feasible}")

print(f"\nselected: n_exc={result.best.n_exc} "
      f"({result.training_probes} training probes, {result.inference_probes} inference probes)")
print(f"memory model at bp=16 halves the footprint: "
      f"{memory_estimate(result.best.n_exc, base.n_syn, 16):.0f} bytes")
