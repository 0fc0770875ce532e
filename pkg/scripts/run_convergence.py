#!/usr/bin/env python3
"""Step-halving study on the cooldown demo: the total-energy drift rate of
the implicit midpoint scheme should fall by 4x per halving."""

import sys

from phmix import default_config
from phmix.driver import azimuthal_refinement_gap, convergence_study

levels = int(sys.argv[1]) if len(sys.argv) > 1 else 3

cfg = default_config()
rows = convergence_study(cfg, levels=levels)
print(f"{'dt':>12} {'steps':>7} {'drift/time':>14} {'order':>7}")
for row in rows:
    order = "-" if row.observed_order is None else f"{row.observed_order:.3f}"
    print(f"{row.dt:>12.3e} {row.steps:>7} {row.drift_per_time:>14.6e} "
          f"{order:>7}")
gap = azimuthal_refinement_gap(cfg)
print(f"azimuthal refinement gap for constant wall output: {gap:.3e}")
