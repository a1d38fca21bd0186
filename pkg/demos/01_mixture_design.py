"""Walk through the constrained mixture design and the test scenarios.

Builds the floored simplex-centroid points for three classes, crosses them
with the 2x2 covariate factorial, derives each scenario's test mixtures,
and expands everything into the seeded 252-instance run plan.
"""

import numpy as np

from mixrobust import (DesignConfig, TestScenario, build_run_plan, cross_array,
                       scenario_test_proportions, simplex_centroid, write_plan_csv)
from mixrobust.seeding import generator

config = DesignConfig(m=3, covariate_levels=((1, 0), (1, 0)), min_prop=0.01,
                      replicates=3, seed=20260808)

print("== simplex centroid points (floor 0.01) ==")
points = simplex_centroid(config.m, config.min_prop)
for point in points:
    print("  ", np.round(point, 6))

print("\n== cross array with the 2x2 covariate factorial ==")
base = cross_array(points, config)
print(f"   {len(base)} base runs; first block covariates {base.runs[0].covariates}")

print("\n== scenario test mixtures for each training mixture ==")
rng = generator(config.seed, "demo-reverse")
for point in points:
    row = {scenario.value: np.round(
        scenario_test_proportions(point, scenario, rng=rng, min_prop=config.min_prop), 3)
        for scenario in TestScenario}
    print(f"   train={np.round(point, 3)}  balanced={row['balanced']}"
          f"  consistent={row['consistent']}  reverse={row['reverse']}")
print("   (the reverse of the exact centroid is a random pure-dominant point)")

plan = build_run_plan(config)
print(f"\n== expanded plan: {len(plan)} instances "
      f"({len(base)} runs x {config.replicates} replicates x 3 scenarios) ==")
print("   every instance carries its own derived seed, e.g.",
      plan.runs[0].seed)

write_plan_csv(plan, "demo_output/plan.csv")
print("\nwrote demo_output/plan.csv")
