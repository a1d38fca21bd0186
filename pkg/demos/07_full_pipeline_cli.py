"""Drive the whole pipeline through the CLI, stage by stage.

Writes an experiment config, then runs design -> simulate -> analyze ->
shap -> contour -> report against it, the same way an external
orchestrator would call the installed `mixrobust` entry point.
"""

import json
from pathlib import Path

from mixrobust.cli import main

out_root = Path("demo_output/pipeline")
out_root.mkdir(parents=True, exist_ok=True)

config = {
    "design": {"m": 3, "min_prop": 0.01, "replicates": 3,
               "covariate_levels": [[1, 0], [1, 0]]},
    "sampling": {"train_frac": 0.10, "test_frac": 0.20},
    "classifiers": {"1": {"kind": "logistic"},
                    "0": {"kind": "boosted_stumps"}},
    "pools": {"1": {"synthetic": {"m": 3, "d": 3, "n_per_class": 1000,
                                  "separation": 2.5, "seed": 201}},
              "0": {"synthetic": {"m": 3, "d": 3, "n_per_class": 1000,
                                  "separation": 2.5, "seed": 202}}},
    "scenarios": ["balanced", "consistent", "reverse"],
    "output_dir": "out",
    "master_seed": 20260808,
}
config_path = out_root / "experiment.json"
config_path.write_text(json.dumps(config, indent=2))
print(f"config at {config_path}\n")

for stage in ("design", "simulate", "analyze", "shap", "contour", "report"):
    print(f"$ mixrobust {stage} --config {config_path}")
    code = main([stage, "--config", str(config_path), "--jobs", "1"])
    assert code == 0, f"{stage} exited {code}"
    print()

print("pipeline artifacts:")
for path in sorted((out_root / "out").iterdir()):
    print("  ", path.name)
