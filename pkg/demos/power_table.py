"""Reproduce one block of the p = 3 power table at desk scale.

Runs T_n at lambda in {1, 4}, the oracle-tuned T_n, Rayleigh and Bingham
against uniformity and four alternatives at n = 50, then writes the table
and its metadata sidecar next to this script.

    python3 demos/power_table.py [M]
"""

import sys
from pathlib import Path

from steinunif.harness import ExperimentConfig, emit_table, run_power_study

M = int(sys.argv[1]) if len(sys.argv) > 1 else 2000

config = ExperimentConfig.from_dict(
    {
        "p": 3,
        "ns": [50],
        "tests": [
            {"name": "stein_oracle"},
            {"name": "stein", "lambda": 1.0},
            {"name": "stein", "lambda": 4.0},
            {"name": "rayleigh"},
            {"name": "bingham"},
        ],
        "alternatives": [
            {"kind": "uniform"},
            {"kind": "vmf", "kappa": 0.5},
            {"kind": "watson", "kappa": 1.0},
            {"kind": "multi_vmf", "kappa": 30.0},
            {"kind": "vmf_mixture_poles", "q": 0.3},
        ],
        "M_critical": M,
        "M_power": M,
        "seed": 0,
    }
)
table = run_power_study(config)

width = max(len(t) for t in table.tests) + 2
print(f"{'alternative':<14}" + "".join(f"{t:>{width}}" for t in table.tests))
for i, (alt, n) in enumerate(table.rows):
    cells = "".join(f"{v:>{width - 1}.1f}{'*' if b else ' '}" for v, b in zip(table.rates[i], table.best[i]))
    print(f"{alt:<14}{cells}")
print("* best or not significantly worse (paired one-sided t-test, 5%)")
print("oracle lambda:", {k[0]: v for k, v in table.selected_lambda.items()})
print(f"wall clock {table.wall_clock:.1f}s")

out = Path(__file__).with_name("power_table_p3.csv")
emit_table(table, out)
print("wrote", out)
