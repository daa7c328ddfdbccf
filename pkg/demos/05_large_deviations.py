"""
Concentration of the empirical log-survival rate (1/m) sum_j ln q(mu_j).

Its spread across runs should shrink like m^(-1/2).
"""

from __future__ import annotations

from zenofisher.config import ExperimentConfig
from zenofisher.experiments import run_ld

config = ExperimentConfig.from_dict({"ld": {"m_values": [100, 1000, 10000], "runs": 500}})
table = run_ld(config)
print("     m      mean rate       std rate    z vs mean ln q")
for m, mean, std, _, _, z in table.rows:
    print(f"{m:>6d}  {mean:>13.6e}  {std:>13.6e}  {z:>+8.2f}")
print(f"\nlog-log slope of std vs m: {table.metadata['loglog_slope']:.3f}")
