"""
Linear growth of the Fisher information in the number of measurements m and
the number of spins N, at both calibrations.
"""

from __future__ import annotations

from zenofisher.config import ExperimentConfig
from zenofisher.experiments import run_scaling

for calibration in ("khz", "mhz"):
    config = ExperimentConfig.from_dict({}).with_calibration(calibration)
    table = run_scaling(config)
    print(f"[{calibration}]  n     m   F closed (ns^-2)   F fd (ns^-2)   CRB (ns)  Zeno")
    for row in table.rows:
        if row[1] == 5000:
            n, m, closed, fd, _, crb, _, valid, _ = row
            print(f"      {n:>3d} {m:>5d}   {closed:>15.4e}   {fd:>12.4e}   {crb:>8.3f}  {valid}")
    fits = table.companion
    worst = min(r[5] for r in fits.rows if r[0] == "fisher_closed_form")
    print(f"      smallest R^2 of closed-form linear fits: {worst:.6f}\n")
