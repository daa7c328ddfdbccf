"""
Fisher information for mu2 computed four ways at (10 ns, 60 ns), N = 9, m = 5000.

The moment form, the functional form and the finite-difference oracle all
use the exact survival; the closed form keeps only the quadratic Zeno term.
Their gap is set by x = m Var chi2: the exact value equals the closed form
times x / (e^x - 1).
"""

from __future__ import annotations

import math

from zenofisher.config import NS, ExperimentConfig
from zenofisher.distributions import mu2_shift_direction
from zenofisher.fisher import fisher_along_direction, finite_difference_fisher, uniform_mu2_fisher
from zenofisher.spins import SurvivalModel

config = ExperimentConfig.from_dict({})
dist = config.distribution()
survival = SurvivalModel.from_state(config.spin_model(), config.initial_state())
m = config.m
direction = mu2_shift_direction(dist, config.k_moments)

closed = uniform_mu2_fisher(survival.variance, dist.mu1, dist.mu2, m)
exact = fisher_along_direction(dist, direction, survival, m)
fd = finite_difference_fisher(dist, direction, survival, m)

print(f"closed form        {closed.fisher * NS**2:.6e} ns^-2   (CRB {closed.crb / NS:.1f} ns)")
print(f"moment form        {exact.moment_form * NS**2:.6e} ns^-2")
print(f"functional form    {exact.functional * NS**2:.6e} ns^-2")
print(f"finite difference  {fd * NS**2:.6e} ns^-2")

x = closed.zeno_parameter
print(f"\nx = {x:.4f}, x/(e^x - 1) = {x / math.expm1(x):.6f}, "
      f"exact / closed = {exact.moment_form / closed.fisher:.6f}")
