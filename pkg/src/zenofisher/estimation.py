"""
Maximum-likelihood estimation of the upper edge ``mu2`` of a uniform
waiting-time density from the registered survival frequency.

For a binomial outcome the MLE of ``mu2`` solves ``P*(mu2) = P_hat``;
``P*`` is evaluated by quadrature and the equation is solved by bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import Uniform, mu2_shift_direction
from .errors import ArgumentError, EstimationError
from .fisher import fisher_along_direction, log_most_probable_survival
from .spins import SurvivalModel
from .trajectories import TrajectoryEnsemble

XTOL = 1e-12
MONOTONE_GRID = 33


def default_bracket(mu1: float, mu2_guess: float) -> tuple[float, float]:
    """``[mu1 + 1e-3 (mu2_guess - mu1), 3 mu2_guess]``."""
    return mu1 + 1e-3 * (mu2_guess - mu1), 3.0 * mu2_guess


class Mu2Estimator:
    """Inverts ``mu2 -> ln P*(Uniform(mu1, mu2))`` on a bracket.

    Raises
    ------
    ArgumentError
        If ``ln P*`` is not strictly decreasing on a grid over the bracket
        (outside the Zeno regime).
    """

    def __init__(self, survival: SurvivalModel, mu1: float, m: int,
                 bracket: tuple[float, float], xtol: float = XTOL):
        lo, hi = map(float, bracket)
        if not mu1 < lo < hi:
            raise ArgumentError("bracket must satisfy mu1 < lo < hi")
        if hi > survival.mu_max:
            raise ArgumentError(f"bracket upper end {hi:.6g} s exceeds mu_max {survival.mu_max:.6g} s")
        self.survival = survival
        self.mu1 = float(mu1)
        self.m = int(m)
        self.bracket = (lo, hi)
        self.xtol = xtol
        grid = np.linspace(lo, hi, MONOTONE_GRID)
        values = np.array([self.log_pstar(x) for x in grid])
        if not np.all(np.diff(values) < 0):
            raise ArgumentError("P* is not strictly decreasing in mu2 on the bracket")
        self.log_p_lo = float(values[0])
        self.log_p_hi = float(values[-1])

    def log_pstar(self, mu2: float) -> float:
        return log_most_probable_survival(Uniform(self.mu1, mu2), self.survival, self.m)

    def pstar(self, mu2: float) -> float:
        return math.exp(self.log_pstar(mu2))

    def __call__(self, p_hat: float) -> float:
        """``mu2`` with ``P*(mu2) = p_hat`` to ``xtol`` seconds.

        Raises
        ------
        EstimationError
            If ``p_hat`` lies outside ``[P*(hi), P*(lo)]``.
        """
        if not 0.0 < p_hat <= 1.0:
            raise EstimationError(f"P_hat = {p_hat} has no finite log-likelihood root")
        target = math.log(p_hat)
        if not self.log_p_hi <= target <= self.log_p_lo:
            raise EstimationError(
                f"P_hat = {p_hat!r} outside attainable range "
                f"[{math.exp(self.log_p_hi)!r}, {math.exp(self.log_p_lo)!r}]"
            )
        lo, hi = self.bracket
        while hi - lo > self.xtol:
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if self.log_pstar(mid) > target:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


def mle_mu2(p_hat: float, survival: SurvivalModel, mu1: float, mu2_guess: float, m: int,
            bracket: tuple[float, float] | None = None) -> float:
    """Bisection MLE of ``mu2`` given the survival frequency ``p_hat``."""
    bracket = default_bracket(mu1, mu2_guess) if bracket is None else bracket
    return Mu2Estimator(survival, mu1, m, bracket)(p_hat)


@dataclass(frozen=True)
class EstimationResult:
    """Spread of batch estimates of ``mu2`` against the Cramer-Rao bound.

    ``crb`` is the variance bound ``1/(R F_f)`` in s^2 for a batch of ``R``
    runs; ``variance`` is the unbiased sample variance over batches.
    """

    estimates: np.ndarray
    mu2_true: float
    runs_per_batch: int
    fisher: float
    variance: float
    crb: float

    @property
    def batches(self) -> int:
        return self.estimates.size

    @property
    def mu2_hat(self) -> float:
        return float(np.mean(self.estimates))

    @property
    def saturation_ratio(self) -> float:
        return self.variance / self.crb

    @property
    def ratio_error(self) -> float:
        """Relative standard error of a Gaussian sample variance, ``sqrt(2/(B-1))``."""
        return math.sqrt(2.0 / (self.batches - 1))

    @property
    def bias_z(self) -> float:
        """Bias of the mean estimate in units of its standard error."""
        se = math.sqrt(self.variance / self.batches)
        return (self.mu2_hat - self.mu2_true) / se if se > 0 else 0.0

    @property
    def empirical_fisher(self) -> float:
        """``1 / (R Var(mu2_hat))`` per run, in s^-2; infinite if all batches agree."""
        if self.variance == 0.0:
            return math.inf
        return 1.0 / (self.runs_per_batch * self.variance)


def batch_estimation(ensemble: TrajectoryEnsemble, runs_per_batch: int, survival: SurvivalModel,
                     dist: Uniform, k_max: int = 8, bracket: tuple[float, float] | None = None) -> EstimationResult:
    """Estimate ``mu2`` from each batch and compare the spread with the CRB.

    Raises
    ------
    EstimationError
        If some batch frequency lies outside the attainable range.
    """
    batches = ensemble.batches(runs_per_batch)
    if len(batches) < 2:
        raise ArgumentError("at least two batches are needed for a variance")
    m = ensemble.m
    bracket = default_bracket(dist.mu1, dist.mu2) if bracket is None else bracket
    estimator = Mu2Estimator(survival, dist.mu1, m, bracket)
    cache: dict[int, float] = {}
    estimates = np.empty(len(batches))
    for i, b in enumerate(batches):
        # estimates depend only on the survivor count
        if b.survivors not in cache:
            cache[b.survivors] = estimator(b.p_hat)
        estimates[i] = cache[b.survivors]
    fisher = fisher_along_direction(dist, mu2_shift_direction(dist, k_max), survival, m, k_max).fisher
    return EstimationResult(
        estimates=estimates,
        mu2_true=dist.mu2,
        runs_per_batch=runs_per_batch,
        fisher=fisher,
        variance=float(np.var(estimates, ddof=1)),
        crb=1.0 / (runs_per_batch * fisher),
    )
