"""
Most-probable survival probability and its Fisher information.

For ``m`` measurements separated by i.i.d. waiting times with density
``p``, the survival probability concentrates at

    P* = exp(m <p|ln q>),

and a binary survive/decay outcome carries the rank-one Fisher information
operator ``m^2 P*/(1 - P*) |ln q><ln q|``. This module evaluates every
derived quantity both from quadrature of ``ln q`` and from the Taylor
coefficients ``beta_k`` combined with statistical moments.

Units: times in seconds, ``beta_k`` in s^-k, moments ``chi_k`` in s^k.
Fisher information for a time-like parameter is in s^-2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .distributions import (
    IntervalDistribution,
    PerturbationDirection,
    SignedMeasure,
    Uniform,
    mu2_shift_direction,
    pair_with_log_q,
)
from .errors import ArgumentError, EvaluationError, SingularityError
from .quadrature import integrate
from .spins import SurvivalModel

#: Zeno regime when ``m * |<p|ln q>|`` stays below this value.
ZENO_THRESHOLD = 0.2
DEFAULT_K = 8


def _factorials(k_max: int) -> np.ndarray:
    return np.array([math.factorial(k) for k in range(1, k_max + 1)], dtype=float)


def _odds(log_pstar: float) -> float:
    """``P*/(1 - P*)`` from ``L = ln P*`` without forming ``1 - P*``."""
    if log_pstar == 0.0:
        raise SingularityError("P* == 1: the survival outcome is deterministic")
    return 1.0 / math.expm1(-log_pstar)


def _check_support(p: IntervalDistribution | SignedMeasure, survival: SurvivalModel) -> None:
    hi = p.support[1]
    if hi > survival.mu_max:
        raise ArgumentError(
            f"distribution support reaches {hi:.6g} s, beyond the survival window mu_max={survival.mu_max:.6g} s"
        )


# --------------------------------------------------------------------------
# P* from quadrature and from moments


def mean_log_q(p: IntervalDistribution, survival: SurvivalModel) -> float:
    """``<p|ln q> = int p(mu) ln q(mu) dmu`` by adaptive quadrature."""
    _check_support(p, survival)
    return pair_with_log_q(p.as_measure(), survival.log_q)


def log_most_probable_survival(p: IntervalDistribution, survival: SurvivalModel, m: int) -> float:
    """``L = m <p|ln q>`` so that ``P* = exp(L)``."""
    if m < 1:
        raise ArgumentError("m must be at least 1")
    return m * mean_log_q(p, survival)


def most_probable_survival(p: IntervalDistribution, survival: SurvivalModel, m: int) -> float:
    """Most probable survival probability after ``m`` measurements."""
    return math.exp(log_most_probable_survival(p, survival, m))


def survival_deficit(p: IntervalDistribution, survival: SurvivalModel, m: int) -> float:
    """``1 - P*`` via ``-expm1(L)``; accurate down to ``1 - P* ~ 1e-300``."""
    return -math.expm1(log_most_probable_survival(p, survival, m))


def log_survival_from_moments(beta: Sequence[float], chi: Sequence[float], m: int, k_max: int = DEFAULT_K) -> float:
    beta = np.asarray(beta, dtype=float)
    chi = np.asarray(chi, dtype=float)
    if k_max > min(beta.size, chi.size):
        raise ArgumentError("truncation order exceeds the available coefficients")
    terms = beta[:k_max] * chi[:k_max] / _factorials(k_max)
    return m * math.fsum(terms)


def survival_from_moments(beta, chi, m: int, k_max: int = DEFAULT_K) -> float:
    """Truncated moment series ``P* = exp(m sum_k beta_k chi_k / k!)``."""
    return math.exp(log_survival_from_moments(beta, chi, m, k_max))


# --------------------------------------------------------------------------
# Sensitivity and Zeno confinement


def functional_derivative_pairing(
    dp: SignedMeasure, survival: SurvivalModel, m: int, pstar: float, check_mass: bool = True
) -> float:
    """``delta P* = m P* <delta p|ln q>`` for a normalisation-preserving ``delta p``."""
    if check_mass and isinstance(dp, PerturbationDirection):
        dp.check_zero_mass()
    _check_support(dp, survival)
    return m * pstar * pair_with_log_q(dp, survival.log_q)


@dataclass(frozen=True)
class ZenoConfinement:
    approx_error: float
    exact_error: float
    zeno_parameter: float
    in_regime: bool

    @property
    def ratio(self) -> float:
        return self.approx_error / self.exact_error if self.exact_error else 1.0


def zeno_confinement(p: IntervalDistribution, survival: SurvivalModel, m: int,
                     threshold: float = ZENO_THRESHOLD) -> ZenoConfinement:
    """Linearised confinement error ``-m <p|ln q>`` next to the exact ``1 - P*``.

    Outside the Zeno regime (``m |<p|ln q>| >= threshold``) the result is
    still returned, with ``in_regime=False`` and a ``RuntimeWarning``.
    """
    log_p = log_most_probable_survival(p, survival, m)
    zeta = abs(log_p)
    in_regime = zeta < threshold
    if not in_regime:
        warnings.warn(f"outside the Zeno regime: m|<p|ln q>| = {zeta:.3g}", RuntimeWarning, stacklevel=2)
    return ZenoConfinement(approx_error=-log_p, exact_error=-math.expm1(log_p),
                           zeno_parameter=zeta, in_regime=in_regime)


# --------------------------------------------------------------------------
# Fisher information operator and matrix


def log_q_norm_sq(survival: SurvivalModel) -> float:
    """``||ln q||^2 = int_0^mu_max (ln q)^2 dmu``."""
    if survival.variance == 0.0:
        return 0.0
    if not math.isfinite(survival.mu_max):
        raise ArgumentError("L2 norm of ln q needs a finite mu_max")
    return integrate(lambda x: survival.log_q(x) ** 2, 0.0, survival.mu_max)


def fio_eigenvalue(survival: SurvivalModel, m: int, pstar: float) -> float:
    """Non-zero eigenvalue ``F_v = m^2 P*/(1 - P*) ||ln q||^2`` of the FIO."""
    if pstar >= 1.0:
        raise SingularityError("P* == 1: Fisher information is infinite")
    norm_sq = log_q_norm_sq(survival)
    if norm_sq == 0.0:
        raise SingularityError("ln q vanishes identically on [0, mu_max]")
    return m * m * pstar / (1.0 - pstar) * norm_sq


def pstar_from_eigenvalue(f_v: float, m: int, norm_sq: float) -> float:
    """Invert ``F = m^2 P/(1-P) ||v||^2`` for ``P``."""
    return f_v / (f_v + m * m * norm_sq)


@dataclass(frozen=True)
class FisherReport:
    """Moment-basis Fisher information of the survival outcome.

    ``fim`` has elements in s^-(i+j); ``eigenvector`` is the non-normalised
    ``v_i = beta_i / i!``.
    """

    m: int
    pstar: float
    log_pstar: float
    pstar_method: str
    fim: np.ndarray
    fim_eigenvalue: float
    eigenvector: np.ndarray
    truncation_remainder: float
    fio_eigenvalue: float | None = None
    directional: "DirectionalFisher | None" = None

    @property
    def k_max(self) -> int:
        return self.eigenvector.size

    @property
    def deficit(self) -> float:
        return -math.expm1(self.log_pstar)

    @property
    def normalized_eigenvalue(self) -> float:
        """``F~_v / ||v||^2``, the colour scale of the P*(mu1, mu2) surface."""
        return self.fim_eigenvalue / float(np.dot(self.eigenvector, self.eigenvector))

    def max_minor(self) -> float:
        """Largest absolute 2x2 minor of the FIM, relative to ``max|F_ij|^2``."""
        scale = np.max(np.abs(self.fim))
        if scale == 0:
            return 0.0
        g = self.fim / scale
        k = g.shape[0]
        worst = 0.0
        for i in range(k):
            for j in range(i + 1, k):
                for a in range(k):
                    for b in range(a + 1, k):
                        worst = max(worst, abs(g[i, a] * g[j, b] - g[i, b] * g[j, a]))
        return worst


def fim_report(beta, chi, m: int, k_max: int = DEFAULT_K) -> FisherReport:
    """Fisher information matrix in the moment basis, truncated at ``k_max``.

    ``P*`` is taken from the same truncated series, so ``P*`` and the matrix
    are mutually consistent.
    """
    beta = np.asarray(beta, dtype=float)[:k_max]
    chi = np.asarray(chi, dtype=float)[:k_max]
    log_p = log_survival_from_moments(beta, chi, m, k_max)
    if log_p >= 0.0:
        raise SingularityError("series P* >= 1")
    odds = _odds(log_p)
    v = beta / _factorials(k_max)
    prefactor = m * m * odds
    fim = prefactor * np.outer(v, v)
    return FisherReport(
        m=m,
        pstar=math.exp(log_p),
        log_pstar=log_p,
        pstar_method=f"moment-series-{k_max}",
        fim=fim,
        fim_eigenvalue=prefactor * float(np.dot(v, v)),
        eigenvector=v,
        truncation_remainder=abs(beta[-1] * chi[-1] / math.factorial(k_max)),
    )


@dataclass(frozen=True)
class SelfInformation:
    eigenvalue: float
    from_self_information: float
    one_minus_pstar: float

    @property
    def physical(self) -> bool:
        return self.one_minus_pstar > 0


def self_information_relation(beta, m: int, k_max: int = DEFAULT_K) -> SelfInformation:
    """Both sides of ``F~_v = -m P*/(1-P*) I(P*)`` with formal moments ``chi = v``.

    ``chi = v`` is not a moment sequence of any density (``v_2 < 0``), so
    ``P* > 1`` and ``1 - P* < 0``; the relation is checked as an algebraic
    identity only. Both sides are formed from ``L = ln P*`` so that no
    overflow occurs for large ``L``.
    """
    v = np.asarray(beta, dtype=float)[:k_max] / _factorials(k_max)
    norm_sq = float(np.dot(v, v))
    log_p = log_survival_from_moments(np.asarray(beta)[:k_max], v, m, k_max)
    odds = _odds(log_p)
    info = -log_p
    deficit = -math.expm1(log_p) if log_p < 709.0 else -math.inf
    return SelfInformation(
        eigenvalue=m * m * odds * norm_sq,
        from_self_information=-m * odds * info,
        one_minus_pstar=deficit,
    )


# --------------------------------------------------------------------------
# Fisher information along a perturbation direction


@dataclass(frozen=True)
class DirectionalFisher:
    """Fisher information for ``c`` in ``p + c f`` and the Cramer-Rao bound."""

    functional: float
    moment_form: float
    pairing: float
    moment_pairing: float
    pstar: float
    pstar_series: float

    @property
    def fisher(self) -> float:
        return self.functional

    @property
    def crb(self) -> float:
        return math.inf if self.functional == 0.0 else 1.0 / math.sqrt(self.functional)

    @property
    def crb_infinite(self) -> bool:
        return self.functional == 0.0

    @property
    def relative_disagreement(self) -> float:
        if self.functional == self.moment_form:
            return 0.0
        return abs(self.functional - self.moment_form) / max(abs(self.functional), abs(self.moment_form))


def fisher_along_direction(
    p: IntervalDistribution,
    f: PerturbationDirection,
    survival: SurvivalModel,
    m: int,
    k_max: int = DEFAULT_K,
    beta: Sequence[float] | None = None,
    rtol: float | None = 1e-6,
) -> DirectionalFisher:
    """``F_f = <f|F(p)|f>`` from the integral ``<f|ln q>`` and from moments.

    The functional form uses quadrature for both ``P*`` and ``<f|ln q>``;
    the moment form uses ``sum_k beta_k chi_k/k!`` and
    ``sum_k beta_k xi_k/k!``. With ``rtol`` set, disagreement beyond it
    raises :class:`EvaluationError` (series not converged).
    """
    _check_support(f, survival)
    log_p = log_most_probable_survival(p, survival, m)
    pair = pair_with_log_q(f, survival.log_q)
    functional = m * m * _odds(log_p) * pair * pair

    beta = survival.betas(k_max) if beta is None else np.asarray(beta, dtype=float)
    chi = p.moments(k_max)
    xi = f.moments(k_max)
    log_p_series = log_survival_from_moments(beta, chi, m, k_max)
    moment_pair = math.fsum(beta[:k_max] * xi / _factorials(k_max))
    moment_form = m * m * _odds(log_p_series) * moment_pair * moment_pair

    out = DirectionalFisher(
        functional=functional,
        moment_form=moment_form,
        pairing=pair,
        moment_pairing=moment_pair,
        pstar=math.exp(log_p),
        pstar_series=math.exp(log_p_series),
    )
    if rtol is not None and out.relative_disagreement > rtol:
        raise EvaluationError(
            f"functional and moment forms disagree by {out.relative_disagreement:.3g} (rtol {rtol:g})"
        )
    return out


def binary_fisher(pstar: float, dpstar: float) -> float:
    """Fisher information of a binary outcome: ``(dP)^2 / (P (1 - P))``."""
    return dpstar * dpstar / (pstar * (1.0 - pstar))


def finite_difference_fisher(
    p: IntervalDistribution, f: SignedMeasure, survival: SurvivalModel, m: int,
    dc: float | None = None, rel_step: float = 1e-6,
) -> float:
    """Binary-outcome Fisher information from central differences of ``P*[p + c f]``.

    Each ``P*`` is an independent quadrature of ``ln q`` against the combined
    measure ``p + c f``. ``dc`` carries the units of ``c``; by default it is
    ``rel_step`` times the width of the support of ``p``.
    """
    if dc is None:
        lo, hi = p.support
        dc = rel_step * (hi - lo if hi > lo else hi)
    base = p.as_measure()
    plus = base.combine(f, +dc)
    minus = base.combine(f, -dc)
    _check_support(plus, survival)
    l0 = m * pair_with_log_q(base, survival.log_q)
    lp = m * pair_with_log_q(plus, survival.log_q)
    lm = m * pair_with_log_q(minus, survival.log_q)
    # exp(lp) - exp(lm) = exp(l0) * (expm1(lp - l0) - expm1(lm - l0))
    dp = math.exp(l0) * (math.expm1(lp - l0) - math.expm1(lm - l0)) / (2.0 * dc)
    return dp * dp / (math.exp(l0) * -math.expm1(l0))


# --------------------------------------------------------------------------
# Closed forms for the uniform density in the quadratic Zeno approximation


def uniform_second_moment(mu1: float, mu2: float) -> float:
    """``chi_2 = (mu2^3 - mu1^3) / (3 (mu2 - mu1))``."""
    return (mu2**3 - mu1**3) / (3.0 * (mu2 - mu1))


@dataclass(frozen=True)
class ClosedFormFisher:
    fisher: float
    zeno_parameter: float
    valid: bool

    @property
    def crb(self) -> float:
        return 1.0 / math.sqrt(self.fisher)


def uniform_mu2_fisher(variance: float, mu1: float, mu2: float, m: int,
                       threshold: float = ZENO_THRESHOLD) -> ClosedFormFisher:
    """Leading-order Fisher information for the upper edge ``mu2`` of a uniform density.

    ``F ~ m Var(H_Pi) (mu2^2 - chi_2)^2 / (chi_2 (mu2 - mu1)^2)`` in s^-2.
    Valid only while ``m Var(H_Pi) chi_2`` is small; ``valid`` reports
    whether it is below ``threshold``. The value is returned regardless.
    """
    if not mu2 > mu1 >= 0:
        raise ArgumentError("need mu2 > mu1 >= 0")
    chi2 = uniform_second_moment(mu1, mu2)
    shape = (mu2 * mu2 - chi2) ** 2 / (chi2 * (mu2 - mu1) ** 2)
    zeta = m * variance * chi2
    return ClosedFormFisher(fisher=m * variance * shape, zeno_parameter=zeta, valid=zeta <= threshold)


def chi2_fisher(variance: float, chi2: float, m: int) -> float:
    """``F_22 ~ m Var(H_Pi) / chi_2``: Fisher information for the second moment."""
    return m * variance / chi2


def chain_rule_check(mu1: float, mu2: float, variance: float = 1.0, m: int = 1) -> float:
    """``F(f) / (F(chi_2) (d chi_2/d mu2)^2)``, which equals one identically.

    The three factors come from :func:`uniform_mu2_fisher`,
    :func:`chi2_fisher` on the moment from :class:`Uniform`, and the
    analytic ``xi_2`` of :func:`mu2_shift_direction`.
    """
    if not mu2 > mu1 >= 0:
        raise ArgumentError("need mu2 > mu1 >= 0")
    f_f = uniform_mu2_fisher(variance, mu1, mu2, m).fisher
    dist = Uniform(mu1, mu2)
    f_chi2 = chi2_fisher(variance, dist.moment(2), m)
    dchi2 = mu2_shift_direction(dist, k_max=2).moments(2)[1]
    return f_f / (f_chi2 * dchi2 * dchi2)


# --------------------------------------------------------------------------
# Approach to the Zeno limit at fixed expected total time


@dataclass(frozen=True)
class ZenoLimitRow:
    m: int
    total_time: float
    log_pstar: float
    deficit: float


def zeno_limit_condition(
    family: Callable[[int], IntervalDistribution],
    survival: SurvivalModel,
    total_time: float,
    ms: Iterable[int],
    rtol: float = 1e-9,
) -> list[ZenoLimitRow]:
    """Tabulate ``m <p_m|ln q>`` and ``1 - P*`` along a family with ``m chi_1 = T``.

    Raises
    ------
    ArgumentError
        If some member violates ``m chi_1(p_m) = T`` beyond ``rtol``.
    """
    rows = []
    for m in ms:
        p = family(m)
        t_m = m * p.moment(1)
        if abs(t_m - total_time) > rtol * abs(total_time):
            raise ArgumentError(f"family member m={m} has expected total time {t_m:.6g}, not {total_time:.6g}")
        log_p = log_most_probable_survival(p, survival, m)
        rows.append(ZenoLimitRow(m=m, total_time=t_m, log_pstar=log_p, deficit=-math.expm1(log_p)))
    return rows


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of ``log|y|`` against ``log x``."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.abs(np.asarray(y, dtype=float)))
    return float(np.polyfit(lx, ly, 1)[0])
