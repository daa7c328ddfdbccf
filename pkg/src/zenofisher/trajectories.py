"""
Monte Carlo trajectories under stochastically timed projective measurements.

A trajectory is a list of waiting times ``mu_1 .. mu_m``; after each free
evolution the system is projected onto the Zeno subspace. Only the final
outcome (survived all ``m`` measurements or not) is registered.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import chebyshev as cheb

from .distributions import Dirac, IntervalDistribution
from .errors import ArgumentError, ResourceError
from .linalg import SpectralDecomposition, check_state
from .spins import SpinModel, SurvivalModel, ZenoSubspace
from .streams import chunk_bounds, run_uniforms, stream_key

MODES = ("product", "sequential")
DEFAULT_BUDGET = 2 * 10**11
SURROGATE_RTOL = 1e-13
_SURROGATE_MAX_DEG = 64


def _decomposition(model) -> SpectralDecomposition:
    if isinstance(model, SpinModel):
        return model.decomposition()
    if isinstance(model, SpectralDecomposition):
        return model
    raise ArgumentError("model must be a SpinModel or SpectralDecomposition")


def _product_log_terms(survival: SurvivalModel, mu: np.ndarray) -> np.ndarray:
    return survival.log_q_unchecked(mu)


def _sequential_log_survival(dec: SpectralDecomposition, subspace: ZenoSubspace,
                             psi0: np.ndarray, intervals: np.ndarray) -> np.ndarray:
    """``sum_j ln Tr[Pi U rho U^dag Pi]`` for a batch of trajectories, shape ``(runs, m)``."""
    runs, m = intervals.shape
    vecs = dec.eigenvectors
    proj = subspace.projector
    psi = np.repeat(psi0[:, None], runs, axis=1)
    log_p = np.zeros(runs)
    alive = np.ones(runs, dtype=bool)
    for j in range(m):
        coeff = vecs.conj().T @ psi
        coeff *= np.exp(-1j * np.multiply.outer(dec.eigenvalues, intervals[:, j]))
        psi = proj @ (vecs @ coeff)
        norm_sq = np.einsum("ij,ij->j", psi.conj(), psi).real
        died = norm_sq <= 0.0
        alive &= ~died
        safe = np.where(died, 1.0, norm_sq)
        log_p += np.where(alive, np.log(safe), 0.0)
        psi = psi / np.sqrt(safe)
    log_p[~alive] = -np.inf
    return log_p


def trajectory_log_survival(model, subspace: ZenoSubspace, psi0, intervals: Sequence[float],
                            mode: str = "product") -> float:
    """Natural log of the survival probability of one trajectory (``-inf`` if it died)."""
    if mode not in MODES:
        raise ArgumentError(f"mode must be one of {MODES}")
    mu = np.asarray(intervals, dtype=float).ravel()
    if np.any(mu < 0) or not np.all(np.isfinite(mu)):
        raise ArgumentError("waiting times must be finite and non-negative")
    dec = _decomposition(model)
    psi0 = check_state(psi0, dec.dim)
    if mu.size == 0:
        return 0.0
    if mode == "product":
        if subspace.rank != 1:
            raise ArgumentError("product mode needs a rank-one subspace; use mode='sequential'")
        survival = SurvivalModel.from_state(dec, subspace.state)
        return float(math.fsum(_product_log_terms(survival, mu)))
    if np.linalg.norm(subspace.projector @ psi0 - psi0) > 1e-10:
        raise ArgumentError("psi0 must lie in the Zeno subspace")
    return float(_sequential_log_survival(dec, subspace, psi0, mu[None, :])[0])


def trajectory_survival(model, subspace: ZenoSubspace, psi0, intervals: Sequence[float],
                        mode: str = "product") -> float:
    """Survival probability of a trajectory with waiting times ``intervals``.

    ``product`` multiplies the rank-one single-measurement survival
    ``q(mu_j)``; ``sequential`` evolves, projects and renormalises step by
    step and accepts a subspace of any rank. A vanishing projection marks
    the trajectory as died and yields 0.
    """
    return math.exp(trajectory_log_survival(model, subspace, psi0, intervals, mode))


class LogQSurrogate:
    """Polynomial interpolant of ``ln q`` in ``x = mu^2`` on ``[lo, hi]``.

    ``ln q`` is even in ``mu``, so it is smooth in ``mu^2``. A Chebyshev
    interpolant of increasing degree is converted to monomial form in the
    scaled variable and evaluated by in-place Horner steps. It is accepted
    only if that evaluation matches the direct one on a dense check grid
    within ``SURROGATE_RTOL * max|ln q|``; otherwise direct evaluation is
    used.
    """

    def __init__(self, survival: SurvivalModel, lo: float, hi: float):
        self.survival = survival
        self.lo, self.hi = float(lo), float(hi)
        self.coef = None
        self.max_error = 0.0
        if hi <= lo:
            return
        x_lo, x_hi = self.lo**2, self.hi**2
        self._shift = (x_lo + x_hi) / (x_hi - x_lo)
        self._scale = 2.0 / (x_hi - x_lo)
        check_mu = np.linspace(self.lo, self.hi, 2001)
        direct = _product_log_terms(survival, check_mu)
        if not np.all(np.isfinite(direct)):
            return
        tol = SURROGATE_RTOL * max(np.max(np.abs(direct)), np.finfo(float).tiny)
        deg = 4
        while deg <= _SURROGATE_MAX_DEG:
            cheb_coef = cheb.chebinterpolate(self._direct_in_t, deg, args=(x_lo, x_hi))
            self.coef = cheb.cheb2poly(cheb_coef)
            err = float(np.max(np.abs(self(check_mu) - direct)))
            if err <= tol:
                self.max_error = err
                return
            deg *= 2
        self.coef = None

    def _direct_in_t(self, t, x_lo, x_hi):
        x = 0.5 * (x_lo + x_hi) + 0.5 * (x_hi - x_lo) * t
        return _product_log_terms(self.survival, np.sqrt(np.maximum(x, 0.0)))

    @property
    def active(self) -> bool:
        return self.coef is not None

    def __call__(self, mu: np.ndarray) -> np.ndarray:
        if self.coef is None:
            return _product_log_terms(self.survival, mu)
        t = np.multiply(mu, mu)
        t *= self._scale
        t -= self._shift
        out = np.full_like(t, self.coef[-1])
        for c in self.coef[-2::-1]:
            out *= t
            out += c
        return out


@dataclass(frozen=True)
class TrajectoryEnsemble:
    """Registered outcomes of ``R`` runs.

    ``log_probabilities`` holds ``ln P_run`` for each run; ``outcomes[r]``
    is True when run ``r`` survived its final Bernoulli draw.
    """

    outcomes: np.ndarray
    log_probabilities: np.ndarray
    m: int

    @property
    def runs(self) -> int:
        return self.outcomes.size

    @property
    def survivors(self) -> int:
        return int(np.count_nonzero(self.outcomes))

    @property
    def p_hat(self) -> float:
        return self.survivors / self.runs

    @property
    def standard_error(self) -> float:
        p = self.p_hat
        return math.sqrt(p * (1.0 - p) / self.runs)

    @property
    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_probabilities)

    def batches(self, size: int) -> list["TrajectoryEnsemble"]:
        """Split into consecutive batches of ``size`` runs."""
        if size < 1 or self.runs % size:
            raise ArgumentError("batch size must divide the number of runs")
        return [
            TrajectoryEnsemble(self.outcomes[i:i + size], self.log_probabilities[i:i + size], self.m)
            for i in range(0, self.runs, size)
        ]


@dataclass(frozen=True)
class EnsembleSpec:
    """Everything a Monte Carlo ensemble depends on."""

    model: SpinModel | SpectralDecomposition
    psi0: np.ndarray
    distribution: IntervalDistribution
    m: int
    runs: int
    seed: int
    mode: str = "product"
    subspace: ZenoSubspace | None = None
    budget: int = DEFAULT_BUDGET
    stream_tags: tuple[int, ...] = (0,)

    def __post_init__(self):
        if self.m < 1 or self.runs < 1:
            raise ArgumentError("m and runs must be at least 1")
        if self.mode not in MODES:
            raise ArgumentError(f"mode must be one of {MODES}")
        if self.runs * self.m > self.budget:
            raise ResourceError(f"runs*m = {self.runs * self.m} exceeds the sample budget {self.budget}")


def _chunk_log_probabilities(spec: EnsembleSpec, key, lo: int, hi: int, evaluate, dec, subspace, psi0):
    u = run_uniforms(key, lo, hi - lo, spec.m)
    draw = u[:, spec.m].copy()  # a view would keep the whole chunk alive
    if isinstance(spec.distribution, Dirac):
        return evaluate, draw
    mu = spec.distribution.ppf(u[:, :spec.m])
    if spec.mode == "product":
        log_p = evaluate(mu).sum(axis=1)
    else:
        log_p = _sequential_log_survival(dec, subspace, psi0, mu)
    return log_p, draw


def simulate_ensemble(spec: EnsembleSpec, threads: int = 1) -> TrajectoryEnsemble:
    """Run ``spec.runs`` trajectories and register one Bernoulli outcome each.

    Run ``r`` uses its own counter range of the stream family
    ``(seed, *stream_tags)``; chunks are fixed by ``runs`` and ``m`` alone and
    reassembled in run order, so results do not depend on ``threads``.

    Raises
    ------
    ResourceError
        If ``runs * m`` exceeds the sample budget (checked when the
        ``EnsembleSpec`` is built).
    """
    dec = _decomposition(spec.model)
    psi0 = check_state(spec.psi0, dec.dim)
    subspace = spec.subspace or ZenoSubspace.from_state(psi0)
    if spec.mode == "product" and subspace.rank != 1:
        raise ArgumentError("product mode needs a rank-one subspace; use mode='sequential'")
    key = stream_key(spec.seed, *spec.stream_tags)
    dist = spec.distribution
    evaluate = None
    if isinstance(dist, Dirac):
        if spec.mode == "product":
            q = float(SurvivalModel.from_state(dec, subspace.state).q(dist.mu))
            # every run has probability q^m exactly
            evaluate = math.log(q ** spec.m) if q ** spec.m > 0 else -math.inf
        else:
            evaluate = trajectory_log_survival(dec, subspace, psi0, [dist.mu] * spec.m, "sequential")
    elif spec.mode == "product":
        survival = SurvivalModel.from_state(dec, subspace.state, mu_max=math.inf)
        lo, hi = dist.support
        evaluate = LogQSurrogate(survival, lo, hi)

    bounds = chunk_bounds(spec.runs, spec.m)

    def work(b):
        return _chunk_log_probabilities(spec, key, b[0], b[1], evaluate, dec, subspace, psi0)

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(b) for b in bounds]

    log_p = np.concatenate([np.broadcast_to(np.asarray(lp, dtype=float), d.shape) for lp, d in parts])
    draws = np.concatenate([d for _, d in parts])
    outcomes = draws < np.exp(log_p)
    return TrajectoryEnsemble(outcomes=outcomes, log_probabilities=log_p, m=spec.m)


@dataclass(frozen=True)
class LDRow:
    m: int
    mean: float
    std: float
    standard_error: float
    expected: float

    @property
    def z_score(self) -> float:
        if self.standard_error == 0.0:
            return 0.0 if self.mean == self.expected else math.inf
        return (self.mean - self.expected) / self.standard_error


def ld_convergence(survival: SurvivalModel, distribution: IntervalDistribution, m_values: Sequence[int],
                   runs: int, seed: int, threads: int = 1, budget: int = DEFAULT_BUDGET) -> list[LDRow]:
    """Spread of the empirical rate ``(1/m) sum_j ln q(mu_j)`` across runs.

    Each ``m`` uses an independent stream family. ``expected`` is the
    quadrature value of ``int p ln q``.
    """
    m_values = [int(m) for m in m_values]
    if any(b <= a for a, b in zip(m_values, m_values[1:])):
        raise ArgumentError("m sweep must be strictly ascending")
    if runs < 2:
        raise ArgumentError("at least two runs are needed for a standard deviation")
    lo, hi = distribution.support
    evaluate = LogQSurrogate(survival, lo, hi)
    expected = distribution.expect(lambda x: _product_log_terms(survival, x))
    rows = []
    for m in m_values:
        if runs * m > budget:
            raise ResourceError(f"runs*m = {runs * m} exceeds the sample budget {budget}")
        if isinstance(distribution, Dirac):
            # every run has the same rate ln q(mu); row sums would differ in the last bit
            rows.append(LDRow(m=m, mean=expected, std=0.0, standard_error=0.0, expected=expected))
            continue
        key = stream_key(seed, 1, m)
        bounds = chunk_bounds(runs, m)

        def work(b, m=m, key=key):
            u = run_uniforms(key, b[0], b[1] - b[0], m)[:, :m]
            return evaluate(distribution.ppf(u)).sum(axis=1) / m

        if threads > 1 and len(bounds) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                rates = np.concatenate(list(pool.map(work, bounds)))
        else:
            rates = np.concatenate([work(b) for b in bounds])
        std = float(np.std(rates, ddof=1))
        rows.append(LDRow(m=m, mean=float(np.mean(rates)), std=std,
                          standard_error=std / math.sqrt(runs), expected=expected))
    return rows
