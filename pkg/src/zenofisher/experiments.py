"""
Experiment runners producing plot-ready tables.

Each runner takes an :class:`ExperimentConfig` and returns a :class:`Table`
whose columns are in nanoseconds where they carry time units. Physics is
evaluated in SI units throughout; conversion happens only here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import __version__
from .config import NS, ExperimentConfig
from .distributions import Uniform, mu2_shift_direction
from .errors import ArgumentError, EstimationError, EvaluationError
from .estimation import EstimationResult, batch_estimation, mle_mu2
from .fisher import (
    ZENO_THRESHOLD,
    fim_report,
    finite_difference_fisher,
    log_most_probable_survival,
    uniform_mu2_fisher,
)
from .spins import SurvivalModel
from .streams import GENERATOR_ID
from .trajectories import EnsembleSpec, TrajectoryEnsemble, ld_convergence, simulate_ensemble

NS2 = NS * NS  # s^2 per ns^2; F[ns^-2] = F[s^-2] * NS2


@dataclass
class Table:
    header: list[str]
    rows: list[list[Any]]
    metadata: dict[str, Any] = field(default_factory=dict)
    companion: "Table | None" = None
    result: Any = None

    def column(self, name: str) -> np.ndarray:
        i = self.header.index(name)
        return np.array([row[i] for row in self.rows])


def base_metadata(config: ExperimentConfig, command: str) -> dict[str, Any]:
    return {
        "command": command,
        "artifact_version": __version__,
        "config_sha256": config.hash,
        "seed": config.seed,
        "generator": GENERATOR_ID,
        "config": config.canonical_json(),
    }


def linear_fit(x: Sequence[float], y: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares ``y = a x + b``; returns ``(a, b, R^2)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ArgumentError("a linear fit needs at least two points")
    design = np.column_stack([x, np.ones_like(x)])
    (a, b), *_ = np.linalg.lstsq(design, y, rcond=None)
    ss_res = float(np.sum((y - (a * x + b)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)
    return float(a), float(b), r2


def _survival(config: ExperimentConfig, n: int | None = None) -> SurvivalModel:
    return SurvivalModel.from_state(config.spin_model(n), config.initial_state(n))


def _uniform(config: ExperimentConfig) -> Uniform:
    dist = config.distribution()
    if not isinstance(dist, Uniform):
        raise ArgumentError("this experiment needs a uniform distribution")
    return dist


# --------------------------------------------------------------------------


def run_surface(config: ExperimentConfig) -> Table:
    """``P*`` and normalised FIM eigenvalue on a ``(mu1, mu2)`` grid.

    Cells with ``mu1 >= mu2`` are emitted with ``skipped=true`` and NaN
    values; cells whose support exceeds the survival window ``mu_max`` are
    emitted with NaN ``pstar``.
    """
    survival = _survival(config)
    k = config.k_moments
    beta = survival.betas(k)
    m = config.m
    mu1_grid, mu2_grid = config.surface_grid()
    header = ["mu1_ns", "mu2_ns", "pstar", "pstar_series", "fim_eigenvalue_normalized",
              "zeno_parameter", "zeno_valid", "skipped"]
    rows = []
    for mu1 in mu1_grid:
        for mu2 in mu2_grid:
            if not mu1 < mu2 or mu1 < 0:
                rows.append([mu1, mu2, math.nan, math.nan, math.nan, math.nan, False, True])
                continue
            dist = Uniform(mu1 * NS, mu2 * NS)
            report = fim_report(beta, dist.moments(k), m, k)
            if mu2 * NS <= survival.mu_max:
                log_p = log_most_probable_survival(dist, survival, m)
                pstar = math.exp(log_p)
                zeta = abs(log_p)
            else:
                pstar, zeta = math.nan, abs(report.log_pstar)
            rows.append([mu1, mu2, pstar, report.pstar, report.normalized_eigenvalue,
                         zeta, bool(zeta < ZENO_THRESHOLD and math.isfinite(pstar)), False])
    meta = base_metadata(config, "surface")
    meta["variance_s-2"] = survival.variance
    meta["mu_max_ns"] = survival.mu_max / NS
    return Table(header, rows, meta)


def surface_monotone(table: Table) -> bool:
    """``P*`` non-increasing in ``mu2`` along each ``mu1`` row, inside the Zeno regime."""
    mu1 = table.column("mu1_ns")
    valid = table.column("zeno_valid").astype(bool)
    pstar = table.column("pstar").astype(float)
    mu2 = table.column("mu2_ns")
    for value in np.unique(mu1):
        sel = (mu1 == value) & valid
        order = np.argsort(mu2[sel])
        if np.any(np.diff(pstar[sel][order]) > 0):
            return False
    return True


# --------------------------------------------------------------------------


def _empirical(config: ExperimentConfig, n: int, m: int, dist: Uniform, survival: SurvivalModel,
               batches: int, per_batch: int, threads: int, tags: tuple[int, ...]) -> EstimationResult:
    spec = EnsembleSpec(
        model=config.spin_model(n), psi0=config.initial_state(n), distribution=dist, m=m,
        runs=batches * per_batch, seed=config.seed, mode=config.mode, budget=config.budget,
        stream_tags=tags,
    )
    ensemble = simulate_ensemble(spec, threads=threads)
    return batch_estimation(ensemble, per_batch, survival, dist, config.k_moments)


def run_scaling(config: ExperimentConfig, threads: int = 1) -> Table:
    """Fisher information for ``mu2`` over sweeps of ``N`` and ``m``.

    Columns (ns^-2): closed form in the quadratic Zeno approximation, the
    binary-outcome finite-difference oracle, and the Monte Carlo estimate
    ``1/(R Var(mu2_hat))``. Values needing quadrature beyond the survival
    window are NaN, as is the Monte Carlo column when ``scaling.batches``
    is 0 or some batch frequency has no MLE root (``empirical_ok`` false).
    The companion table holds least-squares fits of each column against
    ``m`` per ``N`` and against ``N`` per ``m``.
    """
    dist = _uniform(config)
    n_values, m_values = config.scaling_sweep()
    batches = int(config.section("scaling")["batches"])
    per_batch = int(config.section("scaling")["runs_per_batch"])
    header = ["n", "m", "fisher_closed_form", "fisher_finite_difference", "fisher_empirical",
              "crb_closed_form_ns", "zeno_parameter", "zeno_valid", "empirical_ok"]
    rows = []
    for n in n_values:
        survival = _survival(config, n)
        in_window = dist.mu2 <= survival.mu_max
        # the MLE bracket reaches 3 mu2
        can_estimate = 3.0 * dist.mu2 <= survival.mu_max
        for m in m_values:
            closed = uniform_mu2_fisher(survival.variance, dist.mu1, dist.mu2, m)
            if in_window:
                fd = finite_difference_fisher(dist, mu2_shift_direction(dist, config.k_moments), survival, m) * NS2
            else:
                fd = math.nan
            emp, estimable = math.nan, batches > 0 and can_estimate
            if estimable:
                try:
                    res = _empirical(config, n, m, dist, survival, batches, per_batch, threads, (2, n, m))
                    emp = res.empirical_fisher * NS2
                except EstimationError:
                    # some batch frequency has no MLE root, e.g. every run survived
                    estimable = False
            rows.append([n, m, closed.fisher * NS2, fd, emp, closed.crb / NS,
                         closed.zeno_parameter, closed.valid and in_window, estimable])
    table = Table(header, rows, base_metadata(config, "scaling"))
    table.metadata["omega_rad_s"] = config.omega
    table.companion = scaling_fits(table, n_values, m_values)
    return table


def scaling_fits(table: Table, n_values: Sequence[int], m_values: Sequence[int]) -> Table:
    n_col, m_col = table.column("n"), table.column("m")
    header = ["quantity", "axis", "fixed", "slope", "intercept", "r_squared"]
    rows = []
    for quantity in ("fisher_closed_form", "fisher_finite_difference", "fisher_empirical"):
        y = table.column(quantity).astype(float)
        for axis, groups, other, x_col in (("m", n_values, n_col, m_col), ("n", m_values, m_col, n_col)):
            for fixed in groups:
                sel = (other == fixed) & np.isfinite(y)
                if np.count_nonzero(sel) < 2:
                    continue
                a, b, r2 = linear_fit(x_col[sel], y[sel])
                rows.append([quantity, axis, int(fixed), a, b, r2])
    return Table(header, rows, dict(table.metadata, command="scaling-fits"))


# --------------------------------------------------------------------------


def run_crb(config: ExperimentConfig, threads: int = 1) -> Table:
    """Batch MLE of ``mu2`` and its variance relative to the Cramer-Rao bound."""
    dist = _uniform(config)
    survival = _survival(config)
    if dist.mu2 * 3 > survival.mu_max:
        raise EvaluationError("estimation bracket exceeds the survival window; not in the Zeno regime")
    batches = int(config.section("crb")["batches"])
    result = _empirical(config, config.n, config.m, dist, survival, batches, config.runs, threads, (0,))
    per_batch = result.runs_per_batch
    header = ["batch", "mu2_hat_ns"]
    rows = [[i, x / NS] for i, x in enumerate(result.estimates)]
    meta = base_metadata(config, "crb")
    meta.update({
        "runs_per_batch": per_batch,
        "batches": result.batches,
        "mu2_true_ns": result.mu2_true / NS,
        "mu2_hat_mean_ns": result.mu2_hat / NS,
        "variance_ns2": result.variance / NS2,
        "crb_variance_ns2": result.crb / NS2,
        "fisher_per_run_ns-2": result.fisher * NS2,
        "saturation_ratio": result.saturation_ratio,
        "saturation_ratio_stderr": result.saturation_ratio * result.ratio_error,
        "bias_z": result.bias_z,
    })
    return Table(header, rows, meta, result=result)


def run_ld(config: ExperimentConfig, threads: int = 1) -> Table:
    """Mean and spread of ``(1/m) sum_j ln q(mu_j)`` over an ascending ``m`` sweep."""
    survival = _survival(config)
    dist = config.distribution()
    runs = int(config.section("ld")["runs"])
    rows_ld = ld_convergence(survival, dist, config.ld_sweep(), runs, config.seed,
                             threads=threads, budget=config.budget)
    header = ["m", "mean_rate", "std_rate", "standard_error", "expected_rate", "z_score"]
    rows = [[r.m, r.mean, r.std, r.standard_error, r.expected, r.z_score] for r in rows_ld]
    meta = base_metadata(config, "ld")
    stds = np.array([r.std for r in rows_ld])
    if len(rows_ld) >= 2 and np.all(stds > 0):
        slope, _, r2 = linear_fit(np.log([r.m for r in rows_ld]), np.log(stds))
        meta["loglog_slope"] = slope
        meta["loglog_r_squared"] = r2
    meta["runs"] = runs
    return Table(header, rows, meta)


# --------------------------------------------------------------------------
# Config-level entry points


def ensemble_spec(config: ExperimentConfig, stream_tags: tuple[int, ...] = (0,)) -> EnsembleSpec:
    return EnsembleSpec(
        model=config.spin_model(), psi0=config.initial_state(), distribution=config.distribution(),
        m=config.m, runs=config.runs, seed=config.seed, mode=config.mode, budget=config.budget,
        stream_tags=stream_tags,
    )


def simulate_from_config(config: ExperimentConfig, threads: int = 1) -> TrajectoryEnsemble:
    """``config.runs`` trajectories of ``config.m`` measurements each."""
    return simulate_ensemble(ensemble_spec(config), threads=threads)


def mle_from_config(p_hat: float, config: ExperimentConfig) -> float:
    """MLE of ``mu2`` (seconds) with the config's ``mu2`` as the bracket guess."""
    dist = _uniform(config)
    return mle_mu2(p_hat, _survival(config), dist.mu1, dist.mu2, config.m)
