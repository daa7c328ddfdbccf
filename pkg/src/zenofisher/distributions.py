"""
Waiting-time densities, their moments, and signed perturbation directions.

All times are in seconds. Point masses (Dirac deltas) are kept explicit as
``(location, weight)`` pairs; integrals against a measure are the weighted
point values plus an adaptive quadrature of the continuous part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ArgumentError, EvaluationError
from .quadrature import integrate


@dataclass(frozen=True)
class PointMass:
    location: float
    weight: float


class SignedMeasure:
    """Continuous density on ``[low, high]`` plus a finite set of point masses.

    Parameters
    ----------
    density : callable or None
        Vectorised density of the continuous part (may be negative).
    support : (float, float)
        Interval carrying the continuous part.
    point_masses : sequence of PointMass
    breakpoints : sequence of float
        Interior points where the density is not smooth.
    """

    def __init__(
        self,
        density: Callable[[np.ndarray], np.ndarray] | None,
        support: tuple[float, float],
        point_masses: Sequence[PointMass] = (),
        breakpoints: Sequence[float] = (),
    ):
        self.density = density
        self.support = (float(support[0]), float(support[1]))
        self.point_masses = tuple(point_masses)
        self.breakpoints = tuple(breakpoints)

    def integrate(self, g: Callable[[np.ndarray], np.ndarray]) -> float:
        """``int g(mu) dnu(mu)``, point masses handled exactly."""
        total = 0.0
        if self.point_masses:
            locs = np.array([pm.location for pm in self.point_masses])
            wts = np.array([pm.weight for pm in self.point_masses])
            total += float(np.dot(wts, np.asarray(g(locs), dtype=float)))
        lo, hi = self.support
        if self.density is not None and hi > lo:
            dens = self.density
            total += integrate(lambda x: dens(x) * g(x), lo, hi, points=self.breakpoints)
        return total

    @property
    def mass(self) -> float:
        return self.integrate(np.ones_like)

    def abs_mass(self) -> float:
        total = sum(abs(pm.weight) for pm in self.point_masses)
        lo, hi = self.support
        if self.density is not None and hi > lo:
            dens = self.density
            total += integrate(lambda x: np.abs(dens(x)), lo, hi, points=self.breakpoints)
        return total

    def moment(self, k: int) -> float:
        return self.integrate(lambda x: x**k)

    def moments(self, k_max: int) -> np.ndarray:
        """``[nu_1, ..., nu_kmax]`` with ``nu_k = int mu^k dnu``."""
        return np.array([self.moment(k) for k in range(1, k_max + 1)])

    def combine(self, other: "SignedMeasure", scale: float = 1.0) -> "SignedMeasure":
        """``self + scale * other`` as a single measure."""
        d1, d2 = self.density, other.density
        lo = min(self.support[0], other.support[0])
        hi = max(self.support[1], other.support[1])

        def density(x):
            out = np.zeros_like(x, dtype=float)
            if d1 is not None:
                inside = (x >= self.support[0]) & (x <= self.support[1])
                out = out + np.where(inside, d1(x), 0.0)
            if d2 is not None:
                inside = (x >= other.support[0]) & (x <= other.support[1])
                out = out + scale * np.where(inside, d2(x), 0.0)
            return out

        edges = set(self.breakpoints) | set(other.breakpoints)
        edges |= {self.support[0], self.support[1], other.support[0], other.support[1]}
        points = list(self.point_masses) + [PointMass(p.location, scale * p.weight) for p in other.point_masses]
        return SignedMeasure(density, (lo, hi), points, sorted(e for e in edges if lo < e < hi))


class IntervalDistribution:
    """Base class for waiting-time densities ``p(mu)`` on ``[low, high]``."""

    kind = "abstract"

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def moment(self, k: int) -> float:
        raise NotImplementedError

    def ppf(self, u) -> np.ndarray:
        """Inverse cumulative distribution function."""
        raise NotImplementedError

    def as_measure(self) -> SignedMeasure:
        raise NotImplementedError

    def moments(self, k_max: int) -> np.ndarray:
        return np.array([self.moment(k) for k in range(1, k_max + 1)])

    def expect(self, g: Callable[[np.ndarray], np.ndarray]) -> float:
        """``int p(mu) g(mu) dmu``."""
        return self.as_measure().integrate(g)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """``count`` i.i.d. draws, consuming ``count`` uniforms from ``rng``."""
        if count < 1:
            raise ArgumentError("count must be at least 1")
        return self.ppf(rng.random(count))


class Uniform(IntervalDistribution):
    """Uniform density on ``[mu1, mu2]``."""

    kind = "uniform"

    def __init__(self, mu1: float, mu2: float):
        if not (0 <= mu1 < mu2 and math.isfinite(mu2)):
            raise ArgumentError(f"uniform support needs 0 <= mu1 < mu2, got ({mu1}, {mu2})")
        self.mu1 = float(mu1)
        self.mu2 = float(mu2)

    @property
    def support(self):
        return (self.mu1, self.mu2)

    @property
    def width(self) -> float:
        return self.mu2 - self.mu1

    def pdf(self, mu):
        mu = np.asarray(mu, dtype=float)
        return np.where((mu >= self.mu1) & (mu <= self.mu2), 1.0 / self.width, 0.0)

    def moment(self, k: int) -> float:
        # (mu2^{k+1} - mu1^{k+1}) / ((k+1)(mu2 - mu1)) expanded into positive terms
        if k < 0:
            raise ArgumentError("moment order must be non-negative")
        a, b = self.mu1, self.mu2
        return math.fsum(b**j * a ** (k - j) for j in range(k + 1)) / (k + 1)

    def ppf(self, u):
        return self.mu1 + self.width * np.asarray(u, dtype=float)

    def as_measure(self) -> SignedMeasure:
        inv = 1.0 / self.width
        return SignedMeasure(lambda x: np.full_like(x, inv, dtype=float), self.support)

    def __repr__(self):
        return f"Uniform({self.mu1!r}, {self.mu2!r})"


class Dirac(IntervalDistribution):
    """All waiting times equal to ``mu``."""

    kind = "dirac"

    def __init__(self, mu: float):
        if not (mu >= 0 and math.isfinite(mu)):
            raise ArgumentError("dirac location must be finite and non-negative")
        self.mu = float(mu)

    @property
    def support(self):
        return (self.mu, self.mu)

    def moment(self, k: int) -> float:
        if k < 0:
            raise ArgumentError("moment order must be non-negative")
        return self.mu**k

    def ppf(self, u):
        return np.full(np.shape(u), self.mu)

    def as_measure(self) -> SignedMeasure:
        return SignedMeasure(None, self.support, [PointMass(self.mu, 1.0)])

    def __repr__(self):
        return f"Dirac({self.mu!r})"


class Tabulated(IntervalDistribution):
    """Histogram density: ``weights[i]`` is proportional to ``p`` on ``[grid[i], grid[i+1])``."""

    kind = "tabulated"

    def __init__(self, grid: Sequence[float], weights: Sequence[float]):
        g = np.asarray(grid, dtype=float)
        w = np.asarray(weights, dtype=float)
        if g.ndim != 1 or g.size < 2 or w.shape != (g.size - 1,):
            raise ArgumentError("need len(weights) == len(grid) - 1 >= 1")
        if g[0] < 0 or np.any(np.diff(g) <= 0):
            raise ArgumentError("grid must be non-negative and strictly increasing")
        if np.any(w < 0):
            raise ArgumentError("weights must be non-negative")
        cell_mass = w * np.diff(g)
        total = cell_mass.sum()
        if not total > 0:
            raise ArgumentError("tabulated density has zero total weight")
        self.grid = g
        self.density_values = w / total
        self._cdf = np.concatenate([[0.0], np.cumsum(cell_mass / total)])
        self._cdf[-1] = 1.0

    @property
    def support(self):
        return (float(self.grid[0]), float(self.grid[-1]))

    def pdf(self, mu):
        mu = np.asarray(mu, dtype=float)
        idx = np.clip(np.searchsorted(self.grid, mu, side="right") - 1, 0, self.grid.size - 2)
        inside = (mu >= self.grid[0]) & (mu <= self.grid[-1])
        return np.where(inside, self.density_values[idx], 0.0)

    def as_measure(self) -> SignedMeasure:
        return SignedMeasure(self.pdf, self.support, breakpoints=self.grid[1:-1])

    def moment(self, k: int) -> float:
        if k < 0:
            raise ArgumentError("moment order must be non-negative")
        return self.as_measure().moment(k)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        idx = np.clip(np.searchsorted(self._cdf, u, side="right") - 1, 0, self.grid.size - 2)
        # empty cells have zero CDF increment; searchsorted(side="right") skips them
        lo_cdf = self._cdf[idx]
        dens = self.density_values[idx]
        with np.errstate(divide="ignore", invalid="ignore"):
            offset = np.where(dens > 0, (u - lo_cdf) / dens, 0.0)
        return np.minimum(self.grid[idx] + offset, self.grid[idx + 1])

    def __repr__(self):
        return f"Tabulated(cells={self.grid.size - 1}, support={self.support})"


def moment(dist: IntervalDistribution, k: int) -> float:
    """``chi_k = int p(mu) mu^k dmu`` (units s^k)."""
    return dist.moment(k)


def sample(dist: IntervalDistribution, rng: np.random.Generator, count: int) -> np.ndarray:
    return dist.sample(rng, count)


class PerturbationDirection(SignedMeasure):
    """Tangent direction ``f`` of a density perturbation ``p -> p + c f``.

    ``xi`` optionally supplies analytic moments ``xi_1..xi_K``; otherwise
    moments are integrated.
    """

    def __init__(self, density, support, point_masses=(), breakpoints=(), xi=None, description=""):
        super().__init__(density, support, point_masses, breakpoints)
        self._xi = None if xi is None else np.asarray(xi, dtype=float)
        self.description = description

    def moments(self, k_max: int) -> np.ndarray:
        if self._xi is not None and self._xi.size >= k_max:
            return self._xi[:k_max].copy()
        return super().moments(k_max)

    def check_zero_mass(self, rtol: float = 1e-10) -> None:
        scale = self.abs_mass()
        if abs(self.mass) > rtol * max(scale, np.finfo(float).tiny):
            raise ArgumentError(f"perturbation direction does not preserve normalisation ({self.description})")

    @classmethod
    def from_distribution(cls, dist: IntervalDistribution, description: str = "p") -> "PerturbationDirection":
        """The density itself, viewed as a (unit-mass) direction."""
        meas = dist.as_measure()
        return cls(meas.density, meas.support, meas.point_masses, meas.breakpoints,
                   xi=dist.moments(8), description=description)


def uniform_mu2_moment_derivative(mu1: float, mu2: float, k: int) -> float:
    """``d chi_k / d mu2`` for the uniform density on ``[mu1, mu2]``."""
    d = mu2 - mu1
    return ((k + 1) * mu2**k * d - (mu2 ** (k + 1) - mu1 ** (k + 1))) / ((k + 1) * d * d)


def mu2_shift_direction(dist: Uniform, k_max: int = 8) -> PerturbationDirection:
    """Direction generated by moving the upper edge ``mu2`` of a uniform density.

    ``f(mu) = (delta(mu - mu2) - p(mu)) / (mu2 - mu1)``: a point mass of
    weight ``1/(mu2 - mu1)`` at ``mu2`` and a flat negative part of height
    ``-1/(mu2 - mu1)^2``. Its moments are ``xi_k = d chi_k / d mu2``.
    """
    if not isinstance(dist, Uniform):
        raise ArgumentError("mu2_shift_direction needs a Uniform distribution")
    mu1, mu2 = dist.mu1, dist.mu2
    if mu2 == mu1:
        raise ArgumentError("degenerate support")
    d = mu2 - mu1
    height = -1.0 / (d * d)
    xi = [uniform_mu2_moment_derivative(mu1, mu2, k) for k in range(1, k_max + 1)]
    return PerturbationDirection(
        lambda x: np.full_like(x, height, dtype=float),
        (mu1, mu2),
        [PointMass(mu2, 1.0 / d)],
        xi=xi,
        description=f"mu2-shift of uniform({mu1:g}, {mu2:g})",
    )


def pair_with_log_q(f: SignedMeasure, log_q: Callable[[np.ndarray], np.ndarray]) -> float:
    """``<f|ln q> = int f(mu) ln q(mu) dmu``.

    Raises
    ------
    EvaluationError
        If ``ln q`` is not finite somewhere it is needed.
    """
    def safe_log_q(x):
        val = np.asarray(log_q(x), dtype=float)
        if not np.all(np.isfinite(val)):
            raise EvaluationError("ln q is not finite on the support of the direction")
        return val

    return f.integrate(safe_log_q)
