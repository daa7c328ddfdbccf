"""
Local spin Hamiltonians, Zeno subspaces and the single-measurement survival
function.

Conventions: angular frequencies in rad/s, times in seconds. The survival
function of a rank-one subspace ``Pi = |psi0><psi0|`` only depends on the
spectral weights ``w_k = |<v_k|psi0>|^2`` of the initial state,

    q(mu) = |sum_k w_k exp(-i E_k mu)|^2 ,

which is what :class:`SurvivalModel` stores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import ArgumentError, EvaluationError, ResourceError
from .linalg import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    SpectralDecomposition,
    check_state,
    eig_hermitian,
    embed_site,
    is_hermitian,
)

MAX_SPINS = 12
MAX_K = 8

#: Stencil spacing for beta extraction, in units of 1/sqrt(Var H_Pi).
BETA_STEP = 0.05
#: Default upper evaluation bound for mu, in units of 1/sqrt(Var H_Pi).
MU_MAX_SCALE = 0.5


@dataclass(frozen=True)
class SpinModel:
    """``H = omega * sum_n alpha_n . sigma^(n)`` on ``n_spins`` qubits."""

    n_spins: int
    omega: float
    alphas: np.ndarray
    hamiltonian: np.ndarray = field(repr=False)
    _decomposition: SpectralDecomposition | None = field(default=None, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return 2**self.n_spins

    def decomposition(self) -> SpectralDecomposition:
        """Spectral decomposition of H, computed once per model."""
        if self._decomposition is None:
            # racing threads compute identical values; last write wins
            object.__setattr__(self, "_decomposition", eig_hermitian(self.hamiltonian))
        return self._decomposition


def build_spin_model(n_spins: int, omega: float, alphas: Sequence[Sequence[float]]) -> SpinModel:
    """Assemble the local spin Hamiltonian.

    Parameters
    ----------
    n_spins : int
        Number of spins, ``1 <= n_spins <= 12``.
    omega : float
        Angular frequency in rad/s, strictly positive.
    alphas : sequence of 3-vectors
        Coupling direction of each spin to ``(sigma_x, sigma_y, sigma_z)``.
        Vectors are normalised; a zero vector is rejected.
    """
    if not 1 <= n_spins <= MAX_SPINS:
        raise ResourceError(f"n_spins must lie in 1..{MAX_SPINS}, got {n_spins}")
    if not omega > 0:
        raise ArgumentError("omega must be positive")
    a = np.asarray(alphas, dtype=float)
    if a.shape != (n_spins, 3):
        raise ArgumentError(f"expected {n_spins} coupling 3-vectors, got shape {a.shape}")
    norms = np.linalg.norm(a, axis=1)
    if np.any(norms == 0) or not np.all(np.isfinite(norms)):
        raise ArgumentError("coupling vectors must be non-zero and finite")
    a = a / norms[:, None]
    a.setflags(write=False)

    h = np.zeros((2**n_spins, 2**n_spins), dtype=complex)
    for n in range(n_spins):
        local = a[n, 0] * SIGMA_X + a[n, 1] * SIGMA_Y + a[n, 2] * SIGMA_Z
        h += embed_site(local, n, n_spins)
    h *= omega
    h.setflags(write=False)
    return SpinModel(n_spins=n_spins, omega=float(omega), alphas=a, hamiltonian=h)


def uniform_alphas(n_spins: int, direction: str | Sequence[float]) -> np.ndarray:
    """Same coupling vector for every spin; ``"x"``, ``"y"``, ``"z"`` or a 3-vector."""
    axes = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}
    vec = axes[direction] if isinstance(direction, str) else direction
    return np.tile(np.asarray(vec, dtype=float), (n_spins, 1))


def product_zero_state(n_spins: int) -> np.ndarray:
    """``|0...0>``."""
    if not 1 <= n_spins <= MAX_SPINS:
        raise ResourceError(f"n_spins must lie in 1..{MAX_SPINS}")
    psi = np.zeros(2**n_spins, dtype=complex)
    psi[0] = 1.0
    return psi


def ghz_state(n_spins: int) -> np.ndarray:
    """``(|0...0> - i|1...1>)/sqrt(2)``."""
    if not 1 <= n_spins <= MAX_SPINS:
        raise ResourceError(f"n_spins must lie in 1..{MAX_SPINS}")
    psi = np.zeros(2**n_spins, dtype=complex)
    psi[0] = 1.0 / math.sqrt(2.0)
    psi[-1] = -1.0j / math.sqrt(2.0)
    return psi


@dataclass(frozen=True)
class ZenoSubspace:
    """Orthogonal projector ``Pi`` defining the measured subspace."""

    projector: np.ndarray
    rank: int
    state: np.ndarray | None = None

    @classmethod
    def from_state(cls, psi0) -> "ZenoSubspace":
        psi0 = check_state(psi0)
        proj = np.outer(psi0, psi0.conj())
        return cls(projector=proj, rank=1, state=psi0)

    @classmethod
    def from_projector(cls, proj) -> "ZenoSubspace":
        proj = np.asarray(proj, dtype=complex)
        if proj.ndim != 2 or proj.shape[0] != proj.shape[1]:
            raise ArgumentError("projector must be square")
        if not is_hermitian(proj):
            raise ArgumentError("projector must be Hermitian")
        if np.linalg.norm(proj @ proj - proj) > 1e-10:
            raise ArgumentError("projector is not idempotent")
        tr = np.trace(proj).real
        rank = int(round(tr))
        if abs(tr - rank) > 1e-8:
            raise ArgumentError("projector trace is not an integer")
        state = None
        if rank == 1:
            w, v = np.linalg.eigh(proj)
            state = v[:, -1]
        return cls(projector=proj, rank=rank, state=state)

    @classmethod
    def from_basis(cls, vectors) -> "ZenoSubspace":
        """Projector onto the span of the columns of ``vectors``."""
        q, _ = np.linalg.qr(np.asarray(vectors, dtype=complex))
        return cls.from_projector(q @ q.conj().T)


def _hamiltonian_of(model) -> np.ndarray:
    return model.hamiltonian if isinstance(model, SpinModel) else np.asarray(model, dtype=complex)


def variance_hpi(model, psi0, subspace: ZenoSubspace | None = None) -> float:
    """Variance of ``H_Pi = H - Pi H Pi`` in the state ``psi0`` (units s^-2).

    ``subspace`` defaults to ``|psi0><psi0|``, in which case the result is the
    plain energy variance ``<H^2> - <H>^2``.
    """
    h = _hamiltonian_of(model)
    psi0 = check_state(psi0, h.shape[0])
    proj = np.outer(psi0, psi0.conj()) if subspace is None else subspace.projector
    if proj.shape != h.shape:
        raise ArgumentError("projector and Hamiltonian dimensions differ")
    h_pi = h - proj @ h @ proj
    phi = h_pi @ psi0
    mean = np.vdot(psi0, phi).real
    # ||(H_Pi - <H_Pi>) psi||^2 avoids the <H^2> - <H>^2 cancellation
    return float(np.linalg.norm(phi - mean * psi0) ** 2)


class SurvivalModel:
    """Single-measurement survival function of a rank-one Zeno subspace.

    Parameters
    ----------
    energies : array_like
        Eigenvalues of H carrying weight in ``psi0`` (rad/s).
    weights : array_like
        Spectral weights ``|<v_k|psi0>|^2``; renormalised to sum to one.
    mu_max : float, optional
        Upper bound of the evaluation window in seconds. Defaults to
        ``0.5 / sqrt(variance)``, or infinity for a stationary state.

    Notes
    -----
    With energies centred on ``<H>``, ``a(mu) = 1 - s - i t`` where
    ``s = 2 sum w sin^2(theta/2)`` and ``t = sum w sin(theta)``, so the
    leakage ``1 - q = 2s - s^2 - t^2`` is obtained without cancellation and
    ``ln q = log1p(-leak)`` keeps full relative precision near ``q = 1``.
    """

    def __init__(self, energies, weights, mu_max: float | None = None, merge_tol: float = 1e-12):
        e = np.asarray(energies, dtype=float).ravel()
        w = np.asarray(weights, dtype=float).ravel()
        if e.shape != w.shape or e.size == 0:
            raise ArgumentError("energies and weights must be equal-length, non-empty")
        if np.any(w < 0):
            raise ArgumentError("spectral weights must be non-negative")
        w = w / w.sum()
        e, w = _merge_levels(e, w, merge_tol)
        centre = float(np.dot(w, e))
        self.energies = e - centre
        self.weights = w
        self.variance = float(np.dot(w, self.energies**2))
        if mu_max is None:
            mu_max = MU_MAX_SCALE / math.sqrt(self.variance) if self.variance > 0 else math.inf
        self.mu_max = float(mu_max)

    @classmethod
    def from_state(cls, model, psi0, mu_max: float | None = None) -> "SurvivalModel":
        """Survival model for ``Pi = |psi0><psi0|`` under ``model``'s Hamiltonian."""
        if isinstance(model, SpinModel):
            dec = model.decomposition()
        elif isinstance(model, SpectralDecomposition):
            dec = model
        else:
            dec = eig_hermitian(model)
        psi0 = check_state(psi0, dec.dim)
        amps = dec.eigenvectors.conj().T @ psi0
        return cls(dec.eigenvalues, np.abs(amps) ** 2, mu_max=mu_max)

    def _s_t(self, mu):
        theta = np.multiply.outer(np.asarray(mu, dtype=float), self.energies)
        s = 2.0 * (np.sin(0.5 * theta) ** 2 @ self.weights)
        t = np.sin(theta) @ self.weights
        return s, t

    def leak(self, mu):
        """``1 - q(mu)`` evaluated without cancellation."""
        s, t = self._s_t(mu)
        return 2.0 * s - s * s - t * t

    def q(self, mu):
        s, t = self._s_t(mu)
        leak = 2.0 * s - s * s - t * t
        # near q = 0 the direct modulus keeps relative precision
        return np.where(leak > 0.5, (1.0 - s) ** 2 + t * t, 1.0 - leak)

    def log_q(self, mu):
        """``ln q(mu)``; raises :class:`EvaluationError` where ``q <= 0``."""
        s, t = self._s_t(mu)
        leak = 2.0 * s - s * s - t * t
        if np.any(leak >= 1.0):
            raise EvaluationError("survival probability vanishes inside the evaluation window")
        return self._log_q_from(s, t, leak)

    def log_q_unchecked(self, mu):
        """``ln q(mu)`` with ``-inf`` where ``q`` vanishes."""
        s, t = self._s_t(mu)
        return self._log_q_from(s, t, 2.0 * s - s * s - t * t)

    @staticmethod
    def _log_q_from(s, t, leak):
        with np.errstate(divide="ignore"):
            far = np.log((1.0 - s) ** 2 + t * t)
        near = np.log1p(-np.minimum(leak, 0.5))
        return np.where(leak > 0.5, far, near)

    def beta_step(self) -> float:
        if self.variance <= 0:
            return 0.0
        return BETA_STEP / math.sqrt(self.variance)

    def betas(self, k_max: int = MAX_K) -> np.ndarray:
        """``beta_k = d^k ln q / d mu^k`` at ``mu = 0`` for ``k = 1..k_max``."""
        if self.variance <= 0:
            return np.zeros(k_max)
        return beta_coefficients(self.log_q, k_max, self.beta_step())

    def __repr__(self) -> str:
        return (f"SurvivalModel(levels={self.energies.size}, variance={self.variance:.6g}, "
                f"mu_max={self.mu_max:.6g})")


def _merge_levels(e: np.ndarray, w: np.ndarray, tol: float):
    keep = w > 0
    e, w = e[keep], w[keep]
    order = np.argsort(e)
    e, w = e[order], w[order]
    scale = max(np.max(np.abs(e)), 1.0) if e.size else 1.0
    breaks = np.flatnonzero(np.diff(e) > tol * scale) + 1
    groups = np.split(np.arange(e.size), breaks)
    w_m = np.array([w[g].sum() for g in groups])
    e_m = np.array([np.dot(w[g], e[g]) / w[g].sum() for g in groups])
    return e_m, w_m


def survival_q(model, subspace: ZenoSubspace, psi0, mu):
    """``|<psi0| exp(-i H mu) |psi0>|^2`` for a rank-one subspace."""
    if subspace.rank != 1:
        raise ArgumentError("survival_q is defined for rank-one subspaces; use sequential trajectories")
    psi0 = check_state(psi0)
    if abs(abs(np.vdot(subspace.state, psi0)) - 1.0) > 1e-10:
        raise ArgumentError("psi0 does not span the Zeno subspace")
    if np.any(np.asarray(mu) < 0):
        raise ArgumentError("mu must be non-negative")
    return SurvivalModel.from_state(model, psi0).q(mu)


@lru_cache(maxsize=None)
def _central_stencil(order: int) -> tuple[tuple[int, ...], tuple[float, ...]]:
    """Second-order central finite-difference weights for the ``order``-th derivative."""
    half = order // 2 if order % 2 == 0 else (order + 1) // 2
    nodes = list(range(-half, half + 1))
    n = len(nodes)
    # exact Vandermonde solve: sum_j c_j j^r = order! delta_{r,order}
    a = [[Fraction(j) ** r for j in nodes] for r in range(n)]
    b = [Fraction(math.factorial(order) if r == order else 0) for r in range(n)]
    for col in range(n):
        piv = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        b[col], b[piv] = b[piv], b[col]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col] / a[col][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
                b[r] -= f * b[col]
    coeffs = tuple(float(b[r] / a[r][r]) for r in range(n))
    return tuple(nodes), coeffs


def _central_difference(f: Callable, order: int, h: float) -> float:
    nodes, coeffs = _central_stencil(order)
    vals = np.asarray(f(np.array(nodes, dtype=float) * h), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise EvaluationError("ln q is not finite on the stencil")
    # combine mirrored nodes first so an even f gives exactly zero odd derivatives
    half = len(nodes) // 2
    sign = -1.0 if order % 2 else 1.0
    c = np.asarray(coeffs[half + 1:])
    total = math.fsum(c * (vals[half + 1:] + sign * vals[half - 1::-1])) + coeffs[half] * vals[half]
    return float(total / h**order)


def beta_coefficients(log_q: Callable, k_max: int, h: float) -> np.ndarray:
    """Taylor coefficients of ``ln q`` at zero by Richardson-extrapolated central differences.

    Parameters
    ----------
    log_q : callable
        Vectorised ``ln q(mu)``; it is sampled at ``mu = j*h/2**l`` with
        ``|j| <= (k_max + 1)//2`` and ``l = 0, 1, 2``.
    k_max : int
        Highest derivative, ``1 <= k_max <= 8``.
    h : float
        Base stencil spacing in seconds.

    Returns
    -------
    ndarray
        ``beta_1 .. beta_k_max`` with ``beta_k`` in s^-k.
    """
    if not 1 <= k_max <= MAX_K:
        raise ArgumentError(f"k_max must lie in 1..{MAX_K}")
    if not h > 0:
        raise ArgumentError("stencil spacing must be positive")
    out = np.empty(k_max)
    for k in range(1, k_max + 1):
        d0, d1, d2 = (_central_difference(log_q, k, h / 2**l) for l in range(3))
        r0 = (4.0 * d1 - d0) / 3.0
        r1 = (4.0 * d2 - d1) / 3.0
        out[k - 1] = (16.0 * r1 - r0) / 15.0
    return out
