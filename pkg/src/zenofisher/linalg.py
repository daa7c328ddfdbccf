"""
Dense complex linear algebra for exact unitary evolution of small spin systems.

Operators are plain square ``numpy`` arrays of dtype ``complex128``; states
are 1-d complex arrays. The propagator ``exp(-i H mu)`` is always formed
from the spectral decomposition of the Hermitian generator, so one
diagonalisation serves any number of evolution times.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import ArgumentError, ResourceError

#: Largest Hilbert-space dimension handled with dense storage (12 spins).
MAX_DIM = 4096

HERMITIAN_RTOL = 1e-12
NORM_TOL = 1e-12

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


def _as_square(a, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ArgumentError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    return a


def check_dim(dim: int) -> None:
    if dim > MAX_DIM:
        raise ResourceError(f"dimension {dim} exceeds the dense limit {MAX_DIM}")


def is_hermitian(a: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    """``max|A_ij - conj(A_ji)| <= rtol * max|A_ij|``."""
    a = np.asarray(a)
    scale = np.max(np.abs(a)) if a.size else 0.0
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= rtol * scale)


def normalize(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    n = np.linalg.norm(psi)
    if n == 0:
        raise ArgumentError("cannot normalise the zero vector")
    return psi / n


def check_state(psi, dim: int | None = None, tol: float = NORM_TOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ArgumentError(f"state must be a 1-d vector, got shape {psi.shape}")
    if dim is not None and psi.shape[0] != dim:
        raise ArgumentError(f"state has dimension {psi.shape[0]}, expected {dim}")
    if abs(np.linalg.norm(psi) - 1.0) > tol:
        raise ArgumentError("state is not normalised")
    return psi


def kron_chain(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Kronecker product of ``factors`` in list order.

    The first factor acts on the most significant qubit, so
    ``kron_chain([X, I])`` flips the leftmost bit of a basis label.
    """
    if len(factors) == 0:
        raise ArgumentError("kron_chain needs at least one factor")
    mats = [_as_square(f, "factor") for f in factors]
    dim = int(np.prod([m.shape[0] for m in mats]))
    check_dim(dim)
    return reduce(np.kron, mats)


def embed_site(op: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    """Single-site operator ``op`` acting on qubit ``site`` of ``n_sites``."""
    if not 0 <= site < n_sites:
        raise ArgumentError(f"site {site} outside 0..{n_sites - 1}")
    factors = [IDENTITY_2] * n_sites
    factors[site] = op
    return kron_chain(factors)


@dataclass(frozen=True)
class SpectralDecomposition:
    """``A = V diag(eigenvalues) V^dagger`` with ascending real eigenvalues.

    Instances are treated as immutable value objects and may be shared
    between threads.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def propagator(self, mu: float) -> np.ndarray:
        """Dense ``exp(-i A mu)``."""
        v = self.eigenvectors
        return (v * np.exp(-1j * self.eigenvalues * mu)) @ v.conj().T

    def evolve(self, mu: float, psi: np.ndarray) -> np.ndarray:
        """``exp(-i A mu) psi`` as two dense matrix-vector products."""
        v = self.eigenvectors
        return v @ (np.exp(-1j * self.eigenvalues * mu) * (v.conj().T @ psi))


def eig_hermitian(a) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    Raises
    ------
    ArgumentError
        If ``a`` is not square or not Hermitian within ``HERMITIAN_RTOL``.
    ResourceError
        If the dimension exceeds ``MAX_DIM``.
    """
    a = _as_square(a)
    check_dim(a.shape[0])
    if not is_hermitian(a):
        raise ArgumentError("matrix is not Hermitian")
    # symmetrise so that rounding-level asymmetry does not leak into eigh
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    return SpectralDecomposition(eigenvalues=w, eigenvectors=v)


def evolve(h, mu: float, psi) -> np.ndarray:
    """Return ``exp(-i H mu) psi``.

    Parameters
    ----------
    h : ndarray or SpectralDecomposition
        Hermitian generator in rad/s, or its precomputed decomposition.
    mu : float
        Evolution time in seconds, ``mu >= 0``.
    psi : ndarray
        Normalised state vector.
    """
    if mu < 0:
        raise ArgumentError("evolution time must be non-negative")
    dec = h if isinstance(h, SpectralDecomposition) else eig_hermitian(h)
    psi = check_state(psi, dec.dim)
    return dec.evolve(mu, psi)
