from __future__ import annotations

import math

import numpy as np
import pytest

from zenofisher.spins import SurvivalModel, build_spin_model, product_zero_state, uniform_alphas

NS = 1e-9
KHZ = 2.0 * math.pi * 5e3
MHZ = 2.0 * math.pi * 5e6


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (a + a.conj().T)


def random_state(rng: np.random.Generator, dim: int) -> np.ndarray:
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return psi / np.linalg.norm(psi)


def reference_model(n: int = 9, omega: float = KHZ):
    model = build_spin_model(n, omega, uniform_alphas(n, "x"))
    return model, product_zero_state(n)


@pytest.fixture(scope="session")
def ref_survival() -> SurvivalModel:
    model, psi0 = reference_model()
    return SurvivalModel.from_state(model, psi0)
