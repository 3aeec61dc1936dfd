"""Shared helpers for the test suite."""

import numpy as np

from oamqkd import HybridState, PolarizationState


def random_unit_pairs(rng: np.random.Generator, n: int) -> np.ndarray:
    """n rows of complex amplitude pairs, each normalized to unit norm."""
    z = rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def random_polarization_states(rng: np.random.Generator, n: int) -> list:
    return [PolarizationState(a, b) for a, b in random_unit_pairs(rng, n)]


def random_hybrid_states(rng: np.random.Generator, n: int) -> list:
    return [HybridState(a, b) for a, b in random_unit_pairs(rng, n)]
