"""Shared generators for the test suite.

Random objects are always drawn from an explicit seeded generator so
every test is reproducible in isolation.
"""

import numpy as np
import pytest

from grmers.statespace import PlantSet, StateSpaceModel


def rand_stable_model(rng, n, m=1, p=1, shift=None):
    """Random strictly stable state-space model.

    The shift pushes the spectrum left of the imaginary axis; by
    default it scales with n so the draw is stable with margin.
    """
    A = rng.standard_normal((n, n))
    if shift is None:
        shift = 1.0 + float(np.max(np.abs(np.linalg.eigvals(A)).real))
    A = A - shift * np.eye(n)
    B = rng.standard_normal((n, m))
    C = rng.standard_normal((p, n))
    D = rng.standard_normal((p, m))
    return StateSpaceModel(A, B, C, D)


def selector_family(rng, n_plants, n, r, spread=0.3, unstable_shift=0.2,
                    labels=None):
    """Plant family with selector outputs: C picks the first r states
    and C_z the remaining n - r, so [C; C_z] is the identity. The base
    matrix is shifted to put at least one eigenvalue in the right
    half-plane; siblings differ by bounded random offsets.
    """
    A0 = rng.standard_normal((n, n))
    A0 = A0 - (np.max(np.linalg.eigvals(A0).real) - unstable_shift) * np.eye(n)
    A_list = [A0]
    for _ in range(n_plants - 1):
        dA = rng.standard_normal((n, n))
        dA *= spread / np.linalg.svd(dA, compute_uv=False)[0]
        A_list.append(A0 + dA)
    B = rng.standard_normal((n, max(1, n // 3)))
    C = np.eye(n)[:r]
    C_z = np.eye(n)[r:]
    if labels is None:
        labels = [f"p{i}" for i in range(n_plants)]
    return PlantSet(A_list=A_list, B=B, C=C, C_z=C_z, labels=labels)


def scalar_family(a_values=(0.2, 0.3, 0.45)):
    """First-order single-channel family; every member unstable."""
    return PlantSet(
        A_list=[np.array([[a]]) for a in a_values],
        B=np.array([[1.0]]),
        C=np.array([[1.0]]),
        C_z=np.array([[1.0]]),
        labels=[f"p{i}" for i in range(len(a_values))],
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def family3():
    return scalar_family()
