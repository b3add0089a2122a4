import numpy as np
import pytest

from mtpp import (
    ConstantBase,
    EventSequence,
    ExpDecayKernel,
    HawkesModel,
    ZeroKernel,
)


def poisson_model(*rates) -> HawkesModel:
    """K-mark Poisson process (zero kernels)."""
    K = len(rates)
    bases = [ConstantBase(r) for r in rates]
    kernels = [[ZeroKernel()] * K for _ in range(K)]
    return HawkesModel(K, bases, kernels, np.zeros((K, K), dtype=int))


def exp_hawkes_1d(c0: float, alpha: float, beta: float, z: int = 1) -> HawkesModel:
    """Single-mark constant-base exponential Hawkes."""
    return HawkesModel(1, [ConstantBase(c0)], [[ExpDecayKernel(alpha, beta)]], [[z]])


def sequence(times, marks=None, horizon=None, mark_count=1) -> EventSequence:
    times = np.asarray(times, dtype=float)
    if marks is None:
        marks = np.zeros(len(times), dtype=int)
    if horizon is None:
        horizon = float(times[-1]) if len(times) else 1.0
    return EventSequence(times, marks, horizon, mark_count)


@pytest.fixture
def poisson_half() -> HawkesModel:
    return poisson_model(0.5)
