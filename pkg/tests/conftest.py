"""
Pytest configuration for sparsemodes tests.
Provides seeded generators and small problems shared across modules.
"""

import numpy as np
import pytest

from sparsemodes.models import MMVProblem
from sparsemodes.synth import gen_example1, gen_example2


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def random_problem():
    """Grouped problem with m=8, n=5 groups of d=2 rows and t=3 columns."""
    gen = np.random.default_rng(7)
    G = gen.standard_normal((8, 10))
    M = gen.standard_normal((8, 3))
    return MMVProblem(G=G, M=M, n=5, d=2)


@pytest.fixture
def scalar_problem():
    """Ungrouped single-column problem with m=6, n=q=4."""
    gen = np.random.default_rng(11)
    G = gen.standard_normal((6, 4))
    M = gen.standard_normal((6, 1))
    return MMVProblem(G=G, M=M, n=4, d=1)


@pytest.fixture
def identity_problem():
    M = np.array([[3.0], [-0.5], [1.5]])
    return MMVProblem(G=np.eye(3), M=M, n=3, d=1)


@pytest.fixture
def example1():
    return gen_example1(seed=42)


@pytest.fixture
def example2():
    return gen_example2(seed=42)
