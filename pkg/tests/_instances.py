"""Deterministic randomized instance pool shared by the verification suites.

Parameter ranges keep every leaf matrix within the positivity tolerance while
still spanning tame through strongly degenerate weights across all families.
"""

import numpy as np

from matw.dyadic import GridVector
from matw.weights import WeightFamilySpec, generate_weight

FAMILY_CYCLE = ["identity", "scalar_power", "block_scalar", "rotating", "random_log_pd"]


def _random_function(rng: np.random.Generator, depth: int, dim: int) -> GridVector:
    """Gaussian noise, optionally spiked or locally boosted so stopping
    conditions actually fire on a healthy fraction of the pool."""
    n = 1 << depth
    vals = rng.standard_normal((n, dim)) * float(rng.uniform(0.5, 2.0))
    style = rng.integers(0, 4)
    if style == 1:  # single spike
        vals[rng.integers(0, n)] += rng.standard_normal(dim) * float(rng.uniform(10, 200))
    elif style == 2:  # boosted dyadic block
        level = int(rng.integers(1, depth + 1))
        span = 1 << (depth - level)
        j = int(rng.integers(0, 1 << level))
        vals[j * span:(j + 1) * span] *= float(rng.uniform(10, 100))
    return GridVector(depth, dim, vals)


def random_instance(index: int, max_depth: int = 10, max_dim: int = 4):
    """Instance #index: a family weight plus a random function, reproducible."""
    rng = np.random.default_rng(1_000_003 * index + 17)
    kind = FAMILY_CYCLE[index % len(FAMILY_CYCLE)]
    depth = int(rng.integers(1, max_depth + 1))
    dim = 2 if kind == "rotating" else int(rng.integers(1, max_dim + 1))
    if kind == "identity":
        t = 0.0
    elif kind == "scalar_power":
        t = float(rng.uniform(0, 0.85)) if dim == 1 else float(rng.uniform(0, 0.55))
    elif kind == "block_scalar":
        t = float(rng.uniform(0, 0.5))
    elif kind == "rotating":
        t = float(rng.uniform(0, 2.0))
    else:
        t = float(rng.uniform(0, 2.5 if dim <= 2 else 2.0))
    weight = generate_weight(WeightFamilySpec(kind, dim, depth, parameter=t,
                                              seed=int(rng.integers(2**31))))
    return weight, _random_function(rng, depth, dim)
