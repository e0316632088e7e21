"""Matrix weights, their A2 / A-infinity characteristics, and test families.

A weight is a grid of symmetric positive definite matrices. Averages of the
weight and of its pointwise inverse are cached over the whole dyadic tree at
construction, because every characteristic and every stopping-time query walks
those averages at all scales.

The A-infinity characteristic of a matrix weight is a supremum over directions
and is not computable exactly; ainfty_characteristic samples coordinate
directions, eigenvector directions of coarse-scale averages, and quasi-uniform
unit vectors, so the reported number is a certified lower bound of the true
supremum. For scalar weights (d = 1) it is exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .dyadic import DyadicInterval, GridMatrixField, GridScalar
from .linalg import EPS_PD, PSD_TOL, operator_norm_stack, psd_power_stack

FAMILY_KINDS = ("identity", "scalar_power", "block_scalar", "rotating", "random_log_pd")


class MatrixWeight:
    """A positive definite matrix weight with cached averages of W and W^-1.

    Positivity is enforced per leaf matrix: the smallest eigenvalue must clear
    eps_pd relative to that leaf's largest eigenvalue, so pointwise inverses
    are trustworthy. The spread across the grid is recorded as a diagnostic
    (global_eigenvalue_ratio) but not enforced; extreme power-law weights are
    legitimate inputs whose leaves are individually well conditioned.
    """

    def __init__(self, field: GridMatrixField, eps_pd: float = EPS_PD, metadata: dict | None = None):
        vals, vecs = np.linalg.eigh(field.values)
        lo, hi = vals[:, 0], vals[:, -1]
        if np.any(hi <= 0.0) or np.any(lo < -PSD_TOL * hi):
            raise ValueError("weight has a non positive definite leaf")
        if np.any(lo < eps_pd * hi):
            worst = float(np.min(lo / hi))
            raise ValueError(f"singular weight: leaf eigenvalue ratio {worst:.3e} below {eps_pd:.1e}")
        inv_vals = np.einsum("nij,nj,nkj->nik", vecs, 1.0 / vals, vecs)
        self.field = field
        self.inverse_field = GridMatrixField(field.depth, field.dim, inv_vals)
        self.eps_pd = eps_pd
        self.metadata = dict(metadata) if metadata else {}
        self.global_eigenvalue_ratio = float(np.min(lo) / np.max(hi))
        self._sqrt_levels: dict[int, np.ndarray] = {}
        # averages at every scale are queried constantly; build both trees now
        self.field.average_tree()
        self.inverse_field.average_tree()

    @property
    def depth(self) -> int:
        return self.field.depth

    @property
    def dim(self) -> int:
        return self.field.dim

    @property
    def n_leaves(self) -> int:
        return self.field.n_leaves

    def average(self, interval: DyadicInterval) -> np.ndarray:
        return self.field.average(interval)

    def inverse_average(self, interval: DyadicInterval) -> np.ndarray:
        return self.inverse_field.average(interval)

    def level_averages(self, level: int) -> np.ndarray:
        return self.field.level_averages(level)

    def inverse_level_averages(self, level: int) -> np.ndarray:
        return self.inverse_field.level_averages(level)

    def sqrt_level_averages(self, level: int) -> np.ndarray:
        """<W>_I^{1/2} for every interval at one level, cached."""
        if level not in self._sqrt_levels:
            self._sqrt_levels[level] = psd_power_stack(self.level_averages(level), 0.5)
        return self._sqrt_levels[level]

    def sqrt_average(self, interval: DyadicInterval) -> np.ndarray:
        return self.sqrt_level_averages(interval.level)[interval.index]

    def to_json_dict(self) -> dict:
        obj = self.field.to_json_dict()
        obj["schema"] = "matw.weight/1"
        obj["metadata"] = {"eps_pd": self.eps_pd, **self.metadata}
        return obj


def save_weight(weight: MatrixWeight, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(weight.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_weight(path: str) -> MatrixWeight:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    meta = obj.get("metadata", {})
    field = GridMatrixField.from_json_dict(obj)
    eps_pd = float(meta.get("eps_pd", EPS_PD))
    return MatrixWeight(field, eps_pd=eps_pd, metadata={k: v for k, v in meta.items() if k != "eps_pd"})


def matrix_weight_from_scalar(w: GridScalar, eps_pd: float = EPS_PD) -> MatrixWeight:
    field = GridMatrixField(w.depth, 1, w.values.reshape(-1, 1, 1))
    return MatrixWeight(field, eps_pd=eps_pd)


def a2_characteristic(weight: MatrixWeight) -> float:
    """sup over all dyadic intervals of ||<W>_I^{1/2} <W^-1>_I^{1/2}||^2."""
    best = 0.0
    for level in range(weight.depth + 1):
        sqrt_w = weight.sqrt_level_averages(level)
        sqrt_winv = psd_power_stack(weight.inverse_level_averages(level), 0.5)
        norms = operator_norm_stack(sqrt_w @ sqrt_winv)
        best = max(best, float(np.max(norms)))
    return best * best


def scalar_a2_characteristic(w: GridScalar) -> float:
    """Scalar A2 characteristic sup_I <w>_I <w^-1>_I, all values required positive."""
    if np.any(w.values <= 0.0):
        raise ValueError("scalar weight must be positive")
    winv = GridScalar(w.depth, 1.0 / w.values)
    best = 0.0
    for level in range(w.depth + 1):
        best = max(best, float(np.max(w.level_averages(level) * winv.level_averages(level))))
    return best


def scalar_direction_weight(weight: MatrixWeight, e: np.ndarray) -> GridScalar:
    """The scalar weight x -> <W(x) e, e> for a unit direction e."""
    e = np.asarray(e, dtype=float)
    norm = float(np.linalg.norm(e))
    if norm == 0.0:
        raise ValueError("direction must be a nonzero vector")
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"direction must be a unit vector (norm {norm!r})")
    vals = np.einsum("nij,i,j->n", weight.field.values, e, e)
    return GridScalar(weight.depth, vals)


def fujii_wilson_constant(w: GridScalar) -> float:
    """sup_I <M_I w>_I / <w>_I with M_I the dyadic maximal function localized to I.

    One top-down running-max pass per root level: O(N^2 2^N) total.
    """
    if np.any(w.values <= 0.0):
        raise ValueError("weight must be positive")
    tree = w.average_tree()
    depth = w.depth
    best = 1.0
    for root_level in range(depth + 1):
        running = np.repeat(tree[root_level], 1 << (depth - root_level))
        for level in range(root_level + 1, depth + 1):
            running = np.maximum(running, np.repeat(tree[level], 1 << (depth - level)))
        maximal_means = running.reshape(1 << root_level, -1).mean(axis=1)
        best = max(best, float(np.max(maximal_means / tree[root_level])))
    return best


def _radical_inverse(base: int, index: int) -> float:
    inv = 0.0
    digit = 1.0 / base
    while index > 0:
        index, rem = divmod(index, base)
        inv += rem * digit
        digit /= base
    return inv


def _first_primes(count: int) -> list[int]:
    primes, candidate = [], 2
    while len(primes) < count:
        if all(candidate % p for p in primes):
            primes.append(candidate)
        candidate += 1
    return primes


def halton_sphere_directions(dim: int, count: int, seed: int = 0) -> np.ndarray:
    """Quasi-uniform unit vectors: Halton points pushed through the normal inverse CDF."""
    if count <= 0:
        return np.zeros((0, dim))
    bases = _first_primes(dim)
    start = 1 + (seed % 10007)
    inv_cdf = NormalDist().inv_cdf
    out = np.empty((count, dim))
    row, index = 0, start
    while row < count:
        z = np.array([inv_cdf(min(max(_radical_inverse(b, index), 1e-12), 1 - 1e-12)) for b in bases])
        index += 1
        norm = np.linalg.norm(z)
        if norm < 1e-9:
            continue
        out[row] = z / norm
        row += 1
    return out


def ainfty_directions(weight: MatrixWeight, n_directions: int, seed: int = 0) -> np.ndarray:
    """Direction set: coordinates, coarse-scale average eigenvectors, Halton fill."""
    d = weight.dim
    if n_directions < 2 * d:
        raise ValueError(f"n_directions must be at least 2*dim = {2 * d}")
    dirs = [np.eye(d)]
    for level in range(min(weight.depth, 4) + 1):
        _, vecs = np.linalg.eigh(weight.level_averages(level))
        dirs.append(vecs.transpose(0, 2, 1).reshape(-1, d))
    stacked = np.concatenate(dirs, axis=0)
    stacked /= np.linalg.norm(stacked, axis=1, keepdims=True)
    kept: list[np.ndarray] = []
    for v in stacked:
        if all(abs(float(v @ u)) < 1.0 - 1e-10 for u in kept):
            kept.append(v)
    fill = halton_sphere_directions(d, n_directions - len(kept), seed)
    return np.array(kept + list(fill)) if len(fill) else np.array(kept)


def ainfty_characteristic(weight: MatrixWeight, n_directions: int, seed: int = 0) -> float:
    """Sampled matrix A-infinity characteristic sup_e [W_e]_{A_infinity}.

    A lower bound of the true supremum over directions; exact for d = 1.
    """
    best = 1.0
    for e in ainfty_directions(weight, n_directions, seed):
        best = max(best, fujii_wilson_constant(scalar_direction_weight(weight, e)))
    return best


@dataclass(frozen=True)
class WeightFamilySpec:
    """Deterministic recipe for a test weight: family kind, size, parameter, seed."""

    kind: str
    dim: int
    depth: int
    parameter: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.dim < 1 or self.depth < 0:
            raise ValueError("dim must be >= 1 and depth >= 0")
        if self.parameter < 0:
            raise ValueError("parameter must be nonnegative")
        if self.kind in ("scalar_power", "block_scalar") and not self.parameter < 1.0:
            raise ValueError("power family parameter must lie in [0, 1)")
        if self.kind == "rotating" and self.dim != 2:
            raise ValueError("rotating family is two dimensional")


def scalar_power_leaf_values(depth: int, t: float) -> np.ndarray:
    """Lacunary-block power weight, value 2^(-m*2t/(1-t)) on leaves in [2^-m-1, 2^-m].

    Discrete analogue of |x|^(2t/(1-t)); its A2 characteristic grows without
    bound as t -> 1 at fixed depth.
    """
    if not 0.0 <= t < 1.0:
        raise ValueError("t must lie in [0, 1)")
    alpha = 2.0 * t / (1.0 - t)
    w = np.ones(1 << depth)
    w[0] = 2.0 ** (-depth * alpha)
    for m in range(depth):
        lo, hi = 1 << (depth - m - 1), 1 << (depth - m)
        w[lo:hi] = 2.0 ** (-m * alpha)
    return w


def generate_weight(spec: WeightFamilySpec) -> MatrixWeight:
    """Build a family weight; identical specs give identical weights."""
    n, d, t = 1 << spec.depth, spec.dim, spec.parameter
    values = np.zeros((n, d, d))
    if spec.kind == "identity":
        values[:] = np.eye(d)
    elif spec.kind == "scalar_power":
        values[:] = np.eye(d)
        values[:, 0, 0] = scalar_power_leaf_values(spec.depth, t)
    elif spec.kind == "block_scalar":
        # staggered parameters t/2^i, alternating orientation per coordinate
        for i in range(d):
            vals = scalar_power_leaf_values(spec.depth, t / (1 << i))
            values[:, i, i] = vals[::-1] if i % 2 else vals
    elif spec.kind == "rotating":
        x = (np.arange(n) + 0.5) / n
        lam = np.exp(t * np.cos(2.0 * np.pi * x))
        c, s = np.cos(2.0 * np.pi * x), np.sin(2.0 * np.pi * x)
        values[:, 0, 0] = lam * c * c + s * s / lam
        values[:, 1, 1] = lam * s * s + c * c / lam
        values[:, 0, 1] = values[:, 1, 0] = (lam - 1.0 / lam) * c * s
    elif spec.kind == "random_log_pd":
        rng = np.random.default_rng(spec.seed)
        rows, cols = np.triu_indices(d)
        draws = rng.uniform(-t, t, size=(n, len(rows)))
        sym = np.zeros((n, d, d))
        sym[:, rows, cols] = draws
        sym[:, cols, rows] = draws
        vals, vecs = np.linalg.eigh(sym)
        values = np.einsum("nij,nj,nkj->nik", vecs, np.exp(vals), vecs)
    field = GridMatrixField(spec.depth, d, values)
    meta = {"kind": spec.kind, "parameter": spec.parameter, "seed": spec.seed}
    return MatrixWeight(field, metadata=meta)
