"""Haar analysis, martingale transforms, and weighted square functions.

Haar functions are L2-normalized: h_I = |I|^{-1/2} (chi_left - chi_right),
positive on the left half. For grid data at depth N the Haar system consists
of the 2^N - 1 intervals at levels 0..N-1 plus the global mean.

The weighted square function norm admits three routes that must agree:
the closed per-interval sum, exact enumeration over all sign patterns of the
martingale transform, and Monte Carlo over random sign patterns. The closed
sum is the workhorse; the other two exist to check it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dyadic import DyadicInterval, GridScalar, GridVector
from .weights import MatrixWeight

ENUMERATION_CAP = 22


class HaarCoefficients:
    """Haar coefficients of a grid vector: per-level arrays plus the mean."""

    def __init__(self, depth: int, dim: int, mean: np.ndarray, levels: list[np.ndarray]):
        self.depth = depth
        self.dim = dim
        self.mean = mean
        self.levels = levels  # levels[k] has shape (2^k, dim), k = 0..depth-1

    def __getitem__(self, interval: DyadicInterval) -> np.ndarray:
        if interval.level >= self.depth:
            raise KeyError(f"no Haar coefficient at leaf level for {interval}")
        return self.levels[interval.level][interval.index]

    def coefficient_count(self) -> int:
        return (1 << self.depth) - 1

    def norms_sq_by_level(self) -> list[np.ndarray]:
        return [np.sum(c * c, axis=1) for c in self.levels]


class SignPattern:
    """Choice of sign +-1 for every Haar interval, complete over levels 0..N-1."""

    def __init__(self, depth: int, levels: list[np.ndarray]):
        if len(levels) != depth:
            raise ValueError("incomplete sign pattern")
        checked = []
        for k, arr in enumerate(levels):
            arr = np.asarray(arr, dtype=float)
            if arr.shape != (1 << k,) or not np.all(np.abs(arr) == 1.0):
                raise ValueError("incomplete sign pattern")
            checked.append(arr)
        self.depth = depth
        self.levels = checked

    @staticmethod
    def constant(depth: int, sign: int = 1) -> "SignPattern":
        return SignPattern(depth, [np.full(1 << k, float(sign)) for k in range(depth)])

    @staticmethod
    def from_flat(depth: int, flat: np.ndarray) -> "SignPattern":
        """Breadth-first flat array of +-1, one entry per Haar interval."""
        levels, pos = [], 0
        for k in range(depth):
            levels.append(np.asarray(flat[pos:pos + (1 << k)], dtype=float))
            pos += 1 << k
        return SignPattern(depth, levels)

    @staticmethod
    def random(depth: int, seed: int, sample_index: int = 0) -> "SignPattern":
        bits = _sign_bits(depth, seed, sample_index)
        return SignPattern.from_flat(depth, 1.0 - 2.0 * bits)


def _sign_bits(depth: int, seed: int, sample_index: int) -> np.ndarray:
    """One unbiased bit per Haar interval from a counter-based generator.

    Keyed on (seed, sample_index) so parallel sampling cannot change results.
    """
    count = (1 << depth) - 1
    gen = np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), sample_index]))
    return gen.integers(0, 2, size=count).astype(float)


def analyze(f: GridVector) -> HaarCoefficients:
    """Haar coefficients (f, h_I) for all intervals, plus the global mean."""
    tree = f.average_tree()
    levels = []
    for k in range(f.depth):
        below = tree[k + 1]
        scale = 0.5 * 2.0 ** (-k / 2.0)
        levels.append((below[0::2] - below[1::2]) * scale)
    return HaarCoefficients(f.depth, f.dim, tree[0][0].copy(), levels)


def synthesize(coeffs: HaarCoefficients, include_mean: bool = True) -> GridVector:
    """Rebuild the grid vector mean + sum_I c_I h_I (or drop the mean)."""
    current = coeffs.mean[None, :].copy() if include_mean else np.zeros((1, coeffs.dim))
    for k in range(coeffs.depth):
        amp = 2.0 ** (k / 2.0)
        nxt = np.empty((2 << k, coeffs.dim))
        nxt[0::2] = current + coeffs.levels[k] * amp
        nxt[1::2] = current - coeffs.levels[k] * amp
        current = nxt
    return GridVector(coeffs.depth, coeffs.dim, current)


def martingale_transform(f: GridVector, signs: SignPattern) -> GridVector:
    """T f = sum_I sigma_I (f, h_I) h_I; the mean term is dropped."""
    if signs.depth != f.depth:
        raise ValueError("incomplete sign pattern")
    coeffs = analyze(f)
    flipped = [c * s[:, None] for c, s in zip(coeffs.levels, signs.levels)]
    return synthesize(HaarCoefficients(f.depth, f.dim, coeffs.mean, flipped), include_mean=False)


def l2_norm_sq(f: GridVector) -> float:
    return float(np.sum(f.values * f.values) * 2.0 ** -f.depth)


def unweighted_square_function_sq(g: GridVector) -> GridScalar:
    """Pointwise S^2 g = sum over intervals containing x of ||(g,h_I)||^2 / |I|."""
    coeffs = analyze(g)
    out = np.zeros(g.n_leaves)
    for k, norms_sq in enumerate(coeffs.norms_sq_by_level()):
        out += np.repeat(norms_sq * 2.0**k, 1 << (g.depth - k))
    return GridScalar(g.depth, out)


def unweighted_square_function(g: GridVector) -> GridScalar:
    """Pointwise square function S g, the root of the primary squared output."""
    return GridScalar(g.depth, np.sqrt(unweighted_square_function_sq(g).values))


@dataclass
class SwNormResult:
    """Total weighted square function energy plus its per-interval terms."""

    total: float
    terms_by_level: list[np.ndarray]

    def term(self, interval: DyadicInterval) -> float:
        return float(self.terms_by_level[interval.level][interval.index])


def sw_norm_squared(weight: MatrixWeight, f: GridVector) -> SwNormResult:
    """||S_W f||^2 = sum_I <<W>_I (f,h_I), (f,h_I)>, exact finite sum."""
    if weight.depth != f.depth or weight.dim != f.dim:
        raise ValueError("weight and function dimensions do not match")
    coeffs = analyze(f)
    terms = []
    for k, c in enumerate(coeffs.levels):
        avg = weight.level_averages(k)
        terms.append(np.einsum("ni,nij,nj->n", c, avg, c))
    total = float(sum(np.sum(t) for t in terms))
    return SwNormResult(total, terms)


def _haar_leaf_tensor(coeffs: HaarCoefficients) -> np.ndarray:
    """Per-interval leaf contributions c_I h_I(x), stacked breadth first: (M, n, d)."""
    depth, dim = coeffs.depth, coeffs.dim
    n = 1 << depth
    rows = []
    for k, c in enumerate(coeffs.levels):
        amp = 2.0 ** (k / 2.0)
        half = 1 << (depth - k - 1)
        for j in range(1 << k):
            row = np.zeros((n, dim))
            row[2 * j * half:(2 * j + 1) * half] = c[j] * amp
            row[(2 * j + 1) * half:(2 * j + 2) * half] = -c[j] * amp
            rows.append(row)
    return np.array(rows) if rows else np.zeros((0, n, dim))


def _transform_energies(sign_batch: np.ndarray, leaf_tensor: np.ndarray,
                        weight: MatrixWeight) -> np.ndarray:
    """integral <W T_sigma f, T_sigma f> for a batch of sign patterns."""
    transformed = np.einsum("bm,mnd->bnd", sign_batch, leaf_tensor)
    vals = np.einsum("bnd,nde,bne->b", transformed, weight.field.values, transformed)
    return vals * 2.0 ** -weight.depth


def sw_sign_enumeration(weight: MatrixWeight, f: GridVector, chunk: int = 4096) -> float:
    """Exact expectation of integral ||W^{1/2} T_sigma f||^2 over all sign patterns.

    Walks every one of the 2^M patterns; independent of the closed-form sum,
    which it must reproduce to roundoff.
    """
    if weight.depth != f.depth or weight.dim != f.dim:
        raise ValueError("weight and function dimensions do not match")
    m = (1 << f.depth) - 1
    if m > ENUMERATION_CAP:
        raise ValueError(
            f"{m} Haar intervals exceed the enumeration cap {ENUMERATION_CAP}; use sw_monte_carlo")
    leaf_tensor = _haar_leaf_tensor(analyze(f))
    if m == 0:
        return 0.0
    shifts = np.arange(m, dtype=np.uint64)
    total = 0.0
    for start in range(0, 1 << m, chunk):
        idx = np.arange(start, min(start + chunk, 1 << m), dtype=np.uint64)
        signs = 1.0 - 2.0 * ((idx[:, None] >> shifts) & 1)
        total += float(np.sum(_transform_energies(signs, leaf_tensor, weight)))
    return total / float(1 << m)


def sw_monte_carlo(weight: MatrixWeight, f: GridVector, n_samples: int,
                   seed: int = 0) -> tuple[float, float]:
    """Sample mean and standard error of integral ||W^{1/2} T_sigma f||^2.

    Sample i draws its signs from a generator keyed on (seed, i).
    """
    if n_samples < 100:
        raise ValueError("need at least 100 samples")
    m = (1 << f.depth) - 1
    leaf_tensor = _haar_leaf_tensor(analyze(f))
    signs = np.empty((n_samples, m))
    for i in range(n_samples):
        signs[i] = 1.0 - 2.0 * _sign_bits(f.depth, seed, i)
    vals = np.concatenate([
        _transform_energies(signs[s:s + 4096], leaf_tensor, weight)
        for s in range(0, n_samples, 4096)
    ]) if m else np.zeros(n_samples)
    mean = float(np.mean(vals))
    stderr = float(np.std(vals, ddof=1) / np.sqrt(n_samples))
    return mean, stderr


def s3w_norm_squared(weight: MatrixWeight, g: GridVector, family) -> float:
    """Sparse square function energy sum_L <|| <W>_L^{1/2} g ||>_L^2 |L|."""
    intervals = family.intervals() if hasattr(family, "intervals") else family
    total = 0.0
    for interval in intervals:
        root_w = weight.sqrt_average(interval)
        block = g.values[interval.leaf_slice(g.depth)]
        mean_norm = float(np.mean(np.linalg.norm(block @ root_w, axis=1)))
        total += mean_norm * mean_norm * interval.measure
    return total
