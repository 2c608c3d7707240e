"""Threshold-then-sample sparsification.

Entries of A with ``|A_ij| <= eps / (2n)`` are dropped, giving A_hat. Then
``s`` index pairs are drawn i.i.d. with replacement with probability
``p_ij = A_hat_ij**2 / ||A_hat||_F**2`` and the sketch is

    A_tilde = (1/s) * sum_t (A_hat[i_t, j_t] / p[i_t, j_t]) * e_{i_t} e_{j_t}^T

with repeated draws of the same pair summed into one entry. The default
budget ``s = ceil(28 n ln(sqrt(2) n) ||A||_F**2 / eps**2)`` makes
``||A - A_tilde||_2 <= eps`` hold with probability at least ``1 - 1/n``.

Randomness comes from ``numpy.random.Generator(PCG64(seed))``; draw ``t``
consumes exactly one uniform variate ``u_t`` and is mapped to an entry by
inverse CDF over the row-major list of surviving entries.
"""

import math
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

import numpy as np

from .matrix import PowerIterationConfig, as_matrix, frobenius_norm, spectral_norm

SQRT2 = math.sqrt(2.0)


def _check_epsilon(epsilon: float) -> float:
    epsilon = float(epsilon)
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise ValueError(f"invalid accuracy parameter epsilon={epsilon!r} (must be > 0)")
    return epsilon


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(check_seed(seed)))


@dataclass(frozen=True, eq=False)
class SamplingPlan:
    """Sampling distribution over the non-zeros of a thresholded matrix.

    ``rows``, ``cols``, ``values`` list the surviving entries in row-major
    order (0-based indices); ``weights`` are their squares and
    ``total_weight`` their sum. An all-zero A_hat gives an empty plan with
    ``total_weight == 0``.
    """

    n: int
    epsilon: float
    threshold: float
    s: int
    total_weight: float
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    weights: np.ndarray

    @property
    def empty(self) -> bool:
        return self.values.size == 0

    @property
    def probabilities(self) -> np.ndarray:
        if self.empty:
            return self.weights.copy()
        return self.weights / self.total_weight


@dataclass(frozen=True, eq=False)
class SparseSketch:
    """Sparse n-by-n sketch in coordinate form (0-based, unique keys).

    ``s`` is the number of draws used; ``s == 0`` marks the all-zero input
    for which no budget is defined.
    """

    n: int
    s: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    seed: int
    epsilon: Optional[float] = None
    threshold: Optional[float] = None

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    def triples(self) -> Iterator[Tuple[int, int, float]]:
        return zip(self.rows.tolist(), self.cols.tolist(), self.values.tolist())

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        np.add.at(out, (self.rows, self.cols), self.values)
        return out

    def same_as(self, other: "SparseSketch") -> bool:
        return (
            self.n == other.n
            and self.s == other.s
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.values, other.values)
        )

    @classmethod
    def empty(cls, n, s=0, seed=0, epsilon=None, threshold=None) -> "SparseSketch":
        z = np.zeros(0, dtype=np.int64)
        return cls(n, s, z, z.copy(), np.zeros(0), seed, epsilon, threshold)


def threshold_zero(a, epsilon: float) -> np.ndarray:
    """Zero every entry with ``|a_ij| <= epsilon / (2n)``; larger ones are kept."""
    epsilon = _check_epsilon(epsilon)
    a = as_matrix(a)
    thr = epsilon / (2 * a.shape[0])
    out = np.where(np.abs(a) > thr, a, 0.0)
    out.setflags(write=False)
    return out


def sample_size_real(n: int, frob_norm_sq: float, epsilon: float) -> float:
    """``28 n ln(sqrt(2) n) ||A||_F^2 / eps^2`` before rounding."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not frob_norm_sq > 0:
        raise ValueError("squared Frobenius norm must be positive")
    epsilon = _check_epsilon(epsilon)
    return 28.0 * n * math.log(SQRT2 * n) * frob_norm_sq / epsilon**2


def sample_size(n: int, frob_norm_sq: float, epsilon: float) -> int:
    return math.ceil(sample_size_real(n, frob_norm_sq, epsilon))


def build_plan(a_hat, epsilon: float, s: int) -> SamplingPlan:
    epsilon = _check_epsilon(epsilon)
    if s < 1:
        raise ValueError("sample budget s must be >= 1")
    a_hat = as_matrix(a_hat)
    n = a_hat.shape[0]
    thr = epsilon / (2 * n)
    rows, cols = np.nonzero(a_hat)
    values = a_hat[rows, cols]
    if np.any(np.abs(values) <= thr):
        raise ValueError("matrix not thresholded at eps/(2n)")
    weights = values * values
    total = float(weights.sum()) if values.size else 0.0
    if values.size and not 0 < total < math.inf:
        raise ValueError("squared entries under/overflow double precision")
    for arr in (rows, cols, values, weights):
        arr.setflags(write=False)
    return SamplingPlan(n, epsilon, thr, int(s), total, rows, cols, values, weights)


def draw_samples(plan: SamplingPlan, s: int, seed: int) -> np.ndarray:
    """Indices into the plan's entry list for ``s`` i.i.d. draws."""
    if plan.empty:
        raise ValueError("cannot sample from an empty plan")
    cdf = np.cumsum(plan.weights)
    u = make_rng(seed).random(s)
    idx = np.searchsorted(cdf, u * cdf[-1], side="right")
    return np.minimum(idx, cdf.size - 1)


def assemble_sketch(plan: SamplingPlan, draws: np.ndarray, seed: int) -> SparseSketch:
    """Aggregate draws into ``count/s * A_hat_ij / p_ij`` per distinct entry."""
    s = len(draws)
    counts = np.bincount(draws, minlength=plan.values.size)
    hit = np.flatnonzero(counts)
    # A_hat_ij / p_ij == ||A_hat||_F^2 / A_hat_ij
    values = counts[hit] * (plan.total_weight / plan.values[hit]) / s
    return SparseSketch(
        plan.n, s, plan.rows[hit].astype(np.int64), plan.cols[hit].astype(np.int64),
        values, seed, plan.epsilon, plan.threshold,
    )


def sparsify(a, epsilon: float, seed: int = 0, s: Optional[int] = None) -> SparseSketch:
    """Sparse sketch of ``a`` with spectral error at most ``epsilon`` w.h.p.

    ``s`` overrides the default sample budget. A matrix whose thresholded
    version is all-zero yields an empty sketch, which is already within
    ``epsilon / 2`` of ``a``.
    """
    epsilon = _check_epsilon(epsilon)
    seed = check_seed(seed)
    a = as_matrix(a)
    n = a.shape[0]
    a_hat = threshold_zero(a, epsilon)
    if s is None:
        f = frobenius_norm(a) ** 2
        if f == 0:
            return SparseSketch.empty(n, 0, seed, epsilon, epsilon / (2 * n))
        s = sample_size(n, f, epsilon)
    plan = build_plan(a_hat, epsilon, s)
    if plan.empty:
        return SparseSketch.empty(n, plan.s, seed, epsilon, plan.threshold)
    return assemble_sketch(plan, draw_samples(plan, plan.s, seed), seed)


def relative_epsilon(a, epsilon_rel: float, cfg: Optional[PowerIterationConfig] = None) -> float:
    """Absolute accuracy ``epsilon_rel * ||a||_2`` (needs a pass over ``a``)."""
    epsilon_rel = _check_epsilon(epsilon_rel)
    a = as_matrix(a)
    if not np.any(a):
        raise ValueError("relative accuracy needs a non-zero matrix")
    return epsilon_rel * spectral_norm(a, cfg)


def sparsify_relative(
    a, epsilon_rel: float, seed: int = 0, cfg: Optional[PowerIterationConfig] = None
) -> SparseSketch:
    """Sketch with ``||a - sketch||_2 <= epsilon_rel * ||a||_2`` w.h.p.

    The budget is then ``28 n sr(a) ln(sqrt(2) n) / epsilon_rel**2``. Two
    passes: one to estimate ``||a||_2``, one to sample.
    """
    return sparsify(a, relative_epsilon(a, epsilon_rel, cfg), seed)
