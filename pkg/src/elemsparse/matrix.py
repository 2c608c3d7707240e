"""Dense square matrices: validation, norms and a seeded spectral-norm estimator."""

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np


class NonConvergenceWarning(RuntimeWarning):
    """Power iteration hit ``max_iterations`` before reaching its tolerance."""


def as_matrix(a) -> np.ndarray:
    """Validate ``a`` as a finite n-by-n float64 matrix and return a read-only copy."""
    m = np.array(a, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class PowerIterationConfig:
    """Settings for :func:`power_iteration`.

    ``max_iterations=None`` means ``10 * n + 100`` for an n-by-n input.
    ``tolerance`` bounds the relative change of the largest Ritz value of
    ``m.T @ m`` between consecutive iterations. ``block_size=1`` is plain
    single-vector power iteration.
    """

    max_iterations: Optional[int] = None
    tolerance: float = 1e-10
    seed: int = 0
    block_size: int = 8

    def __post_init__(self):
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def iterations_for(self, n: int) -> int:
        if self.max_iterations is None:
            return 10 * n + 100
        return self.max_iterations


class PowerResult(NamedTuple):
    value: float
    iterations: int
    converged: bool


def _scaled(m):
    """``(m / c, c)`` with ``c = max |m_ij|`` so that squaring cannot under/overflow."""
    m = np.asarray(m, dtype=np.float64)
    c = float(np.max(np.abs(m))) if m.size else 0.0
    if c == 0.0:
        return m, 0.0
    return m / c, c


def frobenius_norm(m) -> float:
    u, c = _scaled(m)
    if c == 0.0:
        return 0.0
    return c * float(np.sqrt(np.einsum("ij,ij->", u, u)))


def power_iteration(m, cfg: Optional[PowerIterationConfig] = None) -> PowerResult:
    """Estimate the largest singular value of ``m`` by block power iteration on ``m.T @ m``.

    A block of ``min(n, cfg.block_size)`` standard normal start vectors is
    drawn from ``PCG64(cfg.seed)``; each iteration applies ``m.T @ m``,
    re-orthonormalises, and takes the largest Ritz value. Convergence is
    governed by ``sigma_{b+1} / sigma_1`` rather than ``sigma_2 / sigma_1``,
    which matters when the top singular values are clustered. The estimate
    is ``max ||m x||`` over unit ``x`` in the current block, hence never
    above the true spectral norm.
    """
    cfg = cfg or PowerIterationConfig()
    m, scale = _scaled(m)
    n = m.shape[1]
    if scale == 0.0:
        return PowerResult(0.0, 1, True)
    b = min(n, cfg.block_size)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    q, _ = np.linalg.qr(rng.standard_normal((n, b)))

    lam_old = None
    lam = 0.0
    for it in range(1, cfg.iterations_for(n) + 1):
        y = m @ q
        lam = float(np.linalg.eigvalsh(y.T @ y)[-1])
        if lam_old is not None and abs(lam - lam_old) <= cfg.tolerance * lam:
            return PowerResult(scale * float(np.sqrt(lam)), it, True)
        lam_old = lam
        q, _ = np.linalg.qr(m.T @ y)
    return PowerResult(scale * float(np.sqrt(max(lam, 0.0))), cfg.iterations_for(n), False)


def spectral_norm(m, cfg: Optional[PowerIterationConfig] = None) -> float:
    """Largest singular value of ``m``; warns with :class:`NonConvergenceWarning`
    when the iteration budget ran out (the estimate is still returned)."""
    res = power_iteration(m, cfg)
    if not res.converged:
        warnings.warn(
            f"power iteration stopped after {res.iterations} iterations without converging",
            NonConvergenceWarning,
            stacklevel=2,
        )
    return res.value


def stable_rank(m, cfg: Optional[PowerIterationConfig] = None) -> float:
    u, c = _scaled(m)
    if c == 0.0:
        raise ValueError("stable rank undefined for the zero matrix")
    return (frobenius_norm(u) / spectral_norm(u, cfg)) ** 2
