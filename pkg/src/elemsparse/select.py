"""One-pass weighted selection over a stream of matrix entries.

A single selector keeps a running total ``N`` of the squared values that
pass the threshold and replaces its current pick by the incoming entry
with probability ``v**2 / N``. At the end each qualifying entry is the
pick with probability ``v**2 / N_final``, whatever the stream order.

``s`` selectors fed from the same pass give ``s`` independent draws from
the squared-magnitude distribution using O(s) memory, which is all the
sparsifier needs.

Copy ``k`` of a run seeded with ``seed`` draws from
``PCG64(SeedSequence(seed, spawn_key=(k,)))`` and consumes one uniform per
qualifying entry.
"""

from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np

from .sparsifier import SparseSketch, _check_epsilon, check_seed


def substream(seed: int, k: int) -> np.random.Generator:
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=(k,))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class SelectorState:
    threshold_sq: float
    rng: np.random.Generator
    total_weight: float = 0.0
    row: Optional[int] = None
    col: Optional[int] = None
    value: Optional[float] = None

    @property
    def empty(self) -> bool:
        return self.row is None

    @property
    def probability(self) -> float:
        """Probability with which the current pick was drawn, ``S**2 / N``."""
        if self.empty:
            raise ValueError("no entry selected")
        return self.value * self.value / self.total_weight


def selector_step(state: SelectorState, entry: Tuple[int, int, float]) -> SelectorState:
    """Feed one entry to ``state`` (updated in place and returned)."""
    i, j, v = entry
    w = v * v
    if w > state.threshold_sq:
        state.total_weight += w
        if state.rng.random() < w / state.total_weight:
            state.row, state.col, state.value = i, j, v
    return state


def threshold_sq_for(n: int, epsilon: float) -> float:
    epsilon = _check_epsilon(epsilon)
    return epsilon * epsilon / (4.0 * n * n)


def run_select(stream, epsilon: float, seed: int = 0) -> SelectorState:
    """Single selector over ``stream``; uses substream 0 of ``seed``.

    If nothing passes the threshold the returned state is empty with ``N == 0``.
    """
    state = SelectorState(threshold_sq_for(stream.n, epsilon), substream(seed, 0))
    for entry in stream:
        selector_step(state, entry)
    return state


class SelectorBank:
    """``s`` independent selectors advanced together.

    Holds one record ``(row, col, value)`` per copy plus the shared running
    total, which every copy accumulates identically. Uniforms are pulled
    from each copy's substream ``chunk`` at a time, so copy ``k`` sees the
    same variates as a lone :class:`SelectorState` on ``substream(seed, k)``.
    """

    def __init__(self, s: int, threshold_sq: float, seed: int = 0, chunk: int = 256):
        if s < 1:
            raise ValueError("number of selectors s must be >= 1")
        self.s = s
        self.threshold_sq = threshold_sq
        self.total_weight = 0.0
        self.rows = np.full(s, -1, dtype=np.int64)
        self.cols = np.full(s, -1, dtype=np.int64)
        self.values = np.zeros(s)
        self._rngs = [substream(seed, k) for k in range(s)]
        self._chunk = chunk
        self._buf = np.empty((chunk, s))
        self._pos = chunk

    def _refill(self) -> None:
        for k, rng in enumerate(self._rngs):
            self._buf[:, k] = rng.random(self._chunk)
        self._pos = 0

    def update(self, i: int, j: int, v: float) -> None:
        w = v * v
        if not w > self.threshold_sq:
            return
        self.total_weight += w
        if self._pos == self._chunk:
            self._refill()
        u = self._buf[self._pos]
        self._pos += 1
        hit = u < w / self.total_weight
        self.rows[hit] = i
        self.cols[hit] = j
        self.values[hit] = v

    def feed(self, entries: Iterable[Tuple[int, int, float]]) -> "SelectorBank":
        for i, j, v in entries:
            self.update(i, j, v)
        return self

    @property
    def empty(self) -> bool:
        return self.total_weight == 0.0


def one_pass_sparsify(stream, epsilon: float, s: int, seed: int = 0) -> SparseSketch:
    """Sparsify from a single pass over ``stream`` with ``s`` parallel selectors.

    Each selector's pick ``(I, J, S)`` contributes ``(1/s) * S / p`` with
    ``p = S**2 / N``, i.e. ``N / (s * S)``; repeated picks are summed.
    """
    epsilon = _check_epsilon(epsilon)
    seed = check_seed(seed)
    n = stream.n
    bank = SelectorBank(s, threshold_sq_for(n, epsilon), seed).feed(stream)
    threshold = epsilon / (2 * n)
    if bank.empty:
        return SparseSketch.empty(n, s, seed, epsilon, threshold)
    keys, first, counts = np.unique(
        bank.rows * n + bank.cols, return_index=True, return_counts=True
    )
    picked = bank.values[first]
    values = counts * (bank.total_weight / picked) / s
    rows, cols = np.divmod(keys, n)
    return SparseSketch(n, s, rows, cols, values, seed, epsilon, threshold)
