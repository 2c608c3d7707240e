"""Error measurement, concentration bounds and exact moment checks for the sparsifier.

For one draw the deviation matrix is

    M = (A_hat_ij / p_ij) e_i e_j^T - A_hat,   with probability p_ij,

so that the sketch minus A_hat is the average of s independent copies of M.
The helpers here evaluate the matrix Bernstein tail for such averages,
enumerate E[M] and E[M M^T] exactly on small inputs, and run seeded
Monte Carlo experiments against the 1/n failure guarantee.
"""

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from .matrix import PowerIterationConfig, as_matrix, frobenius_norm, power_iteration
from .sparsifier import (
    SparseSketch,
    _check_epsilon,
    assemble_sketch,
    build_plan,
    check_seed,
    draw_samples,
    sample_size,
    threshold_zero,
)

MAX_ENUMERATION_N = 64
MOMENT_RTOL = 1e-12
ZERO_MEAN_TOL = 1e-12
LEMMA2_SLACK = 1e-9


@dataclass(frozen=True)
class BernsteinParams:
    s: int
    tau: float
    rho_sq: float
    gamma: float
    n: int
    delta: Optional[float] = None

    def __post_init__(self):
        if self.s < 1 or self.n < 1:
            raise ValueError("s and n must be positive integers")
        for name in ("tau", "rho_sq", "gamma"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive, got {v!r}")
        if self.delta is not None and not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")


def bernstein_tail(p: BernsteinParams) -> float:
    """``min(1, 2n exp(-(s tau^2 / 2) / (rho^2 + gamma tau / 3)))``."""
    exponent = (p.s * p.tau**2 / 2) / (p.rho_sq + p.gamma * p.tau / 3)
    log_tail = math.log(2 * p.n) - exponent
    if log_tail >= 0:
        return 1.0
    return math.exp(log_tail)


def lemma4_sample_size(n: int, frob_norm_sq: float, epsilon: float, delta: float) -> int:
    """Smallest integer ``s >= 14 n ||A||_F^2 ln(2n / delta) / eps^2``.

    With ``delta = 1/n`` this is the default sparsifier budget; ``delta == 1``
    is accepted so that ``n == 1`` is covered.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not frob_norm_sq > 0:
        raise ValueError("squared Frobenius norm must be positive")
    epsilon = _check_epsilon(epsilon)
    if not 0 < delta <= 1:
        raise ValueError(f"delta must lie in (0, 1], got {delta!r}")
    return math.ceil(14.0 * n * math.log(2 * n / delta) * frob_norm_sq / epsilon**2)


def sparsifier_bernstein_params(n: int, frob_hat_sq: float, epsilon: float, s: int) -> BernsteinParams:
    """Bernstein inputs for ``||A_hat - A_tilde|| <= eps/2``:
    ``tau = eps/2``, ``rho^2 = n ||A_hat||_F^2``, ``gamma = 4 n ||A_hat||_F^2 / eps``."""
    return BernsteinParams(
        s=s, tau=epsilon / 2, rho_sq=n * frob_hat_sq, gamma=4 * n * frob_hat_sq / epsilon, n=n
    )


def _check_enumerable(a_hat):
    """Validated ``(a / c, c)`` with ``c = max |a_ij|``; the moments are
    homogeneous in ``a``, so they are computed at unit scale and rescaled."""
    a = as_matrix(a_hat)
    if a.shape[0] > MAX_ENUMERATION_N:
        raise ValueError(
            f"enumeration oracle limited to n <= {MAX_ENUMERATION_N}, got n={a.shape[0]}"
        )
    c = float(np.max(np.abs(a)))
    if c == 0.0:
        raise ValueError("moments undefined for the zero matrix")
    u = a / c
    support = u[u != 0]
    if np.min(support * support) / np.sum(support * support) == 0.0:
        raise ValueError("entry magnitudes span too wide a range for double precision")
    return u, c


def _atoms(a):
    """Yield ``(p_ij, M_ij)`` over the support of ``a``."""
    f = float(np.sum(a * a))
    for i, j in zip(*np.nonzero(a)):
        p = a[i, j] ** 2 / f
        m = -a.copy()
        m[i, j] += a[i, j] / p
        yield p, m


def zero_mean_residual(a_hat) -> np.ndarray:
    """``sum_ij p_ij M_ij`` computed term by term; zero in exact arithmetic."""
    a, c = _check_enumerable(a_hat)
    total = np.zeros_like(a)
    for p, m in _atoms(a):
        total += p * m
    return c * total


def verify_zero_mean(a_hat) -> bool:
    # tolerance is scaled by ||A_hat||_F so the check is unit-free
    resid = zero_mean_residual(a_hat)
    return frobenius_norm(resid) <= ZERO_MEAN_TOL * max(1.0, frobenius_norm(a_hat))


@dataclass(frozen=True, eq=False)
class MomentDiagnostics:
    """Second moments of M: closed forms next to brute-force enumerations.

    ``closed_form = ||A_hat||_F^2 diag(row_nnz) - A_hat A_hat^T`` is E[M M^T];
    the ``*_t`` fields are the analogues for E[M^T M] with column counts.
    ``gamma_realized`` is the largest ``||A_hat||_F^2 / |A_hat_ij| + ||A_hat||_F``
    over the support, i.e. the worst per-draw norm bound.
    """

    n: int
    frob_sq: float
    row_nnz: np.ndarray
    col_nnz: np.ndarray
    closed_form: np.ndarray
    enumerated: np.ndarray
    closed_form_t: np.ndarray
    enumerated_t: np.ndarray
    gamma_realized: float

    @staticmethod
    def _rel(closed, enum, scale) -> float:
        denom = frobenius_norm(closed) or scale
        return frobenius_norm(closed - enum) / denom

    @property
    def discrepancy(self) -> float:
        return max(
            self._rel(self.closed_form, self.enumerated, self.frob_sq),
            self._rel(self.closed_form_t, self.enumerated_t, self.frob_sq),
        )

    @property
    def agrees(self) -> bool:
        return self.discrepancy <= MOMENT_RTOL

    @property
    def variance_bound(self) -> float:
        return self.n * self.frob_sq

    def moment_norms(self):
        """Exact spectral norms of E[M M^T] and E[M^T M] (symmetric eigensolver)."""
        return (
            float(np.max(np.abs(np.linalg.eigvalsh(self.closed_form)))),
            float(np.max(np.abs(np.linalg.eigvalsh(self.closed_form_t)))),
        )

    def to_dict(self) -> dict:
        norms = self.moment_norms()
        return {
            "n": self.n,
            "frob_sq": self.frob_sq,
            "row_nnz": self.row_nnz.tolist(),
            "col_nnz": self.col_nnz.tolist(),
            "closed_form": self.closed_form.tolist(),
            "closed_form_t": self.closed_form_t.tolist(),
            "discrepancy": self.discrepancy,
            "agrees": self.agrees,
            "moment_norm": norms[0],
            "moment_norm_t": norms[1],
            "variance_bound": self.variance_bound,
            "gamma_realized": self.gamma_realized,
        }


def exact_second_moment(a_hat) -> MomentDiagnostics:
    a, c = _check_enumerable(a_hat)
    n = a.shape[0]
    f = float(np.sum(a * a))
    row_nnz = np.count_nonzero(a, axis=1)
    col_nnz = np.count_nonzero(a, axis=0)
    closed = f * np.diag(row_nnz.astype(float)) - a @ a.T
    closed_t = f * np.diag(col_nnz.astype(float)) - a.T @ a

    enum = np.zeros((n, n))
    enum_t = np.zeros((n, n))
    for p, m in _atoms(a):
        enum += p * (m @ m.T)
        enum_t += p * (m.T @ m)

    support = np.abs(a[a != 0])
    gamma = c * (float(np.max(f / support)) + math.sqrt(f))
    c2 = c * c
    return MomentDiagnostics(
        n, c2 * f, row_nnz, col_nnz, c2 * closed, c2 * enum, c2 * closed_t, c2 * enum_t, gamma
    )


def measure_error(a, sketch: SparseSketch, cfg: Optional[PowerIterationConfig] = None) -> float:
    """Spectral norm of ``a - sketch`` (power-iteration estimate)."""
    a = np.asarray(a, dtype=np.float64)
    if a.shape != (sketch.n, sketch.n):
        raise ValueError(f"dimension mismatch: matrix {a.shape} vs sketch n={sketch.n}")
    return power_iteration(a - sketch.to_dense(), cfg).value


def random_test_matrix(n: int, seed: int = 0, frob_sq: float = 1.0) -> np.ndarray:
    """Gaussian n-by-n matrix rescaled to ``||A||_F^2 == frob_sq``."""
    g = np.random.Generator(np.random.PCG64(check_seed(seed))).standard_normal((n, n))
    return g * math.sqrt(frob_sq) / frobenius_norm(g)


@dataclass
class TrialRecord:
    seed: int
    s: int
    error: float
    sampling_error: float
    passed: bool
    gamma_realized: float
    lemma2_violations: int
    converged: bool


@dataclass
class ExperimentReport:
    descriptor: str
    n: int
    epsilon: float
    s: int
    trials: int
    threshold: float
    frob_sq: float
    frob_hat_sq: float
    threshold_error: float
    theoretical_failure_bound: float
    bernstein_bound: Optional[float]
    gamma_bound: float
    records: List[TrialRecord] = field(default_factory=list)
    wall_time: float = 0.0
    config: dict = field(default_factory=dict)

    @property
    def per_trial_errors(self) -> List[float]:
        return [r.error for r in self.records]

    @property
    def seeds(self) -> List[int]:
        return [r.seed for r in self.records]

    @property
    def failures(self) -> int:
        return sum(not r.passed for r in self.records)

    @property
    def empirical_failure_rate(self) -> float:
        return self.failures / len(self.records) if self.records else 0.0

    @property
    def lemma2_violations(self) -> int:
        return sum(r.lemma2_violations for r in self.records)

    @property
    def max_gamma_realized(self) -> float:
        return max((r.gamma_realized for r in self.records), default=0.0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_trial_errors"] = self.per_trial_errors
        d["seeds"] = self.seeds
        d["empirical_failure_rate"] = self.empirical_failure_rate
        d["lemma2_violations"] = self.lemma2_violations
        d["max_gamma_realized"] = self.max_gamma_realized
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["seed", "s", "error", "pass"])
        for r in self.records:
            w.writerow([r.seed, r.s, repr(r.error), "pass" if r.passed else "fail"])
        return buf.getvalue()


def run_experiment(
    a,
    epsilon: float,
    trials: int,
    base_seed: int = 0,
    cfg: Optional[PowerIterationConfig] = None,
    s: Optional[int] = None,
    descriptor: str = "",
) -> ExperimentReport:
    """Sparsify ``a`` with seeds ``base_seed + t`` for ``t < trials`` and
    record the spectral error of each sketch.

    A trial fails when the measured error exceeds ``epsilon``. Every draw is
    also checked against the per-draw bound ``4 n ||A_hat||_F^2 / eps``.
    """
    epsilon = _check_epsilon(epsilon)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    check_seed(base_seed)
    check_seed(base_seed + trials - 1)
    start = time.perf_counter()
    a = as_matrix(a)
    n = a.shape[0]
    a_hat = threshold_zero(a, epsilon)
    f = frobenius_norm(a) ** 2
    f_hat = frobenius_norm(a_hat) ** 2
    if s is None:
        s = sample_size(n, f, epsilon) if f > 0 else 0
    plan = build_plan(a_hat, epsilon, s) if s > 0 else None
    gamma_bound = 4 * n * f_hat / epsilon
    bern = None
    if f_hat > 0 and s > 0:
        bern = bernstein_tail(sparsifier_bernstein_params(n, f_hat, epsilon, s))

    report = ExperimentReport(
        descriptor=descriptor,
        n=n,
        epsilon=epsilon,
        s=s,
        trials=trials,
        threshold=epsilon / (2 * n),
        frob_sq=f,
        frob_hat_sq=f_hat,
        threshold_error=frobenius_norm(a - a_hat),
        theoretical_failure_bound=1.0 / n,
        bernstein_bound=bern,
        gamma_bound=gamma_bound,
        config={
            "epsilon": epsilon,
            "trials": trials,
            "base_seed": base_seed,
            "s": s,
            "power_iteration": asdict(cfg or PowerIterationConfig()),
        },
    )
    root_f_hat = math.sqrt(f_hat)
    for t in range(trials):
        seed = base_seed + t
        if plan is None or plan.empty:
            sketch = SparseSketch.empty(n, s, seed, epsilon, epsilon / (2 * n))
            gamma_t, violations = 0.0, 0
        else:
            draws = draw_samples(plan, s, seed)
            sketch = assemble_sketch(plan, draws, seed)
            per_draw = f_hat / np.abs(plan.values[draws]) + root_f_hat
            gamma_t = float(per_draw.max())
            violations = int(np.count_nonzero(per_draw > gamma_bound + LEMMA2_SLACK))
        dense = sketch.to_dense()
        total = power_iteration(a - dense, cfg)
        sampling = power_iteration(a_hat - dense, cfg)
        report.records.append(
            TrialRecord(
                seed=seed,
                s=s,
                error=total.value,
                sampling_error=sampling.value,
                passed=total.value <= epsilon,
                gamma_realized=gamma_t,
                lemma2_violations=violations,
                converged=total.converged and sampling.converged,
            )
        )
    report.wall_time = time.perf_counter() - start
    return report
