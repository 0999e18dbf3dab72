"""Random domain sampling: complexity function, critical radius and concentration of Psi.

For ``n`` i.i.d. uniform sample points the relevant quantities are

* ``G_n(eps) = n^-1/2 sqrt(sum_j min(sigma_j, eps^2))`` and the critical
  radius ``r_n = inf{eps > 0 : G_n(eps) <= eps^2}``;
* ``mu(eps) = inf{p : sigma_p <= eps^2}`` and
  ``nu(eps; m) = inf{p : sum_{k > p^m} sigma_k <= eps^2}``;
* ``m_sigma``, the smallest m with ``sum_{k > p^m} sigma_k <= sigma_p``;
* the high-probability bound ``R <= (C_psi' + C_sigma') eps^2`` with
  ``C_psi' = 2 (1 + C_psi)^2`` and ``C_sigma' = 3 (1 + 1/C_psi) C_sigma ||sigma||_1 + 1``,
  holding with probability at least ``1 - 2 exp(-1 / (64 C_psi^2 r_n^2))``.

All tails here are exact (polynomial decay uses the Hurwitz zeta function)
so that ``G_n(eps) / eps`` is exactly nonincreasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._search import bisect_decreasing, first_index
from .csvio import write_csv
from .eigensystems import EigenSystem
from .errors import DomainError, PreconditionError, ResourceError

__all__ = [
    "complexity_G",
    "critical_radius",
    "mu",
    "nu",
    "m_sigma",
    "c_sigma",
    "RandomSamplingReport",
    "REPORT_CSV_HEADER",
    "corollary_bound",
    "ConcentrationResult",
    "mc_psi_concentration",
    "trial_rng",
]

REPORT_CSV_HEADER = ("n", "r_n2", "mu", "nu", "m_sigma", "coeff", "prob_bound", "precondition_ok")
MC_BUDGET = 500_000_000
MC_P_CAP = 64


def _exact_tail(sys: EigenSystem, p: int) -> float:
    return sys.sequence.tail_sum(int(p), exact=True).value


def _mu_index(sys: EigenSystem, e2: float) -> int:
    return first_index(lambda p: float(sys.sigma(p)) <= e2)


def complexity_G(n: int, sys: EigenSystem, eps: float) -> float:
    """``n^-1/2 sqrt(sum_j min(sigma_j, eps^2))``."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if not eps >= 0:
        raise DomainError("eps must be nonnegative")
    if eps == 0:
        return 0.0
    e2 = float(eps) ** 2
    m = _mu_index(sys, e2)
    total = (m - 1) * e2 + _exact_tail(sys, m - 1)
    return math.sqrt(total / n)


def critical_radius(n: int, sys: EigenSystem, tol: float = 1e-13) -> float:
    """Smallest ``eps > 0`` with ``G_n(eps) <= eps^2``, by bisection on ``G_n(eps)/eps - eps``."""
    if n < 1:
        raise DomainError("n must be >= 1")

    def h(e: float) -> float:
        return complexity_G(n, sys, e) / e - e

    hi = max((sys.sequence.tail_sum(0, exact=True).value / n) ** 0.25, 1e-300)
    lo = hi
    while h(lo) <= 0:
        lo /= 2.0
        if lo < 1e-150:
            raise PreconditionError("critical radius bracket could not be established")
    return bisect_decreasing(h, lo, hi, tol)


def _check_eps_window(sys: EigenSystem, eps: float) -> float:
    e2 = float(eps) ** 2
    if not e2 < float(sys.sigma(1)):
        raise PreconditionError("need eps^2 < sigma_1")
    if e2 <= 0:
        raise PreconditionError("need eps > 0")
    return e2


def mu(eps: float, sys: EigenSystem) -> int:
    """``inf{p : sigma_p <= eps^2}``."""
    return _mu_index(sys, _check_eps_window(sys, eps))


def nu(eps: float, m: int, sys: EigenSystem) -> int:
    """``inf{p : sum_{k > p^m} sigma_k <= eps^2}``."""
    e2 = _check_eps_window(sys, eps)
    if m < 1:
        raise DomainError("m must be >= 1")
    return first_index(lambda p: _exact_tail(sys, p**m) <= e2)


def m_sigma(sys: EigenSystem, p_range=range(8, 65), m_max: int = 12) -> int:
    """Smallest ``m`` with ``sum_{k > p^m} sigma_k <= sigma_p`` for every ``p`` in ``p_range``."""
    ps = [int(p) for p in p_range]
    if not ps or min(ps) < 1:
        raise DomainError("p_range must be a nonempty set of positive integers")
    for m in range(1, m_max + 1):
        if all(_exact_tail(sys, p**m) <= float(sys.sigma(p)) for p in ps):
            return m
    raise DomainError(f"no m <= {m_max} dominates the tail on the given range")


def c_sigma(sys: EigenSystem, grid: int = 256) -> float:
    """``sup sigma_{pk} / (sigma_p sigma_k)`` over ``1 <= p, k <= grid``."""
    idx = np.arange(1, grid + 1)
    s = np.asarray(sys.sigma(idx))
    prod = np.asarray(sys.sigma(np.outer(idx, idx)))
    return float(np.max(prod / np.outer(s, s)))


@dataclass(frozen=True)
class RandomSamplingReport:
    n: int
    r_n2: float
    mu: int
    nu: int
    m_sigma: int
    coeff: float
    prob_bound: float
    precondition_ok: bool
    eps: float
    c_psi: float
    c_sigma: float
    c_psi_hat: float
    c_sigma_hat: float
    precondition_value: float
    log_prob_bound: float
    details: dict = field(default_factory=dict, compare=False)

    @property
    def threshold(self) -> float:
        """``(C_psi' + C_sigma') eps^2``."""
        return self.coeff * self.eps**2

    def csv_row(self) -> tuple:
        return (self.n, self.r_n2, self.mu, self.nu, self.m_sigma, self.coeff, self.prob_bound, self.precondition_ok)


def corollary_bound(
    n: int,
    sys: EigenSystem,
    C_psi: float | None = None,
    eps: float | None = None,
    p_range=range(8, 65),
    c_sigma_grid: int = 256,
) -> RandomSamplingReport:
    """Evaluate the high-probability bound for ``n`` uniform random samples.

    ``eps`` defaults to the critical radius and must satisfy
    ``r_n^2 <= eps^2 < sigma_1``.
    """
    if C_psi is None:
        C_psi = sys.c_psi
    if C_psi is None or not C_psi > 0:
        raise DomainError("a positive uniform eigenfunction bound C_psi is required")
    r = critical_radius(n, sys)
    r2 = r * r
    if eps is None:
        eps = r
    e2 = float(eps) ** 2
    s1 = float(sys.sigma(1))
    if r2 >= s1:
        raise PreconditionError(f"empty window: r_n^2 = {r2:.6g} >= sigma_1 = {s1:.6g}")
    if not r2 * (1 - 1e-12) <= e2 < s1:
        raise PreconditionError(f"eps^2 = {e2:.6g} outside [r_n^2, sigma_1) = [{r2:.6g}, {s1:.6g})")
    ms = m_sigma(sys, p_range)
    cs = c_sigma(sys, c_sigma_grid)
    l1 = sys.sequence.tail_sum(0, exact=True).value
    c_psi_hat = 2.0 * (1.0 + C_psi) ** 2
    c_sigma_hat = 3.0 * (1.0 + 1.0 / C_psi) * cs * l1 + 1.0
    log_prob = math.log(2.0) - 1.0 / (64.0 * C_psi**2 * r2)
    prob = max(math.exp(log_prob), np.finfo(float).tiny)
    pre = 64.0 * C_psi**2 * ms * r2 * math.log(2.0 * n * r2)
    return RandomSamplingReport(
        n=int(n),
        r_n2=r2,
        mu=mu(eps, sys),
        nu=nu(eps, ms, sys),
        m_sigma=ms,
        coeff=c_psi_hat + c_sigma_hat,
        prob_bound=prob,
        precondition_ok=bool(pre <= 1.0),
        eps=float(eps),
        c_psi=float(C_psi),
        c_sigma=cs,
        c_psi_hat=c_psi_hat,
        c_sigma_hat=c_sigma_hat,
        precondition_value=pre,
        log_prob_bound=log_prob,
        details={"c_sigma_grid": c_sigma_grid, "p_range": (min(p_range), max(p_range))},
    )


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent PCG64 stream for one Monte-Carlo trial, keyed by ``(seed, trial)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(trial),))))


@dataclass(frozen=True, eq=False)
class ConcentrationResult:
    freq: float
    lemma_bound: float
    std_error: float
    trials: int
    exceed: int
    norms: np.ndarray

    def within_bound(self, k: float = 3.0) -> bool:
        return self.freq <= self.lemma_bound + k * self.std_error

    def to_csv(self, path, delta: float) -> None:
        rows = [(t, float(v), bool(v > delta)) for t, v in enumerate(self.norms)]
        write_csv(path, ("trial", "deviation", "exceeds"), rows)


def mc_psi_concentration(
    sys: EigenSystem,
    p: int,
    n: int,
    delta: float,
    trials: int,
    seed: int,
    budget: int = MC_BUDGET,
    batch: int = 512,
) -> ConcentrationResult:
    """Monte-Carlo frequency of ``||Psi_p - I_p||_2 > delta`` under n uniform samples.

    Returned alongside ``p exp(-n delta^2 / (4 p C_psi^2))``.  The standard
    error is the binomial one at the bound's rate, ``min(bound, 1)``.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if p < 1 or trials < 1:
        raise DomainError("p and trials must be >= 1")
    if p > MC_P_CAP:
        raise ResourceError(f"p = {p} exceeds the Monte-Carlo cap {MC_P_CAP}")
    if p * n * trials > budget:
        raise ResourceError(f"p*n*trials = {p * n * trials} exceeds the budget {budget}")
    if sys.c_psi is None:
        raise DomainError("eigensystem has no bounded eigenfunctions")
    ks = np.arange(1, p + 1)
    norms = np.empty(trials)
    eye = np.eye(p)
    for lo in range(0, trials, batch):
        count = min(batch, trials - lo)
        X = np.stack([trial_rng(seed, t).random(n) for t in range(lo, lo + count)])
        Phi = sys.psi(ks[None, None, :], X[:, :, None])  # (count, n, p)
        Psi = np.einsum("tik,tij->tkj", Phi, Phi) / n
        norms[lo : lo + count] = np.max(np.abs(np.linalg.eigvalsh(Psi - eye)), axis=1)
    exceed = int(np.sum(norms > delta))
    freq = exceed / trials
    bound = p * math.exp(-n * delta**2 / (4.0 * p * sys.c_psi**2))
    b = min(bound, 1.0)
    se = math.sqrt(b * (1.0 - b) / trials)
    return ConcentrationResult(freq, bound, se, trials, exceed, norms)
